"""Kernel SVM trained by pairwise dual coordinate updates (SMO).

One solver minimizes ``0.5 a'Qa + p'a`` subject to ``y'a = 0`` and box
``[0, C]``, with Q induced by the RBF kernel. Classification plugs in
``p = -1``; epsilon-insensitive regression maps to the same problem over 2n
doubled variables. The working pair is the maximal KKT violator; the final
violation is kept as the convergence residual. Class probabilities come
from a sigmoid fitted to the training decision values.
"""

from __future__ import annotations

import numpy as np

from ..errors import ModelError

DEFAULT_TOL = 1e-3
_TINY_CURVATURE = 1e-12


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    a2 = np.einsum("ij,ij->i", A, A)
    b2 = np.einsum("ij,ij->i", B, B)
    d2 = a2[:, None] + b2[None, :] - 2.0 * (A @ B.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def scale_gamma(X: np.ndarray) -> float:
    var = float(X.var())
    d = X.shape[1]
    if var <= 0.0:
        return 1.0 / d
    return 1.0 / (d * var)


def _smo(K: np.ndarray, idx_map: np.ndarray, yv: np.ndarray, p: np.ndarray,
         C: float, tol: float, max_iter: int):
    """Solve the boxed, equality-constrained dual; returns (alpha, b, residual, iters).

    ``idx_map`` sends each dual variable to its kernel row, so the doubled
    regression problem reuses the n x n kernel without materializing 2n x 2n.
    """
    m = yv.shape[0]
    alpha = np.zeros(m, dtype=np.float64)
    G = p.copy()
    lo_eps = 1e-12
    residual = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        mvec = -yv * G
        at_hi = alpha >= C - lo_eps
        at_lo = alpha <= lo_eps
        up = np.where(yv > 0, ~at_hi, ~at_lo)
        dn = np.where(yv > 0, ~at_lo, ~at_hi)
        if not up.any() or not dn.any():
            residual = 0.0
            break
        m_up = np.where(up, mvec, -np.inf)
        m_dn = np.where(dn, mvec, np.inf)
        i = int(np.argmax(m_up))
        j = int(np.argmin(m_dn))
        residual = float(m_up[i] - m_dn[j])
        if residual < tol:
            break

        row_i = K[idx_map[i]][idx_map]
        row_j = K[idx_map[j]][idx_map]
        quad = row_i[i] + row_j[j] - 2.0 * row_i[j]
        if quad < _TINY_CURVATURE:
            quad = _TINY_CURVATURE
        t = residual / quad

        yi = yv[i]
        yj = yv[j]
        room_i = (C - alpha[i]) if yi > 0 else alpha[i]
        room_j = alpha[j] if yj > 0 else (C - alpha[j])
        t = min(t, room_i, room_j)
        if t <= 0.0:
            break
        alpha[i] += yi * t
        alpha[j] -= yj * t
        G += (t * yv) * (row_i - row_j)

    free = (alpha > lo_eps) & (alpha < C - lo_eps)
    mvec = -yv * G
    if free.any():
        b = float(mvec[free].mean())
    else:
        at_hi = alpha >= C - lo_eps
        at_lo = alpha <= lo_eps
        up = np.where(yv > 0, ~at_hi, ~at_lo)
        dn = np.where(yv > 0, ~at_lo, ~at_hi)
        hi = float(np.where(up, mvec, -np.inf).max()) if up.any() else 0.0
        lo = float(np.where(dn, mvec, np.inf).min()) if dn.any() else 0.0
        b = (hi + lo) / 2.0
    objective = 0.5 * float(alpha @ (G + p))
    return alpha, b, max(residual, 0.0), it, objective


def fit_platt(scores: np.ndarray, y01: np.ndarray, max_iter: int = 100):
    """Sigmoid calibration P(y=1|f) = 1/(1 + exp(A f + B)) on training scores."""
    prior1 = float(y01.sum())
    prior0 = float(y01.shape[0] - prior1)
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(y01 > 0.5, hi, lo)

    A = 0.0
    B = float(np.log((prior0 + 1.0) / (prior1 + 1.0)))
    eps = 1e-12

    def value(a: float, b: float) -> float:
        fab = a * scores + b
        pos = fab >= 0
        out = np.empty_like(fab)
        out[pos] = t[pos] * fab[pos] + np.log1p(np.exp(-fab[pos]))
        out[~pos] = (t[~pos] - 1.0) * fab[~pos] + np.log1p(np.exp(fab[~pos]))
        return float(out.sum())

    fval = value(A, B)
    for _ in range(max_iter):
        fab = A * scores + B
        pos = fab >= 0
        p = np.empty_like(fab)
        q = np.empty_like(fab)
        p[pos] = np.exp(-fab[pos]) / (1.0 + np.exp(-fab[pos]))
        q[pos] = 1.0 / (1.0 + np.exp(-fab[pos]))
        p[~pos] = 1.0 / (1.0 + np.exp(fab[~pos]))
        q[~pos] = np.exp(fab[~pos]) / (1.0 + np.exp(fab[~pos]))
        d1 = t - p
        g1 = float((scores * d1).sum())
        g2 = float(d1.sum())
        if abs(g1) < 1e-10 and abs(g2) < 1e-10:
            break
        d2 = p * q
        h11 = float((scores * scores * d2).sum()) + eps
        h22 = float(d2.sum()) + eps
        h21 = float((scores * d2).sum())
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= 1e-10:
            nA = A + step * dA
            nB = B + step * dB
            nval = value(nA, nB)
            if nval < fval + 1e-4 * step * gd:
                A, B, fval = nA, nB, nval
                break
            step /= 2.0
        else:
            break
    return A, B


def _sigmoid_ab(f: np.ndarray, A: float, B: float) -> np.ndarray:
    z = A * f + B
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = np.exp(-z[pos]) / (1.0 + np.exp(-z[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(z[~pos]))
    return out


class SVMClassifier:
    def __init__(self, C=10.0, gamma="scale", tol=DEFAULT_TOL, max_iter=200_000):
        self.C = float(C)
        self.gamma = gamma
        self.tol = float(tol)
        self.max_iter = int(max_iter)

    def fit(self, X: np.ndarray, y01: np.ndarray) -> "SVMClassifier":
        X = np.ascontiguousarray(X, dtype=np.float64)
        n = X.shape[0]
        if n < 2:
            raise ModelError("SVM needs at least 2 training samples")
        self.gamma_ = scale_gamma(X) if self.gamma == "scale" else float(self.gamma)
        ypm = np.where(np.asarray(y01) > 0.5, 1.0, -1.0)
        K = rbf_kernel(X, X, self.gamma_)
        idx_map = np.arange(n)
        p = -np.ones(n, dtype=np.float64)
        alpha, b, residual, iters, objective = _smo(
            K, idx_map, ypm, p, self.C, self.tol, self.max_iter
        )
        self.kkt_residual_ = residual
        self.n_iter_ = iters
        self.dual_objective_ = objective
        self.intercept_ = b
        coef = alpha * ypm
        keep = alpha > 1e-12
        self.dual_coef_ = coef[keep]
        self.support_vectors_ = X[keep].copy()
        train_scores = self._decision_from(K[:, keep], self.dual_coef_)
        self.platt_a_, self.platt_b_ = fit_platt(train_scores, np.asarray(y01, float))
        return self

    def _decision_from(self, Ksv: np.ndarray, coef: np.ndarray) -> np.ndarray:
        return Ksv @ coef + self.intercept_

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        K = rbf_kernel(np.ascontiguousarray(X, dtype=np.float64),
                       self.support_vectors_, self.gamma_)
        return self._decision_from(K, self.dual_coef_)

    def predict_proba1(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid_ab(self.decision_function(X), self.platt_a_, self.platt_b_)

    def to_state(self) -> dict:
        return {
            "kind": "svm_clf",
            "C": self.C,
            "gamma": self.gamma_,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "intercept": self.intercept_,
            "dual_coef": self.dual_coef_.tolist(),
            "support_vectors": self.support_vectors_.tolist(),
            "platt": [self.platt_a_, self.platt_b_],
            "kkt_residual": self.kkt_residual_,
            "dual_objective": self.dual_objective_,
        }

    @classmethod
    def from_state(cls, state: dict) -> "SVMClassifier":
        model = cls(C=state["C"], gamma=state["gamma"], tol=state["tol"],
                    max_iter=state["max_iter"])
        model.gamma_ = float(state["gamma"])
        model.intercept_ = float(state["intercept"])
        model.dual_coef_ = np.asarray(state["dual_coef"], dtype=np.float64)
        model.support_vectors_ = np.asarray(state["support_vectors"], dtype=np.float64)
        model.platt_a_, model.platt_b_ = state["platt"]
        model.kkt_residual_ = state["kkt_residual"]
        model.dual_objective_ = state["dual_objective"]
        return model


class SVMRegressor:
    def __init__(self, C=10.0, gamma="scale", epsilon=0.1, tol=DEFAULT_TOL,
                 max_iter=400_000):
        self.C = float(C)
        self.gamma = gamma
        self.epsilon = float(epsilon)
        self.tol = float(tol)
        self.max_iter = int(max_iter)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "SVMRegressor":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n = X.shape[0]
        if n < 2:
            raise ModelError("SVR needs at least 2 training samples")
        self.gamma_ = scale_gamma(X) if self.gamma == "scale" else float(self.gamma)
        K = rbf_kernel(X, X, self.gamma_)
        idx_map = np.concatenate([np.arange(n), np.arange(n)])
        yv = np.concatenate([np.ones(n), -np.ones(n)])
        p = np.concatenate([self.epsilon - y, self.epsilon + y])
        theta, b, residual, iters, objective = _smo(
            K, idx_map, yv, p, self.C, self.tol, self.max_iter
        )
        self.kkt_residual_ = residual
        self.n_iter_ = iters
        self.dual_objective_ = objective
        self.intercept_ = b
        beta = theta[:n] - theta[n:]
        keep = np.abs(beta) > 1e-12
        self.dual_coef_ = beta[keep]
        self.support_vectors_ = X[keep].copy()
        return self

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        if self.dual_coef_.shape[0] == 0:
            return np.full(X.shape[0], self.intercept_)
        K = rbf_kernel(np.ascontiguousarray(X, dtype=np.float64),
                       self.support_vectors_, self.gamma_)
        return K @ self.dual_coef_ + self.intercept_

    def to_state(self) -> dict:
        return {
            "kind": "svm_reg",
            "C": self.C,
            "gamma": self.gamma_,
            "epsilon": self.epsilon,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "intercept": self.intercept_,
            "dual_coef": self.dual_coef_.tolist(),
            "support_vectors": self.support_vectors_.tolist(),
            "kkt_residual": self.kkt_residual_,
            "dual_objective": self.dual_objective_,
        }

    @classmethod
    def from_state(cls, state: dict) -> "SVMRegressor":
        model = cls(C=state["C"], gamma=state["gamma"], epsilon=state["epsilon"],
                    tol=state["tol"], max_iter=state["max_iter"])
        model.gamma_ = float(state["gamma"])
        model.intercept_ = float(state["intercept"])
        model.dual_coef_ = np.asarray(state["dual_coef"], dtype=np.float64)
        model.support_vectors_ = np.asarray(state["support_vectors"], dtype=np.float64)
        model.kkt_residual_ = state["kkt_residual"]
        model.dual_objective_ = state["dual_objective"]
        return model
