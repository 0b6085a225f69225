"""Independent reference implementations used to check the package.

Everything here is deliberately written the dumb way (loops, enumeration,
projected gradient) and shares no code with the package internals.
"""

from __future__ import annotations

import numpy as np


def confusion_metrics_bruteforce(y_true, y_pred, positive="high"):
    tp = tn = fp = fn = 0
    for t, p in zip(y_true, y_pred):
        if t == positive and p == positive:
            tp += 1
        elif t != positive and p != positive:
            tn += 1
        elif t != positive and p == positive:
            fp += 1
        else:
            fn += 1
    n = tp + tn + fp + fn
    accuracy = (tp + tn) / n
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
    return accuracy, precision, recall, f1


def mse_bruteforce(y_true, y_hat):
    total = 0.0
    for t, h in zip(y_true, y_hat):
        total += (t - h) ** 2
    return total / len(y_true)


def pearson_bruteforce(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    dx = sum((a - mx) ** 2 for a in x)
    dy = sum((b - my) ** 2 for b in y)
    return num / (dx ** 0.5 * dy ** 0.5)


def icc_a_k_anova(matrix):
    """ICC(A,k) from an explicitly assembled two-way ANOVA table."""
    mat = np.asarray(matrix, dtype=float)
    n, k = mat.shape
    grand = 0.0
    for i in range(n):
        for j in range(k):
            grand += mat[i, j]
    grand /= n * k

    row_means = [sum(mat[i, j] for j in range(k)) / k for i in range(n)]
    col_means = [sum(mat[i, j] for i in range(n)) / n for j in range(k)]

    ss_rows = k * sum((rm - grand) ** 2 for rm in row_means)
    ss_cols = n * sum((cm - grand) ** 2 for cm in col_means)
    ss_total = sum((mat[i, j] - grand) ** 2 for i in range(n) for j in range(k))
    ss_err = ss_total - ss_rows - ss_cols

    ms_rows = ss_rows / (n - 1)
    ms_cols = ss_cols / (k - 1)
    ms_err = ss_err / ((n - 1) * (k - 1))
    return (ms_rows - ms_err) / (ms_rows + (ms_cols - ms_err) / n)


def exhaustive_best_split(X, y, use_gini):
    """Enumerate every (feature, midpoint) split; return the best by criterion.

    The criterion mirrors CART: summed child score minus parent score with
    score(s, w) = s^2/w for regression and (s^2 + (w-s)^2)/w for binary Gini
    (n times the impurity decrease; same argmax).
    """
    n, d = X.shape
    w = float(n)
    s = float(sum(y))
    parent = (s * s + (w - s) * (w - s)) / w if use_gini else s * s / w
    best = None
    for j in range(d):
        values = sorted(set(X[:, j]))
        for a, b in zip(values[:-1], values[1:]):
            thr = (a + b) / 2.0
            left = [y[i] for i in range(n) if X[i, j] <= thr]
            right = [y[i] for i in range(n) if X[i, j] > thr]
            wl, wr = float(len(left)), float(len(right))
            sl, sr = float(sum(left)), float(sum(right))
            if use_gini:
                score = (sl * sl + (wl - sl) ** 2) / wl + (sr * sr + (wr - sr) ** 2) / wr
            else:
                score = sl * sl / wl + sr * sr / wr
            gain = score - parent
            if best is None or gain > best[2] + 1e-12:
                best = (j, thr, gain)
    return best


def svm_dual_objective(alpha, K, y):
    """0.5 a'Qa - sum(a) with Q = yy' * K (the minimization form)."""
    q = (y[:, None] * y[None, :]) * K
    return 0.5 * float(alpha @ q @ alpha) - float(alpha.sum())


def svm_dual_projected_gradient(K, y, C, n_iter=200_000, tol=1e-10):
    """Solve the classification dual by projected gradient descent.

    The feasible set {0 <= a <= C, y'a = 0} is handled by an exact projection
    computed with bisection on the equality multiplier.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    q = (y[:, None] * y[None, :]) * K

    def project(v):
        lo, hi = -1e6, 1e6
        for _ in range(200):
            lam = (lo + hi) / 2.0
            a = np.clip(v - lam * y, 0.0, C)
            g = float(a @ y)
            if g > 0:
                lo = lam
            else:
                hi = lam
        return np.clip(v - ((lo + hi) / 2.0) * y, 0.0, C)

    eigmax = float(np.linalg.eigvalsh(q)[-1])
    step = 1.0 / max(eigmax, 1e-9)
    alpha = project(np.zeros(n))
    prev = np.inf
    for _ in range(n_iter):
        grad = q @ alpha - 1.0
        alpha = project(alpha - step * grad)
        obj = 0.5 * float(alpha @ q @ alpha) - float(alpha.sum())
        if abs(prev - obj) < tol:
            break
        prev = obj
    return alpha, svm_dual_objective(alpha, K, y)


def late_fusion_bruteforce(prob_list, rule):
    mat = [list(p) for p in prob_list]
    n_classes = len(mat[0])
    fused = []
    for c in range(n_classes):
        col = sorted(m[c] for m in mat)
        if rule == "lf_median":
            k = len(col)
            fused.append(col[k // 2] if k % 2 else (col[k // 2 - 1] + col[k // 2]) / 2.0)
        elif rule == "lf_product":
            v = 1.0
            for m in mat:
                v *= m[c]
            fused.append(v)
        else:
            fused.append(sum(m[c] for m in mat))
    total = sum(fused)
    if total <= 0:
        return [1.0 / n_classes] * n_classes
    return [v / total for v in fused]
