import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import late_fusion_bruteforce
from presenteval.errors import FusionError
from presenteval.features import FeatureVector
from presenteval.fusion import (
    LATE_RULES,
    feature_fuse,
    late_fuse_class,
    late_fuse_reg,
    split_fused,
)


def vec(modality, n, video="v1", scope=("global",), seed=0):
    rng = np.random.default_rng(seed + n)
    return FeatureVector(video, modality, scope, rng.normal(size=n),
                         tuple(f"{modality[0]}{i}" for i in range(n)))


class TestFeatureFuse:
    def test_full_stack_length(self):
        fused = feature_fuse([vec("speech", 88), vec("face", 172), vec("pose", 120)])
        assert len(fused.values) == 380
        assert fused.modality == "fused"

    def test_canonical_modality_order(self):
        fused = feature_fuse([vec("pose", 2), vec("speech", 3), vec("face", 2)])
        prefixes = [n.split(":")[0] for n in fused.feature_names]
        assert prefixes == ["speech"] * 3 + ["face"] * 2 + ["pose"] * 2

    def test_single_modality_prefixed_identity(self):
        v = vec("face", 5)
        fused = feature_fuse([v])
        np.testing.assert_array_equal(fused.values, v.values)
        assert all(n.startswith("face:") for n in fused.feature_names)

    def test_scope_mismatch_rejected(self):
        a = vec("speech", 3, scope=("window", 0, 0.0, 16.0))
        b = vec("face", 3, scope=("window", 1, 16.0, 32.0))
        with pytest.raises(FusionError, match="scope mismatch"):
            feature_fuse([a, b])

    def test_duplicate_modality_rejected(self):
        with pytest.raises(FusionError, match="duplicate"):
            feature_fuse([vec("face", 3), vec("face", 3, seed=9)])

    def test_split_recovers_exactly(self):
        parts = [vec("speech", 4), vec("face", 3), vec("pose", 6)]
        fused = feature_fuse(parts)
        back = split_fused(fused)
        for p in parts:
            np.testing.assert_array_equal(back[p.modality].values, p.values)
            assert back[p.modality].feature_names == p.feature_names


class TestLateFuseClass:
    def test_product_rule_example(self):
        fused = late_fuse_class([[0.6, 0.4], [0.7, 0.3]], "lf_product")
        np.testing.assert_allclose(fused, [0.42 / 0.54, 0.12 / 0.54], atol=1e-12)
        assert fused.argmax() == 0

    def test_median_rule_example(self):
        fused = late_fuse_class([[0.2, 0.8], [0.6, 0.4], [0.9, 0.1]], "lf_median")
        np.testing.assert_allclose(fused, [0.6, 0.4])
        assert fused.argmax() == 0

    def test_unanimous_inputs_keep_argmax(self):
        p = [[0.3, 0.7]] * 3
        for rule in LATE_RULES:
            assert late_fuse_class(p, rule).argmax() == 1

    def test_all_zero_product_degenerates_to_uniform(self):
        fused = late_fuse_class([[1.0, 0.0], [0.0, 1.0]], "lf_product")
        np.testing.assert_allclose(fused, [0.5, 0.5])

    def test_single_vector_rejected(self):
        with pytest.raises(FusionError, match=">=2"):
            late_fuse_class([[0.5, 0.5]], "lf_sum")

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            k = rng.integers(2, 5)
            p = rng.dirichlet(np.ones(2), size=k)
            for rule in LATE_RULES:
                ref = late_fusion_bruteforce(p.tolist(), rule)
                np.testing.assert_allclose(late_fuse_class(p, rule), ref, atol=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            p = rng.dirichlet(np.ones(2), size=3)
            perm = rng.permutation(3)
            for rule in LATE_RULES:
                np.testing.assert_allclose(
                    late_fuse_class(p, rule), late_fuse_class(p[perm], rule), atol=1e-12
                )

    def test_renormalization_preserves_argmax(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            p = rng.dirichlet(np.ones(2), size=3)
            for rule in ("lf_product", "lf_sum"):
                raw = np.prod(p, axis=0) if rule == "lf_product" else np.sum(p, axis=0)
                assert late_fuse_class(p, rule).argmax() == raw.argmax()

    def test_sum_rule_equals_average_argmax_on_grid(self):
        grid = np.linspace(0.01, 0.99, 15)
        for a in grid:
            for b in grid:
                p = np.array([[a, 1 - a], [b, 1 - b]])
                fused = late_fuse_class(p, "lf_sum")
                assert fused.argmax() == p.mean(axis=0).argmax()


class TestLateFuseReg:
    def test_odd_median(self):
        assert late_fuse_reg([2.0, 3.0, 4.0]) == 3.0

    def test_even_median(self):
        assert late_fuse_reg([2.0, 3.0]) == 2.5

    def test_identical_values(self):
        assert late_fuse_reg([2.7, 2.7, 2.7]) == 2.7

    def test_single_value_rejected(self):
        with pytest.raises(FusionError):
            late_fuse_reg([2.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(
    st.tuples(st.floats(0.001, 0.999)), min_size=2, max_size=5,
))
def test_rules_stay_probability_vectors(raws):
    p = np.array([[a[0], 1 - a[0]] for a in raws])
    for rule in LATE_RULES:
        fused = late_fuse_class(p, rule)
        assert fused.shape == (2,)
        assert abs(fused.sum() - 1.0) < 1e-12
        assert (fused >= 0).all()
