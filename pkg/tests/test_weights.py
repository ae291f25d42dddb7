import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tacitdcf.filters import ObjectiveBreakdown
from tacitdcf.weights import (
    FAMILIES,
    CascadeErrors,
    LayerWeights,
    error_cascade,
    update_weights,
)


def _breakdown(ids, **terms):
    n = len(ids)
    fields = {name: np.asarray(terms.get(name, np.zeros(n)), dtype=float)
              for name in FAMILIES}
    return ObjectiveBreakdown(layer_ids=tuple(ids), total=0.0, **fields)


def _errors(ids, value_map):
    n = len(ids)
    fields = {name: np.asarray(value_map.get(name, np.ones(n)), dtype=float)
              for name in FAMILIES}
    return CascadeErrors(tuple(ids), **fields)


class TestErrorCascade:
    def test_all_zero_terms_zero_cascade(self):
        ids = (0, 1)
        errors = error_cascade(_breakdown(ids), LayerWeights.uniform(ids))
        for name in FAMILIES:
            assert np.all(errors.family(name) == 0.0)

    def test_hand_case_single_layer(self):
        ids = (0,)
        w = LayerWeights((0,), *(np.array([1.0]) for _ in FAMILIES))
        b = _breakdown(ids, data=[2.0], mask=[3.0])
        errors = error_cascade(b, w)
        assert errors.data[0] == 2.0
        assert errors.mask[0] == 1.0 * 2.0 + 3.0  # a*tier1 + mask term

    def test_cascade_ordering(self):
        ids = (0, 1)
        w = LayerWeights.uniform(ids)
        base = error_cascade(_breakdown(ids, data=[1, 1], mask=[1, 1],
                                        style=[1, 1], temporal=[1, 1],
                                        st_style=[1, 1]), w)
        bumped = error_cascade(_breakdown(ids, data=[1, 1], mask=[1, 1],
                                          style=[1, 1], temporal=[5, 1],
                                          st_style=[1, 1]), w)
        # raising only the temporal raw term moves tier4/tier5, not 1..3
        assert np.array_equal(base.data, bumped.data)
        assert np.array_equal(base.mask, bumped.mask)
        assert np.array_equal(base.style, bumped.style)
        assert bumped.temporal[0] > base.temporal[0]
        assert bumped.st_style[0] > base.st_style[0]
        assert bumped.temporal[1] == base.temporal[1]

    def test_negative_terms_rejected(self):
        ids = (0, 1)
        with pytest.raises(ValueError):
            error_cascade(_breakdown(ids, data=[-1, 0]), LayerWeights.uniform(ids))


class TestUpdateWeights:
    def test_two_layers_equal_errors_split_evenly(self):
        ids = (0, 1)
        w, fb = update_weights(LayerWeights.uniform(ids),
                               _errors(ids, {name: [2.0, 2.0] for name in FAMILIES}),
                               eta=1e-9)
        assert fb == ()
        for name in FAMILIES:
            assert np.allclose(w.family(name), [0.5, 0.5])

    def test_hand_case_one_three(self):
        ids = (0, 1)
        w, _ = update_weights(LayerWeights.uniform(ids),
                              _errors(ids, {"data": [1.0, 3.0]}), eta=0.01)
        # raw: 1 - 1.01/4.01 = 0.7481..., 1 - 3.01/4.01 = 0.2494...
        assert w.data[0] == pytest.approx(0.75, abs=1e-3)
        assert w.data[1] == pytest.approx(0.25, abs=1e-3)

    def test_six_layers_equal_errors(self):
        ids = tuple(range(6))
        errs = _errors(ids, {name: np.full(6, 3.0) for name in FAMILIES})
        w, _ = update_weights(LayerWeights.uniform(ids), errs, eta=1e-9)
        for name in FAMILIES:
            assert np.allclose(w.family(name), 1.0 / 6.0)

    def test_family_sums_exactly_one(self):
        rng = np.random.default_rng(0)
        ids = tuple(range(4))
        w = LayerWeights.uniform(ids)
        for _ in range(50):
            errs = _errors(ids, {name: rng.random(4) * 10 for name in FAMILIES})
            w, _ = update_weights(w, errs)
            for name in FAMILIES:
                fam = w.family(name)
                assert abs(fam.sum() - 1.0) <= 1e-12
                assert np.all(fam >= 0) and np.all(fam <= 1)

    def test_monotonicity_on_random_errors(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            n = rng.integers(2, 7)
            ids = tuple(range(n))
            errs = rng.random(n) * rng.uniform(0.1, 100)
            w, _ = update_weights(LayerWeights.uniform(ids),
                                  _errors(ids, {"data": errs}), eta=1e-4)
            order = np.argsort(errs)
            ranked = w.data[order]
            strict = errs[order]
            for i in range(n - 1):
                if strict[i] < strict[i + 1]:
                    assert ranked[i] > ranked[i + 1]

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(2)
        ids = tuple(range(5))
        errs = rng.random(5) * 4
        w1, _ = update_weights(LayerWeights.uniform(ids),
                               _errors(ids, {"data": errs}))
        perm = rng.permutation(5)
        w2, _ = update_weights(LayerWeights.uniform(ids),
                               _errors(ids, {"data": errs[perm]}))
        assert np.allclose(w2.data, w1.data[perm])

    def test_single_layer_falls_back_uniform(self):
        ids = (0,)
        w, fb = update_weights(LayerWeights.uniform(ids),
                               _errors(ids, {name: [5.0] for name in FAMILIES}))
        assert set(fb) == set(FAMILIES)
        for name in FAMILIES:
            assert w.family(name)[0] == 1.0

    def test_all_zero_errors_fall_back_uniform(self):
        ids = (0, 1, 2)
        w, fb = update_weights(LayerWeights.uniform(ids),
                               _errors(ids, {name: np.zeros(3) for name in FAMILIES}))
        assert set(fb) == set(FAMILIES)
        for name in FAMILIES:
            assert np.allclose(w.family(name), 1.0 / 3.0)

    @given(st.lists(st.floats(min_value=0.001, max_value=1000.0),
                    min_size=2, max_size=6))
    @settings(max_examples=60, deadline=None)
    def test_normalization_idempotent(self, errs):
        ids = tuple(range(len(errs)))
        w1, _ = update_weights(LayerWeights.uniform(ids),
                               _errors(ids, {"data": errs}))
        # renormalizing the already-normalized family changes nothing
        from tacitdcf.weights import _normalize

        fam = w1.data
        assert np.array_equal(_normalize(fam), fam)
