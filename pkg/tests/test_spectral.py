import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photonnet.errors import CapExceeded, ContractError, ValidationError
from photonnet.spectral import (FrequencyGrid, SpectralAmplitude, inner, mean_frequency,
                                symmetrize)


def rand_vec(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


@pytest.fixture
def grid8():
    return FrequencyGrid(1.0, 3.0, 8)


class TestFrequencyGrid:
    def test_uniform_weights_and_centres(self):
        g = FrequencyGrid(1.0, 2.0, 4)
        np.testing.assert_allclose(g.weights, 0.25)
        np.testing.assert_allclose(g.omega, [1.125, 1.375, 1.625, 1.875])

    def test_delta_convention_integrates_to_one(self, grid8):
        for i in range(grid8.bins):
            assert grid8.weights[i] * grid8.delta()[i, i] == pytest.approx(1.0)

    def test_trapezoid_weights_sum_to_span(self):
        g = FrequencyGrid(1.0, 2.0, 5, scheme="trapezoid")
        assert g.weights.sum() == pytest.approx(1.0)
        assert np.all(g.weights > 0)

    @pytest.mark.parametrize("args", [(0.0, 1.0, 4), (2.0, 1.0, 4), (1.0, 2.0, 0), (-1.0, 1.0, 3)])
    def test_invalid_grid(self, args):
        with pytest.raises(ValidationError):
            FrequencyGrid(*args)

    def test_json_round_trip(self, grid8):
        assert FrequencyGrid.from_json(json.loads(json.dumps(grid8.to_json()))) == grid8


class TestInner:
    def test_normalized_self_inner_is_one(self, grid8):
        f = SpectralAmplitude.gaussian(grid8, 2.0, 0.3)
        assert inner(f, f) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_supports_are_orthogonal(self, grid8):
        a = np.zeros(8, complex)
        b = np.zeros(8, complex)
        a[:3] = 1
        b[5:] = 1j
        f = SpectralAmplitude.factored(grid8, [a], normalize=True)
        g = SpectralAmplitude.factored(grid8, [b], normalize=True)
        assert inner(g, f) == 0

    def test_matches_direct_weighted_sum(self, grid8):
        rng = np.random.default_rng(3)
        f = SpectralAmplitude.factored(grid8, [rand_vec(rng, 8)], normalize=True)
        g = SpectralAmplitude.factored(grid8, [rand_vec(rng, 8)], normalize=True)
        fv, gv, w = f.vector(), g.vector(), grid8.weights
        direct = sum(w[i] * np.conj(gv[i]) * fv[i] for i in range(8))
        assert abs(inner(g, f) - direct) < 1e-12

    def test_dense_vs_factored_arity2(self, grid8):
        rng = np.random.default_rng(4)
        u, v = rand_vec(rng, 8), rand_vec(rng, 8)
        fac = SpectralAmplitude.factored(grid8, [u, v])
        den = SpectralAmplitude.dense(grid8, np.outer(u, v))
        assert inner(fac, den) == pytest.approx(inner(den, den))

    def test_grid_mismatch(self, grid8):
        f = SpectralAmplitude.gaussian(grid8, 2.0, 0.3)
        g = SpectralAmplitude.gaussian(FrequencyGrid(1.0, 3.0, 9), 2.0, 0.3)
        with pytest.raises(ValidationError):
            inner(f, g)

    def test_arity_mismatch(self, grid8):
        f = SpectralAmplitude.gaussian(grid8, 2.0, 0.3)
        with pytest.raises(ValidationError):
            inner(f, SpectralAmplitude.product(f, f))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_conjugate_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        g = FrequencyGrid(1.0, 2.0, 5)
        a = SpectralAmplitude.dense(g, rand_vec(rng, 25).reshape(5, 5))
        b = SpectralAmplitude.factored(g, [rand_vec(rng, 5), rand_vec(rng, 5)])
        assert inner(a, b) == pytest.approx(np.conj(inner(b, a)))
        assert inner(a, a).real >= 0


class TestSymmetrize:
    def test_symmetric_input_unchanged(self, grid8):
        rng = np.random.default_rng(5)
        m = rand_vec(rng, 64).reshape(8, 8)
        h = SpectralAmplitude.dense(grid8, m + m.T)
        out = symmetrize(h)
        assert np.max(np.abs(out.to_dense() - h.to_dense())) <= 1e-15

    def test_two_factor_average(self, grid8):
        rng = np.random.default_rng(6)
        f, g = rand_vec(rng, 8), rand_vec(rng, 8)
        out = symmetrize(SpectralAmplitude.factored(grid8, [f, g])).to_dense()
        np.testing.assert_allclose(out, (np.outer(f, g) + np.outer(g, f)) / 2, atol=1e-15)

    def test_arity3_matches_six_permutation_average(self):
        g = FrequencyGrid(1.0, 2.0, 3)
        rng = np.random.default_rng(7)
        t = rand_vec(rng, 27).reshape(3, 3, 3)
        expect = np.zeros_like(t)
        for i, j, k in itertools.product(range(3), repeat=3):
            expect[i, j, k] = sum(t[p] for p in set(itertools.permutations((i, j, k)))) / 6 \
                if len({i, j, k}) == 3 else np.mean([t[p] for p in itertools.permutations((i, j, k))])
        out = symmetrize(SpectralAmplitude.dense(g, t)).to_dense()
        assert np.max(np.abs(out - expect)) < 1e-14

    def test_idempotent(self):
        g = FrequencyGrid(1.0, 2.0, 3)
        rng = np.random.default_rng(8)
        h = SpectralAmplitude.dense(g, rand_vec(rng, 27).reshape(3, 3, 3))
        once = symmetrize(h, [[0, 2]])
        twice = symmetrize(once, [[0, 2]])
        assert np.max(np.abs(once.to_dense() - twice.to_dense())) < 1e-15

    def test_overlapping_groups_rejected(self, grid8):
        h = SpectralAmplitude.dense(grid8, np.ones((8, 8)))
        with pytest.raises(ValidationError):
            symmetrize(h, [[0, 1], [1]])

    def test_densify_above_cap(self):
        g = FrequencyGrid(1.0, 2.0, 40)
        h = SpectralAmplitude.factored(g, [np.ones(40)] * 4)
        with pytest.raises(CapExceeded):
            symmetrize(h)


class TestMeanFrequency:
    def test_single_bin(self, grid8):
        v = np.zeros(8, complex)
        v[3] = 1
        f = SpectralAmplitude.factored(grid8, [v], normalize=True)
        assert mean_frequency(f) == pytest.approx(grid8.omega[3])

    def test_two_bins_uniform(self, grid8):
        v = np.zeros(8, complex)
        v[1] = 1
        v[6] = 1j
        f = SpectralAmplitude.factored(grid8, [v], normalize=True)
        assert mean_frequency(f) == pytest.approx((grid8.omega[1] + grid8.omega[6]) / 2)

    def test_arity2_matches_dense_sum(self):
        g = FrequencyGrid(1.0, 2.0, 4)
        rng = np.random.default_rng(9)
        m = rand_vec(rng, 16).reshape(4, 4)
        h = SpectralAmplitude.dense(g, m + m.T, normalize=True)
        t = h.to_dense()
        w = g.weights
        direct = sum(g.omega[i] * abs(t[i, j]) ** 2 * w[i] * w[j] for i in range(4) for j in range(4))
        assert abs(mean_frequency(h) - direct) < 1e-12

    def test_unnormalized_rejected(self, grid8):
        f = SpectralAmplitude.factored(grid8, [np.ones(8) * 3])
        with pytest.raises(ContractError):
            mean_frequency(f)

    def test_within_grid(self, grid8):
        f = SpectralAmplitude.gaussian(grid8, 2.2, 0.5)
        assert grid8.omega_min <= mean_frequency(f) <= grid8.omega_max


class TestAmplitude:
    def test_dense_cap(self):
        g = FrequencyGrid(1.0, 2.0, 1001)
        with pytest.raises(CapExceeded):
            SpectralAmplitude.dense(g, np.ones((1001, 1001)))

    def test_delta_pair_rejected_when_normalizing(self, grid8):
        with pytest.raises(ContractError):
            SpectralAmplitude.pair(grid8, np.diag(np.ones(8)), normalize=True)

    def test_normalized_flag(self, grid8):
        rng = np.random.default_rng(10)
        h = SpectralAmplitude.pair(grid8, rand_vec(rng, 64).reshape(8, 8), normalize=True)
        assert abs(h.norm_squared() - 1) <= 1e-9

    @pytest.mark.parametrize("kind", ["factored", "dense", "pair"])
    def test_json_round_trip(self, grid8, kind):
        rng = np.random.default_rng(11)
        if kind == "factored":
            a = SpectralAmplitude.factored(grid8, [rand_vec(rng, 8), rand_vec(rng, 8)])
        elif kind == "dense":
            a = SpectralAmplitude.dense(grid8, rand_vec(rng, 512).reshape(8, 8, 8))
        else:
            a = SpectralAmplitude.pair(grid8, rand_vec(rng, 64).reshape(8, 8))
        b = SpectralAmplitude.from_json(json.loads(json.dumps(a.to_json())))
        assert b.structure_key() == a.structure_key()
