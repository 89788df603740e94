import math

import numpy as np
import pytest
from scipy.stats import poisson

from photonnet.algebra import Mode, inner_product, norm_squared
from photonnet.detection import number_distribution, number_expectation
from photonnet.errors import ContractError, ValidationError
from photonnet.oracle import DenseFockSpace
from photonnet.sources import (COHERENT_MAX_PHOTONS, HBAR, BiPhotonSpec, CoherentSpec, bi_photon,
                               coherent, coherent_product, energy_expectation, fock_state,
                               general_multi_mode, group_symmetrize, n_photon, qkd_psi_n,
                               single_photon, singlet_bi_photon)
from photonnet.spectral import FrequencyGrid, SpectralAmplitude

A1, A2, B1, B2 = Mode("a1", "a", 1), Mode("a2", "a", 2), Mode("b1", "b", 1), Mode("b2", "b", 2)


@pytest.fixture
def grid():
    return FrequencyGrid(1.0, 2.0, 12)


@pytest.fixture
def f(grid):
    return SpectralAmplitude.gaussian(grid, 1.5, 0.1, delay=1.0)


def crand(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


class TestSinglePhoton:
    def test_norm(self, f):
        assert norm_squared(single_photon(A1, f)) == pytest.approx(1.0)

    def test_unnormalized_rejected(self, grid):
        with pytest.raises(ContractError):
            single_photon(A1, SpectralAmplitude.factored(grid, [2 * np.ones(12)]))


class TestNPhoton:
    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_fock_number(self, f, n):
        psi = fock_state(A1, f, n)
        assert number_expectation(psi, A1) == pytest.approx(n)
        assert number_distribution(psi, A1) == {n: pytest.approx(1.0)}

    def test_unsymmetric_kernel_needs_normalize(self, grid):
        rng = np.random.default_rng(0)
        h = SpectralAmplitude.pair(grid, crand(rng, (12, 12)), normalize=True)
        with pytest.raises(ContractError):
            n_photon(A1, h)
        assert norm_squared(n_photon(A1, h, normalize=True)) == pytest.approx(1.0)

    def test_norm_is_symmetrized_norm(self, grid):
        from photonnet.algebra import MonomialTerm, StateVector
        rng = np.random.default_rng(1)
        h = SpectralAmplitude.dense(grid, crand(rng, (12, 12, 12)))
        psi = StateVector((MonomialTerm(1 / math.sqrt(2), (A1, A1, B1), h),))
        assert norm_squared(psi) == pytest.approx(group_symmetrize(h, [2, 1]).norm_squared())
        assert norm_squared(general_multi_mode(h, [2, 1], [A1, B1], normalize=True)) == pytest.approx(1.0)


class TestCoherent:
    @pytest.mark.parametrize("mean", [0.0, 0.3, 2.0, 9.0])
    def test_photon_statistics_poisson(self, f, mean):
        spec = CoherentSpec(A1, complex(math.sqrt(mean)), f)
        psi = coherent(spec)
        dist = number_distribution(psi, A1)
        for n, p in dist.items():
            assert p == pytest.approx(poisson.pmf(n, mean), abs=1e-12)
        assert 1 - norm_squared(psi) == pytest.approx(spec.tail_mass, abs=1e-12)
        assert psi.tail_mass == pytest.approx(spec.tail_mass)

    def test_cutoff_is_smallest_sufficient(self, f):
        spec = CoherentSpec(A1, 1.5, f, cutoff_epsilon=1e-9)
        n = spec.n_max
        assert poisson.sf(n, 2.25) < 1e-9 <= poisson.sf(n - 1, 2.25)

    def test_too_bright_rejected(self, f):
        with pytest.raises(ContractError):
            coherent(CoherentSpec(A1, 8.0, f))
        assert COHERENT_MAX_PHOTONS == 80

    def test_overlap_with_another_coherent_state(self, f):
        a, b = 0.7 + 0.2j, -0.3 + 0.5j
        pa = coherent(CoherentSpec(A1, a, f, 1e-15))
        pb = coherent(CoherentSpec(A1, b, f, 1e-15))
        expect = np.exp(-abs(a) ** 2 / 2 - abs(b) ** 2 / 2 + np.conj(b) * a)
        assert abs(inner_product(pb, pa) - expect) <= 1e-12

    def test_energy_matches_mean_frequency(self, f):
        psi = coherent(CoherentSpec(A1, 1.0, f, 1e-15))
        w = f.grid
        omega_f = np.sum(w.weights * w.omega * np.abs(f.vector()) ** 2)
        assert energy_expectation(psi) == pytest.approx(HBAR * omega_f, rel=1e-12)

    def test_product_matches_oracle(self):
        grid = FrequencyGrid(1.0, 2.0, 2)
        g = SpectralAmplitude.factored(grid, [np.array([1.0, 1j])], normalize=True)
        psi = coherent_product([CoherentSpec(A1, 0.3, g, 1e-3), CoherentSpec(A2, 0.2j, g, 1e-3)])
        assert norm_squared(psi) == pytest.approx(1.0, abs=2e-3)

    def test_bad_epsilon(self, f):
        with pytest.raises(ValidationError):
            CoherentSpec(A1, 1.0, f, cutoff_epsilon=0.0)


class TestBiPhoton:
    def test_singlet_norm_and_oracle(self):
        grid = FrequencyGrid(1.0, 2.0, 2)
        rng = np.random.default_rng(4)
        g = SpectralAmplitude.pair(grid, crand(rng, (2, 2)), normalize=True)
        psi = singlet_bi_photon((A1, A2), (B1, B2), g)
        assert norm_squared(psi) == pytest.approx(1.0)
        space = DenseFockSpace([A1, A2, B1, B2], grid, 2)
        vec = space.embed(psi)
        assert np.vdot(vec, vec).real == pytest.approx(1.0)
        # antisymmetric under swapping the a polarizations together with the b polarizations
        for occ, amp in zip(space.basis, vec):
            if abs(amp) > 1e-12:
                assert sum(occ) == 2

    def test_coefficients_must_be_normalized(self, grid):
        with pytest.raises(ValidationError):
            BiPhotonSpec((A1, A2), (B1, B2), np.eye(2), {})

    def test_missing_kernel(self, grid):
        spec = BiPhotonSpec((A1, A2), (B1, B2), np.diag([1.0, 0.0]), {})
        with pytest.raises(ValidationError):
            bi_photon(spec)


class TestQkd:
    @pytest.mark.parametrize("n", [0, 1, 2, 3])
    def test_normalized(self, n):
        grid = FrequencyGrid(1.0, 2.0, 3)
        g = SpectralAmplitude.pair(grid, crand(np.random.default_rng(n), (3, 3)), normalize=True)
        psi = qkd_psi_n((A1, A2), (B1, B2), n, g=g)
        assert norm_squared(psi) == pytest.approx(1.0)
        assert number_expectation(psi, [A1, A2]) == pytest.approx(n)

    def test_n1_is_singlet(self):
        grid = FrequencyGrid(1.0, 2.0, 3)
        g = SpectralAmplitude.pair(grid, crand(np.random.default_rng(9), (3, 3)), normalize=True)
        psi = qkd_psi_n((A1, A2), (B1, B2), 1, g=g)
        sing = singlet_bi_photon((A1, A2), (B1, B2), g)
        assert abs(abs(inner_product(sing, psi)) - 1.0) <= 1e-12

    def test_dense_amplitude_matches_pair_kernel(self):
        grid = FrequencyGrid(1.0, 2.0, 2)
        g = SpectralAmplitude.pair(grid, crand(np.random.default_rng(3), (2, 2)), normalize=True)
        dense = SpectralAmplitude.dense(grid, np.einsum("ab,cd->abcd", g.to_dense(), g.to_dense()))
        p1 = qkd_psi_n((A1, A2), (B1, B2), 2, g=g)
        p2 = qkd_psi_n((A1, A2), (B1, B2), 2, f=dense)
        assert abs(abs(inner_product(p1, p2)) - 1.0) <= 1e-12

    def test_exactly_one_kernel(self):
        with pytest.raises(ValidationError):
            qkd_psi_n((A1, A2), (B1, B2), 1)
