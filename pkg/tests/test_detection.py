import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photonnet.algebra import Mode, StateVector, inner_product, norm_squared
from photonnet.crosscheck import random_state
from photonnet.detection import (ApdModel, GateWindow, OutcomeSpec, apply_m0, click_marginals,
                                 filtered_detector_probability, gated_kernel,
                                 gated_number_expectation, linear_response_probability, m0_expectation,
                                 no_cross_terms_decomposition, number_distribution, number_expectation,
                                 outcome_probability, outcome_table, projector_apply)
from photonnet.errors import ContractError, ValidationError
from photonnet.oracle import DenseFockSpace
from photonnet.sources import CoherentSpec, coherent, fock_state, single_photon
from photonnet.spectral import FrequencyGrid, SpectralAmplitude

GRID = FrequencyGrid(1.0, 2.0, 2)
X, Y, Z = Mode("x"), Mode("y"), Mode("z")


class TestApdModel:
    def test_probability_range(self):
        with pytest.raises(ValidationError):
            ApdModel(X, 1.5)
        with pytest.raises(ValidationError):
            ApdModel(X, 0.5, -0.1)

    def test_direction_must_match(self):
        with pytest.raises(ValidationError):
            ApdModel(Mode("w", direction="-"), 0.5)

    def test_default_name(self):
        assert ApdModel((X, Y), 0.5).name == "x+y"

    def test_overlapping_scopes(self):
        with pytest.raises(ValidationError):
            OutcomeSpec(J0=(ApdModel((X, Y), 0.5),), J1=(ApdModel(Y, 0.5),))


class TestOutcomes:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_table_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        psi = random_state(rng, GRID, [X, Y, Z], max_photons=3)
        dets = [ApdModel(X, rng.uniform(), rng.uniform(0, 0.2)), ApdModel((Y, Z), rng.uniform(), 0.0)]
        space = DenseFockSpace([X, Y, Z], GRID, 3)
        dense = space.outcome_table(space.embed(psi), [(d.modes, d.eta_det, d.p_dark) for d in dets])
        for (pa, a), (pb, b) in zip(outcome_table(psi, dets), dense):
            assert pa == pb
            assert abs(a - b) <= 1e-10

    def test_pattern_order(self):
        dets = [ApdModel(X, 0.5), ApdModel(Y, 0.5)]
        psi = random_state(np.random.default_rng(0), GRID, [X, Y])
        assert [p for p, _ in outcome_table(psi, dets)] == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_vacuum_dark_counts(self):
        psi = StateVector.vacuum(GRID)
        d = ApdModel(X, 0.9, 0.05)
        assert outcome_probability(psi, OutcomeSpec(J1=(d,))) == pytest.approx(0.05)

    def test_marginals_match_table(self):
        rng = np.random.default_rng(1)
        psi = random_state(rng, GRID, [X, Y])
        dets = [ApdModel(X, 0.3, 0.01), ApdModel(Y, 0.8, 0.02)]
        table = dict(outcome_table(psi, dets))
        marg = click_marginals(psi, dets)
        assert marg[0] == pytest.approx(table[(1, 0)] + table[(1, 1)])
        assert marg[1] == pytest.approx(table[(0, 1)] + table[(1, 1)])

    def test_unnormalized_state_rejected(self):
        psi = 2.0 * random_state(np.random.default_rng(2), GRID, [X])
        with pytest.raises(ContractError):
            outcome_table(psi, [ApdModel(X, 0.5)])


class TestM0:
    def test_symmetric_square_root(self):
        psi = random_state(np.random.default_rng(3), GRID, [X, Y])
        d = [ApdModel(X, 0.4, 0.1)]
        half = apply_m0(psi, d, symmetric=True)
        assert norm_squared(half) == pytest.approx(m0_expectation(psi, d))
        assert inner_product(psi, apply_m0(psi, d)).real == pytest.approx(m0_expectation(psi, d))

    def test_commute(self):
        psi = random_state(np.random.default_rng(4), GRID, [X, Y])
        a, b = ApdModel(X, 0.3, 0.01), ApdModel(Y, 0.6, 0.02)
        ab = apply_m0(apply_m0(psi, a), b)
        ba = apply_m0(apply_m0(psi, b), a)
        assert abs(inner_product(ab, ba) - norm_squared(ab)) <= 1e-12

    def test_no_cross_terms(self):
        psi = random_state(np.random.default_rng(5), GRID, [X, Y], max_photons=3)
        d = ApdModel(X, 0.35, 0.02)
        parts = no_cross_terms_decomposition(psi, d)
        assert sum(w for _, w, _ in parts) == pytest.approx(1.0)
        click = sum(w * p for _, w, p in parts)
        assert click == pytest.approx(outcome_probability(psi, OutcomeSpec(J1=(d,))))


class TestNumbers:
    def test_projectors_partition(self):
        psi = random_state(np.random.default_rng(6), GRID, [X, Y], max_photons=3)
        total = sum(norm_squared(projector_apply(psi, X, n)) for n in range(4))
        assert total == pytest.approx(1.0)

    def test_distribution_mean(self):
        psi = random_state(np.random.default_rng(7), GRID, [X, Y], max_photons=3)
        dist = number_distribution(psi, X)
        assert sum(n * p for n, p in dist.items()) == pytest.approx(number_expectation(psi, X))

    def test_coherent_mean(self):
        f = SpectralAmplitude.gaussian(FrequencyGrid(1.0, 2.0, 8), 1.5, 0.1)
        psi = coherent(CoherentSpec(X, 1.2, f, 1e-15))
        assert number_expectation(psi, X) == pytest.approx(1.44, abs=1e-12)


class TestFiltered:
    def test_matched_filter(self):
        grid = FrequencyGrid(1.0, 2.0, 8)
        f = SpectralAmplitude.gaussian(grid, 1.5, 0.1)
        g = SpectralAmplitude.gaussian(grid, 1.6, 0.1)
        psi = single_photon(X, f)
        assert filtered_detector_probability(psi, [(X, f)]) == pytest.approx(1.0)
        overlap = np.sum(grid.weights * np.conj(g.vector()) * f.vector())
        assert filtered_detector_probability(psi, [(X, g)]) == pytest.approx(abs(overlap) ** 2)

    def test_non_orthonormal_filters(self):
        grid = FrequencyGrid(1.0, 2.0, 8)
        f = SpectralAmplitude.gaussian(grid, 1.5, 0.1)
        psi = fock_state(X, f, 2)
        with pytest.raises(ValidationError):
            filtered_detector_probability(psi, [(X, f), (X, f)])


class TestGated:
    def test_kernel_diagonal(self):
        grid = FrequencyGrid(1.0, 2.0, 5)
        k = gated_kernel(grid, GateWindow(0.0, 3.0))
        np.testing.assert_allclose(np.diag(k).real, 3.0 / (2 * np.pi))

    def test_kernel_explicit_entry(self):
        grid = FrequencyGrid(1.0, 2.0, 4)
        win = GateWindow(0.4, 7.0)
        k = gated_kernel(grid, win)
        w = grid.omega
        d = w[0] - w[2]
        assert k[0, 2] == pytest.approx(np.exp(1j * d * 0.4) * np.sin(d * 3.5) / (np.pi * d))

    def test_window_needs_k(self):
        with pytest.raises(ValidationError):
            GateWindow(0.0, 1.0, x=1.0)
        with pytest.raises(ValidationError):
            GateWindow(0.0, 0.0)

    def test_delayed_pulse_found_by_shifted_gate(self):
        grid = FrequencyGrid(12.0, 28.0, 800)
        f = SpectralAmplitude.gaussian(grid, 20.0, 1.0, delay=30.0)
        psi = single_photon(X, f)
        on = gated_number_expectation(psi, X, GateWindow(t_g=30.0, T=20.0))
        off = gated_number_expectation(psi, X, GateWindow(t_g=0.0, T=20.0))
        assert on == pytest.approx(1.0, abs=1e-6)
        assert off < 1e-6

    def test_linear_response(self):
        f = SpectralAmplitude.gaussian(FrequencyGrid(1.0, 2.0, 8), 1.5, 0.1)
        psi = fock_state(X, f, 2)
        d = ApdModel(X, 0.01, 1e-4)
        assert linear_response_probability(psi, d) == pytest.approx(1e-4 + (1 - 1e-4) * 0.02)
        exact = outcome_probability(psi, OutcomeSpec(J1=(d,)))
        assert abs(linear_response_probability(psi, d) - exact) < 1e-3
