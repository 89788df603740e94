import numpy as np
import pytest
from scipy.stats import unitary_group

from photonnet.algebra import Mode, inner_product, norm_squared
from photonnet.channels import (apply_channel, apply_network, beam_splitter, coupler, custom_unitary,
                                decoupled_splice_matrix, loss_channel, phase_advance,
                                polarization_rotation, splice, unitarity_residual)
from photonnet.crosscheck import random_state
from photonnet.detection import number_expectation
from photonnet.errors import ContractError, ValidationError
from photonnet.oracle import DenseFockSpace
from photonnet.sources import CoherentSpec, coherent, coherent_product, fock_state
from photonnet.spectral import FrequencyGrid, SpectralAmplitude

GRID = FrequencyGrid(1.0, 2.0, 2)


class TestUnitaryField:
    def test_non_unitary_rejected(self):
        with pytest.raises(ContractError):
            custom_unitary([Mode("x")], [Mode("y")], [[1.1]])

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            custom_unitary([Mode("x"), Mode("y")], [Mode("x"), Mode("y")], np.eye(3))

    def test_residual(self):
        assert unitarity_residual(unitary_group.rvs(4, random_state=1)) < 1e-12

    def test_bin_count_checked(self):
        x = Mode("x")
        psi = random_state(np.random.default_rng(0), GRID, [x])
        field = phase_advance(x, [1.0, 2.0, 3.0], 0.5)
        with pytest.raises(ValidationError):
            apply_channel(psi, field)

    def test_out_mode_clash(self):
        x, y = Mode("x"), Mode("y")
        psi = random_state(np.random.default_rng(1), GRID, [x, y])
        with pytest.raises(ValidationError):
            apply_channel(psi, custom_unitary([x], [y], [[1.0]]))


class TestAgainstOracle:
    @pytest.mark.parametrize("seed", range(6))
    def test_random_unitary(self, seed):
        rng = np.random.default_rng(seed)
        modes = [Mode(f"m{i}") for i in range(3)]
        psi = random_state(rng, GRID, modes, max_photons=3)
        u = np.stack([unitary_group.rvs(3, random_state=rng) for _ in range(GRID.bins)])
        out = apply_channel(psi, custom_unitary(modes, modes, u))
        space = DenseFockSpace(modes, GRID, 3)
        expect = space.channel_operator(modes, modes, u) @ space.embed(psi)
        assert np.max(np.abs(space.embed(out) - expect)) <= 1e-10
        assert norm_squared(out) == pytest.approx(1.0)

    def test_beam_splitter_split(self):
        a, t, r = Mode("a"), Mode("t"), Mode("r")
        f = SpectralAmplitude.factored(GRID, [np.array([1.0, 0.5j])], normalize=True)
        bs = beam_splitter(a, t, r, 0.3)
        out = apply_channel(fock_state(a, f, 2), bs)
        space = DenseFockSpace([a, bs.modes_in[1], t, r], GRID, 2)
        expect = space.channel_operator(bs.modes_in, bs.modes_out, bs.matrices) @ space.embed(fock_state(a, f, 2))
        assert np.max(np.abs(space.embed(out) - expect)) <= 1e-12
        assert number_expectation(out, t) == pytest.approx(0.6)
        assert number_expectation(out, r) == pytest.approx(1.4)


class TestCoherentThroughNetwork:
    def test_stays_coherent(self):
        grid = FrequencyGrid(1.0, 2.0, 3)
        x, y = Mode("x"), Mode("y")
        fx = SpectralAmplitude.factored(grid, [np.array([1.0, 0.3, 0.1j])], normalize=True)
        fy = SpectralAmplitude.factored(grid, [np.array([0.2, 1.0, -0.4])], normalize=True)
        alpha = {x: 0.5 + 0.1j, y: -0.3j}
        rng = np.random.default_rng(2)
        u = np.stack([unitary_group.rvs(2, random_state=rng) for _ in range(3)])
        eps = 1e-13
        psi = coherent_product([CoherentSpec(x, alpha[x], fx, eps), CoherentSpec(y, alpha[y], fy, eps)])
        out = apply_channel(psi, custom_unitary([x, y], [x, y], u))
        # coherent amplitudes transform as phi_k = sum_j U_kj alpha_j f_j
        phis = []
        for k in range(2):
            phi = sum(u[:, k, j] * a * f.vector() for j, (a, f) in enumerate(((alpha[x], fx), (alpha[y], fy))))
            phis.append(phi)
        specs = []
        for m, phi in zip((x, y), phis):
            nrm = np.sqrt(np.sum(grid.weights * np.abs(phi) ** 2))
            specs.append(CoherentSpec(m, nrm, SpectralAmplitude.factored(grid, [phi / nrm]), eps))
        expect = coherent_product(specs)
        assert abs(inner_product(expect, out) - 1.0) <= 1e-10


class TestElements:
    def test_beam_splitter_range(self):
        with pytest.raises(ValidationError):
            beam_splitter(Mode("a"), Mode("b"), Mode("c"), 1.2)

    def test_rotation_requires_su2(self):
        with pytest.raises(ValidationError):
            polarization_rotation(Mode("a1", "a", 1), Mode("a2", "a", 2), 1.0, 0.5)

    def test_loss_transmission(self):
        bp, b, c = Mode("bp"), Mode("b"), Mode("c")
        f = SpectralAmplitude.factored(GRID, [np.array([1.0, 1.0])], normalize=True)
        out = apply_channel(fock_state(bp, f, 1), loss_channel(bp, b, c, 0.6 * np.exp(0.3j)))
        assert number_expectation(out, b) == pytest.approx(0.36)
        assert number_expectation(out, c) == pytest.approx(0.64)

    def test_loss_per_bin(self):
        field = loss_channel(Mode("bp"), Mode("b"), Mode("c"), np.array([0.5, 1.0]))
        assert field.matrices.shape == (2, 2, 2)

    def test_phase_requires_increasing_k(self):
        with pytest.raises(ValidationError):
            phase_advance(Mode("x"), [2.0, 1.0], 1.0)

    def test_phase_is_spectral_shift(self):
        x = Mode("x")
        f = SpectralAmplitude.factored(GRID, [np.array([1.0, 2.0])], normalize=True)
        k = np.array([1.0, 3.0])
        out = apply_channel(fock_state(x, f, 1), phase_advance(x, k, 0.7))
        g = SpectralAmplitude.factored(GRID, [f.vector() * np.exp(1j * k * 0.7)])
        assert abs(inner_product(fock_state(x, g, 1), out) - 1.0) <= 1e-12

    def test_splice_checks_directions(self):
        a1p, a2p = Mode("a1+", "a", 1, "+"), Mode("a2+", "a", 2, "+")
        b1m, b2m = Mode("b1-", "b", 1, "-"), Mode("b2-", "b", 2, "-")
        a1m, a2m = Mode("a1-", "a", 1, "-"), Mode("a2-", "a", 2, "-")
        b1p, b2p = Mode("b1+", "b", 1, "+"), Mode("b2+", "b", 2, "+")
        u = decoupled_splice_matrix(np.eye(2), np.eye(2))
        s = splice((b1m, a1p, b2m, a2p), (a1m, b1p, a2m, b2p), u)
        assert s.dimension == 4
        with pytest.raises(ValidationError):
            splice((a1p, b1m, b2m, a2p), (a1m, b1p, a2m, b2p), u)

    def test_coupler_needs_eight(self):
        modes = [Mode(f"c{i}") for i in range(4)]
        with pytest.raises(ValidationError):
            coupler(modes, modes, np.eye(4))

    def test_network_composition(self):
        x, y = Mode("x"), Mode("y")
        psi = random_state(np.random.default_rng(5), GRID, [x, y])
        u = unitary_group.rvs(2, random_state=3)
        there = custom_unitary([x, y], [x, y], u)
        back = custom_unitary([x, y], [x, y], u.conj().T)
        out = apply_network(psi, [there, back])
        assert abs(inner_product(psi, out) - 1.0) <= 1e-12
