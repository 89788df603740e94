"""Constructors for the standard state families.

All constructors return a :class:`~photonnet.algebra.StateVector` built from
factored amplitudes where possible, so that multi-photon overlaps reduce to
permanents rather than dense tensors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.constants import hbar
from scipy.stats import poisson

from .algebra import (Mode, MonomialTerm, StateVector, apply_one_body, inner_product,
                      norm_squared, tensor)
from .errors import ContractError, ValidationError
from .spectral import NORM_TOL, Block, SpectralAmplitude, symmetrize

HBAR = hbar
COHERENT_MAX_PHOTONS = 80


def _require_arity(amp: SpectralAmplitude, n: int, what: str) -> None:
    if amp.arity != n:
        raise ValidationError(f"{what} needs an arity-{n} amplitude, got arity {amp.arity}")


def _check_norm(psi: StateVector, what: str, target: float = 1.0) -> float:
    nsq = norm_squared(psi)
    if abs(nsq - target) > NORM_TOL * max(1.0, target):
        raise ContractError(f"{what}: state norm squared is {nsq:.12g}, expected {target}")
    return nsq


def _rescaled(psi: StateVector) -> StateVector:
    nsq = norm_squared(psi)
    if nsq == 0:
        raise ContractError("cannot normalize the zero state")
    return (1.0 / math.sqrt(nsq)) * psi


def single_photon(mode: Mode, f: SpectralAmplitude) -> StateVector:
    """``a_f^dag |0>`` for a normalized arity-1 ``f``."""
    _require_arity(f, 1, "single photon")
    if not f.is_normalized():
        raise ContractError(f"single photon spectrum has norm squared {f.norm_squared():.12g}")
    return StateVector((MonomialTerm(1.0, (mode,), f),))


def n_photon(mode: Mode, h: SpectralAmplitude, n: int | None = None,
             normalize: bool = False) -> StateVector:
    """``(n!)^{-1/2} (h : a^dag^n) |0>``.

    The norm of this state equals ``|S h|^2`` with ``S`` the full symmetrizer,
    which must be 1 unless ``normalize`` asks for rescaling.
    """
    n = h.arity if n is None else n
    _require_arity(h, n, "n-photon state")
    if n == 0:
        return StateVector.vacuum(h.grid)
    psi = StateVector((MonomialTerm(1.0 / math.sqrt(math.factorial(n)), (mode,) * n, h),))
    if normalize:
        return _rescaled(psi)
    _check_norm(psi, "n-photon state")
    return psi


def fock_state(mode: Mode, f: SpectralAmplitude, n: int) -> StateVector:
    """``(n!)^{-1/2} (a_f^dag)^n |0>``."""
    _require_arity(f, 1, "Fock state")
    return n_photon(mode, SpectralAmplitude.factored(f.grid, [f.vector()] * n), n) if n else \
        StateVector.vacuum(f.grid)


@dataclass(frozen=True)
class CoherentSpec:
    """Parameters of a broadband coherent state truncated at a Poisson tail bound."""

    mode: Mode
    alpha: complex
    f: SpectralAmplitude
    cutoff_epsilon: float = 1e-12

    def __post_init__(self):
        _require_arity(self.f, 1, "coherent state")
        if not 0 < self.cutoff_epsilon < 1:
            raise ValidationError("cutoff_epsilon must lie in (0, 1)")

    @property
    def mean_photons(self) -> float:
        return abs(self.alpha) ** 2

    @property
    def n_max(self) -> int:
        mean = self.mean_photons
        if mean == 0:
            return 0
        n = int(poisson.isf(self.cutoff_epsilon, mean))
        while poisson.sf(n, mean) >= self.cutoff_epsilon:
            n += 1
        while n > 0 and poisson.sf(n - 1, mean) < self.cutoff_epsilon:
            n -= 1
        return n

    @property
    def tail_mass(self) -> float:
        return float(poisson.sf(self.n_max, self.mean_photons)) if self.mean_photons else 0.0


def coherent(spec: CoherentSpec) -> StateVector:
    """``exp(-|alpha|^2/2) sum_n alpha^n / n! (a_f^dag)^n |0>`` up to ``spec.n_max``.

    ``tail_mass`` of the result is the dropped Poisson weight.
    """
    if not spec.f.is_normalized():
        raise ContractError("coherent state spectrum must be normalized")
    grid = spec.f.grid
    n_max = spec.n_max
    if n_max > COHERENT_MAX_PHOTONS:
        raise ContractError(
            f"|alpha|^2 = {spec.mean_photons} with cutoff {spec.cutoff_epsilon} needs "
            f"{n_max} photons, above the limit {COHERENT_MAX_PHOTONS}"
        )
    vec = spec.f.vector()
    prefactor = math.exp(-spec.mean_photons / 2)
    terms = []
    for n in range(n_max + 1):
        coeff = prefactor * spec.alpha**n / math.factorial(n)
        amp = SpectralAmplitude.factored(grid, [vec] * n) if n else SpectralAmplitude.scalar(grid)
        terms.append(MonomialTerm(coeff, (spec.mode,) * n, amp))
    return StateVector.from_terms(terms, spec.tail_mass, grid)


def coherent_product(specs: Sequence[CoherentSpec]) -> StateVector:
    """Tensor product of coherent states on distinct modes."""
    return tensor(*(coherent(s) for s in specs))


@dataclass(frozen=True)
class BiPhotonSpec:
    """``sum_ij C_ij (h_ij : a_i^dag b_j^dag) |0>``."""

    a_modes: tuple
    b_modes: tuple
    C: np.ndarray
    h: Mapping = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.C, dtype=complex)
        if c.shape != (2, 2):
            raise ValidationError("bi-photon coefficient matrix must be 2x2")
        if abs(float(np.sum(np.abs(c) ** 2)) - 1.0) > NORM_TOL:
            raise ValidationError(f"bi-photon coefficients need sum |C_ij|^2 = 1, got {np.sum(np.abs(c)**2)}")
        if len(self.a_modes) != 2 or len(self.b_modes) != 2:
            raise ValidationError("bi-photon needs two a-modes and two b-modes")
        object.__setattr__(self, "C", c)

    def kernel(self, i: int, j: int) -> SpectralAmplitude:
        h = self.h
        if (i, j) in h:
            return h[(i, j)]
        if "all" in h:
            return h["all"]
        raise ValidationError(f"bi-photon kernel h_{i + 1}{j + 1} missing")


def bi_photon(spec: BiPhotonSpec) -> StateVector:
    terms = []
    for i in range(2):
        for j in range(2):
            c = spec.C[i, j]
            if c == 0:
                continue
            h = spec.kernel(i, j)
            _require_arity(h, 2, "bi-photon kernel")
            if not h.is_normalized():
                raise ContractError(f"bi-photon kernel h_{i + 1}{j + 1} is not normalized")
            terms.append(MonomialTerm(c, (spec.a_modes[i], spec.b_modes[j]), h))
    psi = StateVector.from_terms(terms)
    _check_norm(psi, "bi-photon")
    return psi


def singlet_bi_photon(a_modes, b_modes, g: SpectralAmplitude) -> StateVector:
    """``(g : a1^dag b2^dag - a2^dag b1^dag)|0> / sqrt(2)``."""
    c = np.array([[0, 1], [-1, 0]]) / math.sqrt(2)
    return bi_photon(BiPhotonSpec(tuple(a_modes), tuple(b_modes), c, {"all": g}))


def _symmetrize_pairs(f: np.ndarray, n: int) -> np.ndarray:
    """Average a ``2n``-argument tensor over permutations of its ``n`` argument pairs."""
    acc = np.zeros_like(f)
    count = 0
    for perm in itertools.permutations(range(n)):
        axes = [a for p in perm for a in (2 * p, 2 * p + 1)]
        acc += np.transpose(f, axes)
        count += 1
    return acc / count


def qkd_psi_n(a_modes, b_modes, n: int, g: SpectralAmplitude | None = None,
              f: SpectralAmplitude | None = None, normalize: bool = True) -> StateVector:
    """``f : (a1^dag b2^dag - a2^dag b1^dag)^n |0>`` expanded into its binomial components.

    Give either a pair kernel ``g`` (then ``f`` is its ``n``-fold product) or
    a dense ``f`` with argument order ``(w_1, w~_1, ..., w_n, w~_n)``; a dense
    ``f`` is first symmetrized over argument pairs.  The component with ``m``
    factors ``a1^dag b2^dag`` carries ``(-1)^(n-m) C(n, m)``.
    """
    a1, a2 = a_modes
    b1, b2 = b_modes
    if n < 0:
        raise ValidationError("photon-pair number must be non-negative")
    if (g is None) == (f is None):
        raise ValidationError("give exactly one of a pair kernel g or a dense amplitude f")
    if g is not None:
        _require_arity(g, 2, "pair kernel")
        grid = g.grid
        if n == 0:
            return StateVector.vacuum(grid)
        pair_data = g.to_dense()
        amp = SpectralAmplitude(grid, [Block((2 * j, 2 * j + 1), pair_data) for j in range(n)],
                                arity=2 * n)
    else:
        _require_arity(f, 2 * n, "dense pair amplitude")
        grid = f.grid
        if n == 0:
            return StateVector.vacuum(grid)
        amp = SpectralAmplitude.dense(grid, _symmetrize_pairs(f.to_dense(), n))
    terms = []
    for m in range(n + 1):
        modes = []
        for j in range(n):
            modes.extend((a1, b2) if j < m else (a2, b1))
        terms.append(MonomialTerm((-1) ** (n - m) * math.comb(n, m), modes, amp))
    psi = StateVector.from_terms(terms, grid=grid)
    return _rescaled(psi) if normalize else psi


def general_multi_mode(h: SpectralAmplitude, counts: Sequence[int], modes: Sequence[Mode],
                       normalize: bool = False) -> StateVector:
    """Single-term state ``(prod counts!)^{-1/2} (h : prod_x x^dag^{counts_x}) |0>``.

    Arguments of ``h`` are ordered by mode, ``counts[0]`` of them for
    ``modes[0]`` and so on, e.g. ``a1^j a2^(m-j) b1^k b2^(n-k)``.  The norm is
    ``|S h|^2`` with ``S`` symmetrizing within each mode group.
    """
    counts = [int(c) for c in counts]
    if len(counts) != len(modes) or any(c < 0 for c in counts):
        raise ValidationError("counts must be non-negative, one per mode")
    _require_arity(h, sum(counts), "multi-mode state")
    slot_modes = [m for m, c in zip(modes, counts) for _ in range(c)]
    scale = 1.0 / math.sqrt(math.prod(math.factorial(c) for c in counts))
    psi = StateVector((MonomialTerm(scale, slot_modes, h),)) if slot_modes else StateVector.vacuum(h.grid)
    if normalize:
        return _rescaled(psi)
    _check_norm(psi, "multi-mode state")
    return psi


def group_symmetrize(h: SpectralAmplitude, counts: Sequence[int]) -> SpectralAmplitude:
    """Symmetrize ``h`` within each consecutive mode group of sizes ``counts``."""
    groups, start = [], 0
    for c in counts:
        groups.append(list(range(start, start + c)))
        start += c
    return symmetrize(h, groups)


def superposition(parts: Sequence[tuple[complex, StateVector]]) -> StateVector:
    out = None
    for c, psi in parts:
        out = c * psi if out is None else out + c * psi
    if out is None:
        raise ValidationError("empty superposition")
    return out


def energy_expectation(psi: StateVector, modes: Sequence[Mode] | None = None) -> float:
    """``<psi| sum_x int hbar |w| x^dag x |psi>`` in joules."""
    if psi.grid is None:
        return 0.0
    scope = psi.modes() if modes is None else modes
    h_psi = apply_one_body(psi, scope, diagonal=np.abs(psi.grid.omega))
    return HBAR * inner_product(psi, h_psi).real
