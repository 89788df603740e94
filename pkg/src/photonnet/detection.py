"""Projectors, number operators and the avalanche-photodiode (APD) POVM.

Exact probabilities never materialize POVM elements.  The no-detect element
of an APD with efficiency ``eta`` and dark-count probability ``p`` acts on a
creation monomial with ``n`` photons in its scope as multiplication by
``(1 - p)(1 - eta)^n``.  Every other outcome follows by inclusion-exclusion:

    Pr(J0 silent, J1 click) = sum_{X subset J1} (-1)^|X| <psi| M0(J0 + X) |psi>.

Because ``M0`` is diagonal on terms, all ``2^|J1|`` expectations reuse one
term Gram matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .algebra import (Mode, MonomialTerm, StateVector, apply_one_body, gram_matrix,
                      inner_product)
from .errors import ContractError, ValidationError
from .spectral import NORM_TOL, FrequencyGrid, SpectralAmplitude

PROB_EPS = 1e-10


def _scope(modes: Mode | Iterable[Mode]) -> tuple[Mode, ...]:
    if isinstance(modes, Mode):
        return (modes,)
    return tuple(modes)


@dataclass(frozen=True)
class ApdModel:
    """Frequency-flat APD over one mode or a mode pair."""

    modes: tuple
    eta_det: float
    p_dark: float = 0.0
    direction: str = "+"
    name: str = ""

    def __post_init__(self):
        modes = _scope(self.modes)
        object.__setattr__(self, "modes", modes)
        if not modes:
            raise ValidationError("detector scope must name at least one mode")
        if len(set(modes)) != len(modes):
            raise ValidationError("detector scope repeats a mode")
        for label, p in (("eta_det", self.eta_det), ("p_dark", self.p_dark)):
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{label} = {p} is not a probability")
        bad = [m.name for m in modes if m.direction != self.direction]
        if bad:
            raise ValidationError(
                f"detector direction {self.direction!r} does not match mode(s) {', '.join(bad)}"
            )
        if not self.name:
            object.__setattr__(self, "name", "+".join(m.name for m in modes))

    def with_params(self, eta_det: float | None = None, p_dark: float | None = None) -> "ApdModel":
        return ApdModel(self.modes, self.eta_det if eta_det is None else eta_det,
                        self.p_dark if p_dark is None else p_dark, self.direction, self.name)


@dataclass(frozen=True)
class OutcomeSpec:
    """Detectors required to stay silent (``J0``) and to click (``J1``)."""

    J0: tuple = ()
    J1: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "J0", tuple(self.J0))
        object.__setattr__(self, "J1", tuple(self.J1))
        seen: set = set()
        for d in self.J0 + self.J1:
            overlap = seen & set(d.modes)
            if overlap:
                raise ValidationError(
                    f"detector scopes overlap on {', '.join(sorted(m.name for m in overlap))}"
                )
            seen |= set(d.modes)


@dataclass(frozen=True)
class GateWindow:
    """Detector gate of duration ``T`` centred at ``t_g``, at position ``x``."""

    t_g: float
    T: float
    x: float = 0.0
    k: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.T > 0:
            raise ValidationError("gate duration T must be positive")
        if self.x != 0 and self.k is None:
            raise ValidationError("a gate at x != 0 needs per-bin propagation constants k")


# -- projectors and number operators ----------------------------------------


def projector_apply(psi: StateVector, modes: Mode | Iterable[Mode], n: int) -> StateVector:
    """Keep the terms with exactly ``n`` photons in ``modes``."""
    scope = _scope(modes)
    kept = tuple(t for t in psi.terms if t.count(scope) == n)
    return StateVector(kept, 0.0, psi.grid)


def _require_normalized(psi: StateVector, value: float | None = None) -> float:
    nsq = value if value is not None else inner_product(psi, psi).real
    if abs(nsq - (1.0 - psi.tail_mass)) > NORM_TOL:
        raise ContractError(
            f"state must be normalized: norm squared {nsq:.12g}, tail mass {psi.tail_mass:.3g}"
        )
    return nsq


def modes_in_direction(psi: StateVector, modes: Iterable[Mode] | None, direction: str | None):
    scope = psi.modes() if modes is None else _scope(modes)
    if direction is not None:
        scope = tuple(m for m in scope if m.direction == direction)
    return scope


def number_expectation(psi: StateVector, modes: Mode | Iterable[Mode] | None = None,
                       direction: str | None = None, check: bool = True) -> float:
    """``<psi| sum_x int x^dag(w) x(w) dw |psi>`` over the mode scope."""
    scope = modes_in_direction(psi, modes, direction)
    ev = _Evaluator(psi)
    if check:
        _require_normalized(psi, ev.norm_squared())
    return ev.number(scope)


def number_distribution(psi: StateVector, modes: Mode | Iterable[Mode]) -> dict[int, float]:
    """``||P_n psi||^2`` for every photon number ``n`` present in the scope."""
    scope = _scope(modes)
    ev = _Evaluator(psi)
    counts = np.array([t.count(scope) for t in psi.terms])
    return {int(n): ev.quadratic(counts == n) for n in np.unique(counts)}


def pr_detect_given_n(model: ApdModel, n: int) -> float:
    """APD click probability for ``n`` photons: ``1 - (1 - p)(1 - eta)^n``."""
    if n < 0:
        raise ValidationError("photon number must be non-negative")
    return 1.0 - (1.0 - model.p_dark) * (1.0 - model.eta_det) ** n


# -- M0 ----------------------------------------------------------------------


def m0_factor(term: MonomialTerm, models: Sequence[ApdModel]) -> float:
    out = 1.0
    for d in models:
        out *= (1.0 - d.p_dark) * (1.0 - d.eta_det) ** term.count(d.modes)
    return out


def apply_m0(psi: StateVector, models: ApdModel | Sequence[ApdModel], symmetric: bool = False) -> StateVector:
    """Apply the no-detect POVM element of one or more detectors.

    Each term is scaled by ``(1 - p)(1 - eta)^n`` per detector.  With
    ``symmetric`` the square root of that factor is used, so that
    ``||M0^{1/2} psi||^2 = <psi|M0|psi>``.
    """
    models = (models,) if isinstance(models, ApdModel) else tuple(models)
    power = 0.5 if symmetric else 1.0
    terms = [t.with_coeff(t.coeff * m0_factor(t, models) ** power) for t in psi.terms]
    return StateVector(tuple(t for t in terms if t.coeff != 0), 0.0, psi.grid)


class _Evaluator:
    """Quadratic forms ``sum_st conj(c_s) c_t G_st d_t`` over one state's terms.

    Holds the term Gram matrix so that many diagonal operators can be
    evaluated on the same state cheaply.  Safe to share between threads once
    built.
    """

    def __init__(self, psi: StateVector):
        self.psi = psi
        self.coeffs = np.array([t.coeff for t in psi.terms], dtype=complex)
        self.gram = gram_matrix(psi) if psi.terms else np.zeros((0, 0))
        self._counts: dict = {}

    def counts(self, scope: tuple) -> np.ndarray:
        if scope not in self._counts:
            self._counts[scope] = np.array([t.count(scope) for t in self.psi.terms], dtype=float)
        return self._counts[scope]

    def quadratic(self, diag) -> float:
        diag = np.broadcast_to(np.asarray(diag, dtype=float), self.coeffs.shape)
        v = self.coeffs * diag
        value = np.vdot(self.coeffs, self.gram @ v)
        return float(value.real)

    def norm_squared(self) -> float:
        return self.quadratic(1.0)

    def number(self, scope: tuple) -> float:
        return self.quadratic(self.counts(scope))

    def m0(self, models: Sequence[ApdModel]) -> float:
        diag = np.ones(len(self.psi.terms))
        prefactor = 1.0
        for d in models:
            prefactor *= 1.0 - d.p_dark
            diag = diag * (1.0 - d.eta_det) ** self.counts(d.modes)
        return prefactor * self.quadratic(diag)


def _clamp(p: float, what: str) -> float:
    if p < -PROB_EPS or p > 1 + PROB_EPS:
        raise ContractError(f"{what} = {p!r} lies outside [0, 1] beyond the {PROB_EPS} budget")
    return min(max(p, 0.0), 1.0)


def m0_expectation(psi: StateVector, models: Sequence[ApdModel]) -> float:
    return _Evaluator(psi).m0(tuple(models))


def _outcome(ev: _Evaluator, spec: OutcomeSpec) -> float:
    total = 0.0
    for r in range(len(spec.J1) + 1):
        for subset in itertools.combinations(spec.J1, r):
            total += (-1) ** r * ev.m0(spec.J0 + subset)
    return total


def outcome_probability(psi: StateVector, spec: OutcomeSpec) -> float:
    """Probability that detectors in ``J0`` stay silent and those in ``J1`` click."""
    ev = _Evaluator(psi)
    _require_normalized(psi, ev.norm_squared())
    return _clamp(_outcome(ev, spec), "outcome probability")


def outcome_table(psi: StateVector, detectors: Sequence[ApdModel]) -> list[tuple[tuple[int, ...], float]]:
    """All ``2^|D|`` click patterns with their probabilities.

    Patterns are tuples of 0/1 in detector order, enumerated with the first
    detector as the most significant bit.
    """
    detectors = tuple(detectors)
    OutcomeSpec((), detectors)  # scope validation
    ev = _Evaluator(psi)
    _require_normalized(psi, ev.norm_squared())
    rows = []
    for pattern in itertools.product((0, 1), repeat=len(detectors)):
        spec = OutcomeSpec(tuple(d for d, b in zip(detectors, pattern) if not b),
                           tuple(d for d, b in zip(detectors, pattern) if b))
        rows.append((pattern, _clamp(_outcome(ev, spec), f"probability of pattern {pattern}")))
    return rows


def click_marginals(psi: StateVector, detectors: Sequence[ApdModel]) -> list[float]:
    """Single-detector click probabilities ``1 - <M0(d)>``."""
    ev = _Evaluator(psi)
    _require_normalized(psi, ev.norm_squared())
    norm = 1.0 - psi.tail_mass
    return [_clamp(norm - ev.m0((d,)), f"click probability of {d.name}") for d in detectors]


def no_cross_terms_decomposition(psi: StateVector, model: ApdModel) -> list[tuple[int, float, float]]:
    """Per photon number in the detector scope: ``(n, ||P_n psi||^2, Pr(click | n))``.

    The click probability is ``sum_n weight_n * Pr(click | n)`` with no
    interference between blocks.
    """
    ev = _Evaluator(psi)
    _require_normalized(psi, ev.norm_squared())
    counts = ev.counts(model.modes)
    out = []
    for n in np.unique(counts):
        weight = ev.quadratic(counts == n)
        out.append((int(n), weight, pr_detect_given_n(model, int(n))))
    return out


def filtered_detector_probability(psi: StateVector, filters: Sequence[tuple[Mode, SpectralAmplitude]]) -> float:
    """``|<0| prod_j a_{g_j}(mode_j) |psi>|^2`` for normalized filter spectra.

    Filters on the same mode must be mutually orthonormal.
    """
    if not filters:
        raise ValidationError("at least one filter is required")
    by_mode: dict = {}
    for mode, g in filters:
        if g.arity != 1 or not g.is_normalized():
            raise ValidationError(f"filter on {mode.name} must be a normalized single-frequency amplitude")
        by_mode.setdefault(mode, []).append(g)
    for mode, gs in by_mode.items():
        if len(gs) > 1:
            m = np.array([[np.vdot(a.vector(), a.grid.weights * b.vector()) for b in gs] for a in gs])
            if np.max(np.abs(m - np.eye(len(gs)))) > 1e-9:
                raise ValidationError(f"filters on {mode.name} are not orthonormal")
    modes = [m for m, _ in filters]
    amp = SpectralAmplitude.factored(filters[0][1].grid, [g.vector() for _, g in filters])
    probe = StateVector((MonomialTerm(1.0, modes, amp),))
    amplitude = inner_product(probe, psi)
    return float(abs(amplitude) ** 2)


# -- gated and linearized detection -----------------------------------------


def gated_kernel(grid: FrequencyGrid, window: GateWindow, direction: str = "+") -> np.ndarray:
    """Two-frequency kernel of a detector integrating ``a^dag a`` over the gate window.

    ``K(w, w') = exp(i[(w - w') t_g -/+ (k(w) - k(w')) x]) sin((w - w') T / 2) / (pi (w - w'))``
    with diagonal ``T / (2 pi)``.
    """
    w = grid.omega
    dw = w[:, None] - w[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(dw == 0, window.T / (2 * np.pi), np.sin(dw * window.T / 2) / (np.pi * dw))
    phase = dw * window.t_g
    if window.x != 0:
        k = np.asarray(window.k, dtype=float)
        if k.shape != w.shape:
            raise ValidationError(f"propagation constants need {grid.bins} entries")
        sign = -1.0 if direction == "+" else 1.0
        phase = phase + sign * (k[:, None] - k[None, :]) * window.x
    return np.exp(1j * phase) * sinc


def gated_number_expectation(psi: StateVector, modes: Mode | Iterable[Mode], window: GateWindow,
                             direction: str = "+") -> float:
    """``<psi| int int a^dag(w) K(w, w') a(w') |psi>`` with the gated kernel."""
    scope = _scope(modes)
    if psi.grid is None:
        return 0.0
    kernel = gated_kernel(psi.grid, window, direction)
    value = inner_product(psi, apply_one_body(psi, scope, kernel=kernel))
    return float(value.real)


def linear_response_probability(psi: StateVector, model: ApdModel, window: GateWindow | None = None) -> float:
    """Linearized click probability ``p + (1 - p) eta <N>``, valid for ``eta <N> << 1``.

    With a gate window the number operator is replaced by its gated form,
    which tends to the plain number operator as ``T`` grows.
    """
    if window is None:
        n = number_expectation(psi, model.modes, check=False)
    else:
        n = gated_number_expectation(psi, model.modes, window, model.direction)
    return model.p_dark + (1.0 - model.p_dark) * model.eta_det * n


# -- observables for density traces -----------------------------------------


class Observable:
    """Operator with matrix elements between state vectors."""

    def matrix_element(self, bra: StateVector, ket: StateVector) -> complex:
        raise NotImplementedError


class Identity(Observable):
    def matrix_element(self, bra, ket):
        return inner_product(bra, ket)


@dataclass(frozen=True)
class Projector(Observable):
    modes: tuple
    n: int

    def matrix_element(self, bra, ket):
        return inner_product(bra, projector_apply(ket, self.modes, self.n))


@dataclass(frozen=True)
class NumberOperator(Observable):
    modes: tuple

    def matrix_element(self, bra, ket):
        return inner_product(bra, apply_one_body(ket, _scope(self.modes)))


@dataclass(frozen=True)
class Outcome(Observable):
    """POVM element of an :class:`OutcomeSpec`."""

    spec: OutcomeSpec

    def matrix_element(self, bra, ket):
        total = 0j
        for r in range(len(self.spec.J1) + 1):
            for subset in itertools.combinations(self.spec.J1, r):
                total += (-1) ** r * inner_product(bra, apply_m0(ket, self.spec.J0 + subset))
        return total


@dataclass(frozen=True)
class LinearResponse(Observable):
    """``p + (1 - p) eta N`` with ``N`` optionally gated."""

    model: ApdModel
    window: GateWindow | None = None

    def matrix_element(self, bra, ket):
        d = self.model
        base = inner_product(bra, ket)
        if ket.grid is None:
            return d.p_dark * base
        if self.window is None:
            n_ket = apply_one_body(ket, d.modes)
        else:
            kernel = gated_kernel(ket.grid, self.window, d.direction)
            n_ket = apply_one_body(ket, d.modes, kernel=kernel)
        return d.p_dark * base + (1 - d.p_dark) * d.eta_det * inner_product(bra, n_ket)
