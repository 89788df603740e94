"""Density operators as weighted sums of ket-bra pairs.

``rho = sum_k w_k |ket_k><bra_k|``.  Partial traces contract the traced-out
slots of every ket term against those of every bra term, summing over slot
bijections within each traced mode.  When the traced slots occupy whole
amplitude blocks the kept blocks are reused untouched; otherwise the kept
kernel is split into rank-one pieces by an SVD.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .algebra import BIJECTION_CAP, Mode, MonomialTerm, StateVector
from .detection import Identity, Observable
from .errors import CapExceeded, ContractError, ValidationError
from .oracle import DenseFockSpace, fidelity_overlap as _dense_fidelity
from .spectral import _LETTERS, DENSE_CAP, NORM_TOL, Block, SpectralAmplitude

SVD_REL_TOL = 1e-15


@dataclass(frozen=True)
class DensityOp:
    terms: tuple

    def __post_init__(self):
        terms = []
        for w, ket, bra in self.terms:
            terms.append((complex(w), ket, bra))
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def pure(cls, psi: StateVector) -> "DensityOp":
        return cls(((1.0, psi, psi),))

    @classmethod
    def mixture(cls, parts: Sequence[tuple[float, StateVector]]) -> "DensityOp":
        return cls(tuple((w, psi, psi) for w, psi in parts))

    def __add__(self, other: "DensityOp") -> "DensityOp":
        return DensityOp(self.terms + other.terms)

    def scaled(self, factor: complex) -> "DensityOp":
        return DensityOp(tuple((w * factor, k, b) for w, k, b in self.terms))

    def adjoint(self) -> "DensityOp":
        return DensityOp(tuple((np.conj(w), b, k) for w, k, b in self.terms))

    def modes(self) -> tuple[Mode, ...]:
        return tuple(sorted({m for _, k, b in self.terms for m in k.modes() + b.modes()}))

    def max_photons(self) -> int:
        return max((max(k.max_photons(), b.max_photons()) for _, k, b in self.terms), default=0)

    @property
    def grid(self):
        for _, k, b in self.terms:
            if k.grid is not None:
                return k.grid
            if b.grid is not None:
                return b.grid
        return None

    def to_json(self) -> dict:
        return {"terms": [{"weight": [w.real, w.imag], "ket": k.to_json(), "bra": b.to_json()}
                          for w, k, b in self.terms]}

    @classmethod
    def from_json(cls, data: dict) -> "DensityOp":
        return cls(tuple((complex(*t["weight"]), StateVector.from_json(t["ket"]),
                          StateVector.from_json(t["bra"])) for t in data["terms"]))


def trace(rho: DensityOp, observable: Observable | None = None) -> complex:
    """``Tr(rho M) = sum_k w_k <bra_k| M |ket_k>``; ``M`` defaults to the identity."""
    observable = observable or Identity()
    if not isinstance(observable, Observable):
        raise ValidationError(f"unsupported observable {type(observable).__name__}")
    return complex(sum(w * observable.matrix_element(bra, ket) for w, ket, bra in rho.terms))


def is_normalized(rho: DensityOp, tol: float = NORM_TOL) -> bool:
    return abs(trace(rho) - 1.0) <= tol


# -- partial trace -----------------------------------------------------------


def _split(term: MonomialTerm, keep: set) -> tuple[list[int], list[int]]:
    kept = [a for a, m in enumerate(term.modes) if m in keep]
    traced = [a for a, m in enumerate(term.modes) if m not in keep]
    return kept, traced


def _whole_blocks(amp: SpectralAmplitude, traced: Sequence[int]) -> bool:
    traced = set(traced)
    return all(set(b.args) <= traced or not (set(b.args) & traced) for b in amp.blocks)


def _kept_amplitude(amp: SpectralAmplitude, kept: Sequence[int]) -> SpectralAmplitude:
    renumber = {a: k for k, a in enumerate(kept)}
    blocks = [Block(tuple(renumber[a] for a in b.args), b.data)
              for b in amp.blocks if b.args and b.args[0] in renumber]
    return SpectralAmplitude(amp.grid, blocks, arity=len(kept))


def _bijections(s: MonomialTerm, t: MonomialTerm, s_traced, t_traced):
    by_mode_s: dict = {}
    by_mode_t: dict = {}
    for a in s_traced:
        by_mode_s.setdefault(s.modes[a], []).append(a)
    for a in t_traced:
        by_mode_t.setdefault(t.modes[a], []).append(a)
    if {m: len(v) for m, v in by_mode_s.items()} != {m: len(v) for m, v in by_mode_t.items()}:
        return None
    count = math.prod(math.factorial(len(v)) for v in by_mode_s.values())
    if count > BIJECTION_CAP:
        raise CapExceeded(f"partial trace needs {count} slot bijections, cap is {BIJECTION_CAP}")
    modes = list(by_mode_s)
    options = [list(itertools.permutations(by_mode_t[m])) for m in modes]

    def gen():
        for choice in itertools.product(*options):
            pairing = {}
            for m, perm in zip(modes, choice):
                for a, b in zip(by_mode_s[m], perm):
                    pairing[a] = b
            yield pairing

    return gen()


def _kernel(s: MonomialTerm, t: MonomialTerm, s_kept, t_kept, pairing: dict, only_traced: bool) -> np.ndarray:
    """``sum_y prod w_y h_s(x, y) conj(h_t(x', y_pi))`` as a tensor over kept args."""
    letters = iter(_LETTERS)
    s_letter = {a: next(letters) for a in range(s.n_photons)}
    t_letter = {}
    for a in range(t.n_photons):
        t_letter[a] = next(letters)
    for a, b in pairing.items():
        t_letter[b] = s_letter[a]
    subs, ops = [], []
    for b in s.amplitude.blocks:
        if only_traced and b.args[0] in s_kept:
            continue
        subs.append("".join(s_letter[a] for a in b.args))
        ops.append(b.data)
    for b in t.amplitude.blocks:
        if only_traced and b.args[0] in t_kept:
            continue
        subs.append("".join(t_letter[a] for a in b.args))
        ops.append(np.conj(b.data))
    w = s.grid.weights
    for a in pairing:
        subs.append(s_letter[a])
        ops.append(w)
    out = "" if only_traced else "".join(s_letter[a] for a in s_kept) + "".join(t_letter[a] for a in t_kept)
    return np.einsum(",".join(subs) + "->" + out, *ops, optimize=len(ops) > 3)


def _trace_pair(s: MonomialTerm, t: MonomialTerm, keep: set, grid):
    """Rank-one pieces ``(weight, ket_term, bra_term)`` of ``Tr_B |s><t|``."""
    s_kept, s_traced = _split(s, keep)
    t_kept, t_traced = _split(t, keep)
    pairings = _bijections(s, t, s_traced, t_traced)
    if pairings is None:
        return []
    coeff = s.coeff * np.conj(t.coeff)
    s_modes = [s.modes[a] for a in s_kept]
    t_modes = [t.modes[a] for a in t_kept]
    if not s_traced:
        return [(coeff, MonomialTerm(1.0, s.modes, s.amplitude), MonomialTerm(1.0, t.modes, t.amplitude))]
    if _whole_blocks(s.amplitude, s_traced) and _whole_blocks(t.amplitude, t_traced):
        scalar = sum(complex(_kernel(s, t, s_kept, t_kept, p, True)) for p in pairings)
        if scalar == 0:
            return []
        return [(coeff * scalar,
                 MonomialTerm(1.0, s_modes, _kept_amplitude(s.amplitude, s_kept)),
                 MonomialTerm(1.0, t_modes, _kept_amplitude(t.amplitude, t_kept)))]
    bins = grid.bins
    p, q = len(s_kept), len(t_kept)
    if bins ** (p + q) > DENSE_CAP:
        raise CapExceeded(f"partial-trace kernel with {bins}**{p + q} entries exceeds cap {DENSE_CAP}")
    kernel = sum(_kernel(s, t, s_kept, t_kept, pr, False) for pr in pairings)
    mat = np.reshape(kernel, (bins**p, bins**q))
    u, sig, vh = np.linalg.svd(mat, full_matrices=False)
    if sig.size == 0 or sig[0] == 0:
        return []
    out = []
    for r in np.flatnonzero(sig > SVD_REL_TOL * sig[0]):
        weight = coeff * sig[r]
        # an empty side is a scalar; its phase goes into the weight
        if p:
            ket_amp = SpectralAmplitude.dense(grid, u[:, r].reshape((bins,) * p))
        else:
            ket_amp, weight = SpectralAmplitude.scalar(grid), weight * u[0, r]
        if q:
            bra_amp = SpectralAmplitude.dense(grid, vh[r].conj().reshape((bins,) * q))
        else:
            bra_amp, weight = SpectralAmplitude.scalar(grid), weight * vh[r, 0]
        out.append((weight, MonomialTerm(1.0, s_modes, ket_amp), MonomialTerm(1.0, t_modes, bra_amp)))
    return out


def partial_trace(rho: DensityOp, keep: Iterable[Mode]) -> DensityOp:
    """Trace out every mode not in ``keep``.

    Modes are orthogonal by construction, so the kept/traced split is always
    a valid tensor factorization.
    """
    keep = set(keep)
    grid = rho.grid
    out = []
    for w, ket, bra in rho.terms:
        for s in ket.terms:
            for t in bra.terms:
                for weight, k, b in _trace_pair(s, t, keep, grid):
                    out.append((w * weight, StateVector((k,)), StateVector((b,))))
    return DensityOp(tuple(out))


# -- decay -------------------------------------------------------------------


def decayed_single_photon_density(mode: Mode, f: SpectralAmplitude, gamma, t: float) -> DensityOp:
    """Single photon after time ``t`` in a zero-temperature bath with loss rate ``gamma(w)``.

    The one-photon block carries ``u(w) = exp(-gamma(w) t + i w t) f(w)``; the
    vacuum block takes the lost weight ``1 - int |u|^2`` so the trace stays 1.
    """
    if t < 0:
        raise ValidationError("decay time must be non-negative")
    if f.arity != 1:
        raise ValidationError("decay model needs a single-frequency spectrum")
    grid = f.grid
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (grid.bins,))
    if np.any(gamma < 0):
        raise ValidationError("loss rate gamma(w) must be non-negative")
    u = np.exp(-gamma * t + 1j * grid.omega * t) * f.vector()
    amp = SpectralAmplitude.factored(grid, [u])
    one = StateVector((MonomialTerm(1.0, (mode,), amp),))
    survived = float(np.sum(grid.weights * np.abs(u) ** 2))
    vac = StateVector.vacuum(grid)
    terms = [(1.0, one, one)]
    if 1.0 - survived > 0:
        terms.append((1.0 - survived, vac, vac))
    return DensityOp(tuple(terms))


# -- fidelity ----------------------------------------------------------------


def dense_matrix(rho: DensityOp, space: DenseFockSpace | None = None) -> tuple[np.ndarray, DenseFockSpace]:
    if space is None:
        space = DenseFockSpace(rho.modes(), rho.grid, rho.max_photons())
    return space.density(rho), space


def fidelity_overlap(rho1: DensityOp, rho2: DensityOp, space: DenseFockSpace | None = None) -> float:
    """``Tr(rho1^{1/2} rho2^{1/2})`` evaluated in a dense oracle basis."""
    if space is None:
        modes = sorted(set(rho1.modes()) | set(rho2.modes()))
        grid = rho1.grid or rho2.grid
        if grid is None or not modes:
            # vacuum-only operators are scalars
            return float(max(trace(rho1).real, 0.0) * max(trace(rho2).real, 0.0)) ** 0.5
        space = DenseFockSpace(modes, grid, max(rho1.max_photons(), rho2.max_photons()))
    m1 = space.density(rho1)
    m2 = space.density(rho2)
    for label, m in (("rho1", m1), ("rho2", m2)):
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-10:
            raise ContractError(f"{label} is not Hermitian")
    return _dense_fidelity(m1, m2)
