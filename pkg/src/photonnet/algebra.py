"""Modes, creation-monomial terms, state vectors and the contraction engine.

A :class:`MonomialTerm` stands for

    coeff * int dw_1..dw_n  h(w_1, .., w_n)  x_1^dag(w_1) ... x_n^dag(w_n) |0>

where ``x_j`` is the mode of slot ``j`` and ``h`` is a
:class:`~photonnet.spectral.SpectralAmplitude`.  Terms are never symmetrized
explicitly: the vacuum expectation of a product of annihilators and creators
is a sum over bijections between bra and ket slots, and that sum performs the
symmetrization.  For fully factored terms the sum is a permanent.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapExceeded, ContractError, ValidationError
from .permanent import permanent_repeated
from .spectral import Block, FrequencyGrid, SpectralAmplitude, contract

BIJECTION_CAP = 100_000
MERGE_REL_TOL = 1e-14


@dataclass(frozen=True, order=True)
class Mode:
    """A bosonic mode: one polarization of one fiber in one direction."""

    name: str
    fiber: str = ""
    polarization: int = 1
    direction: str = "+"

    def __post_init__(self):
        if not self.name:
            raise ValidationError("mode name must be non-empty")
        if self.polarization not in (1, 2):
            raise ValidationError(f"mode {self.name}: polarization must be 1 or 2")
        if self.direction not in ("+", "-"):
            raise ValidationError(f"mode {self.name}: direction must be '+' or '-'")
        if not self.fiber:
            object.__setattr__(self, "fiber", self.name)

    def to_json(self) -> dict:
        return {"name": self.name, "fiber": self.fiber,
                "polarization": self.polarization, "direction": self.direction}

    @classmethod
    def from_json(cls, data: dict) -> "Mode":
        return cls(data["name"], data.get("fiber", ""), int(data.get("polarization", 1)),
                   data.get("direction", "+"))

    def __str__(self):
        return self.name


def check_registry(modes: Iterable[Mode]) -> None:
    """Distinct names must go with distinct (fiber, polarization, direction)."""
    by_name: dict[str, Mode] = {}
    by_triple: dict[tuple, str] = {}
    for m in modes:
        if m.name in by_name and by_name[m.name] != m:
            raise ValidationError(f"mode name {m.name!r} declared twice with different attributes")
        by_name[m.name] = m
        triple = (m.fiber, m.polarization, m.direction)
        if by_triple.setdefault(triple, m.name) != m.name:
            raise ValidationError(
                f"modes {by_triple[triple]!r} and {m.name!r} share fiber/polarization/direction {triple}"
            )


class ModeOverlap:
    """Commutator coefficients ``[x(w), y^dag(w')] = kappa_xy delta(w - w')``.

    Modes not mentioned are orthogonal to everything else; ``kappa_xx = 1``.
    """

    def __init__(self, pairs: Mapping[tuple[Mode, Mode], complex] | None = None):
        self._pairs: dict[tuple[Mode, Mode], complex] = {}
        pairs = dict(pairs or {})
        modes: list[Mode] = []
        for (x, y), k in pairs.items():
            if x == y:
                if abs(k - 1) > 1e-12:
                    raise ContractError(f"self-overlap of {x} must be 1")
                continue
            if (y, x) in self._pairs and abs(self._pairs[(y, x)] - np.conj(k)) > 1e-12:
                raise ContractError(f"overlap of {x},{y} is not Hermitian")
            self._pairs[(x, y)] = complex(k)
            self._pairs[(y, x)] = complex(np.conj(k))
            modes.extend([x, y])
        self.modes = tuple(sorted(set(modes)))
        if self.modes:
            gram = self.gram(self.modes)
            lowest = float(np.linalg.eigvalsh(gram).min())
            if lowest < -1e-12:
                raise ContractError(f"mode overlap matrix is not positive semidefinite (min eig {lowest})")
        parent = {m: m for m in self.modes}

        def find(m):
            while parent[m] != m:
                m = parent[m]
            return m

        for (x, y), k in self._pairs.items():
            if k != 0:
                rx, ry = find(x), find(y)
                if rx != ry:
                    parent[max(rx, ry)] = min(rx, ry)
        self._component = {m: find(m) for m in self.modes}

    @property
    def is_identity(self) -> bool:
        return not any(self._pairs.values())

    def kappa(self, x: Mode, y: Mode) -> complex:
        if x == y:
            return 1.0
        return self._pairs.get((x, y), 0.0)

    def component(self, m: Mode) -> Mode:
        return self._component.get(m, m)

    def gram(self, modes: Sequence[Mode]) -> np.ndarray:
        return np.array([[self.kappa(x, y) for y in modes] for x in modes], dtype=complex)


IDENTITY = ModeOverlap()


class MonomialTerm:
    """``coeff * (amplitude : prod_j modes[j]^dag) |0>`` in canonical slot order."""

    __slots__ = ("coeff", "modes", "amplitude", "_key", "_counts")

    def __init__(self, coeff: complex, modes: Sequence[Mode], amplitude: SpectralAmplitude,
                 _canonical: bool = False):
        modes = tuple(modes)
        if len(modes) != amplitude.arity:
            raise ValidationError(
                f"term has {len(modes)} slots but amplitude arity {amplitude.arity}"
            )
        if not _canonical:
            modes, amplitude = _canonicalize(modes, amplitude)
        self.coeff = complex(coeff)
        self.modes = modes
        self.amplitude = amplitude
        self._key = None
        self._counts = None

    @property
    def grid(self) -> FrequencyGrid:
        return self.amplitude.grid

    @property
    def n_photons(self) -> int:
        return len(self.modes)

    def key(self) -> tuple:
        if self._key is None:
            self._key = (self.modes, self.amplitude.structure_key())
        return self._key

    def counts(self) -> Counter:
        if self._counts is None:
            self._counts = Counter(self.modes)
        return self._counts

    def count(self, modes: Mode | Iterable[Mode]) -> int:
        if isinstance(modes, Mode):
            return self.counts().get(modes, 0)
        return sum(self.counts().get(m, 0) for m in set(modes))

    def with_coeff(self, coeff: complex) -> "MonomialTerm":
        return MonomialTerm(coeff, self.modes, self.amplitude, _canonical=True)

    def signature(self, overlaps: ModeOverlap) -> tuple:
        if overlaps.is_identity:
            return tuple(sorted(self.counts().items()))
        return tuple(sorted(Counter(overlaps.component(m) for m in self.modes).items()))

    def to_json(self) -> dict:
        return {"coeff": [self.coeff.real, self.coeff.imag],
                "modes": [m.name for m in self.modes],
                "amplitude": self.amplitude.to_json()}

    def __repr__(self):
        return f"MonomialTerm({self.coeff:.6g}, {[m.name for m in self.modes]}, {self.amplitude!r})"


def _canonicalize(modes: tuple, amp: SpectralAmplitude) -> tuple[tuple, SpectralAmplitude]:
    n = len(modes)
    if n == 0:
        return modes, amp
    blocks = sorted(
        amp.blocks,
        key=lambda b: (tuple(modes[a] for a in b.args), b.data.shape, b.data.tobytes()),
    )
    seq = [a for b in blocks for a in b.args]
    order = sorted(range(n), key=lambda p: modes[seq[p]])
    final = [0] * n
    for new_pos, p in enumerate(order):
        final[seq[p]] = new_pos
    new_modes = tuple(modes[seq[p]] for p in order)
    new_blocks = [Block(tuple(final[a] for a in b.args), b.data) for b in blocks]
    return new_modes, SpectralAmplitude(amp.grid, new_blocks, arity=n)


def merge_terms(terms: Iterable[MonomialTerm]) -> tuple[MonomialTerm, ...]:
    """Sum coefficients of structurally identical terms; drop exact cancellations."""
    acc: dict[tuple, list] = {}
    for t in terms:
        slot = acc.get(t.key())
        if slot is None:
            acc[t.key()] = [t, t.coeff, abs(t.coeff)]
        else:
            slot[1] += t.coeff
            slot[2] += abs(t.coeff)
    out = []
    for t, c, scale in acc.values():
        if c == 0 or abs(c) <= MERGE_REL_TOL * scale:
            continue
        out.append(t if c == t.coeff else t.with_coeff(c))
    return tuple(out)


@dataclass(frozen=True)
class StateVector:
    """Weighted sum of creation monomials applied to the vacuum.

    ``tail_mass`` records norm deliberately left out by a truncation (coherent
    states), so that ``norm_squared == 1 - tail_mass`` for truncated states.
    """

    terms: tuple
    tail_mass: float = 0.0
    grid: FrequencyGrid | None = field(default=None, compare=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        grids = {t.grid for t in terms}
        if len(grids) > 1:
            raise ValidationError("all terms of a state must share one frequency grid")
        if grids:
            g = grids.pop()
            if self.grid is not None and self.grid != g:
                raise ValidationError("state grid does not match its terms")
            object.__setattr__(self, "grid", g)

    @classmethod
    def from_terms(cls, terms: Iterable[MonomialTerm], tail_mass: float = 0.0,
                   grid: FrequencyGrid | None = None) -> "StateVector":
        return cls(merge_terms(terms), tail_mass, grid)

    @classmethod
    def vacuum(cls, grid: FrequencyGrid) -> "StateVector":
        return cls((MonomialTerm(1.0, (), SpectralAmplitude.scalar(grid)),), grid=grid)

    @classmethod
    def zero(cls, grid: FrequencyGrid | None = None) -> "StateVector":
        return cls((), grid=grid)

    def modes(self) -> tuple[Mode, ...]:
        return tuple(sorted({m for t in self.terms for m in t.modes}))

    def max_photons(self) -> int:
        return max((t.n_photons for t in self.terms), default=0)

    def map_terms(self, fn) -> "StateVector":
        return StateVector.from_terms((fn(t) for t in self.terms), self.tail_mass, self.grid)

    def __add__(self, other: "StateVector") -> "StateVector":
        if not isinstance(other, StateVector):
            return NotImplemented
        grid = self.grid or other.grid
        return StateVector.from_terms(self.terms + other.terms, self.tail_mass + other.tail_mass, grid)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return self + (-1.0) * other

    def __mul__(self, scalar: complex) -> "StateVector":
        if not np.isscalar(scalar):
            return NotImplemented
        return StateVector(tuple(t.with_coeff(t.coeff * scalar) for t in self.terms),
                           self.tail_mass * abs(scalar) ** 2, self.grid)

    __rmul__ = __mul__

    def __neg__(self) -> "StateVector":
        return -1.0 * self

    def to_json(self) -> dict:
        modes = self.modes()
        out = {"modes": [m.to_json() for m in modes], "terms": [t.to_json() for t in self.terms]}
        if self.grid is not None:
            out["grid"] = self.grid.to_json()
        if self.tail_mass:
            out["tail_mass"] = self.tail_mass
        return out

    @classmethod
    def from_json(cls, data: dict) -> "StateVector":
        grid = FrequencyGrid.from_json(data["grid"]) if "grid" in data else None
        modes = {m["name"]: Mode.from_json(m) for m in data.get("modes", [])}
        check_registry(modes.values())
        terms = []
        for t in data["terms"]:
            try:
                slot_modes = [modes[name] for name in t["modes"]]
            except KeyError as exc:
                raise ValidationError(f"term refers to undeclared mode {exc.args[0]!r}") from None
            amp = SpectralAmplitude.from_json(t["amplitude"], grid)
            terms.append(MonomialTerm(complex(*t["coeff"]), slot_modes, amp))
        return cls(tuple(terms), float(data.get("tail_mass", 0.0)), grid)


# -- contraction -------------------------------------------------------------


def _vec_inner(w: np.ndarray, g: np.ndarray, h: np.ndarray) -> complex:
    return complex(np.vdot(g, w * h))


def term_overlap(bra: MonomialTerm, ket: MonomialTerm, overlaps: ModeOverlap = IDENTITY) -> complex:
    """``<bra|ket>`` for two single terms, coefficients included."""
    if bra.n_photons != ket.n_photons:
        return 0j
    if bra.signature(overlaps) != ket.signature(overlaps):
        return 0j
    scale = np.conj(bra.coeff) * ket.coeff
    if bra.n_photons == 0:
        return complex(scale)
    if bra.grid != ket.grid:
        raise ValidationError("terms live on different frequency grids")
    if bra.amplitude.is_fully_factored and ket.amplitude.is_fully_factored:
        value = _factored_overlap(bra, ket, overlaps)
    else:
        value = _bijection_overlap(bra, ket, overlaps)
    return complex(scale * value)


def _components(term: MonomialTerm, overlaps: ModeOverlap) -> dict:
    comps: dict = {}
    for j, m in enumerate(term.modes):
        comps.setdefault(overlaps.component(m), []).append(j)
    return comps


def _factored_overlap(bra: MonomialTerm, ket: MonomialTerm, overlaps: ModeOverlap) -> complex:
    w = bra.grid.weights
    bra_vec = _arg_vectors(bra.amplitude)
    ket_vec = _arg_vectors(ket.amplitude)
    bra_comps = _components(bra, overlaps)
    ket_comps = _components(ket, overlaps)
    value = 1.0 + 0j
    for comp, rows in bra_comps.items():
        cols = ket_comps[comp]
        row_groups = _group_identical(rows, bra.modes, bra_vec)
        col_groups = _group_identical(cols, ket.modes, ket_vec)
        m = np.empty((len(row_groups), len(col_groups)), dtype=complex)
        for i, (rm, rv, _) in enumerate(row_groups):
            for j, (cm, cv, _) in enumerate(col_groups):
                k = overlaps.kappa(rm, cm)
                m[i, j] = k * _vec_inner(w, rv, cv) if k != 0 else 0.0
        value *= permanent_repeated(m, [g[2] for g in row_groups], [g[2] for g in col_groups])
        if value == 0:
            return 0j
    return value


def _arg_vectors(amp: SpectralAmplitude) -> list[np.ndarray]:
    vecs = [None] * amp.arity
    for b in amp.blocks:
        vecs[b.args[0]] = b.data
    return vecs


def _group_identical(slots, modes, vecs) -> list[tuple[Mode, np.ndarray, int]]:
    groups: dict = {}
    for j in slots:
        key = (modes[j], vecs[j].tobytes())
        if key in groups:
            groups[key][2] += 1
        else:
            groups[key] = [modes[j], vecs[j], 1]
    return [tuple(g) for g in groups.values()]


def _bijection_overlap(bra: MonomialTerm, ket: MonomialTerm, overlaps: ModeOverlap) -> complex:
    bra_comps = _components(bra, overlaps)
    ket_comps = _components(ket, overlaps)
    count = math.prod(math.factorial(len(v)) for v in bra_comps.values())
    if count > BIJECTION_CAP:
        raise CapExceeded(f"contraction needs {count} slot bijections, cap is {BIJECTION_CAP}")
    comp_keys = list(bra_comps)
    per_comp = []
    for c in comp_keys:
        rows = bra_comps[c]
        cols = ket_comps[c]
        options = []
        for perm in itertools.permutations(cols):
            weight = 1.0 + 0j
            for r, k in zip(rows, perm):
                weight *= overlaps.kappa(bra.modes[r], ket.modes[k])
                if weight == 0:
                    break
            if weight != 0:
                options.append((perm, weight))
        per_comp.append((rows, options))
    total = 0j
    n = bra.n_photons
    for choice in itertools.product(*(opts for _, opts in per_comp)):
        pairing = [0] * n
        weight = 1.0 + 0j
        for (rows, _), (perm, wgt) in zip(per_comp, choice):
            weight *= wgt
            for r, k in zip(rows, perm):
                pairing[r] = k
        total += weight * contract(bra.amplitude, ket.amplitude, pairing)
    return total


def inner_product(bra: StateVector, ket: StateVector, overlaps: ModeOverlap = IDENTITY) -> complex:
    """Sesquilinear ``<bra|ket>`` evaluated by Wick contraction."""
    total = 0j
    ket_by_sig: dict = {}
    for t in ket.terms:
        ket_by_sig.setdefault(t.signature(overlaps), []).append(t)
    for s in bra.terms:
        for t in ket_by_sig.get(s.signature(overlaps), ()):
            total += term_overlap(s, t, overlaps)
    return complex(total)


def norm_squared(psi: StateVector, overlaps: ModeOverlap = IDENTITY) -> float:
    value = inner_product(psi, psi, overlaps)
    if abs(value.imag) > 1e-12 * max(1.0, abs(value.real)):
        raise ContractError(f"norm has imaginary part {value.imag}")
    return max(value.real, 0.0)


def gram_matrix(psi: StateVector, overlaps: ModeOverlap = IDENTITY) -> np.ndarray:
    """Matrix of term overlaps ``<t_i|t_j>`` with unit coefficients."""
    terms = [t.with_coeff(1.0) for t in psi.terms]
    n = len(terms)
    g = np.zeros((n, n), dtype=complex)
    sigs = [t.signature(overlaps) for t in terms]
    for i in range(n):
        for j in range(i, n):
            if sigs[i] != sigs[j]:
                continue
            v = term_overlap(terms[i], terms[j], overlaps)
            g[i, j] = v
            g[j, i] = np.conj(v)
    return g


def photon_count(term: MonomialTerm, mode: Mode | Iterable[Mode]) -> int:
    return term.count(mode)


def tensor(*states: StateVector) -> StateVector:
    """Product state of states on pairwise disjoint modes."""
    if not states:
        raise ValidationError("tensor product of no states")
    out = states[0]
    for nxt in states[1:]:
        if set(out.modes()) & set(nxt.modes()):
            raise ValidationError("tensor factors must act on disjoint modes")
        terms = [
            MonomialTerm(s.coeff * t.coeff, s.modes + t.modes,
                         SpectralAmplitude.product(s.amplitude, t.amplitude))
            for s in out.terms for t in nxt.terms
        ]
        tail = 1 - (1 - out.tail_mass) * (1 - nxt.tail_mass)
        out = StateVector.from_terms(terms, tail, out.grid or nxt.grid)
    return out


# -- substitution ------------------------------------------------------------

Rule = Mapping[Mode, Sequence[tuple[Mode, object]]]


def _as_coefficient(c, bins: int):
    arr = np.asarray(c, dtype=complex)
    if arr.ndim == 0:
        return complex(arr)
    if arr.shape != (bins,):
        raise ValidationError(f"substitution coefficient must be scalar or have {bins} entries")
    if np.all(arr == arr[0]):
        return complex(arr[0])
    return arr


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for k in range(total, -1, -1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


def _multinomial(ks) -> int:
    out = math.factorial(sum(ks))
    for k in ks:
        out //= math.factorial(k)
    return out


def apply_substitution(psi: StateVector, rule: Rule, passthrough: bool = False) -> StateVector:
    """Replace every ``x^dag(w)`` by ``sum_y c_yx(w) y^dag(w)`` and expand.

    ``rule[x]`` lists ``(y, c_yx)`` with ``c_yx`` a scalar or a per-bin array.
    Modes absent from ``rule`` raise unless ``passthrough`` is set, in which
    case they are left unchanged.
    """
    if psi.grid is None:
        return psi
    bins = psi.grid.bins
    prepared = {x: [(y, _as_coefficient(c, bins)) for y, c in opts] for x, opts in rule.items()}
    out_terms = []
    for term in psi.terms:
        out_terms.extend(_substitute_term(term, prepared, passthrough))
    return StateVector.from_terms(out_terms, psi.tail_mass, psi.grid)


def _substitute_term(term: MonomialTerm, rule, passthrough: bool):
    amp = term.amplitude
    units = []  # (arg ids, mode, base vector or None)
    grouped: dict = {}
    for b in amp.blocks:
        if len(b.args) == 1:
            a = b.args[0]
            key = (term.modes[a], b.data.tobytes())
            if key in grouped:
                grouped[key][0].append(a)
            else:
                grouped[key] = ([a], term.modes[a], b.data)
        else:
            for a in b.args:
                units.append(([a], term.modes[a], None))
    units = list(grouped.values()) + units

    choice_lists = []
    for args, mode, base in units:
        if mode in rule:
            opts = rule[mode]
        elif passthrough:
            opts = [(mode, 1.0 + 0j)]
        else:
            raise ValidationError(f"substitution rule does not cover mode {mode.name!r}")
        choices = []
        for ks in _compositions(len(args), len(opts)):
            coeff = complex(_multinomial(ks))
            assign = []  # (arg, target mode, multiplier vector or None)
            pos = 0
            for (target, c), k in zip(opts, ks):
                if k == 0:
                    continue
                if isinstance(c, complex):
                    if c == 0:
                        coeff = 0j
                        break
                    coeff *= c**k
                    vec = None
                else:
                    vec = c
                for a in args[pos:pos + k]:
                    assign.append((a, target, vec))
                pos += k
            if coeff != 0:
                choices.append((coeff, assign))
        choice_lists.append(choices)

    n = term.n_photons
    for combo in itertools.product(*choice_lists):
        coeff = term.coeff
        new_modes = list(term.modes)
        multipliers: dict[int, np.ndarray] = {}
        for c, assign in combo:
            coeff *= c
            for a, target, vec in assign:
                new_modes[a] = target
                if vec is not None:
                    multipliers[a] = vec
        new_amp = amp
        if multipliers:
            new_amp = _multiply_args(amp, multipliers)
        yield MonomialTerm(coeff, new_modes[:n], new_amp)


def _multiply_args(amp: SpectralAmplitude, multipliers: dict) -> SpectralAmplitude:
    bins = amp.grid.bins
    blocks = []
    for b in amp.blocks:
        data = b.data
        hit = [a for a in b.args if a in multipliers]
        if hit:
            data = data.copy()
            for a in hit:
                shape = [1] * len(b.args)
                shape[b.args.index(a)] = bins
                data = data * multipliers[a].reshape(shape)
        blocks.append((b.args, data))
    return SpectralAmplitude(amp.grid, blocks, arity=amp.arity)


# -- one-body operators ------------------------------------------------------


def apply_one_body(psi: StateVector, modes: Iterable[Mode], diagonal=None, kernel=None) -> StateVector:
    """Apply ``sum_x int dw dw' K(w, w') x^dag(w) x(w')`` over ``modes``.

    Give either ``diagonal`` (per-bin multiplier, ``K = d(w) delta``) or a
    ``kernel`` matrix.  With both omitted this is the number operator.
    """
    scope = set(modes)
    if psi.grid is None:
        return psi
    if diagonal is None and kernel is None:
        diagonal = np.ones(psi.grid.bins)
    out = []
    for term in psi.terms:
        amp = term.amplitude
        seen: dict = {}
        for b in amp.blocks:
            for a in b.args:
                if term.modes[a] not in scope:
                    continue
                if len(b.args) == 1:
                    key = (term.modes[a], b.data.tobytes())
                    if key in seen:
                        seen[key][1] += 1
                        continue
                    seen[key] = [a, 1]
                else:
                    seen[("arg", a)] = [a, 1]
        for a, mult in seen.values():
            if kernel is not None:
                new_amp = amp.apply_kernel(a, kernel)
            else:
                new_amp = amp.multiply_axis(a, np.asarray(diagonal))
            out.append(MonomialTerm(term.coeff * mult, term.modes, new_amp))
    return StateVector.from_terms(out, 0.0, psi.grid)
