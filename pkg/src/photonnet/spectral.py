"""Frequency grids and spectral amplitudes.

A :class:`SpectralAmplitude` is a complex function of ``arity`` angular
frequencies sampled on a :class:`FrequencyGrid`.  It is stored as a list of
*blocks*: each block is a tensor over a subset of the arguments, and the
amplitude is the product of its blocks.  One block covering every argument is
the dense form, one 1-D block per argument is the fully factored form, and a
single 2-D block is a pair kernel ``g(w, w~)``.

Integrals become weighted sums, ``int dw f(w) -> sum_i weight_i f_i``, and the
delta function becomes ``delta_ij / weight_i``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import CapExceeded, ContractError, ValidationError

DENSE_CAP = 10**6
NORM_TOL = 1e-9

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True)
class FrequencyGrid:
    """Discretization of ``[omega_min, omega_max]`` into ``bins`` quadrature nodes.

    ``scheme="uniform"`` places nodes at bin centres with weight
    ``(omega_max - omega_min) / bins``; ``scheme="trapezoid"`` places them on
    the closed interval with trapezoid weights.
    """

    omega_min: float
    omega_max: float
    bins: int
    scheme: str = "uniform"

    def __post_init__(self):
        if not (0 < self.omega_min < self.omega_max):
            raise ValidationError(
                f"grid requires 0 < omega_min < omega_max, got "
                f"[{self.omega_min}, {self.omega_max}]"
            )
        if int(self.bins) != self.bins or self.bins < 1:
            raise ValidationError(f"grid needs at least one bin, got {self.bins}")
        if self.scheme not in ("uniform", "trapezoid"):
            raise ValidationError(f"unknown quadrature scheme {self.scheme!r}")
        if self.scheme == "trapezoid" and self.bins < 2:
            raise ValidationError("trapezoid scheme needs at least two bins")

    @cached_property
    def omega(self) -> np.ndarray:
        if self.scheme == "uniform":
            step = (self.omega_max - self.omega_min) / self.bins
            nodes = self.omega_min + step * (np.arange(self.bins) + 0.5)
        else:
            nodes = np.linspace(self.omega_min, self.omega_max, self.bins)
        nodes.setflags(write=False)
        return nodes

    @cached_property
    def weights(self) -> np.ndarray:
        if self.scheme == "uniform":
            w = np.full(self.bins, (self.omega_max - self.omega_min) / self.bins)
        else:
            step = (self.omega_max - self.omega_min) / (self.bins - 1)
            w = np.full(self.bins, step)
            w[0] = w[-1] = step / 2
        w.setflags(write=False)
        return w

    def delta(self) -> np.ndarray:
        """Discrete ``delta(w_i - w_j)`` as a matrix, ``delta_ij / weight_i``."""
        return np.diag(1.0 / self.weights)

    def to_json(self) -> dict:
        out = {"omega_min": self.omega_min, "omega_max": self.omega_max, "bins": self.bins}
        if self.scheme != "uniform":
            out["scheme"] = self.scheme
        return out

    @classmethod
    def from_json(cls, data: dict) -> "FrequencyGrid":
        return cls(
            float(data["omega_min"]),
            float(data["omega_max"]),
            int(data["bins"]),
            data.get("scheme", "uniform"),
        )


def _frozen(array) -> np.ndarray:
    a = np.array(array, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Block:
    """One factor of a spectral amplitude: a tensor over ``args``."""

    args: tuple
    data: np.ndarray

    def key(self) -> tuple:
        return (self.args, self.data.shape, self.data.tobytes())


class SpectralAmplitude:
    """Complex amplitude over ``arity`` frequency arguments on a grid."""

    __slots__ = ("grid", "arity", "blocks", "_hash_key")

    def __init__(self, grid: FrequencyGrid, blocks: Iterable[tuple[Sequence[int], np.ndarray]],
                 arity: int | None = None):
        blocks = tuple(
            b if isinstance(b, Block) else Block(tuple(int(i) for i in b[0]), _frozen(b[1]))
            for b in blocks
        )
        seen = sorted(a for b in blocks for a in b.args)
        if arity is None:
            arity = len(seen)
        if seen != list(range(arity)):
            raise ValidationError(
                f"blocks must partition arguments 0..{arity - 1}, got {seen}"
            )
        for b in blocks:
            if b.data.shape != (grid.bins,) * len(b.args):
                raise ValidationError(
                    f"block over args {b.args} has shape {b.data.shape}, "
                    f"expected {(grid.bins,) * len(b.args)}"
                )
        self.grid = grid
        self.arity = arity
        self.blocks = blocks
        self._hash_key = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def scalar(cls, grid: FrequencyGrid) -> "SpectralAmplitude":
        return cls(grid, (), arity=0)

    @classmethod
    def dense(cls, grid: FrequencyGrid, tensor, normalize: bool = False) -> "SpectralAmplitude":
        tensor = np.asarray(tensor, dtype=complex)
        n = tensor.ndim
        if grid.bins**n > DENSE_CAP:
            raise CapExceeded(f"dense amplitude with {grid.bins}**{n} entries exceeds cap {DENSE_CAP}")
        amp = cls(grid, [(tuple(range(n)), tensor)] if n else (), arity=n)
        return amp.normalized() if normalize else amp

    @classmethod
    def factored(cls, grid: FrequencyGrid, vectors: Sequence, normalize: bool = False) -> "SpectralAmplitude":
        """Product ``f_1(w_1) f_2(w_2) ... f_n(w_n)`` of 1-D amplitudes."""
        vecs = [v.vector() if isinstance(v, SpectralAmplitude) else v for v in vectors]
        amp = cls(grid, [((i,), v) for i, v in enumerate(vecs)], arity=len(vecs))
        if normalize:
            amp = cls(grid, [((i,), _unit(grid, v)) for i, v in enumerate(vecs)])
        return amp

    @classmethod
    def pair(cls, grid: FrequencyGrid, matrix, normalize: bool = False) -> "SpectralAmplitude":
        """Pair kernel ``g(w, w~)`` given as a ``bins x bins`` matrix."""
        matrix = np.asarray(matrix, dtype=complex)
        if normalize and grid.bins > 1 and not np.any(matrix - np.diag(np.diag(matrix))):
            raise ContractError(
                "delta-shaped pair kernel f(w) delta(w - w~) has a grid-dependent norm "
                "and cannot be normalized"
            )
        amp = cls(grid, [((0, 1), matrix)])
        return amp.normalized() if normalize else amp

    @classmethod
    def delta_pair(cls, grid: FrequencyGrid, f) -> "SpectralAmplitude":
        """The kernel ``f(w) delta(w - w~)`` in the discrete delta convention."""
        f = np.asarray(f, dtype=complex)
        return cls(grid, [((0, 1), np.diag(f / grid.weights))])

    @classmethod
    def from_function(cls, grid: FrequencyGrid, func, normalize: bool = True) -> "SpectralAmplitude":
        vec = np.asarray(func(grid.omega), dtype=complex)
        return cls.factored(grid, [vec], normalize=normalize)

    @classmethod
    def gaussian(cls, grid: FrequencyGrid, center: float, width: float,
                 delay: float = 0.0) -> "SpectralAmplitude":
        """Normalized Gaussian with intensity ``|f|^2`` of standard deviation ``width``.

        ``delay`` adds the linear spectral phase ``exp(i w delay)``.
        """
        w = grid.omega
        vec = np.exp(-((w - center) ** 2) / (4 * width**2) + 1j * w * delay)
        if not np.any(np.abs(vec) > 0):
            raise ValidationError("gaussian has no support on the grid")
        return cls.factored(grid, [vec], normalize=True)

    @classmethod
    def product(cls, *amps: "SpectralAmplitude") -> "SpectralAmplitude":
        """Outer product; arguments of later factors follow those of earlier ones."""
        if not amps:
            raise ValidationError("product of no amplitudes")
        grid = amps[0].grid
        blocks = []
        offset = 0
        for amp in amps:
            _check_grid(grid, amp.grid)
            blocks.extend(Block(tuple(a + offset for a in b.args), b.data) for b in amp.blocks)
            offset += amp.arity
        return cls(grid, blocks, arity=offset)

    # -- structure ----------------------------------------------------------

    @property
    def kind(self) -> str:
        if self.arity == 2 and len(self.blocks) == 1:
            return "pair"
        if len(self.blocks) == 1 or self.arity == 0:
            return "dense"
        return "factored"

    @property
    def is_fully_factored(self) -> bool:
        return all(len(b.args) == 1 for b in self.blocks)

    def vector(self) -> np.ndarray:
        if self.arity != 1:
            raise ValidationError(f"vector() needs arity 1, got {self.arity}")
        return self.blocks[0].data

    def block_of(self) -> list[int]:
        """Index of the block holding each argument."""
        owner = [0] * self.arity
        for k, b in enumerate(self.blocks):
            for a in b.args:
                owner[a] = k
        return owner

    def to_dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        if self.grid.bins**self.arity > cap:
            raise CapExceeded(
                f"densifying arity-{self.arity} amplitude on {self.grid.bins} bins exceeds cap {cap}"
            )
        if self.arity == 0:
            return np.array(1.0 + 0j)
        ops = []
        for b in self.blocks:
            ops.append(b.data)
            ops.append(list(b.args))
        return np.einsum(*ops, list(range(self.arity)))

    def densified(self, cap: int = DENSE_CAP) -> "SpectralAmplitude":
        return SpectralAmplitude.dense(self.grid, self.to_dense(cap))

    def scaled(self, factor: complex) -> "SpectralAmplitude":
        if not self.blocks:
            raise ValidationError("cannot scale an arity-0 amplitude; scale the coefficient")
        first, *rest = self.blocks
        return SpectralAmplitude(self.grid, [Block(first.args, _frozen(first.data * factor)), *rest],
                                 arity=self.arity)

    def multiply_axis(self, arg: int, vec: np.ndarray) -> "SpectralAmplitude":
        """Multiply the amplitude pointwise by ``vec(w_arg)``."""
        blocks = []
        for b in self.blocks:
            if arg in b.args:
                axis = b.args.index(arg)
                shape = [1] * len(b.args)
                shape[axis] = self.grid.bins
                b = Block(b.args, _frozen(b.data * np.reshape(vec, shape)))
            blocks.append(b)
        return SpectralAmplitude(self.grid, blocks, arity=self.arity)

    def apply_kernel(self, arg: int, kernel: np.ndarray) -> "SpectralAmplitude":
        """Replace ``h(.., w, ..)`` by ``int dw' K(w, w') h(.., w', ..)`` on argument ``arg``."""
        kw = np.asarray(kernel) * self.grid.weights[None, :]
        blocks = []
        for b in self.blocks:
            if arg in b.args:
                axis = b.args.index(arg)
                moved = np.tensordot(kw, b.data, axes=([1], [axis]))
                b = Block(b.args, _frozen(np.moveaxis(moved, 0, axis)))
            blocks.append(b)
        return SpectralAmplitude(self.grid, blocks, arity=self.arity)

    def relabel(self, new_index: Sequence[int]) -> "SpectralAmplitude":
        """Rename argument ``a`` to ``new_index[a]``."""
        return SpectralAmplitude(
            self.grid,
            [Block(tuple(new_index[a] for a in b.args), b.data) for b in self.blocks],
            arity=self.arity,
        )

    def structure_key(self) -> tuple:
        if self._hash_key is None:
            self._hash_key = tuple(b.key() for b in self.blocks)
        return self._hash_key

    # -- norms --------------------------------------------------------------

    def norm_squared(self) -> float:
        return inner(self, self).real

    def norm(self) -> float:
        return math.sqrt(max(self.norm_squared(), 0.0))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_squared() - 1.0) <= tol

    def normalized(self) -> "SpectralAmplitude":
        """Copy rescaled to unit norm; each block is normalized separately."""
        if self.arity == 0:
            return self
        blocks = []
        for b in self.blocks:
            nsq = _block_norm_squared(self.grid, b.data)
            if nsq <= 0:
                raise ContractError("cannot normalize a zero amplitude")
            blocks.append(Block(b.args, _frozen(b.data / math.sqrt(nsq))))
        return SpectralAmplitude(self.grid, blocks, arity=self.arity)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        if self.kind == "factored":
            payload = {
                "kind": "factored",
                "blocks": [
                    {"args": list(b.args), "data": _complex_list(b.data)} for b in self.blocks
                ],
            }
        else:
            payload = {"kind": self.kind, "data": _complex_list(self.to_dense())}
        return {"grid": self.grid.to_json(), "arity": self.arity, "payload": payload}

    @classmethod
    def from_json(cls, data: dict, grid: FrequencyGrid | None = None) -> "SpectralAmplitude":
        if grid is None:
            grid = FrequencyGrid.from_json(data["grid"])
        elif "grid" in data and FrequencyGrid.from_json(data["grid"]) != grid:
            raise ValidationError("amplitude grid does not match the enclosing grid")
        arity = int(data["arity"])
        payload = data["payload"]
        kind = payload["kind"]
        if kind == "factored":
            blocks = []
            for b in payload["blocks"]:
                args = tuple(b["args"])
                blocks.append((args, _from_complex_list(b["data"], (grid.bins,) * len(args))))
            return cls(grid, blocks, arity=arity)
        if kind in ("dense", "pair"):
            tensor = _from_complex_list(payload["data"], (grid.bins,) * arity)
            if kind == "pair" and arity != 2:
                raise ValidationError("pair payload requires arity 2")
            return cls.dense(grid, tensor)
        raise ValidationError(f"unknown amplitude payload kind {kind!r}")

    def __repr__(self):
        shapes = ", ".join(f"{b.args}" for b in self.blocks)
        return f"SpectralAmplitude(arity={self.arity}, bins={self.grid.bins}, blocks=[{shapes}])"


def _unit(grid: FrequencyGrid, vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    nsq = _block_norm_squared(grid, vec)
    if nsq <= 0:
        raise ContractError("cannot normalize a zero amplitude")
    return vec / math.sqrt(nsq)


def _block_norm_squared(grid: FrequencyGrid, data: np.ndarray) -> float:
    w = grid.weights
    weight = np.ones(())
    for _ in range(data.ndim):
        weight = np.multiply.outer(weight, w)
    return float(np.sum(weight * np.abs(data) ** 2))


def _complex_list(a: np.ndarray) -> list:
    flat = np.asarray(a, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def _from_complex_list(data, shape) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1 and arr.size == 2 and shape == ():
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("complex data must be a list of [re, im] pairs")
    z = arr[:, 0] + 1j * arr[:, 1]
    if z.size != int(np.prod(shape)):
        raise ValidationError(f"expected {int(np.prod(shape))} complex entries, got {z.size}")
    return z.reshape(shape)


def _check_grid(a: FrequencyGrid, b: FrequencyGrid) -> None:
    if a != b:
        raise ValidationError(f"grid mismatch: {a} vs {b}")


def contract(bra: SpectralAmplitude, ket: SpectralAmplitude, pairing: Sequence[int] | None = None,
             weights_per_pair: Sequence[complex] | None = None) -> complex:
    """``int conj(bra(w)) ket(w_sigma)``: bra argument ``j`` is identified with ket argument ``pairing[j]``."""
    _check_grid(bra.grid, ket.grid)
    if bra.arity != ket.arity:
        raise ValidationError(f"arity mismatch: {bra.arity} vs {ket.arity}")
    n = bra.arity
    if n == 0:
        return 1.0 + 0j
    if n > len(_LETTERS):
        raise CapExceeded(f"contraction over {n} arguments is not supported")
    if pairing is None:
        pairing = range(n)
    letter_of_ket = [""] * n
    for j, k in enumerate(pairing):
        letter_of_ket[k] = _LETTERS[j]
    w = bra.grid.weights
    subs = []
    ops = []
    for b in bra.blocks:
        subs.append("".join(_LETTERS[a] for a in b.args))
        ops.append(np.conj(b.data))
    for b in ket.blocks:
        subs.append("".join(letter_of_ket[a] for a in b.args))
        ops.append(b.data)
    for j in range(n):
        subs.append(_LETTERS[j])
        ops.append(w)
    value = np.einsum(",".join(subs) + "->", *ops, optimize=len(ops) > 3)
    return complex(value)


def inner(g: SpectralAmplitude, f: SpectralAmplitude) -> complex:
    """Discretized ``(g, f) = int conj(g) f`` over all arguments."""
    return contract(g, f)


def symmetrize(h: SpectralAmplitude, groups: Sequence[Sequence[int]] | None = None,
               cap: int = DENSE_CAP) -> SpectralAmplitude:
    """Average ``h`` over all permutations of the arguments within each group.

    ``groups=None`` symmetrizes over all arguments.  The result is dense.
    """
    if groups is None:
        groups = [list(range(h.arity))]
    flat = [a for g in groups for a in g]
    if len(flat) != len(set(flat)) or any(not 0 <= a < h.arity for a in flat):
        raise ValidationError(f"symmetrization groups must be disjoint argument sets, got {groups}")
    tensor = h.to_dense(cap)
    for group in groups:
        group = list(group)
        if len(group) < 2:
            continue
        acc = np.zeros_like(tensor)
        count = 0
        for perm in itertools.permutations(group):
            axes = list(range(h.arity))
            for src, dst in zip(group, perm):
                axes[src] = dst
            acc += np.transpose(tensor, axes)
            count += 1
        tensor = acc / count
    return SpectralAmplitude.dense(h.grid, tensor)


def mean_frequency(h: SpectralAmplitude, tol: float = NORM_TOL) -> float:
    """Average angular frequency ``int |w_1| |S h|^2`` of a normalized amplitude."""
    if h.arity == 0:
        raise ValidationError("mean frequency of an arity-0 amplitude is undefined")
    if h.is_fully_factored and len({b.data.tobytes() for b in h.blocks}) == 1:
        sym = h
    else:
        sym = symmetrize(h)
    nsq = sym.norm_squared()
    if abs(nsq - 1.0) > tol:
        raise ContractError(f"mean frequency needs a normalized amplitude, |S h|^2 = {nsq}")
    weighted = sym.multiply_axis(0, np.abs(sym.grid.omega))
    return float(inner(sym, weighted).real)
