"""Frequency-preserving linear network elements.

Every element is a :class:`UnitaryField`: a unitary ``U(w)`` per grid bin
relating annihilators by ``a_out(w) = U(w) a_in(w)``.  Applied to a state made
of in-mode creators this is the substitution

    a_in,j^dag(w)  ->  sum_k U_kj(w) a_out,k^dag(w).

Modes of the state that the element does not touch pass through unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import Mode, StateVector, apply_substitution
from .errors import ContractError, ValidationError

UNITARY_TOL = 1e-10


def unitarity_residual(u: np.ndarray) -> float:
    """Largest ``||U^dag U - I||`` (spectral norm) over bins."""
    u = np.asarray(u, dtype=complex)
    if u.ndim == 2:
        u = u[None]
    eye = np.eye(u.shape[-1])
    return max(float(np.linalg.norm(m.conj().T @ m - eye, 2)) for m in u)


@dataclass(frozen=True, eq=False)
class UnitaryField:
    """Per-bin unitary over declared in/out mode lists.

    ``matrices`` has shape ``(d, d)`` for a frequency-flat element or
    ``(bins, d, d)`` otherwise.
    """

    modes_in: tuple
    modes_out: tuple
    matrices: np.ndarray
    label: str = "custom_unitary"

    def __post_init__(self):
        modes_in = tuple(self.modes_in)
        modes_out = tuple(self.modes_out)
        object.__setattr__(self, "modes_in", modes_in)
        object.__setattr__(self, "modes_out", modes_out)
        if len(modes_in) != len(modes_out):
            raise ValidationError(f"{self.label}: {len(modes_in)} in-modes but {len(modes_out)} out-modes")
        if len(set(modes_in)) != len(modes_in) or len(set(modes_out)) != len(modes_out):
            raise ValidationError(f"{self.label}: repeated mode in port list")
        u = np.array(self.matrices, dtype=complex)
        d = len(modes_in)
        if u.shape[-2:] != (d, d) or u.ndim not in (2, 3):
            raise ValidationError(f"{self.label}: matrix shape {u.shape} does not fit {d} modes")
        residual = unitarity_residual(u)
        if residual > UNITARY_TOL:
            raise ContractError(f"{self.label}: matrix is not unitary (residual {residual:.3e})")
        u.setflags(write=False)
        object.__setattr__(self, "matrices", u)

    @property
    def dimension(self) -> int:
        return len(self.modes_in)

    @property
    def frequency_flat(self) -> bool:
        return self.matrices.ndim == 2

    def per_bin(self, bins: int) -> np.ndarray:
        if self.frequency_flat:
            return np.broadcast_to(self.matrices, (bins,) + self.matrices.shape)
        if self.matrices.shape[0] != bins:
            raise ValidationError(
                f"{self.label}: defined on {self.matrices.shape[0]} bins, state grid has {bins}"
            )
        return self.matrices

    def substitution_rule(self, bins: int) -> dict:
        u = self.per_bin(bins)
        rule = {}
        for j, x in enumerate(self.modes_in):
            opts = []
            for k, y in enumerate(self.modes_out):
                c = u[:, k, j]
                if np.any(c != 0):
                    opts.append((y, c))
            rule[x] = opts
        return rule


def apply_channel(psi: StateVector, channel: UnitaryField) -> StateVector:
    """Express ``psi`` in terms of the element's out-mode creators."""
    if psi.grid is None:
        return psi
    present = set(psi.modes())
    clash = (present & set(channel.modes_out)) - set(channel.modes_in)
    if clash:
        names = ", ".join(sorted(m.name for m in clash))
        raise ValidationError(
            f"{channel.label}: state already occupies out-mode(s) {names} that are not in-modes"
        )
    return apply_substitution(psi, channel.substitution_rule(psi.grid.bins), passthrough=True)


def _vacuum_port(mode: Mode, tag: str) -> Mode:
    return Mode(f"{mode.name}~{tag}", f"{mode.fiber}~{tag}", mode.polarization, mode.direction)


def beam_splitter(in_mode: Mode, out1: Mode, out2: Mode, eta_trans: float,
                  vacuum_port: Mode | None = None) -> UnitaryField:
    """``in^dag -> sqrt(eta) out1^dag + sqrt(1 - eta) out2^dag`` with a vacuum-fed second input."""
    if not 0.0 <= eta_trans <= 1.0:
        raise ValidationError(f"beam splitter transmission {eta_trans} outside [0, 1]")
    t = np.sqrt(eta_trans)
    r = np.sqrt(1.0 - eta_trans)
    u = np.array([[t, -r], [r, t]], dtype=complex)
    port = vacuum_port or _vacuum_port(in_mode, "vac")
    return UnitaryField((in_mode, port), (out1, out2), u, "beam_splitter")


def polarization_rotation(a1: Mode, a2: Mode, u: complex, v: complex) -> UnitaryField:
    """SU(2) map ``(a1, a2) -> (u a1 + v a2, -v* a1 + u* a2)`` on annihilators."""
    if abs(abs(u) ** 2 + abs(v) ** 2 - 1.0) > UNITARY_TOL:
        raise ValidationError(f"polarization rotation needs |u|^2 + |v|^2 = 1, got {abs(u)**2 + abs(v)**2}")
    m = np.array([[u, v], [-np.conj(v), np.conj(u)]], dtype=complex)
    return UnitaryField((a1, a2), (a1, a2), m, "pol_rotation")


def splice(in_modes: Sequence[Mode], out_modes: Sequence[Mode], u4) -> UnitaryField:
    """Junction of fibers a and b.

    ``in_modes = (b1-, a1+, b2-, a2+)`` and ``out_modes = (a1-, b1+, a2-, b2+)``.
    """
    in_modes = tuple(in_modes)
    out_modes = tuple(out_modes)
    if len(in_modes) != 4 or len(out_modes) != 4:
        raise ValidationError("splice needs four in-modes and four out-modes")
    expected_dir = ("-", "+", "-", "+")
    expected_pol = (1, 1, 2, 2)
    for label, ms in (("in", in_modes), ("out", out_modes)):
        if tuple(m.direction for m in ms) != expected_dir:
            raise ValidationError(f"splice {label}-modes must have directions {expected_dir}")
        if tuple(m.polarization for m in ms) != expected_pol:
            raise ValidationError(f"splice {label}-modes must have polarizations {expected_pol}")
    b_fiber, a_fiber = in_modes[0].fiber, in_modes[1].fiber
    if (in_modes[2].fiber, in_modes[3].fiber) != (b_fiber, a_fiber) or \
            tuple(m.fiber for m in out_modes) != (a_fiber, b_fiber, a_fiber, b_fiber):
        raise ValidationError("splice mode fibers do not follow (b, a, b, a) -> (a, b, a, b)")
    return UnitaryField(in_modes, out_modes, u4, "splice")


def decoupled_splice_matrix(u_pol1, u_pol2) -> np.ndarray:
    """Block-diagonal 4x4 splice matrix with no coupling between polarizations."""
    u1 = np.asarray(u_pol1, dtype=complex)
    u2 = np.asarray(u_pol2, dtype=complex)
    shape = np.broadcast_shapes(u1.shape, u2.shape)
    out = np.zeros(shape[:-2] + (4, 4), dtype=complex)
    out[..., :2, :2] = np.broadcast_to(u1, shape)
    out[..., 2:, 2:] = np.broadcast_to(u2, shape)
    return out


def coupler(modes_in: Sequence[Mode], modes_out: Sequence[Mode], u8) -> UnitaryField:
    """Lossless fiber coupler, an 8x8 unitary per bin."""
    if len(tuple(modes_in)) != 8:
        raise ValidationError("coupler needs eight in-modes")
    return UnitaryField(modes_in, modes_out, u8, "coupler")


def loss_channel(b_prime: Mode, b: Mode, c_loss: Mode, eta_loss, vacuum_port: Mode | None = None) -> UnitaryField:
    """``b'(w) = eta(w) b(w) + sqrt(1 - |eta(w)|^2) c(w)`` with ``c`` an extraneous mode.

    ``eta_loss`` is a scalar or a per-bin array of complex amplitudes.
    """
    eta = np.asarray(eta_loss, dtype=complex)
    if np.any(np.abs(eta) > 1 + 1e-12):
        raise ValidationError("loss amplitude must satisfy |eta| <= 1")
    s = np.sqrt(np.clip(1.0 - np.abs(eta) ** 2, 0.0, None))
    u = np.empty(eta.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = np.conj(eta)
    u[..., 1, 0] = s
    u[..., 0, 1] = -s
    u[..., 1, 1] = eta
    port = vacuum_port or _vacuum_port(b_prime, "env")
    return UnitaryField((b_prime, port), (b, c_loss), u, "loss")


def phase_advance(mode: Mode, k, x: float) -> UnitaryField:
    """Propagation phase ``exp(i k(w) x)`` for a mode, ``k`` given per bin.

    ``k`` must increase with frequency.
    """
    k = np.asarray(k, dtype=float)
    if k.ndim != 1:
        raise ValidationError("propagation constants must be a per-bin vector")
    if k.size > 1 and np.any(np.diff(k) <= 0):
        raise ValidationError("propagation constant k(w) must increase with w")
    u = np.exp(1j * k * x)[:, None, None]
    return UnitaryField((mode,), (mode,), u, "phase")


def custom_unitary(modes_in: Sequence[Mode], modes_out: Sequence[Mode], matrices) -> UnitaryField:
    return UnitaryField(modes_in, modes_out, matrices, "custom_unitary")


def compose_rules(*channels: UnitaryField) -> list[UnitaryField]:
    """Convenience: the list form used by :func:`apply_network`."""
    return list(channels)


def apply_network(psi: StateVector, channels: Sequence[UnitaryField]) -> StateVector:
    for ch in channels:
        psi = apply_channel(psi, ch)
    return psi
