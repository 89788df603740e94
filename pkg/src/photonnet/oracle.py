"""Brute-force dense Fock-space reference.

Sites are ``(mode, bin)`` pairs.  Each site carries a standard boson
``A_s = sqrt(w_i) a(w_i)`` so that ``[A_s, A_t^dag] = delta_st``; the field
operator of the grid convention is ``a(w_i) = A_s / sqrt(w_i)``.  The basis
holds every occupation vector with total photon number at most ``cutoff``.

Nothing here calls the contraction engine: states are embedded by direct
expansion over bin tuples, channels act through permanents of sub-matrices
computed by plain enumeration, and the POVM is built from occupation counts.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CapExceeded, ValidationError

MAX_MODES = 4
MAX_BINS = 3
MAX_CUTOFF = 4
DIM_CAP = 20_000


def naive_permanent(m: np.ndarray) -> complex:
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0j
    return complex(sum(np.prod([m[i, p[i]] for i in range(n)]) for p in itertools.permutations(range(n))))


def _occupations(sites: int, total: int):
    """All occupation tuples over ``sites`` summing to ``total``."""
    if sites == 0:
        if total == 0:
            yield ()
        return
    for k in range(total, -1, -1):
        for rest in _occupations(sites - 1, total - k):
            yield (k,) + rest


class DenseFockSpace:
    """Truncated Fock space over ``modes x bins`` with at most ``cutoff`` photons."""

    def __init__(self, modes: Sequence, grid, cutoff: int, cap: int = DIM_CAP,
                 max_modes: int = MAX_MODES, max_bins: int = MAX_BINS, max_cutoff: int = MAX_CUTOFF):
        modes = tuple(modes)
        if len(modes) > max_modes or grid.bins > max_bins or cutoff > max_cutoff:
            raise CapExceeded(
                f"oracle limited to {max_modes} modes, {max_bins} bins, {max_cutoff} photons; "
                f"got {len(modes)}, {grid.bins}, {cutoff}"
            )
        n_sites = len(modes) * grid.bins
        dim = sum(math.comb(k + n_sites - 1, k) for k in range(cutoff + 1))
        if dim > cap:
            raise CapExceeded(f"oracle dimension {dim} exceeds cap {cap}")
        self.modes = modes
        self.grid = grid
        self.cutoff = cutoff
        self.sites = [(m, i) for m in modes for i in range(grid.bins)]
        self.site_index = {s: k for k, s in enumerate(self.sites)}
        self.basis = [occ for total in range(cutoff + 1) for occ in _occupations(n_sites, total)]
        self.index = {occ: k for k, occ in enumerate(self.basis)}
        self.dim = len(self.basis)
        self.totals = np.array([sum(o) for o in self.basis])

    # -- operators ------------------------------------------------------------

    def annihilator(self, mode, bin_: int, field: bool = True) -> sp.csr_matrix:
        """``a(w_i)`` (``field=True``) or the unit boson ``A_s``."""
        s = self.site_index[(mode, bin_)]
        rows, cols, vals = [], [], []
        for col, occ in enumerate(self.basis):
            n = occ[s]
            if n == 0:
                continue
            lowered = occ[:s] + (n - 1,) + occ[s + 1:]
            rows.append(self.index[lowered])
            cols.append(col)
            vals.append(math.sqrt(n))
        scale = 1.0 / math.sqrt(self.grid.weights[bin_]) if field else 1.0
        return sp.csr_matrix((np.array(vals) * scale, (rows, cols)), shape=(self.dim, self.dim))

    def creator(self, mode, bin_: int, field: bool = True) -> sp.csr_matrix:
        return self.annihilator(mode, bin_, field).conj().T.tocsr()

    def occupation(self, modes: Iterable) -> np.ndarray:
        """Photon count in ``modes`` for every basis vector."""
        cols = [self.site_index[(m, i)] for m in modes for i in range(self.grid.bins)]
        return np.array([sum(occ[c] for c in cols) for occ in self.basis])

    def number_operator(self, modes: Iterable) -> sp.csr_matrix:
        return sp.diags(self.occupation(modes).astype(float)).tocsr()

    # -- states ---------------------------------------------------------------

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v

    def embed(self, psi) -> np.ndarray:
        """Coordinates of a :class:`StateVector` in the occupation basis."""
        vec = np.zeros(self.dim, dtype=complex)
        sqrt_w = np.sqrt(self.grid.weights)
        bins = self.grid.bins
        for term in psi.terms:
            n = term.n_photons
            if n > self.cutoff:
                raise ValidationError(f"term with {n} photons exceeds oracle cutoff {self.cutoff}")
            if n == 0:
                vec[0] += term.coeff
                continue
            for m in term.modes:
                if m not in self.modes:
                    raise ValidationError(f"mode {m.name} is not part of the oracle space")
            h = term.amplitude.to_dense()
            slot_sites = [[self.site_index[(m, i)] for i in range(bins)] for m in term.modes]
            for idx in itertools.product(range(bins), repeat=n):
                value = h[idx]
                if value == 0:
                    continue
                occ = [0] * len(self.sites)
                for j, i in enumerate(idx):
                    occ[slot_sites[j][i]] += 1
                    value *= sqrt_w[i]
                # prod A^dag |0> = sqrt(prod n_s!) |occ>
                value *= math.sqrt(math.prod(math.factorial(k) for k in occ))
                vec[self.index[tuple(occ)]] += term.coeff * value
        return vec

    def density(self, rho) -> np.ndarray:
        """Dense matrix of a :class:`DensityOp`."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for w, ket, bra in rho.terms:
            out += w * np.outer(self.embed(ket), self.embed(bra).conj())
        return out

    # -- channels -------------------------------------------------------------

    def single_particle_map(self, modes_in, modes_out, matrices) -> np.ndarray:
        """Site-level matrix ``V`` with ``A_in,(x,i)^dag -> sum_y V[(y,i),(x,i)] A_out,(y,i)^dag``."""
        u = np.asarray(matrices, dtype=complex)
        bins = self.grid.bins
        if u.ndim == 2:
            u = np.broadcast_to(u, (bins,) + u.shape)
        v = np.eye(len(self.sites), dtype=complex)
        for x in modes_in:
            for i in range(bins):
                v[self.site_index[(x, i)], self.site_index[(x, i)]] = 0.0
        for j, x in enumerate(modes_in):
            for k, y in enumerate(modes_out):
                for i in range(bins):
                    v[self.site_index[(y, i)], self.site_index[(x, i)]] = u[i, k, j]
        return v

    def channel_operator(self, modes_in, modes_out, matrices) -> np.ndarray:
        """Fock-space image of a linear-optical map, block by total photon number.

        ``<n'| U |n> = per(V[rows(n'), cols(n)]) / sqrt(prod n! prod n'!)``.
        """
        v = self.single_particle_map(modes_in, modes_out, matrices)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for total in range(self.cutoff + 1):
            block = np.flatnonzero(self.totals == total)
            expanded = {}
            for k in block:
                occ = self.basis[k]
                expanded[k] = [s for s, c in enumerate(occ) for _ in range(c)]
            for c in block:
                cols = expanded[c]
                norm_c = math.prod(math.factorial(x) for x in self.basis[c])
                for r in block:
                    rows = expanded[r]
                    norm_r = math.prod(math.factorial(x) for x in self.basis[r])
                    sub = v[np.ix_(rows, cols)] if total else np.zeros((0, 0))
                    out[r, c] = naive_permanent(sub) / math.sqrt(norm_c * norm_r)
        return out

    # -- detection ------------------------------------------------------------

    def povm_click_probability(self, scope, eta: float, p_dark: float) -> np.ndarray:
        """Diagonal of the click element ``1 - (1 - p)(1 - eta)^n``."""
        n = self.occupation(scope)
        return 1.0 - (1.0 - p_dark) * (1.0 - eta) ** n

    def dense_povm(self, scope, eta: float, p_dark: float) -> np.ndarray:
        return np.diag(self.povm_click_probability(scope, eta, p_dark)).astype(complex)

    def outcome_table(self, vec: np.ndarray, detectors: Sequence[tuple]) -> list[tuple[tuple[int, ...], float]]:
        """``detectors`` are ``(scope, eta, p_dark)`` triples; patterns as in the engine."""
        probs = np.abs(vec) ** 2
        clicks = [self.povm_click_probability(*d) for d in detectors]
        rows = []
        for pattern in itertools.product((0, 1), repeat=len(detectors)):
            weight = np.ones(self.dim)
            for c, b in zip(clicks, pattern):
                weight = weight * (c if b else 1.0 - c)
            rows.append((pattern, float(np.dot(probs, weight))))
        return rows

    # -- partial trace --------------------------------------------------------

    def partial_trace(self, rho: np.ndarray, keep: Iterable) -> tuple[np.ndarray, list[tuple]]:
        """Trace out every mode not in ``keep``.

        Returns the reduced matrix and its basis of kept-site occupations.
        """
        keep = set(keep)
        kept_sites = [k for k, (m, _) in enumerate(self.sites) if m in keep]
        traced_sites = [k for k, (m, _) in enumerate(self.sites) if m not in keep]
        kept_occ = sorted({tuple(o[k] for k in kept_sites) for o in self.basis},
                          key=lambda o: (sum(o), [-x for x in o]))
        kept_index = {o: k for k, o in enumerate(kept_occ)}
        by_env: dict = {}
        for k, occ in enumerate(self.basis):
            env = tuple(occ[s] for s in traced_sites)
            by_env.setdefault(env, []).append((kept_index[tuple(occ[s] for s in kept_sites)], k))
        out = np.zeros((len(kept_occ), len(kept_occ)), dtype=complex)
        for members in by_env.values():
            for a, ka in members:
                for b, kb in members:
                    out[a, b] += rho[ka, kb]
        return out, kept_occ


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    m = 0.5 * (m + m.conj().T)
    vals, vecs = np.linalg.eigh(m)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity_overlap(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """``Tr(sqrt(rho1) sqrt(rho2))``."""
    return float(np.trace(psd_sqrt(rho1) @ psd_sqrt(rho2)).real)
