"""Randomized engine-versus-oracle comparisons.

Each case draws a small random state, a random frequency-dependent unitary
on a subset of its modes and one or two APDs, then compares the engine's
outcome table with the dense Fock-space oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from .algebra import Mode, MonomialTerm, StateVector, norm_squared
from .channels import apply_channel, custom_unitary
from .detection import ApdModel, outcome_table
from .oracle import DenseFockSpace
from .spectral import FrequencyGrid, SpectralAmplitude

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class CaseResult:
    index: int
    description: str
    max_error: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tol


def random_complex(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_amplitude(rng: np.random.Generator, grid: FrequencyGrid, arity: int) -> SpectralAmplitude:
    """Factored, dense, or pair-times-factored amplitude chosen at random."""
    if arity == 0:
        return SpectralAmplitude.scalar(grid)
    kind = rng.integers(3)
    if kind == 0 or arity == 1:
        return SpectralAmplitude.factored(grid, [random_complex(rng, grid.bins) for _ in range(arity)])
    if kind == 1:
        return SpectralAmplitude.dense(grid, random_complex(rng, (grid.bins,) * arity))
    pair = SpectralAmplitude.pair(grid, random_complex(rng, (grid.bins, grid.bins)))
    rest = [SpectralAmplitude.factored(grid, [random_complex(rng, grid.bins)]) for _ in range(arity - 2)]
    return SpectralAmplitude.product(pair, *rest)


def random_state(rng: np.random.Generator, grid: FrequencyGrid, modes, max_photons: int = 3,
                 max_terms: int = 3) -> StateVector:
    """Normalized random superposition of creation monomials."""
    while True:
        terms = []
        for _ in range(int(rng.integers(1, max_terms + 1))):
            n = int(rng.integers(0, max_photons + 1))
            slot_modes = [modes[int(i)] for i in rng.integers(len(modes), size=n)]
            coeff = complex(random_complex(rng, ()))
            terms.append(MonomialTerm(coeff, slot_modes, random_amplitude(rng, grid, n)))
        psi = StateVector.from_terms(terms, grid=grid)
        nsq = norm_squared(psi)
        if nsq > 1e-6:
            return (1.0 / np.sqrt(nsq)) * psi


def random_detectors(rng: np.random.Generator, modes) -> list[ApdModel]:
    order = list(rng.permutation(len(modes)))
    n_det = int(rng.integers(1, min(2, len(modes)) + 1))
    dets = []
    for k in range(n_det):
        size = 2 if (len(order) >= 2 and rng.random() < 0.4) else 1
        scope = tuple(modes[int(order.pop())] for _ in range(size))
        dets.append(ApdModel(scope, float(rng.uniform(0, 1)), float(rng.uniform(0, 0.2)), name=f"D{k}"))
        if not order:
            break
    return dets


def run_case(rng: np.random.Generator, index: int, tol: float = DEFAULT_TOL) -> CaseResult:
    grid = FrequencyGrid(1.0, 2.0, 2)
    n_modes = int(rng.integers(2, 4))
    modes = [Mode(f"m{i}") for i in range(n_modes)]
    psi = random_state(rng, grid, modes)
    span = int(rng.integers(1, n_modes + 1))
    chosen = [modes[int(i)] for i in sorted(rng.choice(n_modes, size=span, replace=False))]
    u = np.stack([unitary_group.rvs(span, random_state=rng) if span > 1 else
                  np.exp(1j * rng.uniform(0, 2 * np.pi, size=(1, 1))) for _ in range(grid.bins)])
    out = apply_channel(psi, custom_unitary(chosen, chosen, u))
    dets = random_detectors(rng, modes)

    cutoff = max(psi.max_photons(), 1)
    space = DenseFockSpace(modes, grid, cutoff)
    vec = space.channel_operator(chosen, chosen, u) @ space.embed(psi)
    engine = outcome_table(out, dets)
    dense = space.outcome_table(vec, [(d.modes, d.eta_det, d.p_dark) for d in dets])
    err = max(abs(a[1] - b[1]) for a, b in zip(engine, dense))
    err = max(err, abs(norm_squared(out) - float(np.vdot(vec, vec).real)))
    desc = (f"{n_modes} modes, {len(psi.terms)} terms, <= {psi.max_photons()} photons, "
            f"unitary on {span}, {len(dets)} detector(s)")
    return CaseResult(index, desc, float(err), tol)


def run_crosscheck(seed: int = 0, cases: int = 200, tol: float = DEFAULT_TOL) -> list[CaseResult]:
    rng = np.random.default_rng(seed)
    return [run_case(rng, i, tol) for i in range(cases)]
