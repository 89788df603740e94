"""Experiment files: source -> channels -> detectors, with an optional sweep.

An experiment is a strict JSON document (``"schema_version": 1``).  Parsing
rejects unknown fields, checks every mode/spectrum reference and builds the
network once so that physics errors (non-unitary matrices, bad spectra)
surface at parse time with the offending field named.

Sweeps name a dotted path into the document, e.g. ``detectors.D1.eta_det``
or ``source.mean_photons``.  List items can be addressed by index or by
their ``name``.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Annotated, Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat, PositiveInt
from pydantic import ValidationError as PydanticValidationError
from pydantic import model_validator

from . import channels as ch
from . import detection as det
from . import sources as src
from .algebra import Mode, check_registry
from .errors import ContractError, PhotonNetError, ValidationError
from .spectral import FrequencyGrid, SpectralAmplitude

SCHEMA_VERSION = 1
OUTPUT_KINDS = ("outcome_table", "marginals", "number_expectations")

Complex = Union[float, tuple[float, float]]


def _cx(value) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ComplexArray(_Strict):
    """Real and imaginary parts as equally shaped nested lists."""

    re: list
    im: Optional[list] = None

    def array(self, where: str) -> np.ndarray:
        try:
            re = np.asarray(self.re, dtype=float)
            im = np.zeros_like(re) if self.im is None else np.asarray(self.im, dtype=float)
        except (TypeError, ValueError):
            raise ValidationError(f"{where}: re/im must be rectangular nested lists of numbers") from None
        if re.shape != im.shape:
            raise ValidationError(f"{where}: re has shape {re.shape} but im has shape {im.shape}")
        return re + 1j * im


# -- schema ------------------------------------------------------------------


class GridSpec(_Strict):
    omega_min: PositiveFloat
    omega_max: PositiveFloat
    bins: PositiveInt
    scheme: Literal["uniform", "trapezoid"] = "uniform"


class ModeSpec(_Strict):
    name: str = Field(min_length=1)
    fiber: str = ""
    polarization: Literal[1, 2] = 1
    direction: Literal["+", "-"] = "+"


class GaussianSpectrum(_Strict):
    kind: Literal["gaussian"]
    center: PositiveFloat
    width: PositiveFloat
    delay: float = 0.0


class SamplesSpectrum(_Strict):
    kind: Literal["samples"]
    values: list[Complex]
    normalize: bool = True


class ProductSpectrum(_Strict):
    kind: Literal["product"]
    factors: list[str] = Field(min_length=1)


class PairSpectrum(_Strict):
    kind: Literal["pair"]
    matrix: ComplexArray
    normalize: bool = True


Spectrum = Annotated[Union[GaussianSpectrum, SamplesSpectrum, ProductSpectrum, PairSpectrum],
                     Field(discriminator="kind")]


class SinglePhotonSource(_Strict):
    kind: Literal["single_photon"]
    mode: str
    spectrum: str


class NPhotonSource(_Strict):
    kind: Literal["n_photon"]
    mode: str
    spectrum: str
    n: int = Field(ge=0)


class CoherentSource(_Strict):
    kind: Literal["coherent"]
    mode: str
    spectrum: str
    alpha: Optional[Complex] = None
    mean_photons: Optional[NonNegativeFloat] = None
    cutoff_epsilon: float = Field(default=1e-12, gt=0, lt=1)

    @model_validator(mode="after")
    def _one_amplitude(self):
        if (self.alpha is None) == (self.mean_photons is None):
            raise ValueError("give exactly one of alpha or mean_photons")
        return self

    def alpha_value(self) -> complex:
        return _cx(self.alpha) if self.alpha is not None else complex(math.sqrt(self.mean_photons))


class BiPhotonSource(_Strict):
    kind: Literal["bi_photon"]
    a_modes: tuple[str, str]
    b_modes: tuple[str, str]
    C: tuple[tuple[Complex, Complex], tuple[Complex, Complex]]
    kernel: Union[str, dict[Literal["11", "12", "21", "22"], str]]


class QkdSource(_Strict):
    kind: Literal["qkd_psi_n"]
    a_modes: tuple[str, str]
    b_modes: tuple[str, str]
    n: int = Field(ge=0)
    kernel: str


class QkdPoissonSource(_Strict):
    """Phase-randomized pair source: ``sum_n p_n |psi_n><psi_n|`` with Poisson ``p_n``."""

    kind: Literal["qkd_poisson"]
    a_modes: tuple[str, str]
    b_modes: tuple[str, str]
    kernel: str
    mean_pairs: NonNegativeFloat
    n_max: int = Field(default=3, ge=0, le=6)


class ProductSource(_Strict):
    kind: Literal["product"]
    parts: list["Source"] = Field(min_length=1)


Source = Annotated[Union[SinglePhotonSource, NPhotonSource, CoherentSource, BiPhotonSource,
                         QkdSource, QkdPoissonSource, ProductSource], Field(discriminator="kind")]
ProductSource.model_rebuild()


class BeamSplitterSpec(_Strict):
    kind: Literal["beam_splitter"]
    input: str
    outputs: tuple[str, str]
    eta_trans: float = Field(ge=0, le=1)
    vacuum_port: Optional[str] = None


Matrix = ComplexArray


class SpliceSpec(_Strict):
    kind: Literal["splice"]
    inputs: tuple[str, str, str, str]
    outputs: tuple[str, str, str, str]
    matrix: Optional[Matrix] = None
    pol1: Optional[Matrix] = None
    pol2: Optional[Matrix] = None

    @model_validator(mode="after")
    def _one_form(self):
        if self.matrix is not None and (self.pol1 is not None or self.pol2 is not None):
            raise ValueError("give either matrix or the pol1/pol2 blocks, not both")
        if (self.pol1 is None) != (self.pol2 is None):
            raise ValueError("pol1 and pol2 must be given together")
        return self


class CouplerSpec(_Strict):
    kind: Literal["coupler"]
    inputs: list[str] = Field(min_length=8, max_length=8)
    outputs: list[str] = Field(min_length=8, max_length=8)
    matrix: Matrix


class PolRotationSpec(_Strict):
    kind: Literal["pol_rotation"]
    modes: tuple[str, str]
    u: Complex
    v: Complex


class LossSpec(_Strict):
    kind: Literal["loss"]
    input: str
    output: str
    loss_mode: str
    eta_loss: Union[float, ComplexArray]
    vacuum_port: Optional[str] = None


class CustomUnitarySpec(_Strict):
    kind: Literal["custom_unitary"]
    inputs: list[str] = Field(min_length=1)
    outputs: list[str] = Field(min_length=1)
    matrix: Matrix


class PhaseSpec(_Strict):
    kind: Literal["phase"]
    mode: str
    k: list[float]
    x: float


Channel = Annotated[Union[BeamSplitterSpec, SpliceSpec, CouplerSpec, PolRotationSpec, LossSpec,
                          CustomUnitarySpec, PhaseSpec], Field(discriminator="kind")]


class DetectorSpec(_Strict):
    name: str = Field(min_length=1)
    modes: list[str] = Field(min_length=1, max_length=2)
    eta_det: float = Field(ge=0, le=1)
    p_dark: float = Field(default=0.0, ge=0, le=1)
    direction: Literal["+", "-"] = "+"


class SweepSpec(_Strict):
    parameter: str = Field(min_length=1)
    values: list[Union[float, tuple[float, float]]] = Field(min_length=1)


class Experiment(_Strict):
    schema_version: Literal[1]
    name: str = "experiment"
    description: str = ""
    grid: GridSpec
    modes: list[ModeSpec] = Field(min_length=1)
    spectra: dict[str, Spectrum] = Field(default_factory=dict)
    source: Source
    channels: list[Channel] = Field(default_factory=list)
    detectors: list[DetectorSpec] = Field(default_factory=list)
    sweep: Optional[SweepSpec] = None
    outputs: list[Literal["outcome_table", "marginals", "number_expectations"]] = \
        Field(default_factory=lambda: ["outcome_table"])

    @model_validator(mode="after")
    def _references(self):
        declared = {m.name for m in self.modes}
        if len(declared) != len(self.modes):
            raise ValueError("mode names must be unique")
        if self.grid.omega_min >= self.grid.omega_max:
            raise ValueError("grid.omega_min must be below grid.omega_max")

        def need_mode(name, where):
            if name not in declared:
                raise ValueError(f"{where} refers to undeclared mode {name!r}")

        def need_spectrum(name, where):
            if name not in self.spectra:
                raise ValueError(f"{where} refers to undeclared spectrum {name!r}")

        for key, s in self.spectra.items():
            if isinstance(s, ProductSpectrum):
                for f in s.factors:
                    need_spectrum(f, f"spectra.{key}")
                    if isinstance(self.spectra[f], ProductSpectrum):
                        raise ValueError(f"spectra.{key}: product factors must be elementary spectra")

        def walk_source(s, where):
            if isinstance(s, ProductSource):
                for i, p in enumerate(s.parts):
                    walk_source(p, f"{where}.parts.{i}")
                return
            for attr in ("mode",):
                if hasattr(s, attr):
                    need_mode(getattr(s, attr), f"{where}.{attr}")
            for attr in ("a_modes", "b_modes"):
                for name in getattr(s, attr, ()):
                    need_mode(name, f"{where}.{attr}")
            if hasattr(s, "spectrum"):
                need_spectrum(s.spectrum, f"{where}.spectrum")
            kernel = getattr(s, "kernel", None)
            if isinstance(kernel, str):
                need_spectrum(kernel, f"{where}.kernel")
            elif isinstance(kernel, dict):
                for v in kernel.values():
                    need_spectrum(v, f"{where}.kernel")

        walk_source(self.source, "source")
        for i, c in enumerate(self.channels):
            for attr in ("input", "output", "loss_mode", "mode", "vacuum_port"):
                name = getattr(c, attr, None)
                if isinstance(name, str):
                    need_mode(name, f"channels.{i}.{attr}")
            for attr in ("inputs", "outputs", "modes"):
                for name in getattr(c, attr, ()) or ():
                    need_mode(name, f"channels.{i}.{attr}")
        names = set()
        for i, d in enumerate(self.detectors):
            if d.name in names:
                raise ValueError(f"detector name {d.name!r} used twice")
            names.add(d.name)
            for name in d.modes:
                need_mode(name, f"detectors.{i}.modes")
        if self.sweep is not None:
            resolve_path(self.model_dump(mode="json"), self.sweep.parameter)
        return self


# -- parsing -----------------------------------------------------------------


def _format_pydantic(err: PydanticValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def parse(text: str) -> Experiment:
    """Parse and validate an experiment document."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_obj(data)


def parse_obj(data: Any) -> Experiment:
    if not isinstance(data, dict):
        raise ValidationError("experiment must be a JSON object")
    try:
        exp = Experiment.model_validate(data)
    except PydanticValidationError as exc:
        raise ValidationError(_format_pydantic(exc)) from None
    for _, point in sweep_points(exp):
        try:
            build(point)
        except ContractError as exc:
            raise ValidationError(str(exc)) from None
    return exp


def serialize(exp: Experiment) -> str:
    return json.dumps(exp.model_dump(mode="json", exclude_none=True), indent=2, sort_keys=False)


def schema() -> dict:
    return Experiment.model_json_schema()


# -- paths and sweeps ----------------------------------------------------------


def _step(node, part: str, path: str):
    if isinstance(node, dict):
        if part not in node:
            raise ValidationError(f"parameter path {path!r}: no field {part!r}")
        return part
    if isinstance(node, list):
        if part.isdigit() and int(part) < len(node):
            return int(part)
        for i, item in enumerate(node):
            if isinstance(item, dict) and item.get("name") == part:
                return i
        raise ValidationError(f"parameter path {path!r}: no list item {part!r}")
    raise ValidationError(f"parameter path {path!r}: cannot descend into {part!r}")


def resolve_path(doc: dict, path: str):
    node = doc
    for part in path.split("."):
        node = node[_step(node, part, path)]
    if isinstance(node, (dict, str)) or (isinstance(node, list) and len(node) != 2):
        raise ValidationError(f"parameter path {path!r} does not name a numeric field")
    return node


def set_path(doc: dict, path: str, value) -> dict:
    doc = copy.deepcopy(doc)
    parts = path.split(".")
    node = doc
    for part in parts[:-1]:
        node = node[_step(node, part, path)]
    node[_step(node, parts[-1], path)] = value
    return doc


def apply_override(exp: Experiment, assignment: str) -> Experiment:
    """Apply ``path=value`` with ``value`` parsed as JSON when possible."""
    if "=" not in assignment:
        raise ValidationError(f"override {assignment!r} must look like path=value")
    path, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    doc = exp.model_dump(mode="json", exclude_none=True)
    return parse_obj(set_path(doc, path.strip(), value))


def sweep_points(exp: Experiment):
    """``(value, experiment at that value)`` in declared order."""
    if exp.sweep is None:
        yield None, exp
        return
    doc = exp.model_dump(mode="json", exclude_none=True)
    doc.pop("sweep")
    for v in exp.sweep.values:
        value = list(v) if isinstance(v, tuple) else v
        point_doc = set_path(doc, exp.sweep.parameter, value)
        try:
            yield v, Experiment.model_validate(point_doc)
        except PydanticValidationError as exc:
            raise ValidationError(f"sweep value {v!r}: {_format_pydantic(exc)}") from None


# -- building ----------------------------------------------------------------


@dataclass
class Network:
    grid: FrequencyGrid
    modes: dict
    mixture: list  # (weight, StateVector)
    channels: list
    detectors: list


def _spectrum(exp: Experiment, grid: FrequencyGrid, name: str, cache: dict) -> SpectralAmplitude:
    if name in cache:
        return cache[name]
    s = exp.spectra[name]
    where = f"spectra.{name}"
    try:
        if isinstance(s, GaussianSpectrum):
            amp = SpectralAmplitude.gaussian(grid, s.center, s.width, s.delay)
        elif isinstance(s, SamplesSpectrum):
            vec = np.array([_cx(v) for v in s.values])
            if vec.shape != (grid.bins,):
                raise ValidationError(f"{len(s.values)} samples for a {grid.bins}-bin grid")
            amp = SpectralAmplitude.factored(grid, [vec], normalize=s.normalize)
        elif isinstance(s, ProductSpectrum):
            amp = SpectralAmplitude.product(*(_spectrum(exp, grid, f, cache) for f in s.factors))
        else:
            m = s.matrix.array(where + ".matrix")
            if m.shape != (grid.bins, grid.bins):
                raise ValidationError(f"pair matrix shape {m.shape}, grid needs {(grid.bins, grid.bins)}")
            amp = SpectralAmplitude.pair(grid, m, normalize=s.normalize)
    except PhotonNetError as exc:
        raise type(exc)(f"{where}: {exc}") from None
    cache[name] = amp
    return amp


def _build_source(s, exp, grid, modes, cache) -> list:
    spec = lambda name: _spectrum(exp, grid, name, cache)  # noqa: E731
    if isinstance(s, SinglePhotonSource):
        return [(1.0, src.single_photon(modes[s.mode], spec(s.spectrum)))]
    if isinstance(s, NPhotonSource):
        f = spec(s.spectrum)
        if f.arity == 1:
            return [(1.0, src.fock_state(modes[s.mode], f, s.n))]
        return [(1.0, src.n_photon(modes[s.mode], f, s.n))]
    if isinstance(s, CoherentSource):
        c = src.CoherentSpec(modes[s.mode], s.alpha_value(), spec(s.spectrum), s.cutoff_epsilon)
        return [(1.0, src.coherent(c))]
    a = tuple(modes[m] for m in s.a_modes) if hasattr(s, "a_modes") else None
    b = tuple(modes[m] for m in s.b_modes) if hasattr(s, "b_modes") else None
    if isinstance(s, BiPhotonSource):
        if isinstance(s.kernel, str):
            h = {"all": spec(s.kernel)}
        else:
            h = {(int(k[0]) - 1, int(k[1]) - 1): spec(v) for k, v in s.kernel.items()}
        c = np.array([[_cx(x) for x in row] for row in s.C])
        return [(1.0, src.bi_photon(src.BiPhotonSpec(a, b, c, h)))]
    if isinstance(s, QkdSource):
        return [(1.0, src.qkd_psi_n(a, b, s.n, g=spec(s.kernel)))]
    if isinstance(s, QkdPoissonSource):
        mu = s.mean_pairs
        weights = np.array([math.exp(-mu) * mu**n / math.factorial(n) for n in range(s.n_max + 1)])
        weights /= weights.sum()
        g = spec(s.kernel)
        return [(float(w), src.qkd_psi_n(a, b, n, g=g)) for n, w in enumerate(weights) if w > 0]
    if isinstance(s, ProductSource):
        mixture = [(1.0, None)]
        for part in s.parts:
            nxt = _build_source(part, exp, grid, modes, cache)
            mixture = [(w1 * w2, p2 if p1 is None else src.tensor(p1, p2))
                       for w1, p1 in mixture for w2, p2 in nxt]
        return mixture
    raise ValidationError(f"unknown source kind {s.kind!r}")


def _matrix(value, d: int, grid: FrequencyGrid, where: str) -> np.ndarray:
    m = value.array(where)
    if m.shape not in ((d, d), (grid.bins, d, d)):
        raise ValidationError(f"{where}: matrix shape {m.shape}, expected {(d, d)} or {(grid.bins, d, d)}")
    return m


def _build_channel(c, grid, modes, where) -> ch.UnitaryField:
    mm = lambda names: [modes[n] for n in names]  # noqa: E731
    if isinstance(c, BeamSplitterSpec):
        port = modes[c.vacuum_port] if c.vacuum_port else None
        return ch.beam_splitter(modes[c.input], modes[c.outputs[0]], modes[c.outputs[1]], c.eta_trans, port)
    if isinstance(c, SpliceSpec):
        if c.pol1 is not None:
            u = ch.decoupled_splice_matrix(_matrix(c.pol1, 2, grid, where + ".pol1"),
                                           _matrix(c.pol2, 2, grid, where + ".pol2"))
        elif c.matrix is not None:
            u = _matrix(c.matrix, 4, grid, where + ".matrix")
        else:
            u = np.eye(4)
        return ch.splice(mm(c.inputs), mm(c.outputs), u)
    if isinstance(c, CouplerSpec):
        return ch.coupler(mm(c.inputs), mm(c.outputs), _matrix(c.matrix, 8, grid, where + ".matrix"))
    if isinstance(c, PolRotationSpec):
        return ch.polarization_rotation(modes[c.modes[0]], modes[c.modes[1]], _cx(c.u), _cx(c.v))
    if isinstance(c, LossSpec):
        eta = c.eta_loss.array(where + ".eta_loss") if isinstance(c.eta_loss, ComplexArray) else c.eta_loss
        if np.ndim(eta) and np.shape(eta) != (grid.bins,):
            raise ValidationError(f"{where}.eta_loss needs {grid.bins} entries")
        port = modes[c.vacuum_port] if c.vacuum_port else None
        return ch.loss_channel(modes[c.input], modes[c.output], modes[c.loss_mode], eta, port)
    if isinstance(c, CustomUnitarySpec):
        return ch.custom_unitary(mm(c.inputs), mm(c.outputs),
                                 _matrix(c.matrix, len(c.inputs), grid, where + ".matrix"))
    if isinstance(c, PhaseSpec):
        if len(c.k) != grid.bins:
            raise ValidationError(f"{where}.k needs {grid.bins} entries")
        return ch.phase_advance(modes[c.mode], c.k, c.x)
    raise ValidationError(f"unknown channel kind {c.kind!r}")


def build(exp: Experiment) -> Network:
    g = exp.grid
    try:
        grid = FrequencyGrid(g.omega_min, g.omega_max, g.bins, g.scheme)
        modes = {m.name: Mode(m.name, m.fiber, m.polarization, m.direction) for m in exp.modes}
        check_registry(modes.values())
    except PhotonNetError as exc:
        raise ValidationError(f"grid/modes: {exc}") from None
    cache: dict = {}
    try:
        mixture = _build_source(exp.source, exp, grid, modes, cache)
    except PhotonNetError as exc:
        raise type(exc)(f"source: {exc}") from None
    chans = []
    for i, c in enumerate(exp.channels):
        try:
            chans.append(_build_channel(c, grid, modes, f"channels.{i}"))
        except PhotonNetError as exc:
            raise type(exc)(f"channels.{i} ({c.kind}): {exc}") from None
    dets = []
    for i, d in enumerate(exp.detectors):
        try:
            dets.append(det.ApdModel(tuple(modes[n] for n in d.modes), d.eta_det, d.p_dark,
                                     d.direction, d.name))
        except PhotonNetError as exc:
            raise type(exc)(f"detectors.{i}: {exc}") from None
    return Network(grid, modes, mixture, chans, dets)


# -- running -----------------------------------------------------------------


@dataclass
class PointResult:
    index: int
    value: Any
    outcomes: list = field(default_factory=list)  # (pattern, probability)
    marginals: dict = field(default_factory=dict)  # detector -> probability
    numbers: dict = field(default_factory=dict)  # mode -> <N>


@dataclass
class RunResult:
    experiment: Experiment
    points: list

    @property
    def parameter(self) -> str | None:
        return self.experiment.sweep.parameter if self.experiment.sweep else None

    @property
    def detector_names(self) -> list[str]:
        return [d.name for d in self.experiment.detectors]


def _evaluate(exp: Experiment, index: int, value) -> PointResult:
    net = build(exp)
    states = []
    for w, psi in net.mixture:
        states.append((w, ch.apply_network(psi, net.channels)))
    res = PointResult(index, value)
    outputs = set(exp.outputs)
    if "outcome_table" in outputs and net.detectors:
        acc: dict = {}
        for w, psi in states:
            for pattern, p in det.outcome_table(psi, net.detectors):
                acc[pattern] = acc.get(pattern, 0.0) + w * p
        res.outcomes = sorted(acc.items())
    if "marginals" in outputs and net.detectors:
        totals = np.zeros(len(net.detectors))
        for w, psi in states:
            totals += w * np.array(det.click_marginals(psi, net.detectors))
        res.marginals = {d.name: float(p) for d, p in zip(net.detectors, totals)}
    if "number_expectations" in outputs:
        for name, mode in net.modes.items():
            res.numbers[name] = float(sum(w * det.number_expectation(psi, (mode,), check=False)
                                          for w, psi in states))
    return res


def _threads() -> int:
    raw = os.environ.get("PHOTONNET_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"PHOTONNET_THREADS must be an integer, got {raw!r}") from None


def run(exp: Experiment, threads: int | None = None) -> RunResult:
    """Evaluate every sweep point; results keep the declared order."""
    points = list(sweep_points(exp))
    param = exp.sweep.parameter if exp.sweep else None

    def job(item):
        i, (value, point) = item
        try:
            return _evaluate(point, i, value)
        except PhotonNetError as exc:
            context = f"sweep point {i} ({param}={value!r}): " if param else ""
            raise type(exc)(f"{context}{exc}") from None

    n = threads if threads is not None else _threads()
    if n > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(job, enumerate(points)))
    else:
        results = [job(item) for item in enumerate(points)]
    return RunResult(exp, results)


# -- output ------------------------------------------------------------------


def _num(x) -> str:
    if isinstance(x, (list, tuple)):
        return f"{float(x[0])!r}{float(x[1]):+}j"
    return repr(float(x))


def to_csv(result: RunResult) -> str:
    """Long-format table: one row per (point, quantity)."""
    dets = result.detector_names
    param = result.parameter or "parameter"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["point", param, "quantity", *dets, "mode", "value"])
    for p in result.points:
        pv = "" if p.value is None else _num(p.value)
        for pattern, prob in p.outcomes:
            writer.writerow([p.index, pv, "outcome", *pattern, "", repr(float(prob))])
        for name, prob in p.marginals.items():
            flags = [1 if d == name else "" for d in dets]
            writer.writerow([p.index, pv, "click", *flags, "", repr(float(prob))])
        for mode, n in p.numbers.items():
            writer.writerow([p.index, pv, "number", *[""] * len(dets), mode, repr(float(n))])
    return buf.getvalue()


def to_json(result: RunResult) -> str:
    doc = {
        "experiment": result.experiment.name,
        "schema_version": SCHEMA_VERSION,
        "parameter": result.parameter,
        "detectors": result.detector_names,
        "points": [
            {
                "index": p.index,
                "value": list(p.value) if isinstance(p.value, tuple) else p.value,
                "outcomes": [{"pattern": list(pat), "probability": prob} for pat, prob in p.outcomes],
                "marginals": p.marginals,
                "numbers": p.numbers,
            }
            for p in result.points
        ],
    }
    return json.dumps(doc, indent=2)
