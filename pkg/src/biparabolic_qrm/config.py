"""Strict JSON configuration for the command-line tool.

Unknown keys, wrong types and out-of-range values are rejected with the
dotted path of the offending field.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, ValidationError, model_validator

from .harness import ExperimentSpec, decay_source
from .profile import (
    ConstantProfile,
    PiecewiseTrigProfile,
    PolynomialProfile,
    TabulatedProfile,
    TemporalProfile,
    TrigPiece,
)
from .spectral import SmoothnessClass, SpectralCoefficients, SpectralDomain

__all__ = ["Config", "ConfigError", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid configuration; the message lists every offending field."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, frozen=True)


class DomainBlock(_Strict):
    lengths: list[Annotated[float, Field(gt=0)]] = Field(min_length=1)
    modes: PositiveInt = 256

    def build(self) -> SpectralDomain:
        return SpectralDomain(tuple(self.lengths), self.modes)


class ConstantBlock(_Strict):
    kind: Literal["constant"]
    tau: Annotated[float, Field(gt=0)]
    value: float = 1.0
    kappa2: Annotated[float, Field(ge=0)] | None = None

    def build(self, base: Path) -> TemporalProfile:
        return ConstantProfile(self.tau, value=self.value, kappa2=self.kappa2)


class PolynomialBlock(_Strict):
    kind: Literal["polynomial"]
    tau: Annotated[float, Field(gt=0)]
    coefficients: list[float] = Field(min_length=1)
    kappa2: Annotated[float, Field(ge=0)] | None = None

    def build(self, base: Path) -> TemporalProfile:
        return PolynomialProfile(self.tau, coefficients=tuple(self.coefficients), kappa2=self.kappa2)


class PieceBlock(_Strict):
    start: float
    end: float
    amplitude: float
    function: Literal["cos", "sin"] = "cos"
    frequency: float = 1.0
    phase: float = 0.0


class PiecewiseTrigBlock(_Strict):
    kind: Literal["piecewise_trig"]
    tau: Annotated[float, Field(gt=0)]
    pieces: list[PieceBlock] = Field(min_length=1)
    kappa2: Annotated[float, Field(ge=0)] | None = None

    def build(self, base: Path) -> TemporalProfile:
        pieces = tuple(TrigPiece(**pc.model_dump()) for pc in self.pieces)
        return PiecewiseTrigProfile(self.tau, pieces=pieces, kappa2=self.kappa2)


class TabulatedBlock(_Strict):
    """Samples inline (``times``/``values``) or from a two-column CSV file."""

    kind: Literal["tabulated"]
    times: list[float] | None = None
    values: list[float] | None = None
    csv: str | None = None
    interpolation: Literal["linear", "cubic"] = "linear"
    kappa2: Annotated[float, Field(ge=0)] | None = None

    @model_validator(mode="after")
    def _one_source(self):
        inline = self.times is not None or self.values is not None
        if inline == (self.csv is not None):
            raise ValueError("give either times/values or csv, not both")
        if inline and (self.times is None or self.values is None):
            raise ValueError("times and values must be given together")
        return self

    def build(self, base: Path) -> TemporalProfile:
        if self.csv is not None:
            with open(base / self.csv, newline="") as fh:
                rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
            try:
                t, v = zip(*[(float(a), float(b)) for a, b in rows])
            except ValueError:
                t, v = zip(*[(float(a), float(b)) for a, b in rows[1:]])  # header row
        else:
            t, v = self.times, self.values
        return TabulatedProfile(
            float(t[-1]), times=tuple(t), values=tuple(v),
            interpolation=self.interpolation, kappa2=self.kappa2,
        )


ProfileBlock = Annotated[
    Union[ConstantBlock, PolynomialBlock, PiecewiseTrigBlock, TabulatedBlock],
    Field(discriminator="kind"),
]


class DecayBlock(_Strict):
    kind: Literal["decay"]
    p: Annotated[float, Field(gt=0)]
    rho: Annotated[float, Field(gt=0)] = 1.0
    q: Annotated[float, Field(gt=0)] = 0.5

    def build(self, domain: SpectralDomain):
        cls = SmoothnessClass(self.p, self.rho)
        return decay_source(domain, cls, self.q), cls


class CoefficientsBlock(_Strict):
    """Explicit leading coefficients; the rest are zero."""

    kind: Literal["coefficients"]
    values: list[float] = Field(min_length=1)
    p: Annotated[float, Field(gt=0)]
    rho: Annotated[float, Field(gt=0)]

    def build(self, domain: SpectralDomain):
        if len(self.values) > domain.n_modes:
            raise ConfigError(f"source.values: {len(self.values)} coefficients for {domain.n_modes} modes")
        c = np.zeros(domain.n_modes)
        c[: len(self.values)] = self.values
        return SpectralCoefficients(domain, c, "source"), SmoothnessClass(self.p, self.rho)


SourceBlock = Annotated[Union[DecayBlock, CoefficientsBlock], Field(discriminator="kind")]


class RegularizerBlock(_Strict):
    b: Annotated[float, Field(ge=2)]
    rule: Literal["manual", "apriori", "aposteriori"] = "apriori"
    alpha: Annotated[float, Field(gt=0)] | None = None
    xi: Annotated[float, Field(gt=1)] = 2.0
    sigma: Annotated[float, Field(gt=0, lt=1)] | None = None

    @model_validator(mode="after")
    def _rule_fields(self):
        if self.rule == "manual" and self.alpha is None:
            raise ValueError("rule 'manual' needs alpha")
        if self.rule == "aposteriori" and self.b == 2 and self.sigma is None:
            raise ValueError("rule 'aposteriori' with b = 2 needs sigma")
        return self


class GridBlock(_Strict):
    """Geometric grid from ``start`` down to ``stop`` with ``num`` points."""

    start: Annotated[float, Field(gt=0)]
    stop: Annotated[float, Field(gt=0)]
    num: Annotated[int, Field(ge=2)]

    def values(self) -> list[float]:
        return [float(x) for x in np.geomspace(self.start, self.stop, self.num)]


class ExperimentBlock(_Strict):
    deltas: list[Annotated[float, Field(gt=0)]] | GridBlock | None = None
    delta: Annotated[float, Field(ge=0)] = 0.0
    seed: Annotated[int, Field(ge=0)] = 0
    trials: PositiveInt = 10
    workers: PositiveInt = 1
    output_dir: str | None = None
    k_max: PositiveInt = 64

    def delta_grid(self) -> list[float]:
        if self.deltas is None:
            raise ConfigError("experiment.deltas: a noise grid is required for this command")
        return self.deltas.values() if isinstance(self.deltas, GridBlock) else list(self.deltas)


class ModulusBlock(_Strict):
    p: Annotated[float, Field(gt=0)]
    r: Annotated[float, Field(gt=0)] | None = None
    convention: Literal["one_sided", "two_point"] = "one_sided"
    off_spectrum: PositiveInt = 20
    samples: PositiveInt = 64


class Config(_Strict):
    domain: DomainBlock
    profile: ProfileBlock
    source: SourceBlock | None = None
    regularizer: RegularizerBlock | None = None
    experiment: ExperimentBlock = ExperimentBlock()
    modulus: ModulusBlock | None = None

    def require(self, *blocks: str):
        missing = [b for b in blocks if getattr(self, b) is None]
        if missing:
            raise ConfigError(f"missing config block(s): {', '.join(missing)}")

    def build_domain(self) -> SpectralDomain:
        return self.domain.build()

    def build_profile(self, base: Path = Path(".")) -> TemporalProfile:
        return self.profile.build(base)

    def build_source(self, domain: SpectralDomain):
        self.require("source")
        return self.source.build(domain)

    def build_spec(self, domain, profile) -> ExperimentSpec:
        self.require("source", "regularizer")
        reg = self.regularizer
        if reg.rule == "manual":
            raise ConfigError("regularizer.rule: rate experiments need 'apriori' or 'aposteriori'")
        f, cls = self.build_source(domain)
        return ExperimentSpec(
            domain=domain, profile=profile, source=f, smoothness=cls, b=reg.b,
            deltas=tuple(self.experiment.delta_grid()), rule=reg.rule, xi=reg.xi,
            sigma=reg.sigma, seed=self.experiment.seed, trials=self.experiment.trials,
        )

    def with_overrides(self, seed=None, modes=None, output_dir=None) -> "Config":
        exp = self.experiment.model_copy(
            update={k: v for k, v in {"seed": seed, "output_dir": output_dir}.items() if v is not None}
        )
        dom = self.domain if modes is None else self.domain.model_copy(update={"modes": modes})
        return self.model_copy(update={"experiment": exp, "domain": dom})


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        lines.append(f"  {loc}: {err['msg']}")
    return "invalid configuration:\n" + "\n".join(lines)


def parse_config(data: dict) -> Config:
    try:
        return Config.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def load_config(path) -> Config:
    """Read and validate a JSON config file."""
    text = Path(path).read_text()
    try:
        data = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return parse_config(data)


def _reject_constant(name):
    raise ConfigError(f"non-finite number {name} is not allowed")
