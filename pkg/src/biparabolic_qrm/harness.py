"""Noise injection, stability checks and convergence-rate experiments."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ExperimentError, NoSolutionError
from .operators import ForwardOperator
from .profile import TemporalProfile
from .qrm import (
    Aposteriori,
    Apriori,
    RegularizerConfig,
    apriori_alpha,
    bias_bound,
    discrepancy,
    discrepancy_target,
    morozov_select,
    noise_bound,
    qrm_invert,
)
from .spectral import (
    SmoothnessClass,
    SpectralCoefficients,
    SpectralDomain,
    hp_norm,
    in_source_set,
)

__all__ = [
    "add_noise",
    "decay_source",
    "random_source",
    "StabilityReport",
    "conditional_stability_check",
    "ExperimentSpec",
    "DeltaPoint",
    "RateReport",
    "expected_exponent",
    "aposteriori_bound",
    "run_rate_experiment",
    "fit_loglog_slope",
    "WeylReport",
    "weyl_ratio_check",
    "SLOPE_TOL",
    "MIN_FIT_POINTS",
]

SLOPE_TOL = 0.1
MIN_FIT_POINTS = 4
# alpha below this is numerically indistinguishable from no regularisation
_ALPHA_FLOOR = 1e3 * np.finfo(float).eps


def add_noise(h: SpectralCoefficients, delta: float, seed) -> SpectralCoefficients:
    """``h + delta e`` with ``e`` a seeded random unit direction.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts; the same
    seed always gives the same direction.
    """
    if not delta >= 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    if delta == 0:
        return h.with_values(h.values.copy(), role="observation")
    e = np.random.default_rng(seed).standard_normal(len(h))
    e /= np.linalg.norm(e)
    return h.with_values(h.values + delta * e, role="observation")


def decay_source(domain: SpectralDomain, cls: SmoothnessClass, q: float = 0.5):
    """``c_n proportional to lambda_n^{-p-q}``, scaled so ``|c|_{H_p} = rho``."""
    lam = domain.eigenvalues
    c = lam ** (-cls.p - q)
    c *= cls.rho / math.sqrt(float(np.sum(lam ** (-2 * q))))
    return SpectralCoefficients(domain, c, "source")


def random_source(domain, cls: SmoothnessClass, rng, fill: float = 1.0):
    """Random element of ``S_{rho,p}`` with ``H_p`` norm ``fill * rho``."""
    g = rng.standard_normal(domain.n_modes)
    v = SpectralCoefficients(domain, g)
    return v * (fill * cls.rho / hp_norm(v, cls.p))


@dataclass(frozen=True)
class StabilityReport:
    lhs: float
    rhs: float
    slack: float
    holds: bool


def conditional_stability_check(f, h, cls: SmoothnessClass, C: float) -> StabilityReport:
    """``|f| <= C^{-p/(p+2)} rho^{2/(p+2)} |h|^{p/(p+2)}`` for ``h = T f``."""
    p = cls.p
    lhs = f.norm()
    rhs = C ** (-p / (p + 2)) * cls.rho ** (2 / (p + 2)) * h.norm() ** (p / (p + 2))
    return StabilityReport(lhs, rhs, rhs - lhs, lhs <= rhs * (1 + 1e-12))


def expected_exponent(rule: str, p: float, b: float, sigma: float | None = None) -> float:
    """Hölder exponent of ``delta`` guaranteed by the error estimates."""
    if rule == "apriori":
        return p / (p + 2) if p < b else b / (b + 2)
    if rule == "aposteriori":
        if b == 2:
            return min(p * sigma / (p + 2), 1 - sigma)
        if p < b - 2:
            return p / (p + 2)
        return min(p / (p + 2), (b - 2) / b)
    raise ValueError(f"unknown rule {rule!r}")


def aposteriori_bound(delta, cls, b, xi, sigma, C, psi_sup, lam1) -> float:
    """Explicit error bound for the discrepancy-principle choice of ``alpha``."""
    p, rho = cls.p, cls.rho
    c_apost = ((xi + 2) / C) ** (p / (p + 2))
    if b == 2:
        c5 = psi_sup / (C * (xi - 1) * lam1**p)
        return c_apost * rho ** (2 / (p + 2)) * delta ** (p * sigma / (p + 2)) + c5 * rho * delta ** (1 - sigma)
    first = c_apost * rho ** (2 / (p + 2)) * delta ** (p / (p + 2))
    if p < b - 2:
        c3 = psi_sup ** (2 / (p + 2)) / (C * (xi - 1) ** (2 / (p + 2)))
        return first + c3 * rho ** (2 / (p + 2)) * delta ** (p / (p + 2))
    c4 = (psi_sup / ((xi - 1) * lam1 ** (p - b + 2))) ** (2 / b) / C
    return first + c4 * rho ** (2 / b) * delta ** ((b - 2) / b)


def fit_loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x`` and the RMS residual."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    coef, res, *_ = np.polyfit(lx, ly, 1, full=True)
    rms = math.sqrt(float(res[0]) / len(lx)) if len(res) else 0.0
    return float(coef[0]), rms


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """A declarative rate experiment.

    ``rule`` is ``"apriori"`` or ``"aposteriori"``; the latter uses ``xi`` and,
    for ``b = 2``, ``sigma``.
    """

    domain: SpectralDomain
    profile: TemporalProfile
    source: SpectralCoefficients
    smoothness: SmoothnessClass
    b: float
    deltas: tuple[float, ...]
    rule: str = "apriori"
    xi: float = 2.0
    sigma: float | None = None
    seed: int = 0
    trials: int = 10

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if self.source.domain != self.domain:
            raise ValueError("source lives on a different domain")
        if not in_source_set(self.source, self.smoothness):
            raise ValueError(
                f"source is outside S_(rho={self.smoothness.rho}, p={self.smoothness.p}): "
                f"H_p norm {hp_norm(self.source, self.smoothness.p):.6g}"
            )
        if len(self.deltas) < 1 or any(d <= 0 for d in self.deltas):
            raise ValueError("noise levels must be positive")
        if any(b >= a for a, b in zip(self.deltas, self.deltas[1:])):
            raise ValueError("noise grid must be strictly decreasing")
        if self.trials < 1:
            raise ValueError("need at least one trial per noise level")
        if self.rule not in ("apriori", "aposteriori"):
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.rule == "aposteriori":
            RegularizerConfig(self.b, 1.0, Aposteriori(self.xi, self.deltas[0], self.sigma))
        elif self.b < 2:
            raise ValueError(f"QRM order b must be >= 2, got {self.b}")


@dataclass
class DeltaPoint:
    """One noise level; skipped levels carry ``None`` and the reason."""

    delta: float
    alpha: float | None
    mean_error: float | None
    max_error: float | None
    bound: float | None
    violations: int
    morozov_residual: float | None = None
    skipped: str = ""


@dataclass
class RateReport:
    rule: str
    b: float
    p: float
    rho: float
    sigma: float | None
    xi: float | None
    constant: float
    expected_exponent: float
    slope: float
    fit_residual: float
    fit_points: int
    slope_tolerance: float
    verdict: bool
    verdict_criteria: str
    runtime: float
    truncation_tail: float
    points: list[DeltaPoint] = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["points"] = [DeltaPoint(**pt) for pt in d["points"]]
        return cls(**d)

    def csv_rows(self):
        """Rows ``delta, alpha, error, bound, slope_partial``.

        ``slope_partial`` is the log-log slope between a row and the previous
        fitted row (empty for the first and for skipped rows).
        """
        rows, prev = [], None
        for pt in self.points:
            if pt.skipped:
                rows.append((pt.delta, "", "", "", ""))
                continue
            part = ""
            if prev is not None:
                part = math.log(pt.mean_error / prev.mean_error) / math.log(pt.delta / prev.delta)
            rows.append((pt.delta, pt.alpha, pt.mean_error, pt.bound, part))
            prev = pt
        return rows


def _trial(op, spec, h, f, i, j, C):
    cls, b = spec.smoothness, spec.b
    delta = spec.deltas[i]
    h_delta = add_noise(h, delta, [spec.seed, i, j])
    if spec.rule == "apriori":
        alpha = apriori_alpha(delta, cls, b)
        cfg = RegularizerConfig(b, alpha, Apriori(delta, cls.rho, cls.p))
        mres = None
    else:
        cfg = morozov_select(h_delta, delta, spec.xi, b, spec.sigma)
        target = discrepancy_target(delta, spec.xi, b, spec.sigma)
        mres = abs(discrepancy(h_delta, cfg.alpha, b) - target) / target
    rec = qrm_invert(op, h_delta, cfg)
    return cfg.alpha, (rec.source - f).norm(), mres


def run_rate_experiment(spec: ExperimentSpec, op: ForwardOperator | None = None, max_workers=None):
    """Run every (noise level, trial) pair and fit the log-log error slope.

    Trials are seeded by ``(seed, level index, trial index)``, so results do
    not depend on evaluation order or on ``max_workers``.
    """
    start = time.perf_counter()
    op = op or ForwardOperator(spec.domain, spec.profile)
    C = op.constant
    f, cls, b = spec.source, spec.smoothness, spec.b
    h = op.apply_t(f)
    lam1 = spec.domain.lambda1

    jobs = [(i, j) for i in range(len(spec.deltas)) for j in range(spec.trials)]
    skip = {}
    if spec.rule == "aposteriori":
        # existence of the discrepancy root needs target < |h_delta|
        for i, j in jobs:
            hd = add_noise(h, spec.deltas[i], [spec.seed, i, j])
            target = discrepancy_target(spec.deltas[i], spec.xi, b, spec.sigma)
            if target >= hd.norm():
                skip[i] = f"target {target:.3g} >= |h_delta| {hd.norm():.3g}"
    run = [(i, j) for i, j in jobs if i not in skip]

    def work(ij):
        try:
            return _trial(op, spec, h, f, ij[0], ij[1], C)
        except NoSolutionError as exc:
            return exc

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as ex:
            results = list(ex.map(work, run))
    else:
        results = [work(ij) for ij in run]
    by_level: dict[int, list] = {}
    for (i, _), res in zip(run, results):
        if isinstance(res, Exception):
            skip[i] = str(res)
        else:
            by_level.setdefault(i, []).append(res)

    points = []
    for i, delta in enumerate(spec.deltas):
        if i in skip:
            points.append(DeltaPoint(delta, None, None, None, None, 0, None, skip[i]))
            continue
        alphas = np.array([r[0] for r in by_level[i]])
        errs = np.array([r[1] for r in by_level[i]])
        if spec.rule == "apriori":
            bound = bias_bound(cls, alphas[0], b, lam1) + noise_bound(delta, alphas[0], b, C)
        else:
            bound = aposteriori_bound(delta, cls, b, spec.xi, spec.sigma, C, op.psi_sup, lam1)
        mres = [r[2] for r in by_level[i] if r[2] is not None]
        pt = DeltaPoint(
            delta=delta,
            alpha=float(np.mean(alphas)),
            mean_error=float(np.mean(errs)),
            max_error=float(np.max(errs)),
            bound=float(bound),
            violations=int(np.sum(errs > bound * (1 + 1e-12))),
            morozov_residual=float(max(mres)) if mres else None,
        )
        if float(np.min(alphas)) < _ALPHA_FLOOR:
            pt.skipped = f"alpha {np.min(alphas):.3g} below {_ALPHA_FLOOR:.3g}"
        points.append(pt)

    used = [pt for pt in points if not pt.skipped]
    if len(used) < MIN_FIT_POINTS:
        raise ExperimentError(
            f"only {len(used)} usable noise levels (need {MIN_FIT_POINTS}); "
            f"skipped: {[pt.skipped for pt in points if pt.skipped]}"
        )
    slope, resid = fit_loglog_slope([pt.delta for pt in used], [pt.mean_error for pt in used])
    expo = expected_exponent(spec.rule, cls.p, b, spec.sigma)
    violations = sum(pt.violations for pt in used)
    verdict = slope >= expo - SLOPE_TOL and violations == 0
    return RateReport(
        rule=spec.rule,
        b=b,
        p=cls.p,
        rho=cls.rho,
        sigma=spec.sigma,
        xi=spec.xi if spec.rule == "aposteriori" else None,
        constant=C,
        expected_exponent=expo,
        slope=slope,
        fit_residual=resid,
        fit_points=len(used),
        slope_tolerance=SLOPE_TOL,
        verdict=verdict,
        verdict_criteria=f"slope >= expected - {SLOPE_TOL} and every error <= explicit bound",
        runtime=time.perf_counter() - start,
        truncation_tail=op.truncation_tail_bound(f.norm()),
        points=points,
    )


@dataclass(frozen=True)
class WeylReport:
    dim: int
    e1: float
    e2: float
    min_ratio: float
    max_ratio: float
    ok: bool


def weyl_ratio_check(domain: SpectralDomain) -> WeylReport:
    """Fit the band ``e1 n^{2/d} <= lambda_n <= e2 n^{2/d}`` and bound consecutive ratios."""
    lam = domain.eigenvalues
    n = np.arange(1, len(lam) + 1)
    scaled = lam / n ** (2.0 / domain.dim)
    ratios = lam[:-1] / lam[1:] if len(lam) > 1 else np.array([1.0])
    e1, e2 = float(scaled.min()), float(scaled.max())
    floor = (e1 / e2) * 0.5 ** (2.0 / domain.dim)
    ok = e1 > 0 and math.isfinite(e2) and float(ratios.min()) >= floor * (1 - 1e-12) and float(ratios.max()) <= 1.0
    return WeylReport(domain.dim, e1, e2, float(ratios.min()), float(ratios.max()), ok)
