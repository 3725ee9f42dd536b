"""Worst-case error moduli for diagonal operators and an optimality check.

For multipliers ``mu`` and the ellipsoid ``M_{r,p} = {g : sum g_n^2/|mu_n|^p <= r^2}``
the *one-sided* modulus is

    w1(delta) = sup { |g| : g in M_{r,p}, |T g| <= delta },

and the *two-point* modulus ``sup{|g1 - g2| : |T g1 - T g2| <= delta}`` equals
``2 w1(delta / 2)`` because ``M_{r,p}`` is symmetric and convex.  Every method
has worst-case error at least ``w1(delta)`` at noise level ``delta``.

In squared coefficients ``x_n = g_n^2`` the one-sided problem is the linear
program ``max sum x`` subject to ``sum x/|mu|^p <= r^2`` and
``sum mu^2 x <= delta^2``; its optimum sits on a vertex with at most two
non-zero entries, which :func:`modulus_oracle` enumerates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from .operators import ForwardOperator
from .errors import NoSolutionError
from .harness import aposteriori_bound
from .qrm import (
    Apriori,
    RegularizerConfig,
    apriori_alpha,
    bias_bound,
    discrepancy_target,
    morozov_select,
    noise_bound,
    qrm_invert,
)
from .spectral import SmoothnessClass, SpectralCoefficients, in_source_set

__all__ = [
    "ModulusQuery",
    "modulus_closed_form",
    "modulus_bounds",
    "modulus_oracle",
    "lp_vertex",
    "spectrum_levels",
    "OptimalityRow",
    "OptimalityReport",
    "optimality_check",
    "ORACLE_MAX_MODES",
    "MEMBERSHIP_RTOL",
]

ORACLE_MAX_MODES = 16
MEMBERSHIP_RTOL = 1e-12

Convention = Literal["one_sided", "two_point"]


@dataclass(frozen=True)
class ModulusQuery:
    r: float
    delta: float
    p: float
    mu: tuple[float, ...]
    convention: Convention = "one_sided"

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        if not self.r > 0:
            raise ValueError(f"radius r must be positive, got {self.r}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p}")
        if not self.mu or any(m == 0 or not math.isfinite(m) for m in self.mu):
            raise ValueError("multipliers must be finite and non-zero")
        if self.convention not in ("one_sided", "two_point"):
            raise ValueError(f"unknown convention {self.convention!r}")

    @property
    def level(self) -> float:
        """Noise level fed to the one-sided problem."""
        return self.delta if self.convention == "one_sided" else 0.5 * self.delta

    @property
    def factor(self) -> float:
        return 1.0 if self.convention == "one_sided" else 2.0


def spectrum_levels(mu, p: float, r: float, convention: Convention = "one_sided"):
    """Noise levels at which the closed form applies, one per mode."""
    lv = r * np.abs(np.asarray(mu, float)) ** ((p + 2) / 2)
    return lv if convention == "one_sided" else 2 * lv


def modulus_closed_form(q: ModulusQuery) -> float:
    """``r^{2/(p+2)} level^{p/(p+2)}``, valid when ``level^2/r^2`` equals some ``|mu_n|^{p+2}``."""
    s = (q.level / q.r) ** 2
    pts = np.abs(np.asarray(q.mu)) ** (q.p + 2)
    if not np.any(np.abs(pts - s) <= MEMBERSHIP_RTOL * s):
        raise ValueError(
            f"delta={q.delta} is not a spectrum point; use modulus_bounds instead"
        )
    return q.factor * q.r ** (2 / (q.p + 2)) * q.level ** (q.p / (q.p + 2))


def modulus_bounds(q: ModulusQuery) -> tuple[float, float]:
    """Two-sided bounds on the modulus between consecutive spectrum points."""
    p, r = q.p, q.r
    a = np.abs(np.asarray(q.mu))
    pts = a ** (p + 2)
    s = (q.level / r) ** 2
    if s == 0:
        raise ValueError("delta = 0: the modulus is 0 and no bracketing applies")
    if s > pts.max() * (1 + MEMBERSHIP_RTOL):
        raise ValueError(
            f"delta={q.delta} exceeds the largest spectrum level; the modulus saturates there"
        )
    if s < pts.min() * (1 - MEMBERSHIP_RTOL):
        raise ValueError(
            f"delta={q.delta} lies below the smallest retained level; increase the truncation"
        )
    base = r ** (2 / (p + 2)) * q.level ** (p / (p + 2))
    if len(a) == 1:
        return q.factor * base, q.factor * base
    ratio = (a[:-1] / a[1:]) ** (p / 2)  # |mu_k / mu_{k+1}|^{p/2}
    k = next(i for i in range(len(a) - 1) if (pts[i] - s) * (pts[i + 1] - s) <= 0)
    if pts[k] <= pts[k + 1]:
        lower, upper = ratio.min() * base, (1 / ratio).max() * base
    else:
        lower, upper = (1 / ratio).min() * base, ratio.max() * base
    return q.factor * lower, q.factor * upper


def lp_vertex(mu, p: float, r: float, level: float):
    """Best vertex of the one-sided linear program.

    In budget fractions ``y_n = x_n / (r^2 |mu_n|^p)`` the constraints read
    ``sum y <= 1`` and ``sum c y <= 1`` with ``c_n = r^2 |mu_n|^{p+2} / level^2``,
    and a two-index vertex is ``y_i = (1 - c_j)/(c_i - c_j)``.  This form stays
    well conditioned when the ``mu_n`` span many orders of magnitude.

    Returns ``(value, g)`` where ``g >= 0`` attains ``|g| = value``.
    """
    m = np.abs(np.asarray(mu, float))
    g = np.zeros(len(m))
    if level == 0:
        return 0.0, g
    w = r * r * m**p  # objective weight of each budget fraction
    c = (r * r * m ** (p + 2)) / (level * level)
    y1 = np.minimum(1.0, 1.0 / c)
    n = int(np.argmax(w * y1))
    best, arg = float(w[n] * y1[n]), {n: y1[n]}
    for i, j in itertools.combinations(range(len(m)), 2):
        if c[i] == c[j]:
            continue
        yi = (1.0 - c[j]) / (c[i] - c[j])
        yj = (c[i] - 1.0) / (c[i] - c[j])
        if yi >= 0 and yj >= 0:
            val = float(w[i] * yi + w[j] * yj)
            if val > best:
                best, arg = val, {i: yi, j: yj}
    for k, y in arg.items():
        g[k] = math.sqrt(w[k] * y)
    return math.sqrt(best), g


def modulus_oracle(q: ModulusQuery) -> float:
    """The modulus by exhaustive vertex enumeration (small instances only)."""
    if len(q.mu) > ORACLE_MAX_MODES:
        raise ValueError(f"oracle limited to N <= {ORACLE_MAX_MODES} modes, got {len(q.mu)}")
    value, _ = lp_vertex(q.mu, q.p, q.r, q.level)
    return q.factor * value


@dataclass
class OptimalityRow:
    delta: float
    alpha: float
    qrm_worst: float
    omega_lower: float
    omega_upper: float
    ratio: float
    ratio_ceiling: float


@dataclass
class OptimalityReport:
    """QRM worst observed error against the lower bound ``w1(delta)``.

    ``ratio`` cannot drop below 1/2 once the extremal source is sampled;
    ``ratio_ceiling`` is the a priori error bound divided by the same
    denominator.
    """

    p: float
    b: float
    rho: float
    r2: float
    samples: int
    rows: list[OptimalityRow] = field(default_factory=list)
    embedded: bool = True
    rule: str = "apriori"
    xi: float | None = None

    @property
    def band(self) -> tuple[float, float]:
        rs = [row.ratio for row in self.rows]
        return float(min(rs)), float(max(rs))

    @property
    def bounded(self) -> bool:
        lo, hi = self.band
        return (
            self.embedded
            and lo >= 0.5 * (1 - 1e-12)
            and all(row.ratio <= row.ratio_ceiling * (1 + 1e-12) for row in self.rows)
            and math.isfinite(hi)
        )

    def to_dict(self):
        d = asdict(self)
        d["band"] = list(self.band)
        d["bounded"] = self.bounded
        return d

    @classmethod
    def from_dict(cls, d):
        d = {k: v for k, v in d.items() if k not in ("band", "bounded")}
        d["rows"] = [OptimalityRow(**row) for row in d["rows"]]
        return cls(**d)


def optimality_check(
    op: ForwardOperator, cls: SmoothnessClass, b: float, deltas, seed: int = 0, samples: int = 64,
    rule: Literal["apriori", "aposteriori"] = "apriori", xi: float = 2.0,
) -> OptimalityReport:
    """Compare the QRM against the modulus of ``M_{r2,p}``.

    ``r2 = |psi|_inf^{-p/2} rho`` makes ``M_{r2,p}`` a subset of ``S_{rho,p}``,
    so the modulus of the smaller set is a valid lower bound.  At each noise
    level the worst error is taken over ``samples`` random sources on the
    boundary of ``S_{rho,p}`` with random noise, single-mode sources with
    aligned noise, and the extremal source whose data the noise cancels.

    ``rule="apriori"`` needs ``0 < p < b``; ``rule="aposteriori"`` picks
    ``alpha`` per sample by the discrepancy principle and needs ``b > 2`` and
    ``0 < p < b - 2``.  Samples whose discrepancy equation has no root are
    left out; the reported ``alpha`` is then the median selected value.
    """
    if rule == "apriori":
        if not 0 < cls.p < b:
            raise ValueError("the a priori optimality check needs 0 < p < b")
    elif rule == "aposteriori":
        if not (b > 2 and 0 < cls.p < b - 2):
            raise ValueError("the a posteriori optimality check needs b > 2 and 0 < p < b - 2")
    else:
        raise ValueError(f"unknown rule {rule!r}")
    p, rho = cls.p, cls.rho
    dom = op.domain
    r2 = op.psi_sup ** (-p / 2) * rho
    C = op.constant
    rng = np.random.default_rng(seed)
    report = OptimalityReport(p, b, rho, r2, samples, rule=rule, xi=xi if rule == "aposteriori" else None)
    for delta in deltas:
        delta = float(delta)
        if rule == "apriori":
            a_prior = apriori_alpha(delta, cls, b)
            fixed = RegularizerConfig(b, a_prior, Apriori(delta, rho, p))
            ceiling = bias_bound(cls, a_prior, b, dom.lambda1) + noise_bound(delta, a_prior, b, C)
        else:
            target = discrepancy_target(delta, xi, b)
            ceiling = aposteriori_bound(delta, cls, b, xi, None, C, op.psi_sup, dom.lambda1)

        def err(f, e):
            """``(error, alpha)``, or ``None`` when no alpha can be selected."""
            h = op.apply_t(f) + f.with_values(e)
            if rule == "apriori":
                cfg = fixed
            elif h.norm() == 0:
                # every alpha reconstructs zero from zero data
                return f.norm(), math.nan
            elif target >= h.norm():
                return None
            else:
                try:
                    cfg = morozov_select(h, delta, xi, b)
                except NoSolutionError:
                    return None
            return (qrm_invert(op, h, cfg).source - f).norm(), cfg.alpha

        trials = []
        for _ in range(samples):
            g = rng.standard_normal(dom.n_modes)
            f = SpectralCoefficients(dom, g)
            f = f * (rho / math.sqrt(float(np.sum(dom.eigenvalues ** (2 * p) * g * g))))
            e = rng.standard_normal(dom.n_modes)
            trials.append(err(f, delta * e / np.linalg.norm(e)))
        for n in range(1, dom.n_modes + 1):
            f = dom.unit(n, rho * dom.eigenvalues[n - 1] ** (-p))
            for sign in (1.0, -1.0):
                trials.append(err(f, sign * delta * dom.unit(n).values))
        _, g_star = lp_vertex(op.mu, p, r2, delta)
        f_star = SpectralCoefficients(dom, g_star)
        if not in_source_set(f_star, cls):
            report.embedded = False
        trials.append(err(f_star, -op.apply_t(f_star).values))
        done = [t for t in trials if t is not None]
        worst = max(t[0] for t in done)
        if rule == "apriori":
            alpha = a_prior
        else:
            alpha = float(np.median([t[1] for t in done if not math.isnan(t[1])]))

        lo, hi = modulus_bounds(ModulusQuery(r2, delta, p, tuple(op.mu)))
        report.rows.append(
            OptimalityRow(
                delta, float(alpha), float(worst), float(lo), float(hi),
                float(worst / (2 * lo)), float(ceiling / (2 * lo)),
            )
        )
    return report
