"""Quasi-reversibility inversion and its parameter-choice rules.

The regularised source solves ``T_alpha f = h``, i.e. divides every data
coefficient by ``(1 + alpha lambda_n^b) mu_n``.  ``alpha`` is either fixed, set
a priori from the noise level and smoothness class, or picked by the
discrepancy principle ``|B_alpha h - h| = target``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificateError, NoSolutionError
from .operators import ForwardOperator, qrm_weights
from .spectral import SmoothnessClass, SpectralCoefficients

__all__ = [
    "Manual",
    "Apriori",
    "Aposteriori",
    "RegularizerConfig",
    "Reconstruction",
    "qrm_invert",
    "apriori_alpha",
    "discrepancy",
    "discrepancy_target",
    "morozov_select",
    "bias_constant",
    "bias_bound",
    "noise_bound",
    "eta_peak",
    "MOROZOV_RTOL",
]

MOROZOV_RTOL = 1e-10
_MAX_DOUBLINGS = 200


@dataclass(frozen=True)
class Manual:
    pass


@dataclass(frozen=True)
class Apriori:
    delta: float
    rho: float
    p: float


@dataclass(frozen=True)
class Aposteriori:
    xi: float
    delta: float
    sigma: float | None = None


@dataclass(frozen=True)
class RegularizerConfig:
    """QRM order ``b``, parameter ``alpha`` and how ``alpha`` was obtained."""

    b: float
    alpha: float
    rule: Manual | Apriori | Aposteriori = field(default_factory=Manual)

    def __post_init__(self):
        if not self.b >= 2:
            raise ValueError(f"QRM order b must be >= 2, got {self.b}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")
        if isinstance(self.rule, Aposteriori):
            if not self.rule.xi > 1:
                raise ValueError(f"discrepancy factor xi must exceed 1, got {self.rule.xi}")
            if self.b == 2 and not (self.rule.sigma is not None and 0 < self.rule.sigma < 1):
                raise ValueError("b = 2 needs an exponent sigma in (0, 1)")


@dataclass(frozen=True)
class Reconstruction:
    """``f_alpha^delta`` with the diagnostics of the run."""

    source: SpectralCoefficients
    config: RegularizerConfig
    constant: float
    discrepancy: float
    residual: float
    stability_bound: float  # Lipschitz constant 1 / (C alpha^{2/b}) of the inverse


def qrm_invert(op: ForwardOperator, h: SpectralCoefficients, cfg: RegularizerConfig):
    """Solve ``T_alpha f = h`` mode by mode."""
    if not op.certificate.admissible:
        raise CertificateError(f"refusing to invert: {op.certificate.reason}")
    w = qrm_weights(op.domain.eigenvalues, cfg.alpha, cfg.b)
    f = h.values / ((1 + w) * op.mu)
    src = h.with_values(f, role="reconstruction")
    C = op.constant
    resid = float(np.linalg.norm(op.mu * f - h.values))
    return Reconstruction(
        source=src,
        config=cfg,
        constant=C,
        discrepancy=discrepancy(h, cfg.alpha, cfg.b),
        residual=resid,
        stability_bound=1.0 / (C * cfg.alpha ** (2.0 / cfg.b)),
    )


def apriori_alpha(delta: float, cls: SmoothnessClass, b: float) -> float:
    """``(delta/rho)^{b/(p+2)}`` for ``p < b``, else ``(delta/rho)^{b/(b+2)}``."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    expo = b / (cls.p + 2) if cls.p < b else b / (b + 2)
    return (delta / cls.rho) ** expo


def discrepancy(h_delta: SpectralCoefficients, alpha: float, b: float) -> float:
    """``zeta(alpha) = |B_alpha h - h|``, increasing from 0 to ``|h|``."""
    w = qrm_weights(h_delta.domain.eigenvalues, alpha, b)
    with np.errstate(divide="ignore"):
        factor = np.where(w > 0, 1.0 / (1.0 + 1.0 / w), 0.0)
    return float(np.linalg.norm(factor * h_delta.values))


def discrepancy_target(delta: float, xi: float, b: float, sigma: float | None = None) -> float:
    """``xi * delta`` for ``b != 2`` and ``xi * delta^sigma`` for ``b = 2``."""
    if b == 2:
        if sigma is None:
            raise ValueError("b = 2 needs sigma")
        return xi * delta**sigma
    return xi * delta


def morozov_select(h_delta, delta, xi, b, sigma=None) -> RegularizerConfig:
    """The unique ``alpha`` with ``zeta(alpha) = target``.

    The root is bracketed by doubling/halving from ``alpha = 1`` and then
    bisected in ``log alpha`` until ``|zeta - target| <= MOROZOV_RTOL * target``.
    """
    if not xi > 1:
        raise ValueError(f"xi must exceed 1, got {xi}")
    target = discrepancy_target(delta, xi, b, sigma)
    if not target > 0:
        raise ValueError(f"discrepancy target must be positive, got {target}")
    hnorm = h_delta.norm()
    if target >= hnorm:
        raise NoSolutionError(
            f"target {target:.6g} >= |h_delta| = {hnorm:.6g}: data too noisy for this level"
        )

    def zeta(log_a):
        return discrepancy(h_delta, math.exp(log_a), b)

    lo = hi = 0.0
    z = zeta(0.0)
    steps = 0
    if z < target:
        while zeta(hi) < target:
            lo, hi = hi, hi + math.log(2.0)
            steps += 1
            if steps > _MAX_DOUBLINGS:
                raise NoSolutionError("could not bracket the discrepancy root from above")
    else:
        while zeta(lo) >= target:
            hi, lo = lo, lo - math.log(2.0)
            steps += 1
            if steps > _MAX_DOUBLINGS:
                raise NoSolutionError("could not bracket the discrepancy root from below")

    tol = MOROZOV_RTOL * target
    mid = 0.5 * (lo + hi)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        zm = zeta(mid)
        if abs(zm - target) <= tol:
            break
        if zm < target:
            lo = mid
        else:
            hi = mid
        if mid in (lo, hi) and hi - lo <= 4 * np.spacing(abs(mid) + 1):
            break
    zm = zeta(mid)
    if abs(zm - target) > tol:
        raise NoSolutionError(
            f"bisection stalled at |zeta - target| = {abs(zm - target):.3e} > {tol:.3e}"
        )
    return RegularizerConfig(b=b, alpha=math.exp(mid), rule=Aposteriori(xi, delta, sigma))


def bias_constant(p: float, b: float, lam1: float) -> float:
    """``C_apri1 = (p/b)((b-p)/p)^{(b-p)/b}`` if ``p < b``, else ``lambda_1^{b-p}``."""
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    if p < b:
        return (p / b) * ((b - p) / p) ** ((b - p) / b)
    return lam1 ** (b - p)


def bias_bound(cls: SmoothnessClass, alpha: float, b: float, lam1: float) -> float:
    """Upper bound on ``|f - f_alpha|`` over ``S_{rho,p}``."""
    c = bias_constant(cls.p, b, lam1)
    if cls.p < b:
        return c * cls.rho * alpha ** (cls.p / b)
    return c * cls.rho * alpha


def noise_bound(delta: float, alpha: float, b: float, C: float) -> float:
    """Upper bound ``delta / (C alpha^{2/b})`` on ``|f_alpha - f_alpha^delta|``."""
    return delta / (C * alpha ** (2.0 / b))


def eta_peak(alpha: float, b: float, p: float) -> tuple[float, float]:
    """Maximiser and maximum of ``s -> alpha s^{b-p} / (1 + alpha s^b)`` on ``s >= 0``."""
    if not 0 < p < b:
        raise ValueError("need 0 < p < b")
    s0 = ((b - p) / (alpha * p)) ** (1.0 / b)
    return s0, bias_constant(p, b, 1.0) * alpha ** (p / b)
