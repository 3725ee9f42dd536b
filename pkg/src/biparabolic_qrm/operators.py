"""Diagonal forward maps in coefficient space.

``T``       multiplies mode ``n`` by ``mu_n``,
``T_alpha`` by ``(1 + alpha lambda_n^b) mu_n``,
``B_alpha`` by ``1 / (1 + alpha lambda_n^b)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificateError, IllConditionedError
from .profile import (
    AdmissibilityReport,
    TemporalProfile,
    check_assumption,
    mu_sequence,
)
from .spectral import SpectralCoefficients, SpectralDomain, hp_norm

__all__ = ["ForwardOperator", "IllposednessRow", "qrm_weights", "illposedness_demo"]

#: |mu_n| below this multiple of eps * max|mu| makes the exact inverse refuse
ILL_CONDITIONING_FACTOR = 1e3


def qrm_weights(eigenvalues, alpha: float, b: float) -> np.ndarray:
    """``alpha * lambda^b`` evaluated in log space (inf on overflow, never nan)."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if b < 2:
        raise ValueError(f"QRM order b must be >= 2, got {b}")
    if alpha == 0:
        return np.zeros_like(eigenvalues)
    with np.errstate(over="ignore"):
        return np.exp(math.log(alpha) + b * np.log(eigenvalues))


@dataclass(frozen=True, eq=False)
class ForwardOperator:
    """The final-time map ``f -> h`` for a given domain and time profile.

    The multipliers ``mu`` and the admissibility certificate are computed
    once at construction.
    """

    domain: SpectralDomain
    profile: TemporalProfile
    mu: np.ndarray = field(init=False, repr=False)
    mu_max: float = field(init=False)
    certificate: AdmissibilityReport = field(init=False, repr=False)

    def __post_init__(self):
        mu, mu_max = mu_sequence(self.profile, self.domain)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "mu_max", mu_max)
        object.__setattr__(
            self, "certificate", check_assumption(self.profile, self.domain.lambda1)
        )

    @property
    def psi_sup(self) -> float:
        return self.certificate.sup_norm

    @property
    def constant(self) -> float:
        """Lower-bound constant ``C``; raises if the profile is not admissible."""
        if not self.certificate.admissible:
            raise CertificateError(f"profile is not admissible: {self.certificate.reason}")
        return self.certificate.constant

    def _check(self, v: SpectralCoefficients):
        if v.domain != self.domain:
            raise ValueError("coefficients live on a different domain")

    def apply_t(self, f: SpectralCoefficients) -> SpectralCoefficients:
        self._check(f)
        return f.with_values(self.mu * f.values, role="observation")

    def apply_t_alpha(self, f: SpectralCoefficients, alpha: float, b: float):
        self._check(f)
        w = qrm_weights(self.domain.eigenvalues, alpha, b)
        return f.with_values((1 + w) * self.mu * f.values, role="observation")

    def apply_b_alpha(self, h: SpectralCoefficients, alpha: float, b: float):
        self._check(h)
        w = qrm_weights(self.domain.eigenvalues, alpha, b)
        return h.with_values(h.values / (1 + w))

    def mild_solution(self, f: SpectralCoefficients, times, alpha: float = 0.0, b: float = 2.0):
        """Coefficient snapshots ``v(t)`` of the (regularised) forward problem.

        Returns a list aligned with ``times``.
        """
        self._check(f)
        if not math.isfinite(hp_norm(f, max(b - 2.0, 0.0))):
            raise ValueError("source is not in H_{b-2} at this truncation")
        lam = self.domain.eigenvalues
        w = qrm_weights(lam, alpha, b)
        out = []
        for t in np.atleast_1d(times):
            t = float(t)
            if t == self.profile.tau:
                mu_t = self.mu
            else:
                mu_t = self.profile.mu(lam, t)
            out.append(f.with_values((1 + w) * mu_t * f.values, role="state"))
        return out

    def exact_inverse(self, h: SpectralCoefficients) -> SpectralCoefficients:
        """``sum h_n / mu_n phi_n`` on the truncated space."""
        self._check(h)
        floor = ILL_CONDITIONING_FACTOR * np.finfo(float).eps * self.mu_max
        bad = np.nonzero(np.abs(self.mu) < floor)[0]
        if bad.size:
            n = int(bad[0]) + 1
            raise IllConditionedError(
                f"|mu_{n}| = {abs(self.mu[bad[0]]):.3e} is below {floor:.3e}", mode=n
            )
        return h.with_values(h.values / self.mu, role="reconstruction")

    def truncation_tail_bound(self, f_norm: float) -> float:
        """Observation-norm bound on the discarded modes, ``|psi|_inf |f| / lambda_N^2``."""
        return self.psi_sup * f_norm / self.domain.eigenvalues[-1] ** 2


@dataclass(frozen=True)
class IllposednessRow:
    k: int
    lam: float
    data_norm: float
    source_norm: float
    ratio: float


def illposedness_demo(op: ForwardOperator, k_max: int) -> list[IllposednessRow]:
    """Data ``e_k / lambda_k`` shrinks to zero while its exact source blows up.

    ``ratio`` is ``|f_k| |psi|_inf / lambda_k``, which stays ``>= 1``.
    """
    if not 1 <= k_max <= op.domain.n_modes:
        raise ValueError(f"k_max must lie in 1..{op.domain.n_modes}")
    rows = []
    for k in range(1, k_max + 1):
        lam = float(op.domain.eigenvalues[k - 1])
        h = op.domain.unit(k, 1.0 / lam, role="observation")
        f = op.exact_inverse(h)
        fn = f.norm()
        rows.append(IllposednessRow(k, lam, h.norm(), fn, fn * op.psi_sup / lam))
    return rows
