"""Dirichlet eigen-structure of -Laplace on boxes and coefficient-space fields.

Every function of ``x`` is carried by its first ``N`` coefficients against the
orthonormal eigenfunctions

    phi_k(x) = prod_i sqrt(2 / L_i) sin(k_i pi x_i / L_i)

ordered by ascending eigenvalue.  Norms on the Hilbert scale are weighted sums
over those coefficients, so nothing here ever touches a mesh.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "SpectralDomain",
    "SpectralCoefficients",
    "SmoothnessClass",
    "eigenvalue",
    "hp_norm",
    "in_source_set",
    "evaluate_pointwise",
    "SOURCE_SET_RTOL",
]

#: relative slack when deciding membership on the boundary of a source set
SOURCE_SET_RTOL = 1e-12

# eigenvalues closer than this (relative) are treated as a tie
_TIE_RTOL = 1e-13


def _box_spectrum(lengths: tuple[float, ...], n_modes: int):
    d = len(lengths)
    if d == 1:
        k = np.arange(1, n_modes + 1)
        lam = (k * math.pi / lengths[0]) ** 2
        return lam, k.reshape(-1, 1)

    # the cube {1..m}^d holds at least n_modes indices, so its largest
    # eigenvalue bounds lambda_N from above
    m = math.ceil(n_modes ** (1.0 / d))
    while m ** d < n_modes:
        m += 1
    cap = sum((m * math.pi / L) ** 2 for L in lengths)
    kmax = [max(1, int(math.floor(math.sqrt(cap) * L / math.pi))) for L in lengths]
    idx = np.array(
        list(itertools.product(*(range(1, k + 1) for k in kmax))), dtype=np.int64
    )
    lam = np.zeros(len(idx))
    for i, L in enumerate(lengths):
        lam += (idx[:, i] * math.pi / L) ** 2
    keep = lam <= cap * (1 + 1e-12)
    idx, lam = idx[keep], lam[keep]

    # itertools.product is already lexicographic, so a stable sort on lambda
    # leaves exact ties in lexicographic order; near-ties from rounding are
    # re-sorted explicitly below
    order = np.argsort(lam, kind="stable")
    lam, idx = lam[order], idx[order]
    i = 0
    while i < len(lam):
        j = i + 1
        while j < len(lam) and lam[j] - lam[i] <= _TIE_RTOL * lam[i]:
            j += 1
        if j - i > 1:
            sub = sorted(range(i, j), key=lambda r: tuple(idx[r]))
            idx[i:j] = idx[sub]
            lam[i:j] = lam[i]
        i = j
    return lam[:n_modes], idx[:n_modes]


@dataclass(frozen=True, eq=False)
class SpectralDomain:
    """Box ``prod_i (0, L_i)`` truncated to its ``n_modes`` lowest Dirichlet modes.

    Parameters
    ----------
    lengths : sequence of float
        Side lengths; the dimension is ``len(lengths)``.
    n_modes : int
        Truncation level ``N``.
    """

    lengths: tuple[float, ...]
    n_modes: int = 256
    eigenvalues: np.ndarray = field(init=False, repr=False)
    multi_indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lengths = tuple(float(L) for L in np.atleast_1d(self.lengths))
        if not lengths or any(not (L > 0 and math.isfinite(L)) for L in lengths):
            raise ValueError(f"side lengths must be positive, got {lengths}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ValueError(f"n_modes must be a positive integer, got {self.n_modes}")
        lam, idx = _box_spectrum(lengths, int(self.n_modes))
        lam.setflags(write=False)
        idx.setflags(write=False)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "n_modes", int(self.n_modes))
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "multi_indices", idx)

    @classmethod
    def interval(cls, length: float = 1.0, n_modes: int = 256) -> "SpectralDomain":
        return cls((length,), n_modes)

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    def with_modes(self, n_modes: int) -> "SpectralDomain":
        return SpectralDomain(self.lengths, n_modes)

    def __eq__(self, other):
        if not isinstance(other, SpectralDomain):
            return NotImplemented
        return self.lengths == other.lengths and self.n_modes == other.n_modes

    def __hash__(self):
        return hash((self.lengths, self.n_modes))

    def zeros(self, role: str = "source") -> "SpectralCoefficients":
        return SpectralCoefficients(self, np.zeros(self.n_modes), role)

    def unit(self, n: int, scale: float = 1.0, role: str = "source"):
        """``scale * e_n`` with 1-based mode index ``n``."""
        if not 1 <= n <= self.n_modes:
            raise IndexError(f"mode {n} outside 1..{self.n_modes}")
        c = np.zeros(self.n_modes)
        c[n - 1] = scale
        return SpectralCoefficients(self, c, role)

    def coefficients(self, values, role: str = "source") -> "SpectralCoefficients":
        return SpectralCoefficients(self, values, role)


@dataclass(frozen=True, eq=False)
class SpectralCoefficients:
    """A field on ``domain`` given by its first ``N`` Fourier coefficients.

    ``role`` is a free-form tag (``source``, ``observation``,
    ``reconstruction``, ...) carried along for reporting.
    """

    domain: SpectralDomain
    values: np.ndarray
    role: str = "source"

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.shape != (self.domain.n_modes,):
            raise ValueError(
                f"expected {self.domain.n_modes} coefficients, got {v.shape[0]}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.domain.n_modes

    def _same(self, other: "SpectralCoefficients"):
        if self.domain != other.domain:
            raise ValueError("coefficients live on different domains")

    def __add__(self, other):
        self._same(other)
        return SpectralCoefficients(self.domain, self.values + other.values, self.role)

    def __sub__(self, other):
        self._same(other)
        return SpectralCoefficients(self.domain, self.values - other.values, self.role)

    def __mul__(self, scalar: float):
        return SpectralCoefficients(self.domain, self.values * float(scalar), self.role)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralCoefficients(self.domain, -self.values, self.role)

    def with_values(self, values, role: str | None = None):
        return SpectralCoefficients(self.domain, values, role or self.role)

    def norm(self) -> float:
        """L2 norm; equals the Euclidean norm of the coefficients (Parseval)."""
        return float(np.linalg.norm(self.values))


@dataclass(frozen=True)
class SmoothnessClass:
    """Source set ``S_{rho,p}``: the ball of radius ``rho`` in ``H_p``."""

    p: float
    rho: float

    def __post_init__(self):
        if not self.p >= 0:
            raise ValueError(f"smoothness exponent p must be >= 0, got {self.p}")
        if not self.rho > 0:
            raise ValueError(f"radius rho must be > 0, got {self.rho}")


def eigenvalue(domain: SpectralDomain, n: int) -> float:
    """``lambda_n`` (1-based)."""
    if not 1 <= n <= domain.n_modes:
        raise IndexError(f"eigenvalue index {n} outside 1..{domain.n_modes}")
    return float(domain.eigenvalues[n - 1])


def hp_norm(v: SpectralCoefficients, p: float) -> float:
    """``(sum_n lambda_n^{2p} c_n^2)^{1/2}``.

    Weights are formed in log space and the sum is rescaled by its largest
    term, so only a genuinely unrepresentable norm raises ``OverflowError``.
    """
    if not p >= 0:
        raise ValueError(f"p must be >= 0, got {p}")
    c = np.abs(v.values)
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    if p == 0:
        return float(np.linalg.norm(c))
    nz = c > 0
    if not np.any(nz):
        return 0.0
    logw = p * np.log(v.domain.eigenvalues[nz]) + np.log(c[nz])
    top = logw.max()
    s = math.sqrt(float(np.sum(np.exp(2.0 * (logw - top)))))
    if top + math.log(s) > math.log(np.finfo(float).max):
        raise OverflowError(f"H_{p} norm exceeds the double-precision range")
    return math.exp(top) * s


def in_source_set(v: SpectralCoefficients, cls: SmoothnessClass) -> bool:
    """Membership in ``S_{rho,p}``; the boundary counts as inside.

    A relative slack of ``SOURCE_SET_RTOL`` absorbs rounding on the boundary.
    """
    return hp_norm(v, cls.p) <= cls.rho * (1 + SOURCE_SET_RTOL)


def evaluate_pointwise(v: SpectralCoefficients, x: Sequence[float] | float) -> float:
    """``sum_n c_n phi_n(x)`` at one point of the closed box."""
    dom = v.domain
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dom.dim,):
        raise ValueError(f"point must have {dom.dim} coordinates, got {x.shape}")
    L = np.asarray(dom.lengths)
    if np.any(x < 0) or np.any(x > L):
        raise ValueError(f"point {x.tolist()} lies outside the box {dom.lengths}")
    phi = np.ones(dom.n_modes)
    for i in range(dom.dim):
        if x[i] == 0.0 or x[i] == L[i]:
            return 0.0
        phi *= math.sqrt(2.0 / L[i]) * np.sin(dom.multi_indices[:, i] * math.pi * x[i] / L[i])
    return float(v.values @ phi)
