"""Time factor ``psi`` of the separable source, its memory integrals and the
admissibility certificate that makes every ``mu_n`` provably non-zero.

The certificate has two flavours.  A profile that keeps one sign needs only
``|psi| >= kappa1`` on a terminal window ``[tau0, tau]``.  A profile that
changes sign additionally needs a Lipschitz bound ``kappa2`` and must stay
below ``M = (tau - tau0)^2 kappa1 / (4 tau tau0)`` wherever it opposes the sign
of ``psi(tau)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Literal

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gammainc

from .errors import CertificateError, QuadratureError
from .quadrature import integrate, memory_integral
from .spectral import SpectralDomain

__all__ = [
    "TemporalProfile",
    "ConstantProfile",
    "PolynomialProfile",
    "TrigPiece",
    "PiecewiseTrigProfile",
    "TabulatedProfile",
    "DerivativeBound",
    "AdmissibilityReport",
    "check_assumption",
    "mu_coefficient",
    "mu_sequence",
    "lower_bound_constant",
    "sign_changing_profile",
    "CHECK_GRID",
]

#: points in the dense certification grid (interval endpoints are added)
CHECK_GRID = 10_001

_KNOT_TOL = 1e-12
_BOUND_RTOL = 1e-12
_MU_RTOL = 1e-12


# --------------------------------------------------------------------------
# stable kernels
# --------------------------------------------------------------------------

def _phi1(w):
    """(1 - e^{-w}) / w, also for complex w and w -> 0."""
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    small = np.abs(w) < 1e-8
    out[small] = 1 - w[small] / 2
    ws = w[~small]
    out[~small] = -np.expm1(-ws) / ws
    return out


def _phi2(w):
    """(1 - (1 + w) e^{-w}) / w^2, also for complex w and w -> 0."""
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    small = np.abs(w) < 0.25
    ws = w[small]
    # sum_{k>=2} (-1)^k (k-1) w^{k-2} / k!
    acc = np.zeros_like(ws)
    term = np.ones_like(ws)
    for k in range(2, 24):
        acc += (-1) ** k * (k - 1) * term / math.factorial(k)
        term = term * ws
    out[small] = acc
    wl = w[~small]
    out[~small] = (-np.expm1(-wl) - wl * np.exp(-wl)) / wl**2
    return out


def _first_moment(z, a, b):
    """``int_a^b u e^{-z u} du`` for arrays ``z`` with ``Re z >= 0``."""
    z = np.asarray(z, dtype=complex)
    ell = b - a
    if ell <= 0:
        return np.zeros_like(z)
    w = z * ell
    return np.exp(-z * a) * (a * ell * _phi1(w) + ell * ell * _phi2(w))


# --------------------------------------------------------------------------
# profiles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DerivativeBound:
    value: float
    provenance: Literal["supplied", "analytic", "sampled"]


@dataclass(frozen=True)
class TemporalProfile:
    """Continuous ``psi`` on ``[0, tau]``.

    Subclasses supply evaluation, derivative, non-smooth knots and the points
    where ``psi`` or ``psi'`` can attain an extremum.  ``kappa2`` is an
    optional user-supplied bound on ``|psi'|``.
    """

    tau: float
    kappa2: float | None = field(default=None, kw_only=True)

    kind = "abstract"

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"horizon tau must be positive, got {self.tau}")
        if self.kappa2 is not None and not self.kappa2 >= 0:
            raise ValueError(f"kappa2 must be >= 0, got {self.kappa2}")

    # subclass surface ---------------------------------------------------
    def __call__(self, t):
        raise NotImplementedError

    def derivative(self, t):
        """``psi'`` (right derivative at knots); ``None`` if unavailable."""
        return None

    @property
    def knots(self) -> tuple[float, ...]:
        return ()

    def extreme_candidates(self) -> np.ndarray:
        """Times at which ``|psi|`` may attain a local extremum."""
        return np.array([0.0, self.tau, *self.knots])

    def derivative_extreme_candidates(self) -> np.ndarray:
        return np.array([0.0, self.tau, *self.knots])

    def _derivative_pieces(self, t):
        """One-sided derivatives ``(left, right)``; default is two-sided."""
        d = self.derivative(t)
        return d, d

    def _mu_closed(self, lam, t):
        return None

    # shared -------------------------------------------------------------
    def check_grid(self) -> np.ndarray:
        g = np.linspace(0.0, self.tau, CHECK_GRID)
        extra = np.concatenate([self.extreme_candidates(), self.derivative_extreme_candidates()])
        extra = extra[(extra >= 0) & (extra <= self.tau)]
        return np.unique(np.concatenate([g, extra]))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self(self.check_grid()))))

    def derivative_bound(self) -> DerivativeBound | None:
        """``kappa2`` with its provenance.

        A supplied value is checked against the analytic derivative on the
        certification grid and rejected if it is violated.
        """
        grid = self.check_grid()
        left, right = self._derivative_pieces(grid)
        if left is None:
            if self.kappa2 is not None:
                return DerivativeBound(float(self.kappa2), "supplied")
            return None
        observed = float(max(np.max(np.abs(left)), np.max(np.abs(right))))
        if self.kappa2 is not None:
            if observed > self.kappa2 * (1 + _BOUND_RTOL) + 1e-300:
                raise ValueError(
                    f"supplied kappa2={self.kappa2} is violated: |psi'| reaches {observed}"
                )
            return DerivativeBound(float(self.kappa2), "supplied")
        return DerivativeBound(observed, self._derivative_provenance)

    _derivative_provenance = "analytic"

    def mu(self, lam, t=None, method: Literal["auto", "closed", "quadrature"] = "auto"):
        """Memory integrals ``mu(t)`` for an array of eigenvalues ``lam``."""
        t = self.tau if t is None else float(t)
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        if not 0 <= t <= self.tau * (1 + 1e-15):
            raise ValueError(f"t={t} outside [0, {self.tau}]")
        if np.any(lam <= 0):
            raise ValueError("eigenvalues must be positive")
        if t == 0:
            return np.zeros_like(lam)
        if method != "quadrature":
            closed = self._mu_closed(lam, t)
            if closed is not None:
                return closed
            if method == "closed":
                raise ValueError(f"no closed form for {self.kind} profiles")
        out = np.empty_like(lam)
        sup = self.sup_norm()
        for i, lm in enumerate(lam):
            val, err = memory_integral(self, lm, t, self.knots)
            l1 = sup * float(gammainc(2, lm * t)) / lm**2
            if err > _MU_RTOL * max(abs(val), 1e-300) and err > 1e-15 * l1:
                raise QuadratureError(
                    f"mu(lam={lm}, t={t}) reached error {err:.3e} > {_MU_RTOL} relative",
                    estimate=err,
                )
            out[i] = val
        return out


@dataclass(frozen=True)
class ConstantProfile(TemporalProfile):
    value: float = 1.0
    kind = "constant"

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value)

    def derivative(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def _mu_closed(self, lam, t):
        # value * (1 - (1 + lam t) e^{-lam t}) / lam^2 via the regularised
        # incomplete gamma function P(2, x)
        return self.value * gammainc(2, lam * t) / lam**2


@dataclass(frozen=True)
class PolynomialProfile(TemporalProfile):
    """``psi(t) = sum_k coefficients[k] t^k``."""

    coefficients: tuple[float, ...] = (1.0,)
    kind = "polynomial"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if not self.coefficients:
            raise ValueError("polynomial needs at least one coefficient")

    @property
    def poly(self):
        return np.polynomial.Polynomial(self.coefficients)

    def __call__(self, t):
        return self.poly(np.asarray(t, dtype=float))

    def derivative(self, t):
        return self.poly.deriv()(np.asarray(t, dtype=float))

    def _real_roots(self, p):
        if p.degree() < 1:
            return np.array([])
        r = p.roots()
        r = r[np.abs(r.imag) < 1e-12].real
        return r[(r >= 0) & (r <= self.tau)]

    def extreme_candidates(self):
        return np.concatenate([[0.0, self.tau], self._real_roots(self.poly.deriv())])

    def derivative_extreme_candidates(self):
        return np.concatenate([[0.0, self.tau], self._real_roots(self.poly.deriv(2))])

    def _mu_closed(self, lam, t):
        # Taylor expansion of psi(t - u) around u = 0:
        #   psi(t - u) = sum_j (-1)^j psi^{(j)}(t) / j! u^j
        #   int_0^t u^{j+1} e^{-lam u} du = (j+1)! P(j+2, lam t) / lam^{j+2}
        p = self.poly
        terms = []
        for j in range(p.degree() + 1):
            bj = (-1) ** j * p.deriv(j)(t) / math.factorial(j)
            terms.append(bj * math.factorial(j + 1) * gammainc(j + 2, lam * t) / lam ** (j + 2))
        terms = np.array(terms)
        total = terms.sum(axis=0)
        # alternating Taylor terms cancel when lam t is small; defer to quadrature
        if np.any(np.max(np.abs(terms), axis=0) > 1e3 * np.abs(total)):
            return None
        return total


@dataclass(frozen=True)
class TrigPiece:
    """``amplitude * f(frequency * t + phase)`` on ``[start, end]``, ``f`` cos or sin."""

    start: float
    end: float
    amplitude: float
    function: Literal["cos", "sin"] = "cos"
    frequency: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if self.function not in ("cos", "sin"):
            raise ValueError(f"unknown trig function {self.function!r}")
        if not self.end > self.start:
            raise ValueError(f"empty piece [{self.start}, {self.end}]")

    @property
    def cos_phase(self):
        return self.phase - (math.pi / 2 if self.function == "sin" else 0.0)

    def value(self, t):
        return self.amplitude * np.cos(self.frequency * t + self.cos_phase)

    def slope(self, t):
        return -self.amplitude * self.frequency * np.sin(self.frequency * t + self.cos_phase)

    def _lattice(self, offset):
        # solutions of frequency * t + cos_phase = offset + k pi inside the piece
        if self.frequency == 0:
            return np.array([])
        w, ph = self.frequency, self.cos_phase
        ks = [(w * s + ph - offset) / math.pi for s in (self.start, self.end)]
        lo, hi = math.floor(min(ks)) - 1, math.ceil(max(ks)) + 1
        t = (offset + np.arange(lo, hi + 1) * math.pi - ph) / w
        return t[(t >= self.start) & (t <= self.end)]

    def critical_points(self):
        return self._lattice(0.0)

    def inflection_points(self):
        return self._lattice(math.pi / 2)


@dataclass(frozen=True)
class PiecewiseTrigProfile(TemporalProfile):
    """Contiguous trig pieces covering ``[0, tau]``; continuous at every knot."""

    pieces: tuple[TrigPiece, ...] = ()
    kind = "piecewise_trig"

    def __post_init__(self):
        super().__post_init__()
        pieces = tuple(sorted(self.pieces, key=lambda p: p.start))
        object.__setattr__(self, "pieces", pieces)
        if not pieces:
            raise ValueError("need at least one piece")
        if abs(pieces[0].start) > _KNOT_TOL or abs(pieces[-1].end - self.tau) > _KNOT_TOL * self.tau:
            raise ValueError("pieces must cover [0, tau]")
        scale = max(abs(p.amplitude) for p in pieces) or 1.0
        for a, b in zip(pieces[:-1], pieces[1:]):
            if abs(a.end - b.start) > _KNOT_TOL * self.tau:
                raise ValueError(f"gap or overlap between pieces at {a.end} / {b.start}")
            jump = abs(a.value(a.end) - b.value(b.start))
            if jump > _KNOT_TOL * scale:
                raise ValueError(f"profile is discontinuous at t={b.start} (jump {jump:.3e})")

    @property
    def knots(self):
        return tuple(p.start for p in self.pieces[1:])

    def _index(self, t):
        starts = np.array([p.start for p in self.pieces])
        return np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(self.pieces) - 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = self._index(t)
        out = np.empty_like(t)
        for i, p in enumerate(self.pieces):
            m = idx == i
            out[m] = p.value(t[m])
        return out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        idx = self._index(t)
        out = np.empty_like(t)
        for i, p in enumerate(self.pieces):
            m = idx == i
            out[m] = p.slope(t[m])
        return out

    def _derivative_pieces(self, t):
        t = np.asarray(t, dtype=float)
        right = self.derivative(t)
        left = right.copy()
        for a, b in zip(self.pieces[:-1], self.pieces[1:]):
            left[t == b.start] = a.slope(b.start)
        return left, right

    def extreme_candidates(self):
        pts = [0.0, self.tau, *self.knots]
        for p in self.pieces:
            pts.extend(p.critical_points())
        return np.array(pts)

    def derivative_extreme_candidates(self):
        pts = [0.0, self.tau, *self.knots]
        for p in self.pieces:
            pts.extend(p.inflection_points())
        return np.array(pts)

    def _mu_closed(self, lam, t):
        # A cos(w s + c) = Re[A e^{i(w t + c)} e^{-i w u}] with u = t - s, so each
        # piece contributes Re[A e^{i(w t + c)} int u e^{-(lam + i w) u} du]
        total = np.zeros_like(lam)
        for p in self.pieces:
            s0, s1 = p.start, min(p.end, t)
            if s1 <= s0:
                continue
            z = lam + 1j * p.frequency
            rot = p.amplitude * np.exp(1j * (p.frequency * t + p.cos_phase))
            total += np.real(rot * _first_moment(z, t - s1, t - s0))
        return total


@dataclass(frozen=True)
class TabulatedProfile(TemporalProfile):
    """Samples ``(times, values)`` with linear or cubic-spline interpolation.

    ``kappa2`` defaults to the largest slope of the interpolant, recorded as a
    sampled estimate.
    """

    times: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    interpolation: Literal["linear", "cubic"] = "linear"
    kind = "tabulated"
    _derivative_provenance = "sampled"

    def __post_init__(self):
        super().__post_init__()
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or len(t) < 2:
            raise ValueError("times and values must be equal-length 1-D sequences (>= 2)")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if abs(t[0]) > _KNOT_TOL or abs(t[-1] - self.tau) > _KNOT_TOL * self.tau:
            raise ValueError("samples must span exactly [0, tau]")
        if self.interpolation not in ("linear", "cubic"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        if self.interpolation == "cubic" and len(t) < 4:
            raise ValueError("cubic interpolation needs at least 4 samples")
        object.__setattr__(self, "times", tuple(t))
        object.__setattr__(self, "values", tuple(v))

    @property
    def _spline(self):
        return CubicSpline(self.times, self.values)

    @property
    def knots(self):
        return tuple(self.times[1:-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.interpolation == "linear":
            return np.interp(t, self.times, self.values)
        return self._spline(t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.interpolation == "cubic":
            return self._spline(t, 1)
        slopes = np.diff(self.values) / np.diff(self.times)
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(slopes) - 1)
        return slopes[idx]

    def _derivative_pieces(self, t):
        right = self.derivative(t)
        if self.interpolation == "cubic":
            return right, right
        slopes = np.diff(self.values) / np.diff(self.times)
        idx = np.clip(np.searchsorted(self.times, t, side="left") - 1, 0, len(slopes) - 1)
        return slopes[idx], right

    def extreme_candidates(self):
        pts = [*self.times]
        if self.interpolation == "cubic":
            r = self._spline.derivative().roots(extrapolate=False)
            pts.extend(r[np.isfinite(r)])
        return np.array(pts)

    def derivative_extreme_candidates(self):
        pts = [*self.times]
        if self.interpolation == "cubic":
            r = self._spline.derivative(2).roots(extrapolate=False)
            pts.extend(r[np.isfinite(r)])
        return np.array(pts)


def sign_changing_profile() -> PiecewiseTrigProfile:
    """Sign-changing example on ``tau = pi``: a damped cosine, then a full one."""
    half = math.pi / 2
    return PiecewiseTrigProfile(
        tau=math.pi,
        pieces=(
            TrigPiece(0.0, half, 1.0 / (48.0 * math.sqrt(2.0))),
            TrigPiece(half, math.pi, 1.0),
        ),
    )


# --------------------------------------------------------------------------
# memory integrals
# --------------------------------------------------------------------------

def mu_coefficient(psi: TemporalProfile, lam, t=None, method="auto"):
    """``mu(t) = int_0^t e^{-lam (t-s)} (t-s) psi(s) ds``.

    ``lam`` may be a scalar or an array; the result has the same shape.
    Closed forms are used where the profile has one, otherwise graded
    Gauss-Legendre panels (``QuadratureError`` if the tolerance is missed).
    """
    scalar = np.ndim(lam) == 0
    out = psi.mu(lam, t, method=method)
    return float(out[0]) if scalar else out


def mu_sequence(psi: TemporalProfile, domain: SpectralDomain, method="auto"):
    """``(mu_1, ..., mu_N)`` at ``t = tau`` and ``max_n |mu_n|``."""
    mu = psi.mu(domain.eigenvalues, psi.tau, method=method)
    mu.setflags(write=False)
    return mu, float(np.max(np.abs(mu)))


# --------------------------------------------------------------------------
# admissibility certificate
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AdmissibilityReport:
    """Outcome of :func:`check_assumption`.

    ``case`` is ``"fixed-sign"``, ``"sign-changing"`` or ``"fails"``.  Fields
    that do not apply to the case are ``None``.
    """

    case: str
    tau: float
    psi0: float
    psi_tau: float
    sup_norm: float
    lam1: float
    tau0: float | None = None
    kappa1: float | None = None
    kappa2: float | None = None
    kappa2_provenance: str | None = None
    sign_change_set: tuple[tuple[float, float], ...] = ()
    tau1: float | None = None
    max_on_sign_change_set: float | None = None
    M: float | None = None
    c_tilde_threshold: float | None = None
    c_tilde: float | None = None
    integral_abs: float | None = None
    constant: float | None = None
    reason: str = ""

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.floating):
                object.__setattr__(self, f.name, float(v))
        isc = tuple((float(a), float(b)) for a, b in self.sign_change_set)
        object.__setattr__(self, "sign_change_set", isc)

    @property
    def admissible(self) -> bool:
        return self.case != "fails"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sign_change_set"] = [list(iv) for iv in self.sign_change_set]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AdmissibilityReport":
        return cls(**d)


def _bisect(fun, a, b, tol=1e-12):
    """Last sign change of ``fun`` in ``[a, b]`` given ``fun(a) <= 0 < fun(b)``."""
    for _ in range(200):
        if b - a <= tol * max(1.0, abs(b)) * 1e-3:
            break
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if fun(m) <= 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _g(x):
    """``1 - (1 + x) e^{-x}``, the fixed-sign factor."""
    return float(gammainc(2, x))


def _smallest_tau0(psi, grid, absval, kappa1):
    """``inf { t : |psi| >= kappa1 on [t, tau] }`` refined by bisection."""
    below = np.nonzero(absval < kappa1 * (1 - 1e-15))[0]
    if below.size == 0:
        return 0.0
    j = below[-1]
    if j + 1 >= len(grid):
        return None
    return _bisect(lambda t: abs(float(psi(t))) - kappa1, grid[j], grid[j + 1])


def check_assumption(psi: TemporalProfile, lam1: float = math.pi**2) -> AdmissibilityReport:
    """Certify that ``psi`` satisfies the admissibility assumption.

    ``lam1`` is the smallest eigenvalue of the domain the certificate will be
    used with; fixed-sign profiles pick the ``(kappa1, tau0)`` pair that
    maximises the resulting lower-bound constant, sign-changing profiles pick
    the largest feasible ``kappa1`` and then the smallest ``tau0``.
    """
    tau = psi.tau
    grid = psi.check_grid()
    vals = np.asarray(psi(grid), dtype=float)
    absval = np.abs(vals)
    sup = float(absval.max())
    psi0, psi_tau = float(psi(0.0)), float(psi(tau))
    base = dict(tau=tau, psi0=psi0, psi_tau=psi_tau, sup_norm=sup, lam1=float(lam1))
    zero_tol = 1e-14 * sup

    if sup == 0 or abs(psi_tau) <= zero_tol:
        return AdmissibilityReport(
            "fails", **base,
            reason="psi(tau) = 0: no kappa1 > 0 works on a terminal window "
                   "(and C-tilde would be undefined)",
        )

    same = np.sign(psi_tau) * vals          # > 0 where psi agrees with psi(tau)
    kap = np.minimum.accumulate(absval[::-1])[::-1]   # min |psi| over [grid_i, tau]
    inner = grid < tau

    if not np.any(same < -zero_tol):
        cand = np.where(inner & (kap > 0), kap * gammainc(2, lam1 * (tau - grid)), -1.0)
        i = int(np.argmax(cand))
        if cand[i] <= 0:
            return AdmissibilityReport("fails", **base, reason="no kappa1 certificate")
        kappa1 = float(kap[i])
        tau0 = _smallest_tau0(psi, grid, absval, kappa1)
        rep = AdmissibilityReport("fixed-sign", **base, tau0=tau0, kappa1=kappa1)
        return _with_constant(rep)

    dbound = psi.derivative_bound()
    if dbound is None:
        return AdmissibilityReport(
            "fails", **base,
            reason="psi changes sign but no derivative bound kappa2 is available",
        )
    kappa2 = dbound.value
    sc = dict(kappa2=kappa2, kappa2_provenance=dbound.provenance)

    def w(t):
        return math.copysign(1.0, psi_tau) * float(psi(t))

    # last zero tau1: right edge of the last grid point not on psi(tau)'s side
    off = np.nonzero(same <= zero_tol)[0]
    j = off[-1]
    tau1 = _bisect(w, grid[j], grid[j + 1])

    # sign-change set as maximal runs of grid points with psi psi(tau) <= 0
    isc = []
    mask = same <= zero_tol
    k = 0
    while k < len(grid):
        if not mask[k]:
            k += 1
            continue
        s = k
        while k + 1 < len(grid) and mask[k + 1]:
            k += 1
        a = grid[s] if s == 0 else _bisect(lambda t: -w(t), grid[s - 1], grid[s])
        b = grid[k] if k + 1 == len(grid) else _bisect(w, grid[k], grid[k + 1])
        isc.append((float(a), float(b)))
        k += 1
    m_sc = float(absval[mask].max())

    def bound_M(t0, k1):
        return (tau - t0) ** 2 * k1 / (4 * tau * t0)

    with np.errstate(divide="ignore", invalid="ignore"):
        Ms = np.where(grid > 0, (tau - grid) ** 2 * kap / (4 * tau * grid), 0.0)
    feasible = inner & (grid > tau1) & (kap > 0) & (Ms >= m_sc * (1 - _BOUND_RTOL))
    if not np.any(feasible):
        best = float(np.max(np.where(inner & (grid > tau1), Ms, 0.0)))
        return AdmissibilityReport(
            "fails", **base, **sc, tau1=tau1, sign_change_set=tuple(isc),
            max_on_sign_change_set=m_sc, M=best,
            reason=f"M-bound violated: max |psi| on the sign-change set is {m_sc:.6g} "
                   f"but the largest attainable M is {best:.6g}",
        )
    i = int(np.argmax(np.where(feasible, kap, -1.0)))

    def kappa_at(t):
        nxt = np.searchsorted(grid, t, side="right")
        tail = kap[nxt] if nxt < len(grid) else math.inf
        return min(abs(float(psi(t))), tail, abs(psi_tau))

    # the feasible set ends between grid[i] and grid[i+1]; refine the crossing
    if i + 1 < len(grid) and inner[i + 1] and not feasible[i + 1]:
        t_star = _bisect(lambda t: m_sc - bound_M(t, kappa_at(t)), grid[i], grid[i + 1])
        k_star = kappa_at(t_star)
        kappa1 = k_star if bound_M(t_star, k_star) >= m_sc * (1 - _BOUND_RTOL) else float(kap[i])
    else:
        kappa1 = float(kap[i])
    tau0 = _smallest_tau0(psi, grid, absval, kappa1)
    M = bound_M(tau0, kappa1)

    ct_thr = (abs(psi0) + 2 * tau * kappa2) / (tau * abs(psi_tau))
    integral, _ = integrate(lambda s: np.abs(psi(s)), tau1, tau0, psi.knots)
    rep = AdmissibilityReport(
        "sign-changing", **base, **sc,
        tau0=tau0, kappa1=kappa1, sign_change_set=tuple(isc), tau1=tau1,
        max_on_sign_change_set=m_sc, M=M,
        c_tilde_threshold=ct_thr, c_tilde=2 * ct_thr, integral_abs=integral,
    )
    return _with_constant(rep)


def _with_constant(rep: AdmissibilityReport) -> AdmissibilityReport:
    try:
        c = lower_bound_constant(rep, rep.lam1)
    except CertificateError as exc:
        return replace(rep, case="fails", reason=str(exc))
    return replace(rep, constant=c)


def lower_bound_constant(report: AdmissibilityReport, lam1: float) -> float:
    """``C`` with ``lambda_n^2 |mu_n| >= C`` for all ``n``.

    Sign-changing profiles take the smaller of the two regime constants
    (small and large eigenvalues relative to ``c_tilde``).
    """
    if not report.admissible:
        raise CertificateError(f"profile is not admissible: {report.reason}")
    tau, tau0 = report.tau, report.tau0
    if report.case == "fixed-sign":
        c = report.kappa1 * _g(lam1 * (tau - tau0))
    else:
        small = (
            lam1**2
            * math.exp(-report.c_tilde * (tau - report.tau1))
            * (tau - tau0)
            * report.integral_abs
        )
        large = abs(report.psi_tau) - (abs(report.psi0) + 2 * tau * report.kappa2) / (
            tau * report.c_tilde
        )
        c = min(small, large)
    if not c > 0:
        raise CertificateError(f"certificate yields non-positive constant C={c}")
    return c
