"""Adaptive Gauss-Legendre panel quadrature.

Used for the memory integrals ``int_0^t e^{-lam u} u psi(t - u) du`` whenever
the profile has no closed form, and as the independent check of the closed
forms.  For large ``lam`` the integrand lives in a boundary layer of width
``1/lam`` at ``u = 0``, so the initial panels are graded geometrically from
there.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import QuadratureError

_LO, _HI = 16, 24
_MAX_SPLITS = 4000


@lru_cache(maxsize=None)
def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _panel(func, a, b, n):
    x, w = _gauss(n)
    half = 0.5 * (b - a)
    return half * float(w @ func(half * x + 0.5 * (a + b)))


def integrate(func, a, b, breakpoints=(), atol=0.0, rtol=1e-13, scale=None):
    """Integrate a vectorised ``func`` over ``[a, b]``.

    Panels are split at ``breakpoints`` (kinks of the integrand) and bisected
    until the 16- and 24-point rules agree to ``max(atol, rtol * scale)``,
    where ``scale`` defaults to a first estimate of ``int |func|``.

    Returns ``(value, error_estimate)``.
    """
    if b < a:
        raise ValueError("integration bounds must satisfy a <= b")
    if b == a:
        return 0.0, 0.0
    pts = sorted({a, b, *(float(p) for p in breakpoints if a < p < b)})
    panels = list(zip(pts[:-1], pts[1:]))
    if scale is None:
        scale = sum(_panel(lambda s: np.abs(func(s)), lo, hi, _HI) for lo, hi in panels)
    tol = max(atol, rtol * abs(scale))
    total, err = 0.0, 0.0
    splits = 0
    while panels:
        lo, hi = panels.pop()
        q_hi = _panel(func, lo, hi, _HI)
        diff = abs(q_hi - _panel(func, lo, hi, _LO))
        # panel tolerance is proportional to its share of the interval
        if diff <= tol * max((hi - lo) / (b - a), 1e-3) or hi - lo <= 1e-15 * (b - a):
            total += q_hi
            err += diff
            continue
        splits += 1
        if splits > _MAX_SPLITS:
            raise QuadratureError(
                f"quadrature on [{a}, {b}] exceeded {_MAX_SPLITS} subdivisions",
                estimate=err + diff,
            )
        mid = 0.5 * (lo + hi)
        panels += [(lo, mid), (mid, hi)]
    return total, err


def memory_integral(psi, lam, t, knots=(), rtol=1e-13):
    """``int_0^t e^{-lam (t-s)} (t-s) psi(s) ds`` by graded panels.

    ``psi`` is a vectorised callable on ``[0, t]``; ``knots`` are times where it
    is not smooth.  Returns ``(value, error_estimate)``.
    """
    if t <= 0:
        return 0.0, 0.0

    def f(u):
        return np.exp(-lam * u) * u * psi(t - u)

    # geometric grading of the boundary layer: 0, h, 2h, 4h, ... < t
    h = min(t, 1.0 / lam)
    brk = []
    edge = h
    while edge < t:
        brk.append(edge)
        edge *= 2.0
    brk += [t - k for k in knots if 0 < k < t]
    # crude L1 scale: |psi| <= sup on the knots/grid, times int e^{-lam u} u du
    sup = float(np.max(np.abs(psi(np.linspace(0.0, t, 257)))))
    x = lam * t
    l1 = sup * (-math.expm1(-x) - x * math.exp(-x)) / lam**2 if x > 1e-3 else sup * t * t / 2
    return integrate(f, 0.0, t, brk, rtol=rtol, scale=l1 if l1 > 0 else None)
