import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from biparabolic_qrm import (
    SmoothnessClass,
    SpectralCoefficients,
    SpectralDomain,
    eigenvalue,
    evaluate_pointwise,
    hp_norm,
    in_source_set,
)
from biparabolic_qrm.harness import weyl_ratio_check

PI2 = math.pi**2


def brute_spectrum(lengths, n, reach=40):
    """All multi-indices up to ``reach``, sorted by eigenvalue then index.

    Eigenvalues are compared exactly as rationals (``lambda / pi^2``), so
    genuine ties such as 4^2 + 7^2 = 8^2 + 1^2 fall back to index order.
    """
    inv = [Fraction(L) ** -2 for L in lengths]
    entries = []
    for k in itertools.product(range(1, reach + 1), repeat=len(lengths)):
        entries.append((sum(ki * ki * w for ki, w in zip(k, inv)), k))
    entries.sort()
    return [(float(q) * PI2, k) for q, k in entries[:n]]


@pytest.mark.parametrize(
    "lengths, n, expected",
    [((1.0,), 1, PI2), ((1.0,), 3, 9 * PI2), ((1.0, 1.0), 1, 2 * PI2)],
)
def test_eigenvalue_examples(lengths, n, expected):
    assert eigenvalue(SpectralDomain(lengths, 16), n) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("lengths", [(1.0, 1.0), (1.0, 2.0), (1.0, 1.5, 2.0)])
def test_box_spectrum_matches_enumeration(lengths):
    dom = SpectralDomain(lengths, 200)
    ref = brute_spectrum(lengths, 200, reach=40 if len(lengths) == 2 else 15)
    assert np.allclose(dom.eigenvalues, [r[0] for r in ref], rtol=1e-13)
    # ties (square) are broken lexicographically
    assert [tuple(k) for k in dom.multi_indices] == [r[1] for r in ref]


def test_eigenvalue_out_of_range():
    dom = SpectralDomain.interval(1.0, 8)
    with pytest.raises(IndexError):
        eigenvalue(dom, 9)
    with pytest.raises(IndexError):
        eigenvalue(dom, 0)


def test_eigenvalues_strictly_increasing_1d(unit_interval):
    assert np.all(np.diff(unit_interval.eigenvalues) > 0)


def test_eigenfunctions_orthonormal_1d():
    dom = SpectralDomain.interval(2.0, 4)
    for i in range(1, 5):
        for j in range(1, 5):
            fi, fj = dom.unit(i), dom.unit(j)
            val, _ = quad(lambda x: evaluate_pointwise(fi, x) * evaluate_pointwise(fj, x), 0, 2, limit=200)
            assert val == pytest.approx(float(i == j), abs=1e-10)


def test_hp_norm_examples(unit_interval):
    e1 = unit_interval.unit(1)
    assert hp_norm(e1, 0) == 1.0
    assert hp_norm(e1, 1) == pytest.approx(PI2, rel=1e-15)
    v = unit_interval.coefficients(np.r_[1.0, 1.0, np.zeros(254)])
    # direct summation of lambda_n^{2p} c_n^2 with p = 1/2
    assert hp_norm(v, 0.5) == pytest.approx(math.sqrt(PI2 + 4 * PI2), rel=1e-14)


def test_hp_norm_overflow_raises():
    dom = SpectralDomain.interval(1e-3, 4)
    with pytest.raises(OverflowError):
        hp_norm(dom.unit(4, 1e300), 40)


@pytest.mark.parametrize(
    "scale, expected", [(0.0, True), (1.0, True), (2.0, False)]
)
def test_in_source_set_examples(unit_interval, scale, expected):
    cls = SmoothnessClass(1.0, PI2)
    assert in_source_set(unit_interval.unit(1, scale), cls) is expected


def test_pointwise_examples(unit_interval):
    e1 = unit_interval.unit(1)
    assert evaluate_pointwise(e1, 0.5) == pytest.approx(math.sqrt(2), rel=1e-15)
    v = unit_interval.coefficients(np.r_[1.0, 1.0, np.zeros(254)])
    ref = math.sqrt(2) * (math.sin(math.pi / 4) + math.sin(math.pi / 2))
    assert evaluate_pointwise(v, 0.25) == pytest.approx(ref, rel=1e-14)
    for x in (0.0, 1.0):
        assert evaluate_pointwise(v, x) == 0.0
    with pytest.raises(ValueError):
        evaluate_pointwise(v, 1.5)


def test_pointwise_2d_boundary_is_zero():
    dom = SpectralDomain((1.0, 2.0), 16)
    v = dom.coefficients(np.linspace(1, 2, 16))
    assert evaluate_pointwise(v, (0.3, 0.0)) == 0.0
    assert evaluate_pointwise(v, (1.0, 1.1)) == 0.0


def test_coefficients_are_read_only(unit_interval):
    v = unit_interval.unit(1)
    with pytest.raises(ValueError):
        v.values[0] = 3.0
    with pytest.raises(ValueError):
        unit_interval.eigenvalues[0] = 1.0


def test_domain_mismatch_rejected():
    a = SpectralDomain.interval(1.0, 8)
    b = SpectralDomain.interval(2.0, 8)
    with pytest.raises(ValueError):
        a.unit(1) + b.unit(1)


def test_invalid_domains():
    with pytest.raises(ValueError):
        SpectralDomain((0.0,), 4)
    with pytest.raises(ValueError):
        SpectralDomain((1.0,), 0)
    with pytest.raises(ValueError):
        SmoothnessClass(-1.0, 1.0)
    with pytest.raises(ValueError):
        SmoothnessClass(1.0, 0.0)


vectors = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=16, max_size=16)


@given(vectors)
def test_parseval(vals):
    dom = SpectralDomain.interval(1.0, 16)
    v = dom.coefficients(vals)
    ref = math.fsum(x * x for x in vals)
    assert hp_norm(v, 0) ** 2 == pytest.approx(ref, rel=1e-12, abs=1e-300)


@given(vectors, st.floats(0, 3), st.floats(0, 3))
def test_scale_monotone(vals, p1, p2):
    dom = SpectralDomain.interval(1.0, 16)
    v = dom.coefficients(vals)
    lo, hi = sorted((p1, p2))
    assert hp_norm(v, lo) <= hp_norm(v, hi) * (1 + 1e-14)


def test_weyl_band_1d():
    rep = weyl_ratio_check(SpectralDomain.interval(1.0, 256))
    assert rep.e1 == pytest.approx(PI2, rel=1e-14) and rep.e2 == pytest.approx(PI2, rel=1e-14)
    assert rep.min_ratio >= 0.25 and rep.ok


def test_weyl_band_2d():
    dom = SpectralDomain((1.0, 1.3), 400)
    rep = weyl_ratio_check(dom)
    n = np.arange(1, 401)
    scaled = dom.eigenvalues / n
    assert rep.e1 == pytest.approx(scaled.min()) and rep.e2 == pytest.approx(scaled.max())
    assert rep.ok and 0 < rep.min_ratio <= rep.max_ratio <= 1
