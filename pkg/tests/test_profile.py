import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from biparabolic_qrm import (
    AdmissibilityReport,
    CertificateError,
    ConstantProfile,
    PiecewiseTrigProfile,
    PolynomialProfile,
    SpectralDomain,
    TabulatedProfile,
    TrigPiece,
    check_assumption,
    lower_bound_constant,
    mu_coefficient,
    mu_sequence,
    sign_changing_profile,
)
from biparabolic_qrm.quadrature import integrate

PI2 = math.pi**2


def mu_quad(psi, lam, t):
    """Independent oracle: QUADPACK on ``int_0^t e^{-lam u} u psi(t - u) du``.

    Breakpoints at multiples of ``1/lam`` resolve the boundary layer at ``u = 0``.
    """
    pts = [t - k for k in getattr(psi, "knots", ()) if 0 < k < t]
    pts += [c / lam for c in (1, 4, 16, 64) if c / lam < t]
    val, _ = quad(
        lambda u: math.exp(-lam * u) * u * float(psi(t - u)),
        0, t, points=sorted(pts) or None, limit=500, epsabs=0, epsrel=1e-13,
    )
    return val


def mu_const_mp(lam, t, dps=40):
    with mpmath.workdps(dps):
        x = mpmath.mpf(lam) * t
        return float((1 - (1 + x) * mpmath.exp(-x)) / mpmath.mpf(lam) ** 2)


def test_constant_mu_example():
    val = mu_coefficient(ConstantProfile(1.0), PI2)
    assert val == pytest.approx(mu_const_mp(PI2, 1.0), rel=1e-14)
    assert val == pytest.approx(1.02602e-2, rel=1e-5)
    assert mu_quad(ConstantProfile(1.0), PI2, 1.0) == pytest.approx(val, rel=1e-12)


def test_constant_closed_form_against_high_precision(unit_interval):
    psi = ConstantProfile(1.0)
    closed = psi.mu(unit_interval.eigenvalues, method="closed")
    ref = np.array([mu_const_mp(lam, 1.0) for lam in unit_interval.eigenvalues])
    assert np.max(np.abs(closed / ref - 1)) <= 1e-14


def test_mu_at_time_zero_vanishes():
    for psi in (ConstantProfile(1.0), sign_changing_profile(), PolynomialProfile(1.0, coefficients=(1, 2))):
        assert np.all(psi.mu([1.0, 50.0], t=0.0) == 0)


def test_mu_rejects_bad_arguments():
    psi = ConstantProfile(1.0)
    with pytest.raises(ValueError):
        psi.mu([1.0], t=2.0)
    with pytest.raises(ValueError):
        psi.mu([-1.0])
    with pytest.raises(ValueError):
        TabulatedProfile(1.0, times=(0, 1), values=(1, 1)).mu([1.0], method="closed")


@pytest.mark.parametrize(
    "psi",
    [
        PolynomialProfile(1.0, coefficients=(1.0, -0.5, 2.0)),
        PolynomialProfile(2.0, coefficients=(0.3, 0.0, 0.0, 1.0)),
        sign_changing_profile(),
        PiecewiseTrigProfile(
            2.0,
            pieces=(TrigPiece(0.0, 1.0, 1.0, "sin", 2.0, 0.3), TrigPiece(1.0, 2.0, math.sin(2.3) / math.cos(1.0), "cos")),
        ),
    ],
    ids=["poly2", "poly3", "sign_changing", "mixed_trig"],
)
@pytest.mark.parametrize("lam", [1e-3, 0.7, PI2, 400.0, 4e4, 6.4e5])
def test_closed_forms_against_scipy(psi, lam):
    t = psi.tau
    closed = mu_coefficient(psi, lam, method="closed")
    ref = mu_quad(psi, lam, t)
    scale = psi.sup_norm() * (1 - (1 + lam * t) * math.exp(-lam * t)) / lam**2
    assert abs(closed - ref) <= 1e-11 * scale


@pytest.mark.parametrize("t", [0.25, 0.5, 0.9])
def test_intermediate_times(t):
    psi = sign_changing_profile()
    for lam in (PI2, 100.0):
        assert mu_coefficient(psi, lam, t=t) == pytest.approx(mu_quad(psi, lam, t), rel=1e-10, abs=1e-16)


def test_tabulated_against_scipy():
    ts = np.linspace(0, 1.5, 31)
    psi = TabulatedProfile(1.5, times=tuple(ts), values=tuple(np.cos(ts) + 0.2))
    for lam in (0.5, PI2, 900.0):
        assert mu_coefficient(psi, lam) == pytest.approx(mu_quad(psi, lam, 1.5), rel=1e-10)


def test_tabulated_cubic_interpolates_samples():
    ts = np.linspace(0, 1, 11)
    psi = TabulatedProfile(1.0, times=tuple(ts), values=tuple(ts**2 + 1), interpolation="cubic")
    assert np.allclose(psi(ts), ts**2 + 1, rtol=1e-14)
    assert psi.derivative_bound().provenance == "sampled"


def test_own_quadrature_matches_scipy():
    f = lambda x: np.exp(-3 * x) * np.cos(7 * x)
    val, err = integrate(f, 0.0, 2.0)
    ref, _ = quad(lambda x: math.exp(-3 * x) * math.cos(7 * x), 0, 2, epsabs=0, epsrel=1e-13)
    assert val == pytest.approx(ref, rel=1e-13)
    assert err < 1e-12


@given(st.floats(0.05, 20.0), st.floats(1e-2, 1e5), st.floats(0.1, 3.0))
def test_constant_closed_vs_quadrature_property(value, lam, tau):
    psi = ConstantProfile(tau, value=value)
    closed = psi.mu([lam], method="closed")[0]
    numeric = psi.mu([lam], method="quadrature")[0]
    assert numeric == pytest.approx(closed, rel=1e-12)


@pytest.mark.parametrize("psi", [ConstantProfile(1.0), sign_changing_profile(), PolynomialProfile(1.0, coefficients=(1, 1))])
def test_upper_bound_on_mu(psi, unit_interval):
    mu, _ = mu_sequence(psi, unit_interval)
    lam = unit_interval.eigenvalues
    assert np.all(lam**2 * np.abs(mu) <= psi.sup_norm() * (1 + 1e-12))


def test_sign_changing_profile_has_no_zero_multiplier(unit_interval):
    mu, _ = mu_sequence(sign_changing_profile(), unit_interval)
    assert np.all(mu != 0)


# -- admissibility ---------------------------------------------------------

def test_certificate_constant_profile():
    rep = check_assumption(ConstantProfile(1.0))
    assert rep.case == "fixed-sign" and rep.tau0 == 0.0 and rep.kappa1 == 1.0
    assert rep.constant == pytest.approx(1 - (1 + PI2) * math.exp(-PI2), rel=1e-14)
    assert rep.constant == pytest.approx(0.99944, abs=1e-5)


def test_certificate_sign_changing_example():
    rep = check_assumption(sign_changing_profile())
    assert rep.case == "sign-changing"
    assert rep.kappa1 == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert rep.tau0 == pytest.approx(3 * math.pi / 4, abs=1e-12)
    assert rep.M == pytest.approx(1 / (48 * math.sqrt(2)), abs=1e-14)
    (a, b), = rep.sign_change_set
    assert a == pytest.approx(0.0, abs=1e-12) and b == pytest.approx(math.pi / 2, abs=1e-12)
    assert rep.kappa2 == pytest.approx(1.0) and rep.kappa2_provenance == "analytic"
    assert rep.constant > 0


def test_certificate_linear_fails_m_bound():
    rep = check_assumption(PolynomialProfile(1.0, coefficients=(-0.5, 1.0)))
    assert not rep.admissible and "M-bound" in rep.reason
    # direct grid maximisation of |psi| on the sign-change set [0, 1/2]
    grid = np.linspace(0, 0.5, 10001)
    assert rep.max_on_sign_change_set == pytest.approx(np.max(np.abs(grid - 0.5)), rel=1e-12)
    assert rep.max_on_sign_change_set > rep.M
    with pytest.raises(CertificateError):
        lower_bound_constant(rep, PI2)


def test_certificate_rejects_vanishing_final_value():
    rep = check_assumption(PolynomialProfile(1.0, coefficients=(0.0, 1.0, -1.0)))
    assert not rep.admissible


def test_constant_linear_in_kappa1():
    c = [check_assumption(ConstantProfile(1.0, value=v)).constant for v in (1e-3, 1e-6, 1e-9)]
    assert c[1] / c[0] == pytest.approx(1e-3, rel=1e-12)
    assert c[2] < 1e-8


def test_supplied_kappa2_checked():
    with pytest.raises(ValueError):
        PolynomialProfile(1.0, coefficients=(1.0, 3.0), kappa2=1.0).derivative_bound()
    bound = PolynomialProfile(1.0, coefficients=(1.0, 3.0), kappa2=5.0).derivative_bound()
    assert bound.value == 5.0 and bound.provenance == "supplied"
    bound = PolynomialProfile(1.0, coefficients=(1.0, 3.0)).derivative_bound()
    assert bound.value == pytest.approx(3.0) and bound.provenance == "analytic"


def test_report_round_trip():
    rep = check_assumption(sign_changing_profile())
    assert AdmissibilityReport.from_dict(rep.to_dict()) == rep


GALLERY = [
    ConstantProfile(1.0),
    ConstantProfile(2.0, value=-0.3),
    PolynomialProfile(1.0, coefficients=(1.0, 1.0)),
    PolynomialProfile(1.0, coefficients=(0.1, 0.0, 2.0)),
    sign_changing_profile(),
    TabulatedProfile(1.0, times=tuple(np.linspace(0, 1, 21)), values=tuple(1 + np.sin(np.linspace(0, 1, 21)))),
]


@pytest.mark.parametrize("psi", GALLERY, ids=lambda p: p.kind)
@pytest.mark.parametrize("lengths", [(1.0,), (2.0,), (1.0, 1.0)])
def test_lower_bound_holds(psi, lengths):
    dom = SpectralDomain(lengths, 128)
    rep = check_assumption(psi, dom.lambda1)
    assert rep.admissible, rep.reason
    C = lower_bound_constant(rep, dom.lambda1)
    mu, _ = mu_sequence(psi, dom)
    assert np.all(dom.eigenvalues**2 * np.abs(mu) >= C * (1 - 1e-12))
    assert C == pytest.approx(rep.constant)
