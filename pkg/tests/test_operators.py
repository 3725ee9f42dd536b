import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from biparabolic_qrm import (
    CertificateError,
    ConstantProfile,
    ForwardOperator,
    IllConditionedError,
    PolynomialProfile,
    RegularizerConfig,
    SpectralDomain,
    illposedness_demo,
    qrm_invert,
)

PI2 = math.pi**2
MU1 = (1 - (1 + PI2) * math.exp(-PI2)) / PI2**2

seeds = st.integers(0, 2**32 - 1)


def random_coeffs(dom, seed):
    return dom.coefficients(np.random.default_rng(seed).standard_normal(dom.n_modes))


def test_apply_t_examples(op_const):
    dom = op_const.domain
    assert op_const.apply_t(dom.zeros()).norm() == 0
    h = op_const.apply_t(dom.unit(1))
    assert h.values[0] == pytest.approx(MU1, rel=1e-14)
    assert np.all(h.values[1:] == 0)


def test_diagonality(op_sign):
    dom = op_sign.domain
    for n in (1, 2, 17, 256):
        h = op_sign.apply_t(dom.unit(n))
        expect = np.zeros(dom.n_modes)
        expect[n - 1] = op_sign.mu[n - 1]
        assert np.array_equal(h.values, expect)


@given(seeds)
def test_apply_t_norm_bound(op_sign, seed):
    f = random_coeffs(op_sign.domain, seed)
    bound = op_sign.psi_sup / op_sign.domain.lambda1**2 * f.norm()
    assert op_sign.apply_t(f).norm() <= bound * (1 + 1e-12)


def test_mild_solution_examples(op_const):
    dom = op_const.domain
    f = dom.unit(1)
    v0, vtau = op_const.mild_solution(f, [0.0, 1.0])
    assert v0.norm() == 0
    assert np.array_equal(vtau.values, op_const.apply_t(f).values)
    (v,) = op_const.mild_solution(f, [1.0], alpha=1.0, b=2)
    assert v.values[0] == pytest.approx((1 + PI2**2) * MU1, rel=1e-14)


@given(seeds, st.floats(1e-8, 1.0), st.sampled_from([2.0, 3.0, 4.0]))
def test_mild_solution_consistency(op_const, seed, alpha, b):
    f = random_coeffs(op_const.domain, seed) * 1e-6
    (v,) = op_const.mild_solution(f, [op_const.profile.tau], alpha=alpha, b=b)
    ref = op_const.apply_t_alpha(f, alpha, b)
    assert np.allclose(v.values, ref.values, rtol=1e-12, atol=0)


def test_zero_alpha_is_identity(op_const):
    f = random_coeffs(op_const.domain, 1)
    assert np.array_equal(op_const.apply_t_alpha(f, 0.0, 2).values, op_const.apply_t(f).values)
    assert np.array_equal(op_const.apply_b_alpha(f, 0.0, 2).values, f.values)


def test_b_alpha_example(op_const):
    h = op_const.apply_b_alpha(op_const.domain.unit(1), 1.0, 2)
    assert h.values[0] == pytest.approx(1 / (1 + PI2**2), rel=1e-15)


@given(seeds, st.floats(1e-10, 1e3))
def test_b_alpha_contracts(op_const, seed, alpha):
    h = random_coeffs(op_const.domain, seed)
    assert op_const.apply_b_alpha(h, alpha, 3.0).norm() <= h.norm()


@given(seeds)
def test_exact_inverse_round_trip(seed):
    op = ForwardOperator(SpectralDomain.interval(1.0, 64), ConstantProfile(1.0))
    f = random_coeffs(op.domain, seed)
    back = op.exact_inverse(op.apply_t(f))
    assert np.allclose(back.values, f.values, rtol=1e-10, atol=1e-10 * f.norm())


def test_exact_inverse_single_mode(op_const):
    g = op_const.exact_inverse(op_const.domain.unit(1, op_const.mu[0]))
    assert g.values[0] == pytest.approx(1.0, rel=1e-15)


def test_exact_inverse_refuses_tiny_multipliers():
    op = ForwardOperator(SpectralDomain.interval(1.0, 4096), ConstantProfile(1.0))
    with pytest.raises(IllConditionedError) as info:
        op.exact_inverse(op.domain.unit(1))
    assert info.value.mode > 1


def test_inadmissible_profile_blocks_constant_and_inversion(unit_interval):
    op = ForwardOperator(unit_interval, PolynomialProfile(1.0, coefficients=(-0.5, 1.0)))
    with pytest.raises(CertificateError):
        op.constant
    with pytest.raises(CertificateError):
        qrm_invert(op, unit_interval.unit(1), RegularizerConfig(2, 1e-3))


def test_truncation_tail_bound(op_const):
    lamN = op_const.domain.eigenvalues[-1]
    assert op_const.truncation_tail_bound(2.0) == pytest.approx(2.0 / lamN**2)


def test_illposedness_rows(op_const):
    rows = illposedness_demo(op_const, 64)
    assert rows[0].data_norm == pytest.approx(1 / PI2, rel=1e-15)
    assert all(b.source_norm > a.source_norm for a, b in zip(rows, rows[1:]))
    assert all(b.data_norm < a.data_norm for a, b in zip(rows, rows[1:]))
    # the ratio is one up to rounding once lambda_k^2 mu_k saturates at |psi|_inf
    assert all(r.ratio >= 1 - 1e-12 for r in rows)
    assert all(r.source_norm >= r.lam / op_const.psi_sup * (1 - 1e-12) for r in rows)
