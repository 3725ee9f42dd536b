import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from biparabolic_qrm import (
    Aposteriori,
    NoSolutionError,
    RegularizerConfig,
    SmoothnessClass,
    apriori_alpha,
    bias_bound,
    discrepancy,
    morozov_select,
    noise_bound,
    qrm_invert,
)
from biparabolic_qrm.harness import add_noise, random_source
from biparabolic_qrm.qrm import MOROZOV_RTOL, bias_constant, discrepancy_target, eta_peak

PI2 = math.pi**2
seeds = st.integers(0, 2**32 - 1)


def test_invert_round_trip(op_const):
    e1 = op_const.domain.unit(1)
    h = op_const.apply_t_alpha(e1, 1e-3, 4)
    rec = qrm_invert(op_const, h, RegularizerConfig(4, 1e-3))
    assert np.allclose(rec.source.values, e1.values, rtol=1e-14, atol=1e-16)


def test_large_alpha_shrinks_reconstruction(op_const):
    h = op_const.apply_t(op_const.domain.unit(2))
    norms = [qrm_invert(op_const, h, RegularizerConfig(2, a)).source.norm() for a in (1, 1e3, 1e6, 1e9)]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-8


@given(seeds, st.floats(1e-10, 1.0), st.sampled_from([2.0, 2.5, 4.0]))
def test_inverse_lipschitz(op_sign, seed, alpha, b):
    rng = np.random.default_rng(seed)
    phi = op_sign.domain.coefficients(rng.standard_normal(op_sign.domain.n_modes))
    rec = qrm_invert(op_sign, phi, RegularizerConfig(b, alpha))
    assert rec.source.norm() * op_sign.constant * alpha ** (2 / b) <= phi.norm() * (1 + 1e-12)
    assert rec.stability_bound == pytest.approx(1 / (op_sign.constant * alpha ** (2 / b)))


def test_config_validation():
    with pytest.raises(ValueError):
        RegularizerConfig(1.5, 1.0)
    with pytest.raises(ValueError):
        RegularizerConfig(2, 0.0)
    with pytest.raises(ValueError):
        RegularizerConfig(4, 1.0, Aposteriori(1.0, 1e-3))
    with pytest.raises(ValueError):
        RegularizerConfig(2, 1.0, Aposteriori(2.0, 1e-3))


def test_apriori_examples():
    assert apriori_alpha(1e-4, SmoothnessClass(2, 1), 4) == pytest.approx(1e-4, rel=1e-14)
    assert apriori_alpha(1e-4, SmoothnessClass(6, 1), 4) == pytest.approx(1e-4 ** (4 / 6), rel=1e-14)


@given(st.floats(1e-12, 1e-1), st.floats(0.1, 10), st.floats(0.1, 3.9))
def test_apriori_scaling(delta, c, p):
    cls = SmoothnessClass(p, 1.0)
    assert apriori_alpha(c * delta, cls, 4) == pytest.approx(c ** (4 / (p + 2)) * apriori_alpha(delta, cls, 4), rel=1e-12)


def test_discrepancy_examples(op_const):
    e1 = op_const.domain.unit(1)
    assert discrepancy(e1, 1.0, 2) == pytest.approx(PI2**2 / (1 + PI2**2), rel=1e-15)
    assert discrepancy(e1, 0.0, 2) == 0.0
    assert discrepancy(e1, 1e300, 2) == pytest.approx(1.0, rel=1e-15)


@given(seeds, st.sampled_from([2.0, 3.0, 4.0]))
def test_discrepancy_strictly_increasing(op_pi, seed, b):
    h = add_noise(op_pi.apply_t(op_pi.domain.unit(1)), 1e-6, seed)
    alphas = np.geomspace(1e-12, 1e6, 50)
    z = np.array([discrepancy(h, a, b) for a in alphas])
    assert np.all(np.diff(z) > 0)


@pytest.mark.parametrize("b", [2.0, 4.0])
@pytest.mark.parametrize("c", [1e-3, 0.5])
def test_morozov_single_mode(op_const, b, c):
    # alpha lambda^b / (1 + alpha lambda^b) = T / c has a closed-form root
    h = op_const.domain.unit(1, c)
    xi, sigma = 2.0, 0.5
    delta = (c / 10 / xi) ** (1 / sigma) if b == 2 else c / 10 / xi
    target = discrepancy_target(delta, xi, b, sigma)
    assert target == pytest.approx(c / 10)
    ratio = target / c
    alpha = ratio / (1 - ratio) / PI2**b
    cfg = morozov_select(h, delta, xi, b, sigma)
    assert cfg.alpha == pytest.approx(alpha, rel=1e-8)
    assert abs(discrepancy(h, cfg.alpha, b) - target) <= MOROZOV_RTOL * target


@given(seeds, st.floats(1e-8, 1e-3))
def test_morozov_residual_and_monotone_in_xi(op_pi, seed, delta):
    h = add_noise(op_pi.apply_t(op_pi.domain.unit(1)), delta, seed)
    assume(4 * delta < h.norm())
    a2 = morozov_select(h, delta, 2.0, 4).alpha
    a4 = morozov_select(h, delta, 4.0, 4).alpha
    assert a4 > a2
    assert abs(discrepancy(h, a2, 4) - 2 * delta) <= MOROZOV_RTOL * 2 * delta


def test_morozov_no_solution(op_const):
    h = op_const.domain.unit(1, 1e-3)
    with pytest.raises(NoSolutionError):
        morozov_select(h, 1e-3, 2.0, 4)
    with pytest.raises(ValueError):
        morozov_select(h, 1e-3, 0.5, 4)


def test_bias_constants():
    assert bias_constant(1, 2, PI2) == pytest.approx(0.5)
    assert bias_constant(4, 4, PI2) == 1.0
    assert bias_constant(6, 4, 2.0) == pytest.approx(2.0**-2)


def test_noise_bound_example():
    C = 1 - (1 + PI2) * math.exp(-PI2)
    assert noise_bound(1e-3, 1e-2, 2, C) == pytest.approx(0.10006, abs=1e-5)


@given(st.floats(1e-8, 1e2), st.floats(2.0, 6.0), st.floats(0.05, 0.95))
def test_eta_maximum(alpha, b, frac):
    p = frac * b
    s0, peak = eta_peak(alpha, b, p)
    s = s0 * np.geomspace(1e-3, 1e3, 4001)
    eta = alpha * s ** (b - p) / (1 + alpha * s**b)
    assert eta.max() <= peak * (1 + 1e-12)
    at_s0 = alpha * s0 ** (b - p) / (1 + alpha * s0**b)
    assert at_s0 == pytest.approx(peak, rel=1e-12)


GALLERY = [(1.0, 2.0), (2.0, 4.0), (1.0, 4.0), (4.0, 4.0), (6.0, 4.0), (2.5, 3.0)]


@pytest.mark.parametrize("p, b", GALLERY)
@pytest.mark.parametrize("alpha", [1e-10, 1e-6, 1e-3, 1.0])
def test_bias_bound_holds(op_const, p, b, alpha):
    dom = op_const.domain
    cls = SmoothnessClass(p, 1.0)
    rng = np.random.default_rng(17)
    sources = [random_source(dom, cls, rng) for _ in range(20)]
    sources += [dom.unit(n, dom.eigenvalues[n - 1] ** -p) for n in (1, 2, 5, 40)]
    bound = bias_bound(cls, alpha, b, dom.lambda1)
    for f in sources:
        rec = qrm_invert(op_const, op_const.apply_t(f), RegularizerConfig(b, alpha))
        assert (f - rec.source).norm() <= bound * (1 + 1e-12)


@pytest.mark.parametrize("b", [2.0, 3.0, 4.0])
@pytest.mark.parametrize("alpha", [1e-8, 1e-4, 1e-1])
def test_noise_bound_holds(op_sign, b, alpha):
    dom = op_sign.domain
    f = random_source(dom, SmoothnessClass(1, 1), np.random.default_rng(3))
    h = op_sign.apply_t(f)
    cfg = RegularizerConfig(b, alpha)
    clean = qrm_invert(op_sign, h, cfg).source
    for seed in range(10):
        noisy = qrm_invert(op_sign, add_noise(h, 1e-4, seed), cfg).source
        assert (clean - noisy).norm() <= noise_bound(1e-4, alpha, b, op_sign.constant) * (1 + 1e-12)
