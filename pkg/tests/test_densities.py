import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from qfourier import qspecial
from qfourier.densities import (A_CAP, A_MIN, ORACLE_OPTS, FFamily, HFamily, escort_integral,
                                escort_pdf, f_mu, f_nu, f_pdf, f_pi, family_density, h_a_max,
                                h_b, h_b_bracket, h_mu, h_nu, h_pdf, h_pi, mu_numeric,
                                nu_numeric, pi_numeric, q_gaussian_density)
from qfourier.errors import DomainError, IllConditionedWarning, InadmissibleParameterError
from qfourier.quadrature import QuadratureOptions


def scipy_integral(func, lo, hi, points=None):
    """Independent oracle: QUADPACK through scipy."""
    val, _ = sp_integrate.quad(func, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=2000, points=points)
    return val


# --------------------------------------------------------------- h-family geometry

def test_h_b_at_q_two():
    assert h_b(2.0, 1.1, 1.0) == pytest.approx(math.exp(1 / 2.2), rel=1e-15)


@pytest.mark.parametrize("q, lam, a", [(1.7, 1.1, 1.0), (1.5, 1.1, 0.5), (2.0, 0.5, 2.0), (2.5, 1.1, 3.0)])
def test_h_normalized_by_independent_quadrature(q, lam, a):
    p = HFamily(q, lam, a)
    val = scipy_integral(lambda x: float(h_pdf(p, x)), a, p.b)
    assert 2 * val == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("lam, a", [(1.1, 1.0), (0.5, 0.3), (3.0, 7.0)])
def test_h_b_continuous_across_q_two(lam, a):
    ref = h_b(2.0, lam, a)
    for q in (2 - 1e-9, 2 + 1e-9, 2 - 5e-7, 2 + 5e-7):
        assert h_b(q, lam, a) == pytest.approx(ref, rel=1e-6)


def test_h_a_max():
    assert h_a_max(2.5, 1.1) == math.inf
    assert h_a_max(2.0, 1.1) == math.inf
    a_max = h_a_max(1.5, 1.1)
    assert abs(h_b_bracket(1.5, 1.1, a_max)) < 1e-12
    HFamily(1.5, 1.1, a_max * (1 - 1e-6))
    with pytest.raises(InadmissibleParameterError):
        HFamily(1.5, 1.1, a_max * (1 + 1e-6))


@pytest.mark.parametrize("q, lam", [(1.2, 1.1), (1.5, 0.5), (1.7, 2.0), (1.95, 1.0)])
def test_a_max_marks_the_sign_change_of_the_bracket(q, lam):
    a_max = h_a_max(q, lam)
    assert h_b_bracket(q, lam, 0.999 * a_max) > 0
    assert h_b_bracket(q, lam, 1.001 * a_max) < 0


def test_h_pdf_values():
    p = HFamily(2.0, 1.1, 1.0)
    assert h_pdf(p, 0.0) == 0.0
    assert h_pdf(p, 1.0) == pytest.approx(1.1, rel=1e-15)
    x = np.linspace(-3, 3, 121)
    assert np.array_equal(h_pdf(p, x), h_pdf(p, -x))
    assert np.all(h_pdf(p, x[(np.abs(x) > p.b)]) == 0.0)


@pytest.mark.parametrize("bad", [dict(q=1.0, lam=1.0, a=1.0), dict(q=1.7, lam=0.0, a=1.0),
                                 dict(q=1.7, lam=1.0, a=0.0), dict(q=1.7, lam=1.0, a=-1.0)])
def test_h_invalid_parameters(bad):
    with pytest.raises(DomainError):
        HFamily(**bad)


# --------------------------------------------------------------- h-family closed forms

def test_h_nu_at_one_is_one():
    for q, lam, a in [(1.5, 0.5, 0.1), (1.7, 1.1, 2.0), (2.0, 1.1, 0.5), (2.5, 3.0, 10.0)]:
        assert h_nu(HFamily(q, lam, a), 1.0) == pytest.approx(1.0, abs=1e-14)


def test_h_nu_square_root_against_scipy():
    p = HFamily(1.7, 1.1, 1.0)
    ref = 2 * scipy_integral(lambda x: float(h_pdf(p, x)) ** 0.5, p.a, p.b)
    assert h_nu(p, 0.5) == pytest.approx(ref, abs=1e-9)


def test_h_mu_second_moment_against_scipy():
    p = HFamily(1.7, 1.1, 1.0)
    ref = 2 * scipy_integral(lambda x: x * x * float(h_pdf(p, x)) ** 0.9, p.a, p.b)
    assert h_mu(p, 0.9, 2) == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("a", [0.5, 1.0])
def test_h_mu_at_shifted_index_is_lambda_squared(a):
    assert h_mu(HFamily(1.7, 1.1, a), 2.4, 2) == pytest.approx(1.21, abs=1e-12)


def test_h_odd_moments_vanish():
    p = HFamily(1.7, 1.1, 1.0)
    for n in (1, 3, 5):
        assert h_mu(p, 1.3, n) == 0.0
        assert h_pi(p, 1.3, n) == 0.0


def test_h_pi_log_branch():
    p = HFamily(1.7, 1.1, 0.8)
    expected = (p.b ** 2 - p.a ** 2) / (2 * math.log(p.b / p.a))
    assert h_pi(p, 0.7, 2) == pytest.approx(expected, rel=1e-13)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from([1.5, 1.7, 2.0, 2.5]), st.floats(0.3, 2.0), st.floats(0.05, 0.9),
       st.floats(0.1, 2.8), st.sampled_from([2, 4]))
def test_h_pi_is_ratio(q, lam, frac, Q, n):
    a = frac * min(h_a_max(q, lam), 4.0)
    p = HFamily(q, lam, a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllConditionedWarning)
        assert h_pi(p, Q, n) == pytest.approx(h_mu(p, Q, n) / h_nu(p, Q), rel=1e-12)


@pytest.mark.parametrize("q", [1.5, 1.7, 2.0, 2.5])
def test_h_closed_forms_match_quadrature_at_branch_points(q):
    lam = 1.1
    for a in (0.2, 0.6 * min(h_a_max(q, lam), 3.0)):
        p = HFamily(q, lam, a)
        d = p.density()
        for n in (2, 4):
            for Q in (q - 1.0, (n + 1) * (q - 1.0)):
                assert h_nu(p, Q) == pytest.approx(nu_numeric(d, Q), rel=1e-10)
                assert h_mu(p, Q, n) == pytest.approx(mu_numeric(d, Q, n), rel=1e-10)
                assert h_pi(p, Q, n) == pytest.approx(pi_numeric(d, Q, n), rel=1e-10)


@pytest.mark.parametrize("q", [1.7, 2.0, 2.5])
def test_h_branches_continuous(q):
    p = HFamily(q, 1.1, 0.9)
    Q0 = q - 1.0
    ref = h_nu(p, Q0)
    for off in (1e-9, -1e-9, 2e-6, -2e-6):
        assert h_nu(p, Q0 + off) == pytest.approx(ref, rel=1e-5)
    n = 2
    Q1 = (n + 1) * (q - 1.0)
    ref = h_mu(p, Q1, n)
    for off in (1e-9, -1e-9, 2e-6, -2e-6):
        assert h_mu(p, Q1 + off, n) == pytest.approx(ref, rel=1e-5)


def test_h_branch_band_evaluates_both_forms():
    p = HFamily(1.7, 1.1, 0.9)
    with warnings.catch_warnings():
        warnings.simplefilter("error", IllConditionedWarning)
        # inside the transition band both forms are evaluated; they agree here
        value = h_nu(p, 0.7 + 1e-7)
    assert value == pytest.approx(h_nu(p, 0.7), rel=1e-6)


@pytest.mark.parametrize("q", [1.7, 2.0])
def test_h_nu_monotone_in_a(q):
    a_grid = np.geomspace(0.05, min(4.0, 0.9 * h_a_max(q, 1.1)), 20)
    for Q in (0.3, 0.5, 0.7, 1.4, 2.0, 2.5):
        if abs(Q - 1) < 1e-12:
            continue
        v = np.array([h_nu(HFamily(q, 1.1, a), Q) for a in a_grid])
        d = np.diff(v)
        assert np.all(d > 0) or np.all(d < 0)


def test_h_pi_monotone_in_a():
    a_grid = np.geomspace(0.05, 4.0, 20)
    v = np.diff([h_pi(HFamily(1.7, 1.1, a), 1.7, 2) for a in a_grid])
    assert np.all(v > 0) or np.all(v < 0)


# --------------------------------------------------------------- f-family

def test_f_reduces_to_q_gaussian():
    x = np.linspace(-10, 10, 201)
    assert np.allclose(f_pdf(FFamily(1.25, 0.0), x), qspecial.q_gaussian(1.25, 1.0, x), rtol=1e-14, atol=0)


@pytest.mark.parametrize("q, A", [(1.25, 0.5), (1.4, 1.0), (1.4, 10.0), (1.6, 0.3)])
def test_f_vanishes_at_edges(q, A):
    p = FFamily(q, A)
    assert p.x_max == pytest.approx(A ** ((q - 1) / (q - 2)), rel=1e-14)
    assert f_pdf(p, p.x_max) == 0.0
    assert f_pdf(p, -p.x_max) == 0.0
    assert f_pdf(p, 1.5 * p.x_max) == 0.0
    near = f_pdf(p, p.x_max * (1 - 1e-6))
    assert 0 < near < 1e-2


@pytest.mark.parametrize("q, A", [(1.4, 1.0), (1.25, 4.0), (1.4, 0.1)])
def test_f_normalized_by_independent_quadrature(q, A):
    p = FFamily(q, A)
    val = scipy_integral(lambda x: float(f_pdf(p, x)), 0.0, p.x_max)
    assert 2 * val == pytest.approx(1.0, abs=1e-8)


def test_f_nu_at_one():
    for A in (0.0, 0.5, 4.0):
        assert f_nu(FFamily(1.4, A), 1.0) == pytest.approx(1.0, abs=1e-8)


def test_f_nu_monotone_in_A():
    v = [f_nu(FFamily(1.4, A), 1.4) for A in (0.25, 0.5, 1.0, 2.0, 4.0)]
    d = np.diff(v)
    assert np.all(d > 0) or np.all(d < 0)


@pytest.mark.parametrize("Q", [0.5, 1.4, 2.0, 2.7])
def test_f_nu_endpoint_is_q_gaussian_norm(Q):
    ref = 2 * scipy_integral(lambda x: float(qspecial.q_gaussian(1.4, 1.0, x)) ** Q, 0.0, np.inf)
    assert f_nu(FFamily(1.4, 0.0), Q) == pytest.approx(ref, rel=1e-8)


def test_f_odd_moments_vanish():
    for A in (0.0, 1.0):
        assert abs(f_mu(FFamily(1.4, A), 1.3, 1)) <= 1e-10
        assert abs(f_mu(FFamily(1.4, A), 2.0, 3)) <= 1e-10


def test_f_shifted_moment_independent_of_A():
    q4 = 4 * 1.4 - 3
    assert f_mu(FFamily(1.4, 0.5), q4, 4) == pytest.approx(f_mu(FFamily(1.4, 2.0), q4, 4), abs=1e-6)


def test_f_mu_stable_under_tighter_tolerance():
    p = FFamily(1.4, 1.0)
    tight = QuadratureOptions(abs_tol=ORACLE_OPTS.abs_tol / 2, rel_tol=ORACLE_OPTS.rel_tol / 2)
    assert f_mu(p, 2.0, 2) == pytest.approx(f_mu(p, 2.0, 2, tight), rel=1e-11)
    ref = 2 * scipy_integral(lambda x: x * x * float(f_pdf(p, x)) ** 2, 0.0, p.x_max)
    assert f_mu(p, 2.0, 2) == pytest.approx(ref, rel=1e-10)


def test_f_pi_is_ratio():
    p = FFamily(1.25, 0.7)
    assert f_pi(p, 1.6, 2) == pytest.approx(f_mu(p, 1.6, 2) / f_nu(p, 1.6), rel=1e-14)


@pytest.mark.parametrize("bad", [dict(q=1.0, A=1.0), dict(q=2.0, A=1.0), dict(q=1.4, A=-0.1)])
def test_f_invalid_parameters(bad):
    with pytest.raises(DomainError):
        FFamily(**bad)


def test_negative_Q_is_rejected():
    with pytest.raises(DomainError):
        f_nu(FFamily(1.4, 1.0), -0.5)


def test_divergent_q_gaussian_norm_is_rejected():
    # G_{q,1}^Q has tails |x|^{-2Q/(q-1)}: integrable only for Q > (q-1)/2
    with pytest.raises(DomainError):
        f_nu(FFamily(1.4, 0.0), 0.1)
    assert f_nu(FFamily(1.4, 0.5), 0.1) > 0  # compact support: no divergence


# --------------------------------------------------------------- generic oracles

def test_nu_numeric_of_normalized_densities():
    for d in (q_gaussian_density(1.5, 2.0), HFamily(1.7, 1.1, 1.0).density(), FFamily(1.4, 2.0).density()):
        assert nu_numeric(d, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_numeric_oracles_agree_with_h_closed_form_on_grid():
    for a in (0.1, 0.7, 2.5):
        p = HFamily(1.7, 1.1, a)
        d = p.density()
        for Q in (0.2, 0.5, 0.7, 1.3, 1.7, 2.1, 2.9):
            assert nu_numeric(d, Q) == pytest.approx(h_nu(p, Q), abs=1e-9, rel=1e-9)


def test_numeric_moments_are_deterministic():
    G = q_gaussian_density(1.4, 1.0)
    assert mu_numeric(G, 1.8, 2) == mu_numeric(G, 1.8, 2)


def test_escort_pdf():
    d = HFamily(1.7, 1.1, 1.0).density()
    assert escort_pdf(d, 1.0) is d
    e = escort_pdf(d, 1.6)
    assert nu_numeric(e, 1.0) == pytest.approx(1.0, abs=1e-8)
    assert escort_integral(e, 1.0, 1).value == pytest.approx(0.0, abs=1e-14)
    assert h_pi(HFamily(1.7, 1.1, 1.0), 1.6, 1) == 0.0


def test_escort_integral_reports_error_estimate():
    res = escort_integral(FFamily(1.4, 1.0).density(), 1.7, 2)
    assert res.converged and 0 < res.abs_error_estimate < 1e-10


def test_family_density_factory():
    assert family_density("h", q=1.7, lam=1.1, a=1.0).params["a"] == 1.0
    assert family_density("f", q=1.4, A=1.0).support[1] == pytest.approx(1.0)
    assert family_density("qgauss", q=1.4).support == (-math.inf, math.inf)
    with pytest.raises(DomainError):
        family_density("gauss", q=1.4)


def test_search_constants():
    assert A_MIN == 1e-6 and A_CAP == 1e6
