import math

import numpy as np
import pytest
from scipy import integrate as sp_integrate

from qfourier import qspecial
from qfourier.densities import FFamily, HFamily, f_pdf, mu_numeric, q_gaussian_density
from qfourier.errors import ConvergenceError, DomainError
from qfourier.quadrature import QuadratureOptions
from qfourier.transform import (degeneracy_spread, moment_factor, mu_from_qft_derivative, qft,
                                qft_f_reference, qft_h_closed, qft_integral, qft_samples,
                                shifted_index, y_substitution_check)

XI = np.linspace(0.0, 5.0, 21)
DENSITIES = [
    ("h-1.7", HFamily(1.7, 1.1, 1.0).density(), 1.7),
    ("h-2", HFamily(2.0, 1.1, 0.5).density(), 2.0),
    ("h-2.5", HFamily(2.5, 0.8, 2.0).density(), 2.5),
    ("f-1.4", FFamily(1.4, 1.0).density(), 1.4),
    ("f-1.25", FFamily(1.25, 10.0).density(), 1.25),
    ("G-1.4", q_gaussian_density(1.4, 1.0), 1.4),
    ("G-2.5", q_gaussian_density(2.5, 3.0), 2.5),
]


@pytest.mark.parametrize("name, d, q", DENSITIES, ids=[x[0] for x in DENSITIES])
@pytest.mark.parametrize("Q", [1.0, 1.3, 2.2])
def test_transform_at_origin_is_one(name, d, q, Q):
    assert abs(qft(d, Q, 0.0) - 1.0) < 1e-10


@pytest.mark.parametrize("name, d, q", DENSITIES, ids=[x[0] for x in DENSITIES])
def test_even_density_gives_real_even_transform(name, d, q):
    for Q in (q, 1.6):
        for xi in (0.7, 2.3):
            plus, minus = qft_integral(d, Q, xi), qft_integral(d, Q, -xi)
            assert abs(plus.value.imag) <= 5 * plus.abs_error_estimate + 1e-15
            assert abs(plus.value.real - minus.value.real) <= plus.abs_error_estimate + minus.abs_error_estimate


def test_classical_transform_of_h_against_scipy():
    p = HFamily(1.7, 1.1, 1.0)
    xi = 1.3
    ref = 2 * sp_integrate.quad(lambda x: float(p.density().pdf(x)) * math.cos(xi * x), p.a, p.b,
                                epsabs=1e-14, epsrel=1e-13)[0]
    assert qft(p.density(), 1.0, xi) == pytest.approx(ref, abs=1e-12)


def test_q_transform_of_f_against_scipy():
    p = FFamily(1.4, 1.0)
    Q, xi = 1.8, 1.5

    def integrand(x):
        f = float(f_pdf(p, x))
        return f * qspecial.exp_q_imag(Q, xi * x * f ** (Q - 1)).real

    ref = 2 * sp_integrate.quad(integrand, 0.0, p.x_max, epsabs=1e-14, epsrel=1e-13, limit=500)[0]
    assert qft(p.density(), Q, xi).real == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("xi", [30.0, 3000.0])
def test_large_xi_against_scipy(xi):
    # the phase of exp_Q(i y) is bounded, so large xi only shrinks the modulus
    p = HFamily(1.7, 1.1, 1.0)

    def integrand(x):
        f = float(p.density().pdf(x))
        return f * qspecial.exp_q_imag(1.3, xi * x * f ** 0.3).real

    ref = 2 * sp_integrate.quad(integrand, p.a, p.b, epsabs=1e-20, epsrel=1e-13, limit=1000)[0]
    assert qft(p.density(), 1.3, xi).real == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("q", [1.7, 2.0, 2.5])
def test_h_transform_independent_of_a(q):
    lam = 1.1
    ref = qspecial.cos_q(q, lam * XI)
    for a in (0.5, 1.0, 2.0):
        vals = np.array([qft(HFamily(q, lam, a).density(), q, xi) for xi in XI])
        assert np.max(np.abs(vals - ref)) < 1e-6


def test_h_transform_example_at_two():
    d = HFamily(1.7, 1.1, 1.0).density()
    assert abs(qft(d, 1.7, 2.0) - qspecial.cos_q(1.7, 2.2)) < 1e-7


def test_h_closed_transform():
    assert qft_h_closed(1.7, 1.1, 0.0) == 1 + 0j
    assert qft_h_closed(2.0, 1.0, 1.0) == pytest.approx(0.5 + 0j, abs=1e-15)
    assert abs(qft_h_closed(1.7, 1.1, 1.0) - qft(HFamily(1.7, 1.1, 1.0).density(), 1.7, 1.0)) < 1e-7


@pytest.mark.parametrize("q", [1.25, 1.4])
def test_f_transform_independent_of_A(q):
    ref = np.array([qft_f_reference(q, xi) for xi in XI])
    assert qft_f_reference(q, 0.0) == pytest.approx(1 + 0j, abs=1e-12)
    for A in (0.1, 1.0, 10.0):
        vals = np.array([qft(FFamily(q, A).density(), q, xi) for xi in XI])
        assert np.max(np.abs(vals - ref)) < 1e-6


def _separation(d1, d2, Q, xi=1.0):
    r1, r2 = qft_integral(d1, Q, xi), qft_integral(d2, Q, xi)
    return abs(r1.value - r2.value) / (r1.abs_error_estimate + r2.abs_error_estimate)


@pytest.mark.parametrize("Q", [1.2, 1.5, 1.9, 2.2])
def test_h_transform_separates_a_off_q(Q):
    h1, h2 = HFamily(1.7, 1.1, 0.5).density(), HFamily(1.7, 1.1, 2.0).density()
    assert _separation(h1, h2, Q) > 10


@pytest.mark.parametrize("Q", [1.1, 1.6, 2.0])
def test_f_transform_separates_A_off_q(Q):
    f1, f2 = FFamily(1.4, 0.5).density(), FFamily(1.4, 2.0).density()
    assert _separation(f1, f2, Q) > 10


def test_degeneracy_spread():
    ds = [HFamily(2.0, 1.1, a).density() for a in (0.5, 1.0, 2.0)]
    assert degeneracy_spread([qft(d, 2.0, 1.7) for d in ds]) < 1e-12
    assert degeneracy_spread([qft(d, 1.5, 1.7) for d in ds]) > 1e-3


def test_qft_samples_preserve_order():
    d = q_gaussian_density(1.4, 1.0)
    samples = qft_samples(d, 1.4, [0.3, 0.1, 0.2])
    assert [s.xi for s in samples] == [0.3, 0.1, 0.2]


def test_qft_domain():
    d = q_gaussian_density(1.4, 1.0)
    for Q in (0.9, 3.0):
        with pytest.raises(DomainError):
            qft(d, Q, 1.0)


def test_qft_non_convergence_names_the_worst_panel():
    d = FFamily(1.4, 1.0).density()
    opts = QuadratureOptions(abs_tol=1e-16, rel_tol=1e-16, max_evaluations=500)
    with pytest.raises(ConvergenceError) as info:
        qft(d, 1.3, 1.0, opts)
    assert info.value.result is not None and info.value.result.worst_panel is not None
    assert "worst panel" in str(info.value)


def test_moment_factor():
    assert moment_factor(1.3, 1) == 1.0
    assert moment_factor(1.7, 2) == pytest.approx(1.7)
    assert moment_factor(1.5, 4) == pytest.approx(1.5 * 2.0 * 2.5)
    for n in range(1, 6):
        assert moment_factor(1.0, n) == 1.0
        assert moment_factor(2.4, n) > 0
    with pytest.raises(DomainError):
        moment_factor(1.5, 0)


def test_shifted_index():
    assert shifted_index(1.7, 1) == 1.7
    assert shifted_index(1.7, 2) == pytest.approx(2.4)
    assert shifted_index(1.4, 4) == pytest.approx(2.6)


def test_derivative_relation_h():
    d = HFamily(1.7, 1.1, 1.0).density()
    assert abs(mu_from_qft_derivative(d, 1.7, 1)) < 1e-6
    assert mu_from_qft_derivative(d, 1.7, 2) == pytest.approx(1.21, rel=1e-4)


@pytest.mark.parametrize("d, q", [(q_gaussian_density(1.4, 1.0), 1.4), (q_gaussian_density(1.25, 2.0), 1.25),
                                  (FFamily(1.4, 2.0).density(), 1.4), (HFamily(2.0, 1.1, 2.0).density(), 2.0)])
def test_derivative_relation_second_order(d, q):
    direct = mu_numeric(d, shifted_index(q, 2), 2)
    assert mu_from_qft_derivative(d, q, 2) == pytest.approx(direct, rel=1e-4)


def test_derivative_relation_fourth_order():
    d = HFamily(1.7, 1.1, 1.0).density()
    assert mu_from_qft_derivative(d, 1.7, 4) == pytest.approx(1.1 ** 4, rel=1e-4)


def test_y_substitution():
    for A, n in ((1.0, 2), (0.0, 2), (2.0, 4)):
        lhs, rhs = y_substitution_check(FFamily(1.4, A), n)
        assert lhs == pytest.approx(rhs, abs=1e-6)
    lhs, rhs = y_substitution_check(FFamily(1.4, 0.0), 2)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    with pytest.raises(DomainError):
        y_substitution_check(FFamily(1.4, 1.0), 3)
