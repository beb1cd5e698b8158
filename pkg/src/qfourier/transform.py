"""The Q-Fourier transform and its derivative-moment relation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qspecial
from .densities import (ORACLE_OPTS, Density, FFamily, f_mu, mu_numeric,
                        q_gaussian_density)
from .errors import ConvergenceError, DomainError, IllConditionedError
from .quadrature import IntegrationResult, QuadratureOptions, integrate_complex

# one order tighter than the 1e-6 invariance checks downstream
QFT_OPTS = QuadratureOptions(abs_tol=1e-12, rel_tol=1e-11)
# finite-difference derivatives amplify quadrature noise by h^-n
FD_OPTS = QuadratureOptions(abs_tol=1e-14, rel_tol=1e-13)
FD_ABS_TOL = 1e-6
FD_REL_TOL = 1e-4


@dataclass(frozen=True)
class TransformSample:
    xi: float
    value: complex


def moment_factor(q: float, n: int) -> float:
    """``prod_{j=1}^{n-1} [1 + j(q-1)]``; 1 for ``n = 1``."""
    if n < 1 or int(n) != n:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    out = 1.0
    for j in range(1, int(n)):
        out *= 1.0 + j * (q - 1.0)
    return out


def shifted_index(q: float, n: int) -> float:
    """``q_n = n q - (n - 1)``, the escort index probed by the n-th derivative."""
    return n * q - (n - 1)


def qft_integrand(d: Density, Q: float, xi: float):
    """Vectorized ``f(x) exp_Q(i xi x f(x)^(Q-1))``."""
    if Q == 1.0:
        def g(x):
            return d.pdf(x) * np.exp(1j * xi * x)
        return g

    def g(x):
        amp = d.power(x, 1.0)
        arg = xi * x * d.power(x, Q - 1.0)
        return np.where(amp > 0, amp * qspecial.exp_q_imag(Q, arg), 0.0)
    return g


def qft_integral(d: Density, Q: float, xi: float,
                 opts: QuadratureOptions | None = None) -> IntegrationResult:
    """Q-FT of ``d`` at ``xi`` as an :class:`IntegrationResult` (complex value)."""
    if not 1.0 <= Q < 3.0:
        raise DomainError(f"the Q-Fourier transform needs 1 <= Q < 3, got {Q!r}")
    opts = opts or QFT_OPTS
    g = qft_integrand(d, Q, float(xi))
    total = 0j
    err = 0.0
    evals = 0
    converged = True
    worst, worst_err = None, -1.0
    for seg in d.segments:
        res = integrate_complex(g, seg, opts)
        total += res.value
        err += res.abs_error_estimate
        evals += res.evaluations
        converged &= res.converged
        if res.abs_error_estimate > worst_err:
            worst_err, worst = res.abs_error_estimate, res.worst_panel
    return IntegrationResult(total, err, evals, converged, worst)


def qft(d: Density, Q: float, xi: float, opts: QuadratureOptions | None = None) -> complex:
    """Q-Fourier transform ``integral f(x) exp_Q(i xi x f(x)^(Q-1)) dx``.

    Raises
    ------
    ConvergenceError
        With the location of the worst panel when quadrature fails.
    """
    res = qft_integral(d, Q, xi, opts)
    if not res.converged:
        raise ConvergenceError(
            f"Q-FT of {d.name} at Q={Q}, xi={xi} did not converge; "
            f"worst panel {res.worst_panel}, error estimate {res.abs_error_estimate:.3g}", res)
    return complex(res.value)


def qft_samples(d: Density, Q: float, xis, opts=None) -> list:
    return [TransformSample(float(x), qft(d, Q, x, opts)) for x in xis]


def qft_h_closed(q: float, lam: float, xi: float) -> complex:
    """Closed-form q-FT of the h-family at its own index: ``cos_q(lam xi)``."""
    if q <= 1:
        raise DomainError(f"q must exceed 1, got {q!r}")
    return complex(qspecial.cos_q(q, lam * xi), 0.0)


def qft_f_reference(q: float, xi: float, opts: QuadratureOptions | None = None) -> complex:
    """q-FT of ``G_{q,1}`` at index ``q``, the A-independent value for the f-family."""
    if not 1.0 < q < 2.0:
        raise DomainError(f"f-family reference needs 1 < q < 2, got {q!r}")
    return qft(q_gaussian_density(q, 1.0), q, xi, opts)


def _fd_derivative(F, n, h):
    """Central difference estimate of the n-th derivative of ``F`` at 0 with step ``h``."""
    if n == 1:
        return (F(h) - F(-h)) / (2 * h)
    if n == 2:
        return (F(h) - 2 * F(0.0) + F(-h)) / h ** 2
    if n == 3:
        return (F(2 * h) - 2 * F(h) + 2 * F(-h) - F(-2 * h)) / (2 * h ** 3)
    if n == 4:
        return (F(2 * h) - 4 * F(h) + 6 * F(0.0) - 4 * F(-h) + F(-2 * h)) / h ** 4
    raise DomainError(f"derivative order must be in 1..4, got {n}")


def qft_derivative_at_origin(d: Density, q: float, n: int, step: float | None = None,
                             opts: QuadratureOptions | None = None) -> complex:
    """n-th derivative of ``F_q[d]`` at ``xi = 0`` by Richardson-extrapolated differences.

    Steps ``h, 2h, 4h`` give two extrapolation levels. The two top-level
    estimates must agree within ``max(1e-6, 1e-4 |value|)``.
    """
    opts = opts or FD_OPTS
    h = step if step is not None else 1e-2 / (1.0 + d.scale)
    cache = {}

    def F(xi):
        key = round(xi / h)
        if key not in cache:
            cache[key] = qft(d, q, xi, opts)
        return cache[key]

    D = [_fd_derivative(F, n, h * 2 ** k) for k in range(3)]
    # error terms are even in h: c2 h^2 + c4 h^4 + ...
    R1 = [(4 * D[k] - D[k + 1]) / 3 for k in range(2)]
    R2 = (16 * R1[0] - R1[1]) / 15
    spread = abs(R2 - R1[0])
    if spread > max(FD_ABS_TOL, FD_REL_TOL * abs(R2)):
        raise IllConditionedError(
            f"Richardson levels disagree for d^{n}F/dxi^{n} of {d.name}: {R1[0]} vs {R2}")
    return complex(R2)


def mu_from_qft_derivative(d: Density, q: float, n: int, step: float | None = None,
                           opts: QuadratureOptions | None = None) -> float:
    """Estimate ``mu_{q_n}^(n)[d]`` from the n-th derivative of the q-FT at the origin."""
    if not 1 <= n <= 4:
        raise DomainError(f"n must be in 1..4, got {n}")
    deriv = qft_derivative_at_origin(d, q, n, step, opts)
    return float((deriv / (1j ** n * moment_factor(q, n))).real)


def y_substitution_check(p: FFamily, n: int, opts: QuadratureOptions | None = None) -> tuple:
    """``(mu_{q_n}^(n)[f_{q,A}], mu_{q_n}^(n)[G_{q,1}])``, which must coincide.

    The left side integrates in ``x`` over the compact support, the right
    side over the real line; the substitution ``y = x u^(-(q-1)/(2-q))``
    maps one integral onto the other.
    """
    if n < 1 or n % 2:
        raise DomainError(f"n must be a positive even integer, got {n!r}")
    qn = shifted_index(p.q, n)
    lhs = f_mu(p, qn, n, opts)
    rhs = mu_numeric(q_gaussian_density(p.q, 1.0), qn, n, opts or ORACLE_OPTS)
    return lhs, rhs


def degeneracy_spread(values) -> float:
    """Largest pairwise distance between transform values."""
    v = np.asarray(list(values), dtype=complex)
    return float(np.max(np.abs(v[:, None] - v[None, :])))

