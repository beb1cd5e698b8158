"""q-deformed elementary functions, the Gamma function and the q-Gaussian.

All functions accept scalars or numpy arrays and broadcast like ufuncs.
Values of ``q`` within ``Q_ONE_EPS`` of 1 are routed to the classical
``exp``/``cos``/``sin`` to avoid the cancellation in ``1/(q-1)``.
"""

from __future__ import annotations

import contextlib
import math

import numpy as np

from .errors import DomainError

Q_ONE_EPS = 1e-12

# Lanczos coefficients, g = 607/128, 15 terms (Godfrey).
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Multiplicative fault injected into c_q by ``corrupted_cq``; 1.0 in normal use.
_cq_fault = 1.0


def _is_classical(q):
    return abs(q - 1.0) < Q_ONE_EPS


def _lanczos_series(z):
    # z is the shifted argument x - 1
    s = _LANCZOS_C[0]
    for i in range(1, len(_LANCZOS_C)):
        s += _LANCZOS_C[i] / (z + i)
    return s


def gamma(x: float) -> float:
    """Gamma function for positive real arguments.

    Lanczos approximation (g = 607/128, 15 coefficients). Arguments below
    1/2 use ``Gamma(x) = Gamma(x + 1) / x`` instead of reflection since only
    positive arguments occur here. Relative error is below 1e-13 on (0, 30].

    Raises
    ------
    DomainError
        If ``x <= 0``.
    """
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"gamma is only implemented for x > 0, got {x!r}")
    if x < 0.5:
        return gamma(x + 1.0) / x
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    # split the power so that t**(z + 0.5) cannot overflow before exp(-t) damps it
    half = 0.5 * (z + 0.5)
    tp = math.pow(t, half)
    return _SQRT_2PI * tp * (tp * math.exp(-t)) * _lanczos_series(z)


def lgamma(x: float) -> float:
    """Natural log of :func:`gamma` for ``x > 0``, safe for large arguments."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"lgamma is only implemented for x > 0, got {x!r}")
    if x < 0.5:
        return lgamma(x + 1.0) - math.log(x)
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (z + 0.5) * math.log(t) - t + math.log(_lanczos_series(z))


def _lgamma_half_ratio(x: float) -> float:
    """``lgamma(x) - lgamma(x + 1/2)`` for ``x >= 0.5`` without cancellation.

    Both Lanczos forms are expanded and the large terms subtracted analytically.
    """
    t1 = x - 0.5 + _LANCZOS_G   # t for lgamma(x)
    t2 = x + _LANCZOS_G         # t for lgamma(x + 1/2)
    return ((x - 0.5) * math.log1p(-0.5 / t2) - 0.5 * math.log(t2) + 0.5
            + math.log(_lanczos_series(x - 1.0) / _lanczos_series(x - 0.5)))


def exp_q_real(q, x):
    """Real q-exponential ``[1 + (1-q) x]^(1/(1-q))``.

    For ``q < 1`` a non-positive bracket gives 0 (compact-support cutoff).
    For ``q > 1`` a non-positive bracket is a pole and raises
    :class:`DomainError`.
    """
    x = np.asarray(x, dtype=float)
    if _is_classical(q):
        out = np.exp(x)
        return out if out.ndim else float(out)
    bracket = 1.0 + (1.0 - q) * x
    if q > 1.0:
        if np.any(bracket <= 0.0):
            raise DomainError(
                f"exp_q with q={q} is singular where 1+(1-q)x <= 0 (x >= {1.0 / (q - 1.0)})"
            )
        out = bracket ** (1.0 / (1.0 - q))
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(bracket > 0.0, np.abs(bracket) ** (1.0 / (1.0 - q)), 0.0)
    return out if out.ndim else float(out)


def _check_transform_q(q):
    if not 1.0 <= q < 3.0:
        raise DomainError(f"q-Fourier index must satisfy 1 <= q < 3, got {q!r}")


def exp_q_imag(q, x):
    """Principal value of ``[1 + (1-q) i x]^(1/(1-q))`` for real ``x``.

    The branch is ``Arg in (-pi, pi]``; since the real part of the base is 1
    it never touches the cut.
    """
    _check_transform_q(q)
    x = np.asarray(x, dtype=float)
    if _is_classical(q):
        out = np.exp(1j * x)
    else:
        c = 1.0 / (1.0 - q)
        w = (1.0 - q) * x
        log_mod = 0.5 * np.log1p(w * w)
        out = np.exp(c * log_mod) * np.exp(1j * (c * np.arctan(w)))
    return out if out.ndim else complex(out)


def _trig_parts(q, x):
    d = q - 1.0
    phase = np.arctan(d * x) / d
    modulus = np.exp(-np.log1p((d * x) ** 2) / (2.0 * d))
    return phase, modulus


def cos_q(q, x):
    """q-cosine ``cos(arctan((q-1)x)/(q-1)) / [1+(q-1)^2 x^2]^(1/(2(q-1)))``."""
    if q < 1.0:
        raise DomainError(f"cos_q is defined here for q >= 1, got {q!r}")
    x = np.asarray(x, dtype=float)
    if _is_classical(q):
        out = np.cos(x)
    else:
        phase, modulus = _trig_parts(q, x)
        out = np.cos(phase) * modulus
    return out if out.ndim else float(out)


def sin_q(q, x):
    """q-sine, the imaginary part of :func:`exp_q_imag`."""
    if q < 1.0:
        raise DomainError(f"sin_q is defined here for q >= 1, got {q!r}")
    x = np.asarray(x, dtype=float)
    if _is_classical(q):
        out = np.sin(x)
    else:
        phase, modulus = _trig_parts(q, x)
        out = np.sin(phase) * modulus
    return out if out.ndim else float(out)


def cos_q_decreasing_limit(q: float) -> float:
    """End of the initial interval ``(0, x*)`` on which ``cos_q`` strictly decreases.

    ``d/dx cos_q(x) = -sin(q * phase(x)) / modulus(x)**q``, so the decrease
    stops once ``q * phase`` reaches pi. For ``q >= 2`` that never happens.
    """
    if q < 1.0:
        raise DomainError(f"q must be >= 1, got {q!r}")
    if _is_classical(q):
        return math.pi
    if q >= 2.0:
        return math.inf
    d = q - 1.0
    return math.tan(math.pi * d / q) / d


def c_q(q: float) -> float:
    """Normalization constant of the q-Gaussian for ``1 < q < 3``."""
    if not 1.0 < q < 3.0:
        raise DomainError(f"c_q requires 1 < q < 3, got {q!r}")
    if _is_classical(q):
        return math.sqrt(math.pi) * _cq_fault
    d = q - 1.0
    a1 = (3.0 - q) / (2.0 * d)
    a2 = 1.0 / d  # = a1 + 1/2
    if a2 <= 100.0:
        ratio = gamma(a1) / gamma(a2)
    else:
        ratio = math.exp(_lgamma_half_ratio(a1))
    return math.sqrt(math.pi) * ratio / math.sqrt(d) * _cq_fault


def q_gaussian(q, beta, x):
    """q-Gaussian density ``sqrt(beta)/C_q * exp_q(-beta x^2)``, ``1 < q < 3``."""
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    norm = math.sqrt(beta) / c_q(q)
    return norm * exp_q_real(q, -beta * np.asarray(x, dtype=float) ** 2)


def log_q_gaussian(q, beta, x):
    """Logarithm of :func:`q_gaussian`, finite for all real ``x``."""
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    x = np.asarray(x, dtype=float)
    lognorm = 0.5 * math.log(beta) - math.log(c_q(q))
    if _is_classical(q):
        out = lognorm - beta * x * x
    else:
        d = q - 1.0
        # log1p(d*beta*x^2) through logaddexp so that huge x stays finite
        with np.errstate(divide="ignore"):
            lx = np.log(np.abs(x))
        out = lognorm - np.logaddexp(0.0, math.log(d * beta) + 2.0 * lx) / d
    return out if out.ndim else float(out)


def has_finite_variance(q: float) -> bool:
    """Whether the q-Gaussian with index ``q`` has a finite second moment."""
    return q < 5.0 / 3.0


@contextlib.contextmanager
def corrupted_cq(factor: float = 1.01):
    """Scale every ``c_q`` value by ``factor`` inside the block (fault-injection hook)."""
    global _cq_fault
    saved = _cq_fault
    _cq_fault = float(factor)
    try:
        yield
    finally:
        _cq_fault = saved
