"""Parametric densities and their escort (Q-) integrals.

Two counterexample families are provided alongside the q-Gaussian:

``HFamily``
    truncated power law ``(lam/|x|)^(1/(q-1))`` on ``a < |x| < b`` whose
    upper edge ``b`` is fixed by normalization. Its Q-norm and Q-moments
    have closed forms, including the logarithmic branches.
``FFamily``
    a deformed q-Gaussian on ``|x| < x_max = A^((q-1)/(q-2))``; its escort
    integrals are computed by quadrature.

The generic oracles :func:`nu_numeric` and :func:`mu_numeric` integrate
``f**Q`` and ``x**n f**Q`` over the support of any :class:`Density` and are
used to validate every closed form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from . import qspecial
from .errors import (ConvergenceError, DomainError, IllConditionedWarning,
                     InadmissibleParameterError)
from .quadrature import Interval, IntegrationResult, QuadratureOptions, integrate

# branch selection around removable singularities of the closed forms
BRANCH_EPS = 1e-9
BRANCH_BAND = 1e-6
BRANCH_AGREEMENT = 1e-6

# admissible hidden-parameter range for sweeps and inversion
A_MIN = 1e-6
A_CAP = 1e6

# Tolerances for the quadrature oracles. Tighter than the engine defaults
# because closed forms are checked against them at 1e-9.
ORACLE_OPTS = QuadratureOptions(abs_tol=1e-13, rel_tol=1e-12)


def _expm1_ratio(r, L):
    """``expm1(r*L)/r``, continuous through ``r = 0`` where it equals ``L``."""
    if r == 0.0:
        return L
    return math.expm1(r * L) / r


def _log1p_ratio(p, s):
    """``log1p(p*s)/p``, continuous through ``p = 0`` where it equals ``s``."""
    if p == 0.0:
        return s
    return math.log1p(p * s) / p


# --------------------------------------------------------------------------
# Density container
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Density:
    """An evaluatable density.

    ``segments`` are the intervals where the pdf is positive; their edge
    hints describe the pdf itself (exponents are rescaled for ``f**Q``).
    ``logpdf``, when given, is used for ``f**Q`` so that powers of tiny
    values neither underflow nor lose precision.
    """

    name: str
    pdf: Callable[[np.ndarray], np.ndarray]
    segments: tuple
    logpdf: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: Mapping[str, float] = field(default_factory=dict)
    closed_forms: Mapping[str, Callable] = field(default_factory=dict)
    even: bool = True
    scale: float = 1.0

    @property
    def support(self) -> tuple:
        return (self.segments[0].lo, self.segments[-1].hi)

    def power(self, x, Q):
        """``pdf(x) ** Q`` with zeros outside the support."""
        x = np.asarray(x, dtype=float)
        if Q == 0.0:
            return (self.pdf(x) > 0).astype(float)
        if self.logpdf is None:
            return np.asarray(self.pdf(x)) ** Q
        lp = np.asarray(self.logpdf(x))
        with np.errstate(under="ignore"):
            return np.where(np.isneginf(lp), 0.0, np.exp(Q * np.where(np.isneginf(lp), 0.0, lp)))

    def moment_integrand(self, x, Q, n):
        """``x**n * pdf(x)**Q``, assembled in log space when ``logpdf`` is known."""
        x = np.asarray(x, dtype=float)
        if n == 0:
            return self.power(x, Q)
        if self.logpdf is None or Q == 0.0:
            return x ** n * self.power(x, Q)
        lp = np.asarray(self.logpdf(x))
        dead = np.isneginf(lp) | (x == 0)
        with np.errstate(divide="ignore", under="ignore"):
            mag = np.exp(n * np.log(np.where(dead, 1.0, np.abs(x))) + Q * np.where(dead, 0.0, lp))
        sign = np.sign(x) ** n
        return np.where(dead, 0.0, sign * mag)

    def __call__(self, x):
        return self.pdf(x)


def _finish(res: IntegrationResult, what: str) -> float:
    if not res.converged:
        raise ConvergenceError(
            f"{what}: quadrature did not converge (error estimate "
            f"{res.abs_error_estimate:.3g}, worst panel {res.worst_panel})", res)
    return float(res.value)


def escort_integral(d: Density, Q: float, n: int = 0,
                    opts: QuadratureOptions | None = None) -> IntegrationResult:
    """``integral of x**n * pdf(x)**Q`` over the support, as an :class:`IntegrationResult`."""
    if n < 0 or int(n) != n:
        raise DomainError(f"moment order must be a non-negative integer, got {n!r}")
    opts = opts or ORACLE_OPTS
    total = 0.0
    err = 0.0
    evals = 0
    converged = True
    worst = None
    worst_err = -1.0
    for seg in d.segments:
        iv = seg.scaled_edges(Q)
        res = integrate(lambda x: d.moment_integrand(x, Q, n), iv, opts)
        total += res.value
        err += res.abs_error_estimate
        evals += res.evaluations
        converged &= res.converged
        if res.abs_error_estimate > worst_err:
            worst_err, worst = res.abs_error_estimate, res.worst_panel
    return IntegrationResult(total, err, evals, converged, worst)


def nu_numeric(d: Density, Q: float, opts: QuadratureOptions | None = None) -> float:
    """Q-norm ``integral of pdf**Q`` by quadrature."""
    return _finish(escort_integral(d, Q, 0, opts), f"nu_{Q}[{d.name}]")


def mu_numeric(d: Density, Q: float, n: int, opts: QuadratureOptions | None = None) -> float:
    """Unnormalized n-th Q-moment ``integral of x**n pdf**Q`` by quadrature."""
    if n < 1:
        raise DomainError(f"moment order must be a positive integer, got {n!r}")
    return _finish(escort_integral(d, Q, n, opts), f"mu_{Q}^({n})[{d.name}]")


def pi_numeric(d: Density, Q: float, n: int, opts: QuadratureOptions | None = None) -> float:
    """Normalized n-th Q-moment, the ratio of :func:`mu_numeric` and :func:`nu_numeric`."""
    return mu_numeric(d, Q, n, opts) / nu_numeric(d, Q, opts)


def escort_pdf(d: Density, Q: float, opts: QuadratureOptions | None = None) -> Density:
    """Escort density ``pdf**Q / nu_Q``, on the same support."""
    if Q == 1.0:
        return d
    nu = nu_numeric(d, Q, opts)
    log_nu = math.log(nu)

    def pdf(x):
        return d.power(x, Q) / nu

    logpdf = None
    if d.logpdf is not None:
        def logpdf(x):
            lp = np.asarray(d.logpdf(x))
            return np.where(np.isneginf(lp), -np.inf, Q * lp - log_nu)

    segments = tuple(s.scaled_edges(Q) for s in d.segments)
    params = dict(d.params, escort_Q=Q)
    return Density(f"escort_{Q}({d.name})", pdf, segments, logpdf, params,
                   even=d.even, scale=d.scale)


# --------------------------------------------------------------------------
# q-Gaussian
# --------------------------------------------------------------------------

def q_gaussian_density(q: float, beta: float = 1.0) -> Density:
    """The q-Gaussian ``G_{q,beta}`` as a :class:`Density` on the real line."""
    qspecial.c_q(q)  # validates q
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    # infinite ends always go through the rational + double-exponential map
    segments = (Interval(-math.inf, 0.0), Interval(0.0, math.inf))
    return Density(
        f"G_{{{q},{beta}}}",
        lambda x: qspecial.q_gaussian(q, beta, x),
        segments,
        lambda x: qspecial.log_q_gaussian(q, beta, x),
        {"q": q, "beta": beta},
        scale=1.0 / math.sqrt(beta),
    )


# --------------------------------------------------------------------------
# h-family
# --------------------------------------------------------------------------

def h_a_max(q: float, lam: float) -> float:
    """Supremum of admissible ``a``; infinite for ``q >= 2``."""
    if q <= 1 or lam <= 0:
        raise DomainError(f"h-family needs q > 1 and lambda > 0, got q={q}, lambda={lam}")
    if q >= 2.0:
        return math.inf
    base = (2.0 - q) / (2.0 * (q - 1.0)) * lam ** (1.0 / (1.0 - q))
    return base ** ((q - 1.0) / (q - 2.0))


def h_b_bracket(q: float, lam: float, a: float) -> float:
    """The bracket ``(q-2)/(2(q-1)) lam^(1/(1-q)) + a^((q-2)/(q-1))`` of the ``b`` formula."""
    return (q - 2.0) / (2.0 * (q - 1.0)) * lam ** (1.0 / (1.0 - q)) + a ** ((q - 2.0) / (q - 1.0))


def _h_log_b_over_a(q, lam, a):
    # log(b/a) = log1p(p*s/2)/p with p=(q-2)/(q-1), s=lam^(1/(1-q)) a^(-p);
    # this form is the q != 2 formula and tends to the q = 2 one as p -> 0
    p = (q - 2.0) / (q - 1.0)
    s = math.exp(math.log(lam) / (1.0 - q) - p * math.log(a))
    if 1.0 + 0.5 * p * s <= 0.0:
        raise InadmissibleParameterError(
            f"a={a} is not admissible for q={q}, lambda={lam} (a_max={h_a_max(q, lam)})")
    return _log1p_ratio(p, 0.5 * s)


def h_b(q: float, lam: float, a: float) -> float:
    """Upper support edge ``b`` that normalizes ``h_{q,lam,a}``.

    Raises
    ------
    InadmissibleParameterError
        For ``1 < q < 2`` and ``a >= h_a_max(q, lam)``.
    """
    if q <= 1 or lam <= 0 or a <= 0:
        raise DomainError(f"h-family needs q > 1 and lambda, a > 0; got {q}, {lam}, {a}")
    if abs(q - 2.0) < BRANCH_EPS:
        return a * math.exp(1.0 / (2.0 * lam))
    return a * math.exp(_h_log_b_over_a(q, lam, a))


@dataclass(frozen=True)
class HFamily:
    q: float
    lam: float
    a: float
    b: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "b", h_b(self.q, self.lam, self.a))

    @property
    def log_b_over_a(self) -> float:
        if abs(self.q - 2.0) < BRANCH_EPS:
            return 1.0 / (2.0 * self.lam)
        return _h_log_b_over_a(self.q, self.lam, self.a)

    def density(self) -> Density:
        return h_density(self)


def h_pdf(p: HFamily, x):
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    inside = (ax >= p.a) & (ax <= p.b)
    with np.errstate(divide="ignore"):
        out = np.where(inside, (p.lam / np.where(inside, ax, 1.0)) ** (1.0 / (p.q - 1.0)), 0.0)
    return out if out.ndim else float(out)


def h_logpdf(p: HFamily, x):
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    inside = (ax >= p.a) & (ax <= p.b)
    with np.errstate(divide="ignore"):
        out = np.where(inside, (math.log(p.lam) - np.log(np.where(inside, ax, 1.0))) / (p.q - 1.0),
                       -np.inf)
    return out if out.ndim else float(out)


def _h_segments(p: HFamily):
    bps = ()
    if p.b / p.a > 100.0:
        # geometric cuts keep the steep power law near a well sampled
        k = int(math.log10(p.b / p.a))
        bps = tuple(p.a * 10.0 ** j for j in range(1, k + 1))
    right = Interval(p.a, p.b, breakpoints=bps)
    left = Interval(-p.b, -p.a, breakpoints=tuple(-v for v in bps))
    return (left, right)


def h_density(p: HFamily) -> Density:
    return Density(
        f"h_{{{p.q},{p.lam},{p.a}}}",
        lambda x: h_pdf(p, x),
        _h_segments(p),
        lambda x: h_logpdf(p, x),
        {"q": p.q, "lambda": p.lam, "a": p.a, "b": p.b},
        closed_forms={
            "nu": lambda Q: h_nu(p, Q),
            "mu": lambda Q, n: h_mu(p, Q, n),
            "pi": lambda Q, n: h_pi(p, Q, n),
        },
        scale=p.lam,
    )


def _h_power_integral(p: HFamily, Q: float, n: int) -> float:
    """``2 * integral_a^b x^n (lam/x)^(Q/(q-1)) dx`` in the generic, cancellation-free form."""
    d = p.q - 1.0
    r = ((n + 1) * d - Q) / d
    L = p.log_b_over_a
    return 2.0 * math.exp(Q / d * math.log(p.lam) + r * math.log(p.a)) * _expm1_ratio(r, L)


def _h_log_branch(p: HFamily, n: int) -> float:
    # value at Q = (n+1)(q-1): x^n (lam/x)^(n+1) integrates to lam^(n+1) ln(b/a)
    return 2.0 * p.lam ** (n + 1) * p.log_b_over_a


def _h_branch_select(p, Q, n, what):
    branch_point = (n + 1) * (p.q - 1.0)
    dist = abs(Q - branch_point)
    if dist < BRANCH_EPS:
        return _h_log_branch(p, n)
    value = _h_power_integral(p, Q, n)
    if dist <= BRANCH_BAND:
        log_value = _h_log_branch(p, n)
        if abs(value - log_value) > BRANCH_AGREEMENT * abs(value):
            warnings.warn(
                f"{what}: generic and logarithmic branches differ by "
                f"{abs(value - log_value) / abs(value):.2e} at |Q - {branch_point}| = {dist:.1e}",
                IllConditionedWarning, stacklevel=3)
    return value


def h_nu(p: HFamily, Q: float) -> float:
    """Closed-form Q-norm of ``h_{q,lam,a}``, log branch at ``Q = q - 1``."""
    return _h_branch_select(p, Q, 0, "h_nu")


def h_mu(p: HFamily, Q: float, n: int) -> float:
    """Closed-form unnormalized n-th Q-moment; zero for odd ``n``."""
    if n < 1 or int(n) != n:
        raise DomainError(f"moment order must be a positive integer, got {n!r}")
    if n % 2:
        return 0.0
    return _h_branch_select(p, Q, n, "h_mu")


def h_pi(p: HFamily, Q: float, n: int) -> float:
    """Closed-form normalized n-th Q-moment (three branches).

    At ``Q = q-1`` it is ``(b^n - a^n) / (n ln(b/a))``, at ``Q = (n+1)(q-1)``
    it is ``n a^n b^n ln(b/a) / (b^n - a^n)``, and otherwise the ratio of the
    two power-law integrals.
    """
    if n < 1 or int(n) != n:
        raise DomainError(f"moment order must be a positive integer, got {n!r}")
    if n % 2:
        return 0.0
    d = p.q - 1.0
    L = p.log_b_over_a
    # (b^n - a^n) = a^n expm1(nL)
    an = p.a ** n
    if abs(Q - d) < BRANCH_EPS:
        return an * math.expm1(n * L) / (n * L)
    if abs(Q - (n + 1) * d) < BRANCH_EPS:
        # n a^n b^n L / (b^n - a^n) = n a^n e^{nL} L / expm1(nL)
        return n * an * L * math.exp(n * L) / math.expm1(n * L)
    r0 = (d - Q) / d
    rn = ((n + 1) * d - Q) / d
    # ratio of a^{rn} expm1(rn L)/rn to a^{r0} expm1(r0 L)/r0, with a^{rn-r0} = a^n
    return an * _expm1_ratio(rn, L) / _expm1_ratio(r0, L)


# --------------------------------------------------------------------------
# f-family
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FFamily:
    q: float
    A: float
    x_max: float = field(init=False)

    def __post_init__(self):
        if not 1.0 < self.q < 2.0:
            raise DomainError(f"f-family requires 1 < q < 2, got {self.q!r}")
        if not self.A >= 0.0:
            raise DomainError(f"f-family requires A >= 0, got {self.A!r}")
        if self.A == 0.0:
            xm = math.inf
        else:
            xm = math.exp((self.q - 1.0) / (self.q - 2.0) * math.log(self.A))
        object.__setattr__(self, "x_max", xm)

    @property
    def edge_exponent(self) -> float:
        """Exponent of the pdf's vanishing ``u**(1/(2-q))`` at ``±x_max``."""
        return 1.0 / (2.0 - self.q)

    def density(self) -> Density:
        return f_density(self)


def f_logpdf(p: FFamily, x):
    """Log of the f-family pdf.

    With ``u = 1 - A|x|^((2-q)/(q-1))`` and ``y = x u^(-(q-1)/(2-q))``
    the pdf is ``u^(1/(q-2)) exp_q(-y^2) / C_q``; the log form stays finite
    up to the support edge.
    """
    x = np.asarray(x, dtype=float)
    q = p.q
    if p.A == 0.0:
        return qspecial.log_q_gaussian(q, 1.0, x)
    expo = (2.0 - q) / (q - 1.0)
    ax = np.abs(x)
    inside = ax < p.x_max
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.log(np.where(inside, ax, 0.5 * p.x_max) / p.x_max)
        log_u = np.log(-np.expm1(expo * lr))
        log_y = np.log(np.where(inside, ax, 1.0)) - log_u / expo
        inner = np.logaddexp(0.0, math.log(q - 1.0) + 2.0 * log_y)
        out = log_u / (q - 2.0) - inner / (q - 1.0) - math.log(qspecial.c_q(q))
    out = np.where(inside & np.isfinite(log_u), out, -np.inf)
    return out if out.ndim else float(out)


def f_pdf(p: FFamily, x):
    """Density ``f_{q,A}``; identical to ``G_{q,1}`` when ``A = 0``."""
    if p.A == 0.0:
        return qspecial.q_gaussian(p.q, 1.0, x)
    with np.errstate(under="ignore"):
        out = np.exp(f_logpdf(p, x))
    return out if np.ndim(out) else float(out)


def _f_segments(p: FFamily):
    if p.A == 0.0:
        return q_gaussian_density(p.q, 1.0).segments
    xm = p.x_max
    # decade cuts: for small A the support is far wider than the unit scale
    bps = tuple(10.0 ** k for k in range(0, 300) if 10.0 ** k < 0.5 * xm)
    e = p.edge_exponent
    right = Interval(0.0, xm, edge_hi=e, breakpoints=bps)
    left = Interval(-xm, 0.0, edge_lo=e, breakpoints=tuple(-v for v in bps))
    return (left, right)


def f_density(p: FFamily) -> Density:
    return Density(
        f"f_{{{p.q},{p.A}}}",
        lambda x: f_pdf(p, x),
        _f_segments(p),
        lambda x: f_logpdf(p, x),
        {"q": p.q, "A": p.A, "x_max": p.x_max},
    )


def _check_f_Q(p: FFamily, Q: float):
    if Q < 0.0:
        raise DomainError(f"Q-norms of the f-family are supported for Q >= 0, got {Q!r}")
    if p.A == 0.0 and Q <= (p.q - 1.0) / 2.0:
        # q-Gaussian tail |x|^(-2Q/(q-1)) is not integrable
        raise DomainError(
            f"nu_Q of G_{{{p.q},1}} diverges for Q <= (q-1)/2 = {(p.q - 1.0) / 2.0}")


def f_nu(p: FFamily, Q: float, opts: QuadratureOptions | None = None) -> float:
    """Q-norm of ``f_{q,A}`` by quadrature with algebraic edge hints."""
    _check_f_Q(p, Q)
    return nu_numeric(f_density(p), Q, opts)


def f_mu(p: FFamily, Q: float, n: int, opts: QuadratureOptions | None = None) -> float:
    """Unnormalized n-th Q-moment of ``f_{q,A}``; zero for odd ``n`` by symmetry."""
    _check_f_Q(p, Q)
    if n < 1 or int(n) != n:
        raise DomainError(f"moment order must be a positive integer, got {n!r}")
    if n % 2:
        return 0.0
    if p.A == 0.0 and Q <= (n + 1) * (p.q - 1.0) / 2.0:
        raise DomainError(f"mu_Q^({n}) of G_{{{p.q},1}} diverges for Q <= {(n + 1) * (p.q - 1.0) / 2.0}")
    return mu_numeric(f_density(p), Q, n, opts)


def f_pi(p: FFamily, Q: float, n: int, opts: QuadratureOptions | None = None) -> float:
    return f_mu(p, Q, n, opts) / f_nu(p, Q, opts)


def family_density(kind: str, **params) -> Density:
    """Build a density by family name ``'h'``, ``'f'`` or ``'qgauss'``."""
    if kind == "h":
        return HFamily(params["q"], params["lam"], params["a"]).density()
    if kind == "f":
        return FFamily(params["q"], params["A"]).density()
    if kind == "qgauss":
        return q_gaussian_density(params["q"], params.get("beta", 1.0))
    raise DomainError(f"unknown family {kind!r}")

