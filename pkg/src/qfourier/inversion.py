"""Recovery of the parameter a q-Fourier transform cannot see.

For both counterexample families the q-FT at index ``q`` is blind to one
parameter (``a`` resp. ``A``), while the Q-norm ``nu_Q`` with ``Q != 1``
is strictly monotone in it. A single observed ``nu_Q`` therefore pins the
parameter down via a bracketing root search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import qspecial
from .densities import A_CAP as A_CAP_H
from .densities import A_MIN, FFamily, HFamily, f_nu, h_a_max, h_nu
from .errors import (DomainError, InconsistentSamplesError, InversionError,
                     NonMonotoneError, OutsideMonotoneWindowError,
                     TargetOutOfRangeError)

TOL_H = 1e-8
TOL_F = 1e-4
A_CAP_F = 1e3
MAX_EVALUATIONS = 200
# factor-2 bracket narrowing steps before handing over to Brent
MAX_SCAN_STEPS = 40
_NU_ONE_EPS = 1e-9


@dataclass(frozen=True)
class NuObservation:
    """A measured Q-norm; ``Q = 1`` is rejected since ``nu_1 = 1`` for every pdf."""

    Q: float
    value: float

    def __post_init__(self):
        if abs(self.Q - 1.0) < _NU_ONE_EPS:
            raise DomainError("nu_1 equals 1 for every density and carries no information; use Q != 1")
        if not self.value > 0.0:
            raise DomainError(f"a Q-norm is positive, got {self.value!r}")


@dataclass(frozen=True)
class RecoveryResult:
    parameter: float
    residual: float
    iterations: int
    bracket: tuple
    evaluations: int = 0


class _Budget:
    """Counts forward evaluations and enforces the search interval."""

    def __init__(self, forward, lo, hi, limit):
        self.forward, self.lo, self.hi, self.limit = forward, lo, hi, limit
        self.count = 0
        self.visited = []

    def __call__(self, x):
        if not self.lo <= x <= self.hi:
            raise AssertionError(f"root search left [{self.lo}, {self.hi}] at {x}")
        if self.count >= self.limit:
            raise InversionError(f"no convergence within {self.limit} evaluations")
        self.count += 1
        v = self.forward(x)
        self.visited.append(x)
        return v


def brent(g: Callable[[float], float], a: float, b: float, ga: float, gb: float,
          xtol: Callable[[float], float], ftol: float, maxiter: int = 200):
    """Safeguarded Brent iteration on a sign-changing bracket.

    ``xtol(x)`` gives the absolute width tolerance near ``x``. Returns
    ``(root, g(root), iterations, (lo, hi))``; stops once the half-width
    is below ``xtol`` and ``|g| <= ftol``, or when ``g`` hits zero.
    """
    if ga * gb > 0:
        raise ValueError(f"no sign change on [{a}, {b}]: g = {ga}, {gb}")
    if ga == 0:
        return a, ga, 0, (a, a)
    if gb == 0:
        return b, gb, 0, (b, b)
    c, gc = a, ga
    d = e = b - a
    for it in range(1, maxiter + 1):
        if gb * gc > 0:
            c, gc = a, ga
            d = e = b - a
        if abs(gc) < abs(gb):
            a, b, c = b, c, b
            ga, gb, gc = gb, gc, gb
        tol1 = 0.5 * xtol(b) + 2.0 * np.finfo(float).eps * abs(b)
        m = 0.5 * (c - b)
        if gb == 0:
            return b, gb, it, (b, b)
        if abs(m) <= tol1:
            at_resolution = abs(m) <= 4.0 * np.finfo(float).eps * max(abs(b), 1e-300)
            if abs(gb) <= ftol or at_resolution:
                return b, gb, it, (min(b, c), max(b, c))
            # width is converged but the residual is not: keep halving
            a, ga = b, gb
            b += m
            gb = g(b)
            d = e = m
            continue
        if abs(e) >= tol1 and abs(ga) > abs(gb):
            s = gb / ga
            if a == c:
                p, qq = 2.0 * m * s, 1.0 - s
            else:
                r1, r2 = ga / gc, gb / gc
                p = s * (2.0 * m * r1 * (r1 - r2) - (b - a) * (r2 - 1.0))
                qq = (r1 - 1.0) * (r2 - 1.0) * (s - 1.0)
            if p > 0:
                qq = -qq
            p = abs(p)
            if 2.0 * p < min(3.0 * m * qq - abs(tol1 * qq), abs(e * qq)):
                e, d = d, p / qq
            else:
                d = e = m
        else:
            d = e = m
        a, ga = b, gb
        b = b + d if abs(d) > tol1 else b + math.copysign(tol1, m)
        gb = g(b)
    raise InversionError(f"Brent iteration did not converge in {maxiter} steps")


def recover_monotone(forward: Callable[[float], float], target: float, lo: float, hi: float,
                     tol: float, xtol: float | None = None, start: float | None = None,
                     noise: float = 0.0, max_evaluations: int = MAX_EVALUATIONS) -> RecoveryResult:
    """Solve ``forward(x) = target`` for a strictly monotone ``forward`` on ``[lo, hi]``.

    The attainable range comes from the endpoint values. Starting from the
    geometric midpoint the bracket is narrowed by at most
    ``MAX_SCAN_STEPS`` factor-2 steps, then refined with :func:`brent`. Any evaluation ordered against the
    monotone direction by more than ``noise`` raises
    :class:`NonMonotoneError`.
    """
    xtol = 1e-3 * tol if xtol is None else xtol
    g = _Budget(forward, lo, hi, max_evaluations)
    v_lo, v_hi = g(lo), g(hi)
    if abs(v_lo - target) <= tol:
        return RecoveryResult(lo, abs(v_lo - target), 0, (lo, lo), g.count)
    if abs(v_hi - target) <= tol:
        return RecoveryResult(hi, abs(v_hi - target), 0, (hi, hi), g.count)
    if abs(v_hi - v_lo) <= noise:
        raise NonMonotoneError(f"forward map is flat on [{lo}, {hi}] (values {v_lo}, {v_hi})")
    sign = 1.0 if v_hi > v_lo else -1.0
    attainable = (min(v_lo, v_hi), max(v_lo, v_hi))
    if not attainable[0] < target < attainable[1]:
        raise TargetOutOfRangeError(
            f"target {target} is outside the attainable range [{attainable[0]}, {attainable[1]}] "
            f"over [{lo}, {hi}]", attainable)

    def resid(v):
        return sign * (v - target)  # increasing in x

    def check_order(x1, v1, x2, v2):
        # x1 < x2 must imply sign*v1 <= sign*v2 up to noise
        if sign * (v1 - v2) > noise:
            raise NonMonotoneError(
                f"forward map is not monotone: f({x1})={v1}, f({x2})={v2}")

    floor = lo if lo > 0 else min(A_MIN, hi)
    if start is None:
        start = math.sqrt(floor * hi)
    start = min(max(start, floor), hi)
    a, ra = lo, resid(v_lo)
    b, rb = hi, resid(v_hi)
    x = start
    vx = g(x)
    check_order(lo, v_lo, x, vx)
    check_order(x, vx, hi, v_hi)
    rx = resid(vx)
    if rx < 0:
        a, ra = x, rx
        for _ in range(MAX_SCAN_STEPS):
            x2 = min(2.0 * x, hi)
            if x2 >= hi:
                break
            v2 = g(x2)
            check_order(x, vx, x2, v2)
            x, vx = x2, v2
            if resid(v2) >= 0:
                b, rb = x2, resid(v2)
                break
            a, ra = x2, resid(v2)
    elif rx > 0:
        b, rb = x, rx
        for _ in range(MAX_SCAN_STEPS):
            x2 = 0.5 * x
            if x2 <= floor:
                break
            v2 = g(x2)
            check_order(x2, v2, x, vx)
            x, vx = x2, v2
            if resid(v2) <= 0:
                a, ra = x2, resid(v2)
                break
            b, rb = x2, resid(v2)
    else:
        return RecoveryResult(x, 0.0, 0, (x, x), g.count)

    def scaled_xtol(t):
        return xtol * max(1.0, abs(t))

    root, rr, iterations, bracket = brent(lambda t: resid(g(t)), a, b, ra, rb,
                                          scaled_xtol, tol, maxiter=max_evaluations)
    residual = abs(rr)
    if residual > tol:
        raise InversionError(
            f"root search stalled at {root} with residual {residual:.3g} > tol {tol:.3g}")
    return RecoveryResult(root, residual, iterations, bracket, g.count)


def h_search_interval(q: float, lam: float) -> tuple:
    """Admissible ``a`` range ``[A_MIN, min(a_max (1 - 1e-9), 1e6)]``."""
    return A_MIN, min(h_a_max(q, lam) * (1.0 - 1e-9), A_CAP_H)


def recover_a(q: float, lam: float, obs: NuObservation, tol: float = TOL_H,
              xtol: float | None = None) -> RecoveryResult:
    """Recover ``a`` of ``h_{q,lam,a}`` from one observed ``nu_Q`` (closed form)."""
    lo, hi = h_search_interval(q, lam)

    def forward(a):
        return h_nu(HFamily(q, lam, a), obs.Q)

    return recover_monotone(forward, obs.value, lo, hi, tol, xtol,
                            noise=1e-12 * obs.value)


def recover_A(q: float, obs: NuObservation, tol: float = TOL_F, xtol: float | None = None,
              A_cap: float = A_CAP_F) -> RecoveryResult:
    """Recover ``A`` of ``f_{q,A}`` from one observed ``nu_Q`` (quadrature)."""
    if not 0.0 < obs.Q < 3.0:
        raise DomainError(f"recover_A needs 0 < Q < 3, got {obs.Q!r}")
    lo = 0.0
    if obs.Q <= (q - 1.0) / 2.0:
        # nu_Q of the q-Gaussian endpoint diverges
        lo = A_MIN

    def forward(A):
        return f_nu(FFamily(q, A), obs.Q)

    xtol = 1e-6 * tol if xtol is None else xtol
    return recover_monotone(forward, obs.value, lo, A_cap, tol, xtol, noise=1e-9)


def _cos_q_slope(q, x):
    if abs(q - 1.0) < qspecial.Q_ONE_EPS:
        return -math.sin(x)
    d = q - 1.0
    phase = math.atan(d * x) / d
    modulus = (1.0 + (d * x) ** 2) ** (1.0 / (2.0 * d))
    return -math.sin(q * phase) / modulus ** q


def _invert_cos_q(q: float, value: float) -> float:
    """The unique ``x`` in the initial decreasing window with ``cos_q(q, x) = value``."""
    x_star = qspecial.cos_q_decreasing_limit(q)
    floor = qspecial.cos_q(q, x_star) if math.isfinite(x_star) else 0.0
    if not floor < value < 1.0:
        raise OutsideMonotoneWindowError(
            f"value {value} is outside ({floor}, 1), where cos_q decreases monotonically")
    hi = x_star
    if not math.isfinite(hi):
        hi = 1.0
        while qspecial.cos_q(q, hi) > value:
            hi *= 2.0

    def g(x):
        return value - qspecial.cos_q(q, x)  # increasing on (0, x*)

    root, _, _, _ = brent(g, 0.0, hi, g(0.0), g(hi), lambda t: 1e-15 * max(1.0, t), 0.0)
    return root


def identify_lambda_from_qft(samples: Sequence, q: float, tol: float = 1e-6) -> float:
    """Infer ``lambda`` from q-FT samples of an h-family density.

    Each sample ``(xi, F)`` is inverted through ``cos_q(lambda xi) = Re F``;
    the estimates are combined with inverse-variance weights
    ``(xi cos_q'(lambda xi))^2`` and the fit must reproduce every sample
    within ``tol``.
    """
    if len(samples) == 0:
        raise DomainError("need at least one transform sample")
    lams, weights = [], []
    for s in samples:
        xi, val = abs(float(s.xi)), complex(s.value)
        if xi == 0.0:
            raise OutsideMonotoneWindowError("a sample at xi = 0 carries no information on lambda")
        x = _invert_cos_q(q, val.real)
        lam = x / xi
        lams.append(lam)
        weights.append((xi * _cos_q_slope(q, x)) ** 2)
    w = np.asarray(weights)
    lam_bar = float(np.dot(w, lams) / w.sum())
    for s in samples:
        val = complex(s.value)
        model = qspecial.cos_q(q, lam_bar * abs(float(s.xi)))
        if abs(model - val.real) > tol or abs(val.imag) > tol:
            raise InconsistentSamplesError(
                f"samples are not those of cos_q(lambda xi): residual at xi={s.xi} is "
                f"{abs(model - val):.3g} > {tol:.3g}")
    return lam_bar
