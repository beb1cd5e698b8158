"""Executable acceptance grid, shared by the test-suite and ``qfourier selftest``.

Each criterion returns a :class:`CriterionResult`; ``tol_scale`` multiplies
every tolerance (values above 1 loosen the checks).
"""

from __future__ import annotations

import contextlib
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import qspecial
from .densities import (FFamily, HFamily, f_mu, f_nu, h_a_max, h_mu, h_nu, h_pi,
                        mu_numeric, nu_numeric, pi_numeric, q_gaussian_density)
from .inversion import NuObservation, identify_lambda_from_qft, recover_A, recover_a
from .transform import (mu_from_qft_derivative, qft, qft_integral, qft_samples,
                        shifted_index)

XI_GRID = np.linspace(0.0, 5.0, 21)
H_Q_GRID = (1.5, 1.7, 2.0, 2.5)
H_LAMBDA_GRID = (0.5, 1.1)
SELFTEST_LIMIT = 180.0


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float
    time_limit: float | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        limit = f" / {self.time_limit:.0f} s" if self.time_limit else ""
        return f"[{status}] criterion {self.number:2d} {self.name}: {self.detail} ({self.elapsed:.2f} s{limit})"


def admissible_a_grid(q: float, lam: float) -> tuple:
    """Three admissible ``a`` values: ``(0.5, 1, 2)`` when possible, else fractions of ``a_max``."""
    a_max = h_a_max(q, lam)
    if 2.0 < 0.9 * a_max:
        return (0.5, 1.0, 2.0)
    return tuple(f * a_max for f in (0.1, 0.4, 0.8))


def h_grid():
    for q in H_Q_GRID:
        for lam in H_LAMBDA_GRID:
            for a in admissible_a_grid(q, lam):
                yield HFamily(q, lam, a)


def _worst(values):
    return max(values) if values else 0.0


def c1_normalization(s=1.0):
    h_err = _worst([abs(nu_numeric(p.density(), 1.0) - 1.0) for p in h_grid()])
    f_err = _worst([abs(nu_numeric(FFamily(q, A).density(), 1.0) - 1.0)
                    for q in (1.25, 1.4) for A in (0.0, 0.5, 1.0, 4.0)])
    ok = h_err <= 1e-9 * s and f_err <= 1e-7 * s
    return ok, f"max |int h - 1| = {h_err:.2e} (tol {1e-9 * s:.0e}), max |int f - 1| = {f_err:.2e} (tol {1e-7 * s:.0e})"


def _h_q_grid(q, n):
    return sorted({0.5, q - 1.0, 1.0, q, (n + 1) * (q - 1.0), 2.5})


def c2_h_closed_forms(s=1.0):
    worst = 0.0
    where = None
    for q in H_Q_GRID:
        for lam in H_LAMBDA_GRID:
            for a in admissible_a_grid(q, lam):
                p = HFamily(q, lam, a)
                d = p.density()
                for n in (2, 4):
                    for Q in _h_q_grid(q, n):
                        pairs = [(h_nu(p, Q), nu_numeric(d, Q)),
                                 (h_mu(p, Q, n), mu_numeric(d, Q, n)),
                                 (h_pi(p, Q, n), pi_numeric(d, Q, n))]
                        for closed, numeric in pairs:
                            e = abs(closed - numeric) / max(1.0, abs(closed))
                            if e > worst:
                                worst, where = e, (q, lam, a, Q, n)
    ok = worst <= 1e-9 * s
    return ok, f"max scaled |closed - quadrature| = {worst:.2e} at (q, lam, a, Q, n) = {where} (tol {1e-9 * s:.0e})"


def c3_h_degeneracy(s=1.0):
    worst = 0.0
    for q, lam in ((1.7, 1.1), (2.0, 1.1)):
        ref = qspecial.cos_q(q, lam * XI_GRID)
        for a in (0.5, 1.0, 2.0):
            d = HFamily(q, lam, a).density()
            vals = np.array([qft(d, q, xi) for xi in XI_GRID])
            worst = max(worst, float(np.max(np.abs(vals - ref))))
    return worst < 1e-6 * s, f"max |F_q[h] - cos_q(lam xi)| = {worst:.2e} (tol {1e-6 * s:.0e})"


def c4_f_degeneracy(s=1.0):
    G = q_gaussian_density(1.4, 1.0)
    ref = np.array([qft(G, 1.4, xi) for xi in XI_GRID])
    worst = 0.0
    for A in (0.1, 1.0, 10.0):
        d = FFamily(1.4, A).density()
        vals = np.array([qft(d, 1.4, xi) for xi in XI_GRID])
        worst = max(worst, float(np.max(np.abs(vals - ref))))
    return worst < 1e-6 * s, f"max |F_q[f_(1.4,A)] - F_q[G_(1.4,1)]| = {worst:.2e} (tol {1e-6 * s:.0e})"


def c5_off_q_separation(s=1.0):
    ratios = []
    for Q in (1.2, 2.2):
        r1 = qft_integral(HFamily(1.7, 1.1, 0.5).density(), Q, 1.0)
        r2 = qft_integral(HFamily(1.7, 1.1, 2.0).density(), Q, 1.0)
        ratios.append(abs(r1.value - r2.value) / (r1.abs_error_estimate + r2.abs_error_estimate))
    for Q in (1.1, 2.0):
        r1 = qft_integral(FFamily(1.4, 0.5).density(), Q, 1.0)
        r2 = qft_integral(FFamily(1.4, 2.0).density(), Q, 1.0)
        ratios.append(abs(r1.value - r2.value) / (r1.abs_error_estimate + r2.abs_error_estimate))
    worst = min(ratios)
    return worst > 10.0, f"min separation / combined error = {worst:.2e} (needs > 10)"


def c6_invariant_moments(s=1.0):
    h_err = 0.0
    for p in h_grid():
        d = p.density()
        for n in (2, 4):
            qn = shifted_index(p.q, n)
            target = p.lam ** n
            h_err = max(h_err, abs(h_mu(p, qn, n) - target), abs(mu_numeric(d, qn, n) - target))
    f_err = 0.0
    G = q_gaussian_density(1.4, 1.0)
    for n in (2, 4):
        qn = shifted_index(1.4, n)
        ref = mu_numeric(G, qn, n)
        for A in (0.25, 1.0, 4.0):
            f_err = max(f_err, abs(f_mu(FFamily(1.4, A), qn, n) - ref))
    ok = h_err <= 1e-8 * s and f_err <= 1e-6 * s
    return ok, (f"max |mu_(q_n)[h] - lam^n| = {h_err:.2e} (tol {1e-8 * s:.0e}), "
                f"max |mu_(q_n)[f] - mu_(q_n)[G]| = {f_err:.2e} (tol {1e-6 * s:.0e})")


def c7_derivative_relation(s=1.0):
    cases = [(HFamily(1.7, 1.1, 1.0).density(), 1.7),
             (HFamily(2.0, 1.1, 0.5).density(), 2.0),
             (q_gaussian_density(1.4, 1.0), 1.4),
             (q_gaussian_density(1.25, 1.0), 1.25),
             (FFamily(1.4, 1.0).density(), 1.4),
             (FFamily(1.25, 0.5).density(), 1.25)]
    odd, even = 0.0, 0.0
    for d, q in cases:
        odd = max(odd, abs(mu_from_qft_derivative(d, q, 1)))
        direct = mu_numeric(d, shifted_index(q, 2), 2)
        even = max(even, abs(mu_from_qft_derivative(d, q, 2) - direct) / abs(direct))
    ok = odd <= 1e-6 * s and even <= 1e-4 * s
    return ok, f"n=1 max |estimate| = {odd:.2e} (tol {1e-6 * s:.0e}), n=2 max rel err = {even:.2e} (tol {1e-4 * s:.0e})"


def _strictly_monotone(v):
    d = np.diff(np.asarray(v))
    return bool(np.all(d > 0) or np.all(d < 0))


def c8_monotonicity(s=1.0):
    failures = []
    checked = 0
    for q in (1.7, 2.0):
        lam = 1.1
        hi = min(4.0, 0.9 * h_a_max(q, lam))
        a_grid = np.geomspace(0.05, hi, 20)
        for Q in (0.5, q - 1.0, q, 2.5):
            if abs(Q - 1.0) < 1e-12:
                continue
            checked += 1
            if not _strictly_monotone([h_nu(HFamily(q, lam, a), Q) for a in a_grid]):
                failures.append(("h", q, Q))
    A_grid = np.geomspace(0.25, 4.0, 9)
    for Q in (1.4, 2.0):
        checked += 1
        if not _strictly_monotone([f_nu(FFamily(1.4, A), Q) for A in A_grid]):
            failures.append(("f", 1.4, Q))
    return not failures, f"{checked - len(failures)}/{checked} sweeps strictly monotone" + (
        f"; failing {failures}" if failures else "")


def c9_round_trip(s=1.0):
    h_err = 0.0
    for q in (1.7, 2.0):
        for a0 in (0.5, 1.0, 2.0):
            p = HFamily(q, 1.1, a0)
            for Q in (0.5, q - 1.0, q):
                if abs(Q - 1.0) < 1e-12:
                    continue
                r = recover_a(q, 1.1, NuObservation(Q, h_nu(p, Q)))
                h_err = max(h_err, abs(r.parameter - a0) / a0)
    f_err = 0.0
    for A0 in (0.25, 1.0, 4.0):
        for Q in (1.4, 2.0):
            r = recover_A(1.4, NuObservation(Q, f_nu(FFamily(1.4, A0), Q)))
            f_err = max(f_err, abs(r.parameter - A0) / A0)
    zero_err = 0.0
    for Q in (1.4, 2.0):
        r = recover_A(1.4, NuObservation(Q, f_nu(FFamily(1.4, 0.0), Q)))
        zero_err = max(zero_err, abs(r.parameter))
    ok = h_err <= 1e-6 * s and f_err <= 1e-4 * s and zero_err <= 1e-4 * s
    return ok, (f"a rel err {h_err:.2e} (tol {1e-6 * s:.0e}), A rel err {f_err:.2e} "
                f"(tol {1e-4 * s:.0e}), A=0 abs err {zero_err:.2e} (tol {1e-4 * s:.0e})")


def c10_degeneracy_witness(s=1.0):
    q, lam, Q = 1.7, 1.1, 0.5
    xis = (0.2, 0.4, 0.8, 1.6)
    lams, recovered = [], []
    for a0 in (0.5, 2.0):
        p = HFamily(q, lam, a0)
        d = p.density()
        lams.append(identify_lambda_from_qft(qft_samples(d, q, xis), q))
        nu_obs = nu_numeric(d, Q)
        recovered.append(recover_a(q, lams[-1], NuObservation(Q, nu_obs)).parameter)
    same_lambda = abs(lams[0] - lams[1])
    a_err = max(abs(recovered[0] - 0.5) / 0.5, abs(recovered[1] - 2.0) / 2.0)
    ok = same_lambda <= 1e-8 * s and a_err <= 1e-6 * s and abs(recovered[0] - recovered[1]) > 1.0
    return ok, (f"|lambda(a=0.5) - lambda(a=2)| = {same_lambda:.2e} (tol {1e-8 * s:.0e}), "
                f"recovered a = {recovered[0]:.9g}, {recovered[1]:.9g} (rel err {a_err:.1e})")


CRITERIA: list[tuple[int, str, Callable, float | None]] = [
    (1, "normalization", c1_normalization, 10.0),
    (2, "h closed forms vs quadrature", c2_h_closed_forms, 20.0),
    (3, "degeneracy at Q=q (h)", c3_h_degeneracy, None),
    (4, "degeneracy at Q=q (f)", c4_f_degeneracy, 60.0),
    (5, "separation off Q=q", c5_off_q_separation, None),
    (6, "invariant q_n-moments", c6_invariant_moments, None),
    (7, "derivative-moment relation", c7_derivative_relation, None),
    (8, "monotonicity of nu_Q", c8_monotonicity, None),
    (9, "round-trip inversion", c9_round_trip, None),
    (10, "degeneracy witness", c10_degeneracy_witness, None),
]


def run_criterion(number: int, tol_scale: float = 1.0) -> CriterionResult:
    _, name, fn, limit = next(c for c in CRITERIA if c[0] == number)
    t0 = time.perf_counter()
    try:
        ok, detail = fn(tol_scale)
    except Exception as exc:  # a crash is a failed criterion, reported with its cause
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - t0
    if limit is not None and elapsed > limit:
        ok = False
        detail += f"; exceeded time limit {limit:.0f} s"
    return CriterionResult(number, name, ok, detail, elapsed, limit)


def run_all(tol_scale: float = 1.0, corrupt_cq: float | None = None, only=None,
            echo=None) -> list:
    """Run every criterion in order; ``corrupt_cq`` scales ``c_q`` as a fault-injection hook."""
    guard = qspecial.corrupted_cq(corrupt_cq) if corrupt_cq else contextlib.nullcontext()
    results = []
    with guard:
        for number, *_ in CRITERIA:
            if only and number not in only:
                continue
            res = run_criterion(number, tol_scale)
            results.append(res)
            if echo is not None:
                echo(res.line())
    return results

