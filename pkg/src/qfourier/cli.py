"""Command-line interface: CSV emitters for densities, transforms, Q-norms and moments,
hidden-parameter inversion, and the acceptance self-test.

Exit codes: 0 success, 1 validation error, 2 numerical non-convergence,
3 inversion failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import __version__, acceptance
from .densities import (FFamily, HFamily, escort_integral, f_mu, f_nu, h_mu, h_nu,
                        h_pi, q_gaussian_density)
from .errors import (ConvergenceError, DomainError, IllConditionedError, IntegrandError,
                     InversionError, QFourierError)
from .inversion import NuObservation, recover_A, recover_a
from .quadrature import QuadratureOptions
from .transform import qft_integral, shifted_index

EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_INVERSION = 0, 1, 2, 3

SWEEP_PARAM = {"h": "a", "f": "A", "qgauss": "beta"}
NUMERIC_FAILURES = (ConvergenceError, IllConditionedError, IntegrandError)


class ValidationError(DomainError):
    """Malformed invocation or configuration."""


# --------------------------------------------------------------------------
# Run configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """``count`` equally spaced points from ``lo`` to ``hi`` inclusive."""

    lo: float
    hi: float
    count: int

    @classmethod
    def parse(cls, text: str) -> "Grid":
        parts = str(text).split(":")
        if len(parts) != 3:
            raise ValidationError(f"grid must look like lo:hi:count, got {text!r}")
        try:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ValidationError(f"bad grid {text!r}: {exc}") from None
        grid = cls(lo, hi, count)
        grid.validate()
        return grid

    def validate(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValidationError(f"grid bounds must be finite, got {self.lo}:{self.hi}")
        if self.count < 1:
            raise ValidationError(f"grid count must be positive, got {self.count}")
        if self.count == 1 and self.lo != self.hi:
            raise ValidationError("a one-point grid needs lo == hi")
        if self.count > 1 and not self.lo < self.hi:
            raise ValidationError(f"grid must be strictly increasing, got {self.lo}:{self.hi}")

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)

    def __str__(self):
        return f"{self.lo!r}:{self.hi!r}:{self.count}"


@dataclass
class RunConfig:
    command: str
    family: str = "h"
    q: float | None = None
    lam: float | None = None
    a: float | None = None
    A: float | None = None
    beta: float = 1.0
    Q: list = field(default_factory=list)
    n: int = 2
    xi_grid: Grid | None = None
    x_grid: Grid | None = None
    sweep_grid: Grid | None = None
    nu: float | None = None
    tol: float | None = None
    out: str | None = None
    jobs: int = 1

    # -- validation ---------------------------------------------------------
    def validate(self):
        if self.family not in SWEEP_PARAM:
            raise ValidationError(f"--family must be one of h, f, qgauss; got {self.family!r}")
        if self.q is None:
            raise ValidationError("--q is required")
        if self.family == "h" and self.lam is None:
            raise ValidationError("--lambda is required for the h-family")
        if self.tol is not None and not self.tol > 0:
            raise ValidationError(f"--tol must be positive, got {self.tol}")
        if self.jobs < 1:
            raise ValidationError(f"--jobs must be positive, got {self.jobs}")
        if self.n < 1:
            raise ValidationError(f"--n must be a positive integer, got {self.n}")
        for g in (self.xi_grid, self.x_grid, self.sweep_grid):
            if g is not None:
                g.validate()
        if self.command == "invert" and self.nu is not None and self.fixed_value() is None:
            return  # the hidden parameter is what invert is asked to find
        # validate the family at every point it will be built at
        for value in self.sweep_values():
            self.density(value)

    @property
    def sweep_name(self) -> str:
        return SWEEP_PARAM[self.family]

    def fixed_value(self):
        return {"h": self.a, "f": self.A, "qgauss": self.beta}[self.family]

    def sweep_values(self) -> list:
        if self.sweep_grid is not None:
            return [float(v) for v in self.sweep_grid.points()]
        value = self.fixed_value()
        if value is None:
            raise ValidationError(f"--{self.sweep_name} or --sweep-grid is required for this family")
        return [float(value)]

    def Q_values(self) -> list:
        if not self.Q:
            raise ValidationError("at least one --Q is required")
        out = []
        for token in self.Q:
            token = str(token).strip()
            if token == "q":
                out.append(float(self.q))
            elif token == "qn":
                out.append(shifted_index(self.q, self.n))
            else:
                try:
                    out.append(float(token))
                except ValueError:
                    raise ValidationError(f"--Q must be a number, 'q' or 'qn'; got {token!r}") from None
        return out

    def family_object(self, value: float):
        if self.family == "h":
            return HFamily(self.q, self.lam, value)
        if self.family == "f":
            return FFamily(self.q, value)
        return None

    def density(self, value: float):
        if self.family == "qgauss":
            return q_gaussian_density(self.q, value)
        return self.family_object(value).density()

    def quadrature_options(self) -> QuadratureOptions | None:
        if self.tol is None:
            return None
        return QuadratureOptions(abs_tol=self.tol, rel_tol=self.tol)

    # -- CSV header ---------------------------------------------------------
    def header(self) -> list:
        lines = [f"qfourier {__version__}", f"command={self.command}", f"family={self.family}"]
        for key in ("q", "lam", "a", "A", "beta", "n", "nu", "tol"):
            val = getattr(self, key)
            if val is None or (key == "beta" and self.family != "qgauss"):
                continue
            if key == "n" and not (self.command == "moments" or "qn" in self.Q):
                continue
            name = "lambda" if key == "lam" else key
            lines.append(f"{name}={fmt(val) if isinstance(val, float) else val}")
        if self.Q:
            lines.append("Q=" + ",".join(str(t) for t in self.Q))
        for key in ("xi_grid", "x_grid", "sweep_grid"):
            g = getattr(self, key)
            if g is not None:
                lines.append(f"{key.replace('_', '-')}={g}")
        if self.sweep_grid is None and self.fixed_value() is not None:
            obj = self.family_object(self.fixed_value()) if self.family != "qgauss" else None
            if isinstance(obj, HFamily):
                lines.append(f"b={fmt(obj.b)}")
            elif isinstance(obj, FFamily):
                lines.append(f"x_max={fmt(obj.x_max)}")
        return lines


# --------------------------------------------------------------------------
# argument parsing and config files
# --------------------------------------------------------------------------

# config-file key -> (RunConfig attribute, converter)
_CONFIG_KEYS = {
    "family": ("family", str),
    "q": ("q", float),
    "lambda": ("lam", float),
    "a": ("a", float),
    "A": ("A", float),
    "beta": ("beta", float),
    "Q": ("Q", lambda s: [t.strip() for t in s.split(",") if t.strip()]),
    "n": ("n", int),
    "xi-grid": ("xi_grid", Grid.parse),
    "x-grid": ("x_grid", Grid.parse),
    "sweep-grid": ("sweep_grid", Grid.parse),
    "nu": ("nu", float),
    "tol": ("tol", float),
    "out": ("out", str),
    "jobs": ("jobs", int),
}


def read_config(path: str) -> dict:
    """Parse a ``key=value`` file (``#`` comments and blank lines ignored)."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path!r}: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in _CONFIG_KEYS:
            raise ValidationError(f"{path}:{lineno}: unrecognised entry {raw.strip()!r}")
        attr, conv = _CONFIG_KEYS[key]
        try:
            values[attr] = conv(value)
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return values


def _grid_arg(text):
    try:
        return Grid.parse(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _shared(p: argparse.ArgumentParser):
    p.add_argument("--family", choices=sorted(SWEEP_PARAM))
    p.add_argument("--q", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--A", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--Q", action="append", help="repeatable; accepts a number, 'q' or 'qn'")
    p.add_argument("--n", type=int)
    p.add_argument("--xi-grid", type=_grid_arg, metavar="LO:HI:COUNT")
    p.add_argument("--x-grid", type=_grid_arg, metavar="LO:HI:COUNT")
    p.add_argument("--sweep-grid", type=_grid_arg, metavar="LO:HI:COUNT",
                   help="sweep of the hidden parameter (a for h, A for f, beta for qgauss)")
    p.add_argument("--tol", type=float)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--jobs", type=int, help="evaluate grid points concurrently")


class _Parser(argparse.ArgumentParser):
    """Usage errors are validation errors (exit code 1), not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qfourier", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"qfourier {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (("eval", "tabulate the density on --x-grid"),
                        ("qft", "Q-Fourier transform for each --Q on --xi-grid"),
                        ("nu", "Q-norms nu_Q for each --Q"),
                        ("moments", "Q-moments mu_Q^(n) and normalized Pi_Q^(n)"),
                        ("invert", "recover the hidden parameter from one nu_Q")):
        p = sub.add_parser(name, help=help_)
        _shared(p)
        if name == "invert":
            p.add_argument("--nu", type=float,
                           help="observed nu_Q; synthesized from --a/--A when omitted")
    p = sub.add_parser("selftest", help="run the acceptance grid")
    p.add_argument("--tol-scale", type=float, default=1.0,
                   help="multiply every acceptance tolerance by this factor")
    p.add_argument("--inject-fault", choices=["cq"],
                   help="corrupt the q-Gaussian normalization constant by 1%%")
    p.add_argument("--only", type=int, action="append", metavar="N",
                   help="run only criterion N (repeatable)")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge the optional config file with command-line flags (flags win)."""
    cfg = RunConfig(command=args.command)
    if getattr(args, "config", None):
        for attr, value in read_config(args.config).items():
            setattr(cfg, attr, value)
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    return cfg


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def fmt(v) -> str:
    """17 significant digits; empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(cfg: RunConfig, columns: list, rows: list, stream):
    for line in cfg.header():
        stream.write(f"# {line}\n")
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(c if isinstance(c, str) else fmt(c) for c in row) + "\n")


def _ordered_map(cfg: RunConfig, fn, items):
    """Evaluate ``fn`` over ``items``; results always come back in input order."""
    if cfg.jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _status(exc: Exception | None) -> str:
    return "ok" if exc is None else type(exc).__name__


# --------------------------------------------------------------------------
# commands; each returns (columns, rows, any_row_failed)
# --------------------------------------------------------------------------

def cmd_eval(cfg: RunConfig):
    grid = (cfg.x_grid or Grid(-5.0, 5.0, 101)).points()
    rows = []
    for value in cfg.sweep_values():
        d = cfg.density(value)
        pdf = np.asarray(d.pdf(grid), dtype=float)
        rows.extend([value, float(x), float(y)] for x, y in zip(grid, pdf))
    return [cfg.sweep_name, "x", "pdf"], rows, False


def cmd_qft(cfg: RunConfig):
    opts = cfg.quadrature_options()
    xis = (cfg.xi_grid.points() if cfg.xi_grid else np.array([1.0]))
    Qs = cfg.Q_values()
    for Q in Qs:
        if not 1.0 <= Q < 3.0:
            raise ValidationError(f"the Q-Fourier transform needs 1 <= Q < 3, got {Q}")
    tasks = [(v, Q, float(xi)) for v in cfg.sweep_values() for Q in Qs for xi in xis]
    densities = {v: cfg.density(v) for v in cfg.sweep_values()}

    def one(task):
        v, Q, xi = task
        try:
            res = qft_integral(densities[v], Q, xi, opts)
            exc = None if res.converged else ConvergenceError("not converged", res)
            return [v, Q, xi, res.value.real, res.value.imag, res.abs_error_estimate, _status(exc)], exc
        except NUMERIC_FAILURES as exc:
            return [v, Q, xi, math.nan, math.nan, math.nan, _status(exc)], exc

    out = _ordered_map(cfg, one, tasks)
    cols = [cfg.sweep_name, "Q", "xi", "re", "im", "err_estimate", "status"]
    return cols, [r for r, _ in out], any(e is not None for _, e in out)


def _escort(cfg: RunConfig, value: float, Q: float, n: int):
    """Numeric ``(value, error estimate)`` of the escort integral of order ``n``."""
    opts = cfg.quadrature_options()
    res = escort_integral(cfg.density(value), Q, n, opts)
    if not res.converged:
        raise ConvergenceError(f"escort integral at Q={Q} did not converge", res)
    return float(res.value), float(res.abs_error_estimate)


def cmd_nu(cfg: RunConfig):
    Qs = cfg.Q_values()
    tasks = [(v, Q) for v in cfg.sweep_values() for Q in Qs]

    def one(task):
        v, Q = task
        closed = None
        try:
            if Q == 1.0:
                num, err = 1.0, 0.0
            else:
                num, err = _escort(cfg, v, Q, 0)
            if cfg.family == "h":
                closed = h_nu(cfg.family_object(v), Q)
            elif cfg.family == "f":
                closed = f_nu(cfg.family_object(v), Q)
            return [v, Q, num, err, closed, "ok"], None
        except NUMERIC_FAILURES as exc:
            return [v, Q, math.nan, math.nan, closed, _status(exc)], exc

    out = _ordered_map(cfg, one, tasks)
    cols = [cfg.sweep_name, "Q", "nu", "err_estimate", "nu_family", "status"]
    return cols, [r for r, _ in out], any(e is not None for _, e in out)


def cmd_moments(cfg: RunConfig):
    Qs, n = cfg.Q_values(), cfg.n
    tasks = [(v, Q) for v in cfg.sweep_values() for Q in Qs]

    def one(task):
        v, Q = task
        mu_c = pi_c = None
        try:
            mu, mu_err = _escort(cfg, v, Q, n)
            nu, _ = _escort(cfg, v, Q, 0)
            if cfg.family == "h":
                p = cfg.family_object(v)
                mu_c, pi_c = h_mu(p, Q, n), h_pi(p, Q, n)
            elif cfg.family == "f":
                p = cfg.family_object(v)
                mu_c = f_mu(p, Q, n)
                pi_c = mu_c / f_nu(p, Q)
            return [v, Q, n, mu, mu_err, mu_c, mu / nu, pi_c, "ok"], None
        except NUMERIC_FAILURES as exc:
            return [v, Q, n, math.nan, math.nan, mu_c, math.nan, pi_c, _status(exc)], exc

    out = _ordered_map(cfg, one, tasks)
    cols = [cfg.sweep_name, "Q", "n", "mu", "err_estimate", "mu_family", "pi", "pi_family", "status"]
    return cols, [r for r, _ in out], any(e is not None for _, e in out)


def cmd_invert(cfg: RunConfig, stream):
    if cfg.family == "qgauss":
        raise ValidationError("inversion applies to the h and f families only")
    Qs = cfg.Q_values()
    if len(Qs) != 1:
        raise ValidationError("invert takes exactly one --Q")
    Q = Qs[0]
    truth = None
    if cfg.nu is None:
        truth = cfg.fixed_value()
        if truth is None:
            raise ValidationError(f"give --nu, or --{cfg.sweep_name} to synthesize the observation")
        p = cfg.family_object(truth)
        nu = h_nu(p, Q) if cfg.family == "h" else f_nu(p, Q)
    else:
        nu = cfg.nu
    obs = NuObservation(Q, nu)
    if cfg.family == "h":
        res = recover_a(cfg.q, cfg.lam, obs, **({"tol": cfg.tol} if cfg.tol else {}))
    else:
        res = recover_A(cfg.q, obs, **({"tol": cfg.tol} if cfg.tol else {}))
    report = [("parameter", cfg.sweep_name), ("Q", fmt(Q)), ("nu_observed", fmt(nu)),
              ("recovered", fmt(res.parameter)), ("residual", fmt(res.residual)),
              ("iterations", str(res.iterations)), ("evaluations", str(res.evaluations)),
              ("bracket_lo", fmt(res.bracket[0])), ("bracket_hi", fmt(res.bracket[1]))]
    if truth is not None:
        report.append(("synthesized_from", fmt(truth)))
    for line in cfg.header():
        stream.write(f"# {line}\n")
    for key, value in report:
        stream.write(f"{key}={value}\n")


def cmd_selftest(args, stream) -> int:
    if not args.tol_scale > 0:
        raise ValidationError("--tol-scale must be positive")
    corrupt = 1.01 if args.inject_fault == "cq" else None
    results = acceptance.run_all(args.tol_scale, corrupt, only=args.only,
                                 echo=lambda line: stream.write(line + "\n"))
    total = sum(r.elapsed for r in results)
    passed = sum(r.passed for r in results)
    stream.write(f"{passed}/{len(results)} criteria passed in {total:.1f} s\n")
    return EXIT_OK if passed == len(results) else EXIT_VALIDATION


def _run(args, stdout) -> int:
    if args.command == "selftest":
        return cmd_selftest(args, stdout)
    cfg = config_from_args(args)
    cfg.validate()
    stream = open(cfg.out, "w", encoding="utf-8", newline="\n") if cfg.out else stdout
    try:
        if cfg.command == "invert":
            cmd_invert(cfg, stream)
            return EXIT_OK
        command = {"eval": cmd_eval, "qft": cmd_qft, "nu": cmd_nu, "moments": cmd_moments}[cfg.command]
        columns, rows, failed = command(cfg)
        write_csv(cfg, columns, rows, stream)
        return EXIT_CONVERGENCE if failed else EXIT_OK
    finally:
        if stream is not stdout:
            stream.close()


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return _run(args, stdout)
    except InversionError as exc:
        stderr.write(f"qfourier: inversion failed: {exc}\n")
        return EXIT_INVERSION
    except NUMERIC_FAILURES as exc:
        stderr.write(f"qfourier: numerical failure: {exc}\n")
        return EXIT_CONVERGENCE
    except (DomainError, QFourierError, ValueError) as exc:
        stderr.write(f"qfourier: invalid input: {exc}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
