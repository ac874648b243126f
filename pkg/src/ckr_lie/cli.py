"""Command-line front end: ``ckr-lie <command> -c run.cfg``.

Configuration files are INI-style (see README for the full schema).  Every
command writes CSV tables with a single header row and 17 significant
digits, plus JSON reports with sorted keys, so identical inputs give
byte-identical outputs.

Exit codes: 0 success (a blow-up is a success with its status recorded),
2 invalid input or violated invariant, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry as geo
from .conserved import (
    LieIntegralSpec,
    UpsilonTriple,
    closed_form_upsilon,
    conservation_check,
    mass_constraint,
    sigma_constraint,
    solve_euler,
    swanson_condition,
)
from .errors import (
    ChartDomainError,
    CkrLieError,
    ExprDomainError,
    InvariantError,
    NumericalError,
    ParseError,
)
from .expr import evaluate, parse
from .model import (
    ConstantMass,
    GaugeTriple,
    MassOrdering,
    MassProfile,
    ProblemSpec,
    Swanson,
    SwansonParams,
    VariableMass,
)
from .ode import IntegratorConfig, integrate_ckr
from .oracle import cross_validate
from .symmetry import solve_lambda, symmetry_residual

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

COMMANDS = (
    "coeffs",
    "integrate",
    "verify-algebra",
    "symmetry",
    "lie-integral",
    "constraints",
    "oracle-compare",
)


class ConfigError(CkrLieError, ValueError):
    """Bad configuration value, reported with file, line and key."""


# -- configuration --------------------------------------------------------------------

@dataclass
class RunConfig:
    case: object
    integrator: IntegratorConfig
    x0: float
    x1: float
    points: int
    raw: configparser.ConfigParser
    source: str = "<config>"
    lines: dict = field(default_factory=dict)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.points)

    @property
    def gauge(self) -> GaugeTriple:
        return self.case.gauge

    def coefficients(self):
        return self.case.coefficients(self.grid)


def _key_lines(text: str) -> dict:
    """Map ``(section, key)`` to 1-based line numbers for error messages."""
    out, section = {}, None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None:
            out[(section, m.group(1).strip().lower())] = n
    return out


class _Reader:
    def __init__(self, cp: configparser.ConfigParser, source: str, lines: dict):
        self.cp, self.source, self.lines = cp, source, lines

    def error(self, section, key, message) -> ConfigError:
        line = self.lines.get((section.lower(), key.lower()))
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: [{section}] {key}: {message}")

    def has(self, section, key) -> bool:
        return self.cp.has_option(section, key)

    def raw(self, section, key, default=None):
        if self.has(section, key):
            return self.cp.get(section, key)
        if default is None:
            raise self.error(section, key, "missing required key")
        return default

    def float(self, section, key, default=None) -> float:
        text = self.raw(section, key, None if default is None else str(default))
        try:
            return float(text)
        except ValueError:
            raise self.error(section, key, f"expected a number, got {text!r}") from None

    def int(self, section, key, default=None) -> int:
        text = self.raw(section, key, None if default is None else str(default))
        try:
            return int(text)
        except ValueError:
            raise self.error(section, key, f"expected an integer, got {text!r}") from None

    def complex(self, section, key, default) -> complex:
        text = self.raw(section, key, str(default))
        try:
            return complex(text.replace(" ", ""))
        except ValueError:
            raise self.error(section, key, f"expected a complex number, got {text!r}") from None

    def floats(self, section, key, default=None) -> tuple:
        text = self.raw(section, key, default)
        try:
            return tuple(float(v) for v in text.split(",") if v.strip())
        except ValueError:
            raise self.error(section, key, f"expected comma-separated numbers, got {text!r}") from None

    def expr(self, section, key, default=None):
        text = self.raw(section, key, default)
        try:
            return parse(text)
        except ParseError as err:
            raise self.error(section, key, str(err)) from None


def _parser_from_text(text: str, source: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as err:
        raise ConfigError(str(err)) from None
    return cp


def apply_overrides(cp: configparser.ConfigParser, overrides) -> None:
    for item in overrides or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        lhs, value = item.split("=", 1)
        section, key = lhs.strip().split(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key.strip(), value.strip())


def build_config(cp: configparser.ConfigParser, source: str = "<config>", lines=None) -> RunConfig:
    """Turn a parsed configuration into case data and numerics."""
    r = _Reader(cp, source, lines or {})
    case_type = r.raw("case", "type", "I").strip().upper()

    x0 = r.float("range", "x0", 0.0)
    x1 = r.float("range", "x1", 1.0)
    if not x1 != x0:
        raise r.error("range", "x1", "range must be non-degenerate (x1 != x0)")
    points = r.int("range", "points", 101)
    if points < 2:
        raise r.error("range", "points", "need at least two grid points")

    gauge = GaugeTriple(
        r.expr("gauge", "alpha", "1"), r.expr("gauge", "delta", "1"), r.expr("gauge", "sigma", "0")
    )
    if case_type == "I":
        case = ConstantMass(
            ProblemSpec(r.float("problem", "m", 1.0), r.expr("problem", "V"), r.float("problem", "E")),
            gauge,
        )
    elif case_type == "II":
        if r.has("mass", "c"):
            ordering = MassOrdering(r.float("mass", "a"), r.float("mass", "b"), r.float("mass", "c"))
        else:
            ordering = MassOrdering.from_a_b(r.float("mass", "a", 0.0), r.float("mass", "b", -1.0))
        case = VariableMass(
            r.expr("mass", "V"), r.float("mass", "E"), MassProfile(r.expr("mass", "M")), ordering
        )
    elif case_type == "III":
        case = Swanson(
            SwansonParams(
                r.floats("swanson", "nu"), r.expr("swanson", "alpha1"), r.expr("swanson", "alpha2")
            ),
            r.float("swanson", "E"),
        )
    else:
        raise r.error("case", "type", f"case must be I, II or III, got {case_type!r}")

    try:
        integ = IntegratorConfig(
            method=r.raw("integrator", "method", "rk4").strip().lower(),
            h=r.float("integrator", "h", 1e-3),
            atol=r.float("integrator", "atol", 1e-10),
            rtol=r.float("integrator", "rtol", 1e-10),
            blowup=r.float("integrator", "blowup", 1e8),
            max_steps=r.int("integrator", "max_steps", 1_000_000),
        )
    except InvariantError as err:
        raise ConfigError(f"{source}: [integrator] {err}") from None

    rc = RunConfig(case, integ, x0, x1, points, cp, source, lines or {})
    rc.coefficients()  # re-check module invariants on the output grid
    return rc


def load_config(path, overrides=()) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
    cp = _parser_from_text(text, str(path))
    apply_overrides(cp, overrides)
    return build_config(cp, str(path), _key_lines(text))


# -- output -------------------------------------------------------------------------

def write_csv(path: Path, header, columns) -> None:
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _maybe(x):
    return None if x is None else float(x)


# -- commands -----------------------------------------------------------------------

def cmd_coeffs(rc: RunConfig, out: Path, args) -> dict:
    a = rc.coefficients().evaluate(rc.grid)
    write_csv(out / "coeffs.csv", ("x", "a1", "a2", "a3"), (rc.grid, a[:, 0], a[:, 1], a[:, 2]))
    return {"points": rc.points}


def _initial_point(rc: RunConfig):
    r = _Reader(rc.raw, rc.source, rc.lines)
    return r.float("initial", "p1", 0.0), r.float("initial", "p2", 0.0)


def cmd_integrate(rc: RunConfig, out: Path, args) -> dict:
    t = integrate_ckr(rc.coefficients(), rc.x0, _initial_point(rc), rc.x1, rc.integrator)
    write_csv(out / "trajectory.csv", ("x", "p1", "p2"), (t.x, t.p1, t.p2))
    summary = {"status": t.status, "x_stop": _maybe(t.x_stop), "samples": int(t.x.size)}
    write_json(out / "trajectory.json", summary)
    return summary


FD_TOL = 1e-6
EXACT_TOL = 1e-12


def _rel_err(a, b) -> float:
    """``max |a - b| / max(1, |b|)``: absolute near zero, relative for large values."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def algebra_report(points: int = 100, seed: int = 0) -> dict:
    """All structure identities at ``points`` seeded random phase points."""
    q = geo.random_points(points, seed)
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    checks = {}

    def add(name, err, tol):
        checks[name] = {"pass": bool(err <= tol), "max_error": err, "points": points}

    for (i, j), combo in geo.COMMUTATOR_TABLE.items():
        expected = sum(cf * geo.chi(k, q) for k, cf in combo.items())
        add(f"commutator[{i},{j}]", _rel_err(geo.commutator(i, j, q), expected), EXACT_TOL)
    for i in geo.INDICES:
        contr = np.stack([geo.contraction(i, q, e1), geo.contraction(i, q, e2)], axis=-1)
        fd = geo.gradient_fd(geo.hamiltonian_function(i), q)
        add(f"symplectic_fd[{i}]", _rel_err(fd, contr), FD_TOL)
        add(f"symplectic_exact[{i}]", _rel_err(geo.hamiltonian_gradient(i, q), contr), EXACT_TOL)
        add(f"bivector[{i}]", _rel_err(geo.bivector_field(i, q), geo.chi(i, q)), EXACT_TOL)
    for (i, j), combo in geo.HAMILTONIAN_BRACKET_TABLE.items():
        expected = sum(cf * geo.hamiltonian(k, q) for k, cf in combo.items())
        add(f"bracket_omega[{i},{j}]", _rel_err(geo.bracket_omega(i, j, q), expected), EXACT_TOL)
        add(f"bracket_lambda_exact[{i},{j}]", _rel_err(geo.bracket_lambda_exact(i, j, q), expected), EXACT_TOL)
        fd = geo.bracket_lambda(geo.hamiltonian_function(i), geo.hamiltonian_function(j), q)
        add(f"bracket_lambda_fd[{i},{j}]", _rel_err(fd, expected), FD_TOL)
    return checks


def cmd_verify_algebra(rc, out: Path, args) -> dict:
    report = algebra_report(args.points, args.seed)
    write_json(out / "algebra.json", report)
    return {"all_pass": all(v["pass"] for v in report.values())}


def cmd_symmetry(rc: RunConfig, out: Path, args) -> dict:
    r = _Reader(rc.raw, rc.source, rc.lines)
    c = rc.coefficients()
    sym = solve_lambda(
        c,
        rc.x0,
        rc.x1,
        A=r.float("symmetry", "A", 1.0),
        initial=r.floats("symmetry", "lambda", "0, 0, 0"),
        cfg=rc.integrator,
    )
    xs = sym.x
    lam = sym.values(xs)
    write_csv(
        out / "lambdas.csv",
        ("x", "lambda0", "lambda1", "lambda2", "lambda3"),
        (xs, lam[:, 0], lam[:, 1], lam[:, 2], lam[:, 3]),
    )
    grid = rc.grid[(rc.grid >= xs.min()) & (rc.grid <= xs.max())]
    ps = geo.random_points(args.points, args.seed)
    q = np.concatenate(
        [np.repeat(grid, len(ps))[:, None], np.tile(ps, (grid.size, 1))], axis=-1
    )
    res = np.max(np.abs(symmetry_residual(c, sym, q)), axis=-1).reshape(grid.size, len(ps))
    # scale by the field size so large |p| points do not dominate
    scale = np.maximum(1.0, np.max(np.abs(ps), axis=-1) ** 2)
    resid = np.max(res / scale[None, :], axis=-1)
    write_csv(out / "residual.csv", ("x", "residual"), (grid, resid))
    return {"status": sym.lambdas.status, "max_residual": float(np.max(resid))}


def _upsilon(rc: RunConfig, r: _Reader, c) -> UpsilonTriple:
    mode = r.raw("lie", "mode", "closed").strip().lower()
    if mode == "euler":
        init = r.floats("lie", "upsilon")
        if len(init) != 3:
            raise r.error("lie", "upsilon", "need three initial values")
        return solve_euler(c, init, rc.x0, rc.x1, rc.integrator)
    if mode != "closed":
        raise r.error("lie", "mode", f"mode must be closed or euler, got {mode!r}")
    spec = LieIntegralSpec(
        rc.case.label, r.float("lie", "minus", 1.0), r.float("lie", "plus", 1.0)
    )
    case = rc.case
    if isinstance(case, ConstantMass):
        return closed_form_upsilon(spec, sigma=case.gauge.sigma, x0=rc.x0, x1=rc.x1)
    if isinstance(case, VariableMass):
        return closed_form_upsilon(spec, M=case.mass.M)
    return closed_form_upsilon(spec, swanson=case.params)


def cmd_lie_integral(rc: RunConfig, out: Path, args) -> dict:
    r = _Reader(rc.raw, rc.source, rc.lines)
    c = rc.coefficients()
    u = _upsilon(rc, r, c)
    t = integrate_ckr(c, rc.x0, _initial_point(rc), rc.x1, rc.integrator)
    rep = conservation_check(u, t)
    write_csv(out / "upsilon.csv", ("x", "upsilon"), (rep.x, rep.values))
    summary = {
        "initial": rep.initial,
        "max_abs_drift": rep.max_abs,
        "relative_drift": rep.relative,
        "status": t.status,
        "x_stop": _maybe(t.x_stop),
    }
    write_json(out / "upsilon.json", summary)
    return summary


def cmd_constraints(rc: RunConfig, out: Path, args) -> dict:
    r = _Reader(rc.raw, rc.source, rc.lines)
    case = rc.case
    if isinstance(case, ConstantMass):
        pr = case.problem
        res = sigma_constraint(
            pr.V,
            pr.m,
            pr.E,
            C0=r.float("constraints", "C0") if r.has("constraints", "C0") else None,
            x0=rc.x0,
            x1=rc.x1,
            grid=r.int("constraints", "grid", 2001),
            sigma0=r.float("constraints", "sigma0", 0.0),
            branch=r.raw("constraints", "branch", "exact").strip().lower(),
            damping=r.float("constraints", "damping", 0.5),
            max_iter=r.int("constraints", "max_iter", 200),
            tol=r.float("constraints", "tol", 1e-10),
        )
        write_csv(out / "sigma.csv", ("x", "sigma"), (res.sigma.x, res.sigma.values[:, 0]))
        write_csv(out / "residual.csv", ("x", "residual"), (res.residual.x, res.residual.values[:, 0]))
        return {
            "kind": "sigma",
            "converged": res.converged,
            "iterations": res.iterations,
            "max_residual": float(np.max(np.abs(res.residual.values))),
        }
    if isinstance(case, VariableMass):
        if case.ordering.b != -1.0 or case.ordering.c != -case.ordering.a:
            raise InvariantError(
                "ordering.b=-1,c=-a", "the mass constraint needs ordering b = -1 and c = -a"
            )
        B0 = r.float("constraints", "B0", 1.0)
        a = case.ordering.a
        path = mass_constraint(
            case.V,
            case.E,
            B0,
            a,
            M0=r.float("constraints", "M0") if a != 0 else None,
            x0=rc.x0,
            x1=rc.x1,
            sign=r.int("constraints", "sign", 1),
            cfg=rc.integrator,
            grid=rc.points,
        )
        M = path.values[:, 0]
        dM = path.derivative(path.x) if a != 0 else 0.0
        Vx = np.broadcast_to(evaluate(case.V, path.x), path.x.shape)
        resid = B0 * M - (case.E - Vx - a * a * dM**2 / M**3)
        write_csv(out / "mass.csv", ("x", "M"), (path.x, M))
        write_csv(out / "residual.csv", ("x", "residual"), (path.x, resid))
        return {"kind": "mass", "status": path.status, "max_residual": float(np.max(np.abs(resid)))}
    K0 = r.float("constraints", "K0", 1.0)
    res = swanson_condition(case.params, case.E, rc.grid, K0)
    write_csv(out / "residual.csv", ("x", "residual"), (res.x, res.values[:, 0]))
    return {"kind": "swanson", "max_residual": float(np.max(np.abs(res.values)))}


def cmd_oracle_compare(rc: RunConfig, out: Path, args) -> dict:
    r = _Reader(rc.raw, rc.source, rc.lines)
    cmp = cross_validate(
        rc.case,
        r.complex("initial", "psi", 1),
        r.complex("initial", "dpsi", "1j"),
        rc.x0,
        rc.x1,
        rc.integrator,
        r.float("oracle", "pole_guard", 0.01 / rc.integrator.h),
    )
    write_csv(
        out / "oracle.csv",
        ("x", "p1_oracle", "p2_oracle", "p1_ckr", "p2_ckr", "distance"),
        (cmp.x, cmp.oracle[:, 0], cmp.oracle[:, 1], cmp.ckr[:, 0], cmp.ckr[:, 1], cmp.distance),
    )
    summary = {
        "sup_distance": cmp.sup,
        "oracle_status": cmp.oracle_status,
        "ckr_status": cmp.ckr_status,
        "pole_truncated": cmp.truncated,
        "x_end": float(cmp.x[-1]),
    }
    write_json(out / "oracle.json", summary)
    return summary


HANDLERS = {
    "coeffs": cmd_coeffs,
    "integrate": cmd_integrate,
    "verify-algebra": cmd_verify_algebra,
    "symmetry": cmd_symmetry,
    "lie-integral": cmd_lie_integral,
    "constraints": cmd_constraints,
    "oracle-compare": cmd_oracle_compare,
}


# -- sweeps ---------------------------------------------------------------------------

def _sweep_entries(cp: configparser.ConfigParser):
    """``[sweep]`` with ``key = section.key`` and ``values = v1, v2, ...``."""
    if not cp.has_section("sweep"):
        return None
    target = cp.get("sweep", "key", fallback=None)
    values = cp.get("sweep", "values", fallback=None)
    if not target or values is None or "." not in target:
        raise ConfigError("[sweep] needs key = section.key and values = v1, v2, ...")
    return [f"{target}={v.strip()}" for v in values.split(",") if v.strip()]


def _run_one(command, text, source, lines, overrides, out_dir, points, seed):
    cp = _parser_from_text(text, source)
    if cp.has_section("sweep"):
        cp.remove_section("sweep")
    apply_overrides(cp, overrides)
    rc = build_config(cp, source, lines)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return HANDLERS[command](rc, out, argparse.Namespace(points=points, seed=seed))


# -- entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ckr-lie", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("-c", "--config", help="INI configuration file")
    p.add_argument("-o", "--out-dir", default=".", help="directory for output files")
    p.add_argument("--seed", type=int, default=0, help="seed for random phase points")
    p.add_argument("--points", type=int, default=100, help="number of random phase points")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for [sweep] entries")
    p.add_argument("--validate", action="store_true", help="check the configuration and exit")
    p.add_argument(
        "--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
        help="override a configuration value (repeatable)",
    )
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.points < 1:
            raise ConfigError("--points must be positive")
        if args.command == "verify-algebra" and args.config is None:
            if args.validate:
                return EXIT_OK
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            summary = cmd_verify_algebra(None, out, args)
            print(json.dumps(summary, sort_keys=True))
            return EXIT_OK
        if args.config is None:
            raise ConfigError(f"command {args.command!r} needs a configuration file (-c)")
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err.strerror}") from None
        lines = _key_lines(text)
        cp = _parser_from_text(text, str(path))
        entries = _sweep_entries(cp)
        if entries is None:
            jobs = [(list(args.set), Path(args.out_dir))]
        else:
            jobs = [
                ([e] + list(args.set), Path(args.out_dir) / f"sweep_{k:03d}")
                for k, e in enumerate(entries)
            ]
        if args.validate:
            for overrides, _ in jobs:
                cp_k = _parser_from_text(text, str(path))
                if cp_k.has_section("sweep"):
                    cp_k.remove_section("sweep")
                apply_overrides(cp_k, overrides)
                build_config(cp_k, str(path), lines)
            print("config ok")
            return EXIT_OK
        call = [
            (args.command, text, str(path), lines, ov, str(out), args.points, args.seed)
            for ov, out in jobs
        ]
        if args.jobs > 1 and len(call) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_run_one, *zip(*call)))
        else:
            results = [_run_one(*c) for c in call]
        for res in results:
            print(json.dumps(res, sort_keys=True))
        return EXIT_OK
    except (NumericalError, ExprDomainError) as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InvariantError as err:
        print(f"invalid input: invariant {err}", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, ParseError, ChartDomainError, ValueError) as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
