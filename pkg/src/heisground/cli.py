"""Command-line front end.

Commands: calculus-check, solve, exhaust, classify.  JSON is the control
plane (configs, reports), CSV carries plot series, HGF stores fields.
Exit codes: 0 success, 1 invariant failure, 2 non-convergence, 64 usage,
66 I/O.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields as dc_fields

from . import cc_diag, hgf, solvers
from .errors import ConfigurationError, DomainError, HeisgroundError
from .heis_core import calculus_check_suite

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_NONCONVERGED = 2
EXIT_USAGE = 64
EXIT_IO = 66


@dataclass
class RunConfig:
    """Flat, serializable mirror of SolverConfig plus I/O paths."""

    method: str = "constrained-min"
    p: float = 2.0
    radius: float = 6.0
    grid: int = 48
    eps: float = 1.0
    tau: float = 5e-3
    max_iters: int = 40000
    grad_tol: float = 1e-6
    path_points: int = 11
    seed: int = 0
    out: str = ""
    report: str = ""

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dc_fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.method not in ("mountain-pass", "constrained-min"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        self.to_solver_config().validate()

    def to_solver_config(self) -> solvers.SolverConfig:
        return solvers.SolverConfig(
            p=self.p,
            ball_radius=self.radius,
            nodes_per_axis=self.grid,
            eps=self.eps,
            step_size=self.tau,
            max_iters=self.max_iters,
            grad_tol=self.grad_tol,
            path_points=self.path_points,
            seed=self.seed,
        )


def _atomic_write_text(path: str, text: str) -> None:
    dirname = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=dirname, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, obj) -> None:
    _atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _fmt(v) -> str:
    return f"{v:.17g}" if isinstance(v, float) else str(v)


def _write_csv(path: str, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _atomic_write_text(path, buf.getvalue())


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heisground", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("calculus-check", help="run the group-calculus invariant suite")
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--out", default="", help="optional JSON output path")
    pc.add_argument("--flip-y-sign", action="store_true", help=argparse.SUPPRESS)

    ps = sub.add_parser("solve", help="compute a ground state on one gauge ball")
    ps.add_argument("--method", choices=["mountain-pass", "constrained-min"],
                    default="constrained-min")
    ps.add_argument("--p", type=float, default=2.0)
    ps.add_argument("--radius", type=float, default=6.0)
    ps.add_argument("--grid", type=int, default=48)
    ps.add_argument("--eps", type=float, default=1.0)
    ps.add_argument("--tau", type=float, default=5e-3)
    ps.add_argument("--max-iters", type=int, default=40000)
    ps.add_argument("--grad-tol", type=float, default=1e-6)
    ps.add_argument("--path-points", type=int, default=11)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--out", default="", help="HGF output path for the field")
    ps.add_argument("--report", default="", help="JSON report path")

    pe = sub.add_parser("exhaust", help="mountain-pass levels on nested balls")
    pe.add_argument("--radii", default="2,3,4,5,6",
                    help="comma-separated increasing ball radii")
    pe.add_argument("--p", type=float, default=2.0)
    pe.add_argument("--grid", type=int, default=48)
    pe.add_argument("--tau", type=float, default=5e-3)
    pe.add_argument("--max-iters", type=int, default=40000)
    pe.add_argument("--grad-tol", type=float, default=1e-6)
    pe.add_argument("--path-points", type=int, default=11)
    pe.add_argument("--jobs", type=int, default=1)
    pe.add_argument("--out-csv", default="exhaust.csv")
    pe.add_argument("--out-json", default="exhaust.json")

    pk = sub.add_parser("classify", help="trichotomy verdict for a field sequence")
    pk.add_argument("--inputs", nargs="+", required=True, help="HGF files, in order")
    pk.add_argument("--q", type=float, default=3.0)
    pk.add_argument("--eps", type=float, default=0.1)
    pk.add_argument("--radii", default="0.5,1.0,1.5",
                    help="comma-separated probe ball radii")
    pk.add_argument("--stride", type=int, default=2)
    pk.add_argument("--out", default="", help="JSON verdict path")
    pk.add_argument("--profiles-csv", default="", help="CSV of Q(R) profiles")

    return parser


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_calculus_check(args) -> int:
    checks = calculus_check_suite(seed=args.seed, flip_y_sign=args.flip_y_sign)
    failed = [c["name"] for c in checks if not c["passed"]]
    out = {"checks": checks, "failed": failed, "passed": not failed}
    text = json.dumps(out, indent=2, sort_keys=True)
    if args.out:
        _atomic_write_text(args.out, text + "\n")
    print(text)
    if failed:
        print(f"FAILED checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = RunConfig(
        method=args.method,
        p=args.p,
        radius=args.radius,
        grid=args.grid,
        eps=args.eps,
        tau=args.tau,
        max_iters=args.max_iters,
        grad_tol=args.grad_tol,
        path_points=args.path_points,
        seed=args.seed,
        out=args.out,
        report=args.report,
    )
    cfg.validate()
    scfg = cfg.to_solver_config()
    if args.method == "mountain-pass":
        rep = solvers.solve_mountain_pass(scfg)
    else:
        rep = solvers.solve_constrained_min(scfg)
    report = {
        "config": asdict(cfg),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        **rep.as_dict(),
    }
    if args.out:
        hgf.write_hgf(args.out, rep.field, ball_radius=cfg.radius, p=cfg.p,
                      metadata={"method": args.method})
    if args.report:
        _write_json(args.report, report)
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if rep.converged else EXIT_NONCONVERGED


def _parse_radii(text: str):
    try:
        radii = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"bad radii list {text!r}") from exc
    if len(radii) < 2 or any(b <= a for a, b in zip(radii[:-1], radii[1:])):
        raise ConfigurationError("radii must be strictly increasing (>= 2 values)")
    return radii


def _solo_exhaust_entry(payload):
    radii, cfg_dict, k = payload
    cfg = solvers.SolverConfig(**cfg_dict)
    cfg.ball_radius = radii[-1]
    master = solvers.make_domain(cfg)
    from .grid import ball_mask, zero_extend

    mask = ball_mask(master.grid, k)
    u0 = solvers.pick_u0(
        solvers.Domain(master.grid, ball_mask(master.grid, radii[0]), radii[0]), cfg.p
    )
    rep = solvers.solve_mountain_pass(
        cfg, domain=solvers.Domain(master.grid, mask, k),
        u0=zero_extend(u0, mask),
    )
    decay = solvers.fit_decay(rep.field, ball_radius=k)
    from .heis_core import gauge

    return {
        "radius": k,
        "level": rep.level,
        "max_value": rep.max_value,
        "xi_gauge": gauge(rep.max_point),
        "delta": decay.delta,
        "r_squared": decay.r_squared,
        "converged": rep.converged,
    }


def cmd_exhaust(args) -> int:
    radii = _parse_radii(args.radii)
    cfg = solvers.SolverConfig(
        p=args.p,
        ball_radius=radii[-1],
        nodes_per_axis=args.grid,
        step_size=args.tau,
        max_iters=args.max_iters,
        grad_tol=args.grad_tol,
        path_points=args.path_points,
    )
    cfg.validate()
    rows = []
    failed = False
    if args.jobs > 1:
        payloads = [(radii, cfg.__dict__, k) for k in radii]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for entry in pool.map(_solo_exhaust_entry, payloads):
                rows.append(entry)
                failed = failed or not entry["converged"]
        levels = [r["level"] for r in rows]
        slack = max(
            ((b - a) / abs(a) for a, b in zip(levels[:-1], levels[1:])),
            default=0.0,
        )
        monotone = slack <= 1e-6
        verdict = {"monotone": monotone, "monotone_slack": slack, "entries": rows}
    else:
        try:
            report = solvers.exhaust_domains(radii, cfg)
        except HeisgroundError as exc:
            print(f"exhaust failed: {exc}", file=sys.stderr)
            failed = True
            report = None
        if report is not None:
            verdict = report.as_dict()
            rows = verdict["entries"]
            for entry, e in zip(rows, report.entries):
                entry["converged"] = e.report.converged
                failed = failed or not e.report.converged
        else:
            verdict = {"monotone": False, "entries": []}
    _write_csv(
        args.out_csv,
        ["k", "c_k", "max_value", "xi_gauge", "delta", "r2"],
        [
            [r["radius"], r["level"], r["max_value"], r["xi_gauge"], r["delta"],
             r["r_squared"]]
            for r in rows
        ],
    )
    _write_json(args.out_json, verdict)
    return EXIT_NONCONVERGED if failed else EXIT_OK


def cmd_classify(args) -> int:
    radii = [float(tok) for tok in args.radii.split(",") if tok.strip()]
    if len(args.inputs) < 3:
        print("classify needs at least 3 input fields", file=sys.stderr)
        return EXIT_USAGE
    fields = []
    for path in args.inputs:
        try:
            f, _ = hgf.read_hgf(path)
        except (OSError, HeisgroundError) as exc:
            print(f"cannot read {path}: {exc}", file=sys.stderr)
            return EXIT_IO
        fields.append(f)
    densities = [cc_diag.normalize_mass(f, args.q) for f in fields]
    result = cc_diag.classify_sequence(
        densities, eps=args.eps, R_grid=radii, center_stride=args.stride
    )
    out = result.as_dict()
    text = json.dumps(out, indent=2, sort_keys=True)
    if args.out:
        _atomic_write_text(args.out, text + "\n")
    print(text)
    if args.profiles_csv:
        rows = []
        for m, prof in enumerate(result.profiles):
            for r, q, _ in prof.samples:
                rows.append([m, r, q])
        _write_csv(args.profiles_csv, ["index", "R", "Q"], rows)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    handlers = {
        "calculus-check": cmd_calculus_check,
        "solve": cmd_solve,
        "exhaust": cmd_exhaust,
        "classify": cmd_classify,
    }
    try:
        return handlers[args.command](args)
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except HeisgroundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    raise SystemExit(main())
