"""Command line front end: ``delay-reach <command> --spec FILE ...``.

Exit codes: 0 pass, 1 negative verdict, 2 inconclusive, 3 usage, 4 file
access, 5 schema, 6 grid divisibility, 7 shape mismatch, 8 numerical
precondition failed.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import GridError
from .bezout import solve_bezout_commensurate, verify_bezout
from .hautus import hautus_check, hautus_grid_check
from .io import (SchemaError, ShapeError, dumps_report, load_spec, read_bezout,
                 read_signal, write_bezout, write_signal)
from .reach import (compress_control, extend_to_state, minimal_time_bound,
                    plan_control, reach_and_verify, simulate, state_residual)
from .signals import GridSignal
from .system import build_QP

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2
EXIT_USAGE, EXIT_IO, EXIT_SCHEMA, EXIT_GRID, EXIT_SHAPE, EXIT_NUMERIC = 3, 4, 5, 6, 7, 8

COMMANDS = ("simulate", "bound", "hautus", "bezout", "plan", "compress", "verify")

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="delay-reach", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--spec", required=True, help="system spec JSON")
    p.add_argument("--target", help="target signal CSV (d columns)")
    p.add_argument("--input", help="input/control signal CSV (m columns)")
    p.add_argument("--bezout", help="Bezout pair JSON")
    p.add_argument("--strip", help="re_lo,re_hi,im_lo,im_hi for the grid scan")
    p.add_argument("--density", type=float, default=0.05, help="grid scan spacing")
    p.add_argument("--tol", type=float, help="verdict tolerance (command default)")
    p.add_argument("--T", type=float, dest="T", help="time horizon in seconds")
    p.add_argument("--out", default="delay-reach-out", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized targets")
    p.add_argument("--version", action="version", version=f"delay-reach {__version__}")
    return p


def _strip(text):
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"--strip: not four numbers: {text!r}") from None
    if len(vals) != 4:
        raise UsageError("--strip needs exactly four values a,b,c,d")
    return vals


def _need(args, name):
    if getattr(args, name) is None:
        raise UsageError(f"{args.command} requires --{name}")
    return getattr(args, name)


def _witness_dict(w):
    if w is None:
        return None
    return {"p": w.p, "z": w.z, "g": list(w.g), "residual": w.residual}


def _pair(args, spec, Q, P):
    """Bezout pair from --bezout, else from the commensurate solver."""
    if args.bezout:
        R, S = read_bezout(args.bezout, spec)
        ok, res = verify_bezout(Q, P, R, S)
        return R, S, res, "file"
    if spec.g is not None:
        raise UsageError("distributed delay: supply --bezout (no synthesis for g != 0)")
    pair = solve_bezout_commensurate(spec)
    if not pair.success:
        return None, None, pair.best_residual, "solver"
    return pair.R, pair.S, pair.residual, "solver"


def _cmd_simulate(args, spec, out, rep):
    u = read_signal(_need(args, "input"), spec.h, spec.m)
    T = args.T if args.T is not None else 10 * spec.max_delay
    x, y = simulate(spec, u, T)
    write_signal(out / "state.csv", x)
    write_signal(out / "output.csv", y)
    rep.update(T_out=T, output_l1=y.l1_norm(), files=["state.csv", "output.csv"])
    return EXIT_PASS


def _cmd_bound(args, spec, out, rep):
    rep.update(minimal_time_bound=minimal_time_bound(spec), d_times_delay_N=spec.d * spec.max_delay)
    return EXIT_PASS


def _cmd_hautus(args, spec, out, rep):
    tol = args.tol if args.tol is not None else 1e-6
    rep["tolerances"]["hautus"] = tol
    if args.strip:
        r = hautus_grid_check(spec, _strip(args.strip), args.density, tol)
    else:
        r = hautus_check(spec, density=args.density, tol=tol)
    rep.update(verdict=r.verdict, method=r.method, min_margin=r.min_margin,
               limit_check=r.limit_check, gcd_degree=r.gcd_degree,
               witness=_witness_dict(r.witness), details=r.details)
    return {"pass": EXIT_PASS, "fail": EXIT_FAIL}.get(r.verdict, EXIT_INCONCLUSIVE)


def _cmd_bezout(args, spec, out, rep):
    Q, P = build_QP(spec)
    R, S, res, source = _pair(args, spec, Q, P)
    tol = args.tol if args.tol is not None else 1e-9
    rep["tolerances"]["bezout"] = tol
    ok = R is not None and res <= tol
    rep.update(source=source, residual=res, verdict="pass" if ok else "fail")
    if ok and source == "solver":
        write_bezout(out / "bezout.json", R, S)
        rep["files"] = ["bezout.json"]
    return EXIT_PASS if ok else EXIT_FAIL


def _cmd_plan(args, spec, out, rep):
    Q, P = build_QP(spec)
    psi = read_signal(_need(args, "target"), spec.h, spec.d)
    R, S, res, source = _pair(args, spec, Q, P)
    if R is None:
        rep.update(verdict="fail", stage="bezout", residual=res)
        return EXIT_FAIL
    omega = plan_control(spec, S, psi, Q=Q)
    write_signal(out / "control.csv", omega)
    _, y = simulate(spec, omega, psi.stop * spec.h)
    err = y.distance_l1(psi, 0, psi.stop)
    tol = args.tol if args.tol is not None else 1e-8
    rep["tolerances"]["plan"] = tol
    rep.update(bezout_residual=res, source=source, error=err,
               state_residual=state_residual(spec, psi.restrict(0, psi.stop), Q),
               verdict="pass" if err <= tol else "fail", files=["control.csv"])
    return EXIT_PASS if err <= tol else EXIT_FAIL


def _cmd_compress(args, spec, out, rep):
    omega = read_signal(_need(args, "input"), spec.h, spec.m)
    T = _need(args, "T")
    T_check = 10 * spec.max_delay
    alpha = compress_control(spec, omega, T, T_check)
    write_signal(out / "control.csv", alpha)
    _, y0 = simulate(spec, omega, T_check)
    _, y1 = simulate(spec, alpha, T_check)
    err = y1.distance_l1(y0, 0, y0.stop)
    tol = args.tol if args.tol is not None else 1e-8
    rep["tolerances"]["compress"] = tol
    inside = alpha.values.size == 0 or alpha.support_inf() >= -T - 1e-12 * T
    ok = err <= tol and inside
    rep.update(T=T, T_check=T_check, error=err, support=[alpha.support_inf(), alpha.support_sup()]
               if alpha.values.size else None, verdict="pass" if ok else "fail",
               files=["control.csv"])
    return EXIT_PASS if ok else EXIT_FAIL


def _cmd_verify(args, spec, out, rep):
    Q, P = build_QP(spec)
    if args.target:
        psi = read_signal(args.target, spec.h, spec.d)
        rep["target_source"] = "file"
    else:
        rng = np.random.default_rng(args.seed)
        y0 = GridSignal(spec.h, 0, rng.uniform(-1, 1, (spec.L, spec.d)))
        psi = extend_to_state(spec, y0, 10 * spec.max_delay)
        rep["target_source"] = f"random(seed={args.seed})"
    R, S, res, source = _pair(args, spec, Q, P)
    if R is None:
        rep.update(verdict="fail", stage="bezout", bezout_residual=res)
        return EXIT_FAIL
    T = args.T if args.T is not None else minimal_time_bound(spec, Q) + spec.h
    tol = args.tol if args.tol is not None else 1e-9
    rep["tolerances"]["verify"] = tol
    r = reach_and_verify(spec, S, psi, T, tol)
    write_signal(out / "target.csv", psi)
    write_signal(out / "control.csv", r.alpha)
    write_signal(out / "output.csv", r.output)
    rep.update(verdict=r.verdict, stage=r.stage, error=r.error, plan_error=r.plan_error,
               state_residual=r.state_residual, T=r.T, minimal_time_bound=r.bound,
               bezout_residual=res, source=source, error_constant=r.error_constant,
               support=[r.alpha.support_inf(), r.alpha.support_sup()]
               if r.alpha.values.size else None, notes=r.notes,
               files=["control.csv", "output.csv", "target.csv"])
    return EXIT_PASS if r.passed else EXIT_FAIL


HANDLERS = {"simulate": _cmd_simulate, "bound": _cmd_bound, "hautus": _cmd_hautus,
            "bezout": _cmd_bezout, "plan": _cmd_plan, "compress": _cmd_compress,
            "verify": _cmd_verify}


def run(argv):
    """Parse ``argv``, run the command, write ``report.json``; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
        if args.tol is not None and not args.tol > 0:
            raise UsageError("--tol must be positive")
        if not args.density > 0:
            raise UsageError("--density must be positive")
        if args.T is not None and not args.T > 0:
            raise UsageError("--T must be positive")
        spec, digest = load_spec(args.spec)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rep = {"command": args.command, "tool_version": __version__, "spec_sha256": digest,
               "seed": args.seed, "tolerances": {"state": 1e-9, "reject": 1e-6}}
        code = HANDLERS[args.command](args, spec, out, rep)
        rep["exit_code"] = code
        (out / "report.json").write_text(dumps_report(rep))
        print(f"{args.command}: {rep.get('verdict', 'done')} (report: {out / 'report.json'})")
        return code
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SchemaError as e:
        print(f"schema error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except GridError as e:
        print(f"grid error: {e}", file=sys.stderr)
        return EXIT_GRID
    except ShapeError as e:
        print(f"shape error: {e}", file=sys.stderr)
        return EXIT_SHAPE
    except OSError as e:
        print(f"file error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None):
    sys.exit(run(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
