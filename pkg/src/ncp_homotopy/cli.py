"""``ncp-homotopy`` command line: solve, verify, oracle.

Exit codes: 0 accepted / check passed, 2 probable solution, 1 any other
solver outcome or failed check, 64 malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import DomainError, NcpError
from .homotopy import HomotopyInstance
from .oracle import ENUM_MAX_N, lcp_enumerate
from .problemfile import ProblemFile, ProblemFileError
from .problems import LcpData, builtin_names
from .reformulate import ReformulatedSystem, check_ncp_residual, eval_psi
from .tracer import Status, TraceRecord, TracerConfig, iter_trace_ode, iter_trace_pc

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_PROBABLE = 2
EXIT_USAGE = 64

_CONFIG_FLAGS = {
    "eps1": float,
    "eps2": float,
    "eta1": float,
    "eta2": float,
    "kappa1": float,
    "kappa2": float,
    "c0": int,
    "t_max": float,
    "max_iters": int,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would read as "probable"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(v: float) -> str:
    return "%.17g" % v


def trace_header(n: int) -> str:
    cols = ["iter", "event", "k", "det_sign", "psi_norm", "H_norm"]
    cols += [f"lambda_{i}" for i in range(1, n + 1)]
    cols += [f"x_{i}" for i in range(1, n + 1)]
    return ",".join(cols)


def trace_row(rec: TraceRecord) -> str:
    vals = [str(rec.iter), rec.event.value, str(rec.k), str(rec.det_sign),
            _fmt(rec.psi_norm), _fmt(rec.H_norm)]
    vals += [_fmt(v) for v in rec.lam]
    vals += [_fmt(v) for v in rec.x]
    return ",".join(vals)


def write_trace(path: str, n: int, records: Iterable[TraceRecord]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(trace_header(n) + "\n")
        for rec in records:
            fh.write(trace_row(rec) + "\n")


def _emit(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc) + "\n")


def _problem_file(args) -> ProblemFile:
    if args.problem and args.builtin:
        raise UsageError("give either --problem or --builtin, not both")
    if args.problem:
        try:
            pf = ProblemFile.load(args.problem)
        except OSError as exc:
            raise UsageError(f"cannot read {args.problem}: {exc.strerror}") from None
    elif args.builtin:
        pf = ProblemFile.for_builtin(args.builtin)
    else:
        raise UsageError("one of --problem or --builtin is required")
    return pf


def _point(values: Optional[Sequence[float]], n: int, what: str) -> Optional[np.ndarray]:
    if values is None:
        return None
    if len(values) != n:
        raise UsageError(f"{what} needs {n} values, got {len(values)}")
    return np.array(values, dtype=float)


def _config(args) -> TracerConfig:
    kw = {name: getattr(args, name) for name in _CONFIG_FLAGS}
    return TracerConfig().with_overrides(**kw)


def cmd_solve(args) -> int:
    pf = _problem_file(args)
    if args.dump_problem:
        pf.dump(args.dump_problem)
    x0 = _point(args.x0, pf.n, "--x0")
    x0 = pf.start() if x0 is None else x0
    try:
        cfg = _config(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    inst = HomotopyInstance.from_start(ReformulatedSystem(pf.build()), x0)
    runner = iter_trace_ode if args.tracer == "ode" else iter_trace_pc
    gen = runner(inst, cfg)
    records = []
    while True:
        try:
            records.append(next(gen))
        except StopIteration as stop:
            report = stop.value
            break
    if args.trace:
        write_trace(args.trace, pf.n, records)
    _emit(report.to_dict())
    if report.status is Status.ACCEPTED:
        return EXIT_OK
    if report.status is Status.PROBABLE:
        return EXIT_PROBABLE
    return EXIT_FAIL


def cmd_verify(args) -> int:
    pf = _problem_file(args)
    x = _point(args.x, pf.n, "--x")
    problem = pf.build()
    residual, feasible = check_ncp_residual(problem, x)
    psi = eval_psi(ReformulatedSystem(problem), x)
    _emit({"residual": residual, "feasible": feasible,
           "psi_norm": float(np.max(np.abs(psi)))})
    return EXIT_OK if residual <= args.tol else EXIT_FAIL


def cmd_oracle(args) -> int:
    pf = _problem_file(args)
    if pf.kind != "lcp":
        raise UsageError("the oracle handles lcp problems only")
    if pf.n > ENUM_MAX_N:
        raise UsageError(f"the oracle handles n <= {ENUM_MAX_N}")
    sols = lcp_enumerate(LcpData(np.array(pf.M), np.array(pf.q)))
    _emit({"solutions": [[float(v) for v in z] for z in sols]})
    return EXIT_OK


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", metavar="FILE", help="problem file (JSON)")
    p.add_argument("--builtin", metavar="NAME",
                   help=f"builtin problem ({', '.join(builtin_names())})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ncp-homotopy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="trace the homotopy to a solution")
    _add_problem_args(solve)
    solve.add_argument("--x0", type=float, nargs="+", help="start point (default: problem's, else ones)")
    solve.add_argument("--tracer", choices=("pc", "ode"), default="pc")
    solve.add_argument("--trace", metavar="CSV", help="write every trace record here")
    solve.add_argument("--dump-problem", metavar="FILE", help="write the resolved problem file")
    for name, typ in _CONFIG_FLAGS.items():
        solve.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    solve.set_defaults(func=cmd_solve)

    verify = sub.add_parser("verify", help="complementarity residual at a point")
    _add_problem_args(verify)
    verify.add_argument("--x", type=float, nargs="+", required=True)
    verify.add_argument("--tol", type=float, default=1e-6)
    verify.set_defaults(func=cmd_verify)

    oracle = sub.add_parser("oracle", help="enumerate all solutions of a small LCP")
    _add_problem_args(oracle)
    oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ProblemFileError, DomainError) as exc:
        print(f"ncp-homotopy: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NcpError as exc:
        print(f"ncp-homotopy: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
