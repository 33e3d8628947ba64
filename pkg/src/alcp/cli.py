"""Command line interface: ``alcp check|me|worlds|query <kb> [options]``.

Exit codes: 0 success, 1 parse error, 2 infeasible constraints,
3 ME-inconsistent KB on query, 4 zero-probability context,
5 non-convergence or resource limit.
"""

import argparse
import sys

from . import kbio
from .alc import DEFAULT_NODE_LIMIT, MODES, parse_concept
from .context import DEFAULT_MAX_VARIABLES, parse_context
from .engine import ORDER_INDEX, ORDER_PROB, Reasoner, Settings
from .errors import (
    AlcpError,
    InfeasibleConstraintsError,
    MEInconsistentError,
    ParseError,
    ZeroProbabilityContextError,
)
from .maxent import DEFAULT_MAX_ITER, DEFAULT_TOL, DEFAULT_ZERO_EPS, feasible

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INFEASIBLE = 2
EXIT_INCONSISTENT = 3
EXIT_ZERO_CONTEXT = 4
EXIT_LIMIT = 5


def _exit_code(exc):
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, InfeasibleConstraintsError):
        return EXIT_INFEASIBLE
    if isinstance(exc, MEInconsistentError):
        return EXIT_INCONSISTENT
    if isinstance(exc, ZeroProbabilityContextError):
        return EXIT_ZERO_CONTEXT
    # NonConvergenceError, ResourceLimitError, SignatureTooLargeError
    return EXIT_LIMIT


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("kb", help="knowledge base file")
    common.add_argument("--mode", choices=MODES, default="disjoint", help="strong non-subsumption reading")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="constraint residual tolerance")
    common.add_argument("--zero-eps", type=float, default=DEFAULT_ZERO_EPS, help="probabilities at or below this count as 0")
    common.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER, help="Newton step budget of the ME solver")
    common.add_argument("--max-vars", type=int, default=DEFAULT_MAX_VARIABLES, help="context signature size cap")
    common.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT, help="tableau node budget")
    common.add_argument("--threads", type=int, default=1, help="worker threads for the per-world checks")
    common.add_argument("--json", action="store_true", help="machine-readable output")

    parser = argparse.ArgumentParser(prog="alcp", description="Maximum-entropy reasoning for ALC with context labels.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="feasibility of the constraints and ME-consistency")
    sub.add_parser("me", parents=[common], help="print the maximum-entropy distribution")
    sub.add_parser("worlds", parents=[common], help="print every world with its restricted TBox")
    q = sub.add_parser("query", parents=[common], help="belief interval of a subsumption")
    q.add_argument("--lhs", required=True, help="subsumee concept")
    q.add_argument("--rhs", required=True, help="subsumer concept")
    q.add_argument("--given", default="true", help="conditioning context formula")
    q.add_argument("--anytime", action="store_true", help="include the anytime snapshot stream")
    q.add_argument("--order", choices=(ORDER_PROB, ORDER_INDEX), default=ORDER_PROB, help="world order for snapshots")
    q.add_argument("--trace", action="store_true", help="include the per-world classification")
    return parser


def _emit(out, obj, as_json, text):
    if as_json:
        out.write(kbio.dumps(obj) + "\n")
    else:
        out.write(text)


def _cmd_check(reasoner, args, out):
    kb = reasoner.kb
    if not feasible(kb.constraints):
        _emit(out, {"feasible": False, "me_consistent": None, "witness": None}, args.json,
              "constraints: infeasible (no probability distribution satisfies them)\n")
        return EXIT_INFEASIBLE
    rep = kbio.check_report(reasoner)
    if rep["me_consistent"]:
        text = "constraints: feasible\nME-consistent: yes\n"
    else:
        text = f"constraints: feasible\nME-consistent: no\nwitness world: {reasoner.me_consistent().witness}\n"
    _emit(out, rep, args.json, text)
    return EXIT_OK


def _cmd_me(reasoner, args, out):
    rep = kbio.me_report(reasoner)
    lines = [f"{'world':>6}  {' '.join(rep['variables'])}  probability"]
    for w in rep["worlds"]:
        bits = " ".join(("1" if w["assignment"][v] else "0").rjust(len(v)) for v in rep["variables"])
        lines.append(f"{w['index']:>6}  {bits}  {w['probability']!r}")
    lines.append(f"entropy {rep['entropy']!r} nats ({rep['iterations']} Newton steps)")
    _emit(out, rep, args.json, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_worlds(reasoner, args, out):
    rep = kbio.worlds_report(reasoner)
    lines = []
    for w in rep["worlds"]:
        assign = ", ".join(f"{v}={'1' if b else '0'}" for v, b in w["assignment"].items())
        lines.append(f"world {w['index']} ({assign}):")
        if w["tbox"]:
            lines.extend(f"  {ax}" for ax in w["tbox"])
        else:
            lines.append("  (empty)")
    _emit(out, rep, args.json, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_query(reasoner, args, out):
    kb = reasoner.kb
    lhs = parse_concept(args.lhs)
    rhs = parse_concept(args.rhs)
    given = parse_context(args.given, kb.context_signature)
    if args.anytime:
        snapshots = list(reasoner.belief_stream(lhs, rhs, given, order=args.order))
        result = snapshots[-1].result
    else:
        snapshots = None
        result = reasoner.belief_interval(lhs, rhs, given)
    report = kbio.QueryReport.from_result(result, lhs, rhs, given, args.mode, trace=args.trace, snapshots=snapshots)
    out.write(kbio.emit_report(report, "json" if args.json else "text").decode())
    return EXIT_OK


def run_cli(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        try:
            with open(args.kb, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ParseError(f"cannot read {args.kb}: {exc.strerror}") from exc
        kb = kbio.parse_kb(text)
        settings = Settings(
            tol=args.tol,
            max_iter=args.max_iter,
            zero_eps=args.zero_eps,
            mode=args.mode,
            node_limit=args.node_limit,
            max_variables=args.max_vars,
            threads=args.threads,
        )
        reasoner = Reasoner(kb, settings)
        handler = {"check": _cmd_check, "me": _cmd_me, "worlds": _cmd_worlds, "query": _cmd_query}[args.command]
        return handler(reasoner, args, out)
    except AlcpError as exc:
        err.write(f"alcp: error: {exc}\n")
        return _exit_code(exc)


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
