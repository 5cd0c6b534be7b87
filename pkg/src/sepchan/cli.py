"""Command-line front end.

Exit codes: 0 when the check passes (or the command only reports), 1 when
a completed check fails, 2 for usage, I/O and format errors.

JSON reports always carry the keys ``tool_version``, ``command``,
``tolerance``, ``payload`` in that order, followed by ``pass`` for
commands that check something.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channels import ChannelError, NotProduct, apply_to_density, is_separable, validate_channel
from .distill import (
    paper_channel,
    paper_eigenstates,
    paper_source,
    paper_target,
    thm1_case_analysis,
    verify_deterministic_distillation,
)
from .formats import (
    FormatError,
    channel_to_json,
    complex_pair,
    dumps,
    parse_channel_file,
    parse_protocol_file,
    parse_state_file,
    protocol_to_json,
    state_to_json,
    write_json,
)
from .locc import (
    ProtocolError,
    branch_nonvanishing_check,
    converts_deterministically,
    nielsen_plan,
    nielsen_rank2_protocol,
    simulate,
    validate_protocol,
)
from .monotones import WeightError, majorization_check, vidal_pmax, weights_of
from .states import DensityOperator, PureState, StateError, product_vectors_in_span, schmidt_decompose
from .tensor import BRANCH_TOL, DEFAULT_TOL, DimensionError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------- helpers


def _pure(path, tol) -> PureState:
    state = parse_state_file(path, tol)
    if not isinstance(state, PureState):
        raise FormatError(str(path), "expected a pure state (kind 'pure')")
    return state


def _density(path, tol) -> DensityOperator:
    state = parse_state_file(path, tol)
    return state.density() if isinstance(state, PureState) else state


def _weights_arg(text: str, tol: float):
    """A comma-separated weight list, or a path to a pure-state file."""
    if Path(text).is_file():
        return weights_of(_pure(text, tol))
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse weights {text!r}: expected comma-separated numbers or a state file") from exc
    w = np.array(sorted(values, reverse=True))
    if w.size and abs(w.sum() - 1.0) <= 1e-6:
        # accept rounded decimal input such as 0.9330127,0.0669873
        w = w / w.sum()
    return w


def _fl(values) -> list[float]:
    return [float(v) for v in values]


# ---------------------------------------------------------------- commands


def cmd_schmidt(args):
    psi = _pure(args.state, args.tol)
    dec = schmidt_decompose(psi, args.tol)
    return {"dims": psi.dims.as_list(), "weights": _fl(dec.weights), "rank": dec.rank}, None


def cmd_span_scan(args):
    psi1, psi2 = _pure(args.psi1, args.tol), _pure(args.psi2, args.tol)
    report = product_vectors_in_span(psi1, psi2, args.tol)
    witnesses = [{"c": complex_pair(c), "d": complex_pair(d)} for c, d in report.witnesses]
    return {"verdict": report.verdict.value, "witnesses": witnesses}, None


def _separability_payload(ch, tol):
    if ch.dims_in != ch.dims_out:
        return None, []
    sep = is_separable(ch, tol)
    rows = []
    for k, r in enumerate(sep.operators):
        if isinstance(r, NotProduct):
            rows.append({"index": k, "product": False, "second_singular_value": r.second_singular_value})
        else:
            rows.append({"index": k, "product": True, "residual": r.residual})
    return sep.separable, rows


def cmd_channel_verify(args):
    ch = parse_channel_file(args.channel)
    comp = validate_channel(ch, args.tol)
    separable, rows = _separability_payload(ch, args.tol)
    payload = {
        "dims_in": ch.dims_in.as_list(),
        "dims_out": ch.dims_out.as_list(),
        "num_operators": len(ch),
        "completeness_deviation": comp.deviation,
        "complete": comp.passed,
        "separable": separable,
        "operators": rows,
    }
    ok = comp.passed and (bool(separable) or not args.require_separable)
    return payload, ok


def cmd_channel_apply(args):
    ch = parse_channel_file(args.channel)
    rho = _density(args.state, args.tol)
    try:
        out = apply_to_density(ch, rho, args.tol)
    except ChannelError as exc:
        return {"error": str(exc)}, False
    if args.out:
        write_json(args.out, state_to_json(out))
    return {"output": state_to_json(out), "trace": float(np.trace(out.matrix).real)}, None


def cmd_paper_emit(args):
    if args.object == "channel":
        obj = channel_to_json(paper_channel())
    elif args.object == "source":
        obj = state_to_json(paper_source(args.p))
    else:
        obj = state_to_json(paper_target())
    if args.out is None:
        sys.stdout.write(dumps(obj))
        return None, None
    write_json(args.out, obj)
    return {"object": args.object, "path": str(args.out)}, None


def _source_and_target(args):
    if args.builtin_source:
        rho = paper_source(args.p)
    elif args.source:
        rho = _density(args.source, args.tol)
    else:
        raise UsageError("distill-verify: give --source FILE or --builtin-source")
    if args.builtin_target:
        phi = paper_target()
    elif args.target:
        phi = _pure(args.target, args.tol)
    else:
        raise UsageError("distill-verify: give --target FILE or --builtin-target")
    return rho, phi


def cmd_distill_verify(args):
    ch = parse_channel_file(args.channel) if args.channel else paper_channel()
    rho, phi = _source_and_target(args)
    try:
        report = verify_deterministic_distillation(ch, rho, phi, args.tol)
    except ChannelError as exc:
        return {"success": False, "failures": [str(exc)]}, False
    payload = {
        "success": report.success,
        "weights": _fl(report.weights),
        "total_probability": _fl(report.total_probability),
        "operators": [
            {
                "index": r.index,
                "probabilities": _fl(r.probabilities),
                "coefficients": _fl(r.coefficients),
                "passed": r.passed,
                "reason": r.reason,
            }
            for r in report.per_operator
        ],
        "fidelity_grid": [[p, f] for p, f in report.fidelity_grid],
        "failures": list(report.failures),
    }
    return payload, report.success


def cmd_case_analysis(args):
    if args.builtin:
        ch = paper_channel()
        psi1, psi2 = paper_eigenstates()
        phi = paper_target()
    else:
        missing = [n for n in ("channel", "psi1", "psi2", "target") if getattr(args, n) is None]
        if missing:
            raise UsageError(f"case-analysis: missing --{', --'.join(missing)} (or use --builtin)")
        ch = parse_channel_file(args.channel)
        psi1, psi2, phi = (_pure(getattr(args, n), args.tol) for n in ("psi1", "psi2", "target"))
    try:
        report = thm1_case_analysis(ch, psi1, psi2, phi, args.tol)
    except ChannelError as exc:
        return {"error": str(exc)}, False
    rows = []
    for r in report.per_operator:
        row = {
            "index": r.index,
            "case": r.case.value,
            "c": complex_pair(r.c),
            "d": complex_pair(r.d),
            "rank_a": r.rank_a,
            "rank_b": r.rank_b,
            "witness": None,
        }
        if r.witness is not None:
            row["witness"] = {
                "schmidt_rank": r.witness.schmidt_rank,
                "is_product": r.witness.is_product,
                "bob_residual": r.witness.bob_residual,
                "amplitudes": [complex_pair(z) for z in r.witness.state.amplitudes],
            }
        rows.append(row)
    return {"operators": rows}, None


def cmd_pmax(args):
    src, tgt = _weights_arg(args.src, args.tol), _weights_arg(args.tgt, args.tol)
    return {"src": _fl(src), "tgt": _fl(tgt), "pmax": vidal_pmax(src, tgt), "majorizes": majorization_check(src, tgt)}, None


def cmd_majorize(args):
    src, tgt = _weights_arg(args.src, args.tol), _weights_arg(args.tgt, args.tol)
    ok = majorization_check(src, tgt)
    return {"src": _fl(src), "tgt": _fl(tgt), "majorizes": ok}, ok


def cmd_locc_validate(args):
    root = parse_protocol_file(args.protocol)
    rep = validate_protocol(root, args.tol)
    nodes = [{"path": list(path), "deviation": dev} for path, dev in rep.deviations]
    return {"depth": rep.depth, "alternating": rep.alternating, "complete": rep.complete, "nodes": nodes}, rep.complete


def _branches_payload(records):
    out = []
    for rec in records:
        per = []
        for prob, post in rec.per_input:
            per.append(
                {
                    "probability": prob,
                    "post": None if post is None else [complex_pair(z) for z in post.amplitudes],
                }
            )
        out.append({"branch_id": list(rec.branch_id), "per_input": per})
    return out


def cmd_locc_simulate(args):
    root = parse_protocol_file(args.protocol)
    inputs = [_pure(p, args.tol) for p in args.states]
    records = simulate(root, inputs, BRANCH_TOL)
    payload = {"num_leaves": len(records), "branches": _branches_payload(records)}
    if len(inputs) < 2:
        return payload, None
    i, j = args.pair
    try:
        violations = branch_nonvanishing_check(records, i, j)
    except IndexError as exc:
        raise UsageError(str(exc)) from exc
    payload["violations"] = [
        {"branch_id": list(v.branch_id), "surviving_input": v.surviving_input, "probabilities": _fl(v.probabilities)}
        for v in violations
    ]
    return payload, not violations


def cmd_locc_nielsen(args):
    src, tgt = _pure(args.src, args.tol), _pure(args.tgt, args.tol)
    try:
        root = nielsen_rank2_protocol(src, tgt, args.tol)
    except ProtocolError as exc:
        return {"error": str(exc)}, False
    p = float(weights_of(src)[0])
    q = float(weights_of(tgt)[0])
    plan = nielsen_plan(p, q)
    rep = validate_protocol(root, args.tol)
    records = simulate(root, [src])
    converts = converts_deterministically(records, 0, tgt, args.tol)
    if args.out:
        write_json(args.out, protocol_to_json(root))
    payload = {
        "p": plan.p,
        "q": plan.q,
        "n1": plan.n1,
        "n2": plan.n2,
        "complete": rep.complete,
        "leaf_probabilities": [rec.per_input[0][0] for rec in records],
        "converts": converts,
        "protocol": protocol_to_json(root),
    }
    return payload, rep.complete and converts


# ---------------------------------------------------------------- output


def _text(obj, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and not _flat(v):
                lines.append(f"{pad}{k}:")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(obj, list):
        if obj and all(isinstance(r, dict) for r in obj):
            lines.extend(_table(obj, pad))
        else:
            for v in obj:
                lines.extend(_text(v, indent + 1) if isinstance(v, (dict, list)) and not _flat(v) else [pad + _scalar(v)])
    else:
        lines.append(pad + _scalar(obj))
    return lines


def _flat(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) or _flat(x) for x in v) and len(str(v)) < 100


def _scalar(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, list):
        return "[" + ", ".join(_scalar(x) for x in v) + "]"
    if v is None:
        return "-"
    if isinstance(v, dict):
        return "{...}"
    return str(v)


def _table(rows, pad) -> list[str]:
    keys = list(rows[0].keys())
    cells = [[_scalar(r.get(k)) for k in keys] for r in rows]
    cells = [[c if len(c) <= 60 else c[:57] + "..." for c in row] for row in cells]
    widths = [max(len(k), *(len(row[i]) for row in cells)) for i, k in enumerate(keys)]
    lines = [pad + "  ".join(k.ljust(w) for k, w in zip(keys, widths))]
    lines.append(pad + "  ".join("-" * w for w in widths))
    lines.extend(pad + "  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells)
    return lines


def render(command: str, tol: float, payload, ok, fmt: str) -> str:
    envelope = {"tool_version": __version__, "command": command, "tolerance": tol, "payload": payload}
    if ok is not None:
        envelope["pass"] = bool(ok)
    if fmt == "json":
        return dumps(envelope)
    lines = [f"{command} (sepchan {__version__}, tol {tol:g})"]
    lines.extend(_text(payload, 1))
    if ok is not None:
        lines.append(f"result: {'PASS' if ok else 'FAIL'}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="numerical tolerance (default 1e-10)")
    common.add_argument("--format", choices=("text", "json"), default="text")

    parser = _Parser(prog="sepchan", description="Separable-channel and LOCC verification toolkit.")
    parser.add_argument("--version", action="version", version=f"sepchan {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("schmidt", cmd_schmidt, "Schmidt weights and rank of a pure state")
    sp.add_argument("state")

    sp = add("span-scan", cmd_span_scan, "product vectors in the span of two pure states")
    sp.add_argument("psi1")
    sp.add_argument("psi2")

    sp = add("channel-verify", cmd_channel_verify, "completeness and per-operator product structure")
    sp.add_argument("channel")
    sp.add_argument("--require-separable", action="store_true", help="fail unless every operator factors")

    sp = add("channel-apply", cmd_channel_apply, "apply a channel to a state")
    sp.add_argument("channel")
    sp.add_argument("state")
    sp.add_argument("--out", help="write the output density to this file")

    sp = add("paper-emit", cmd_paper_emit, "write the built-in 3x3 channel, source or target")
    sp.add_argument("--object", choices=("channel", "source", "target"), default="channel")
    sp.add_argument("--p", type=float, default=0.5, help="mixing weight for the source (default 0.5)")
    sp.add_argument("--out", help="output file (default: print the object)")

    sp = add("distill-verify", cmd_distill_verify, "check deterministic distillation")
    sp.add_argument("--channel", help="channel file (default: built-in channel)")
    sp.add_argument("--source")
    sp.add_argument("--builtin-source", action="store_true")
    sp.add_argument("--p", type=float, default=0.5)
    sp.add_argument("--target")
    sp.add_argument("--builtin-target", action="store_true")

    sp = add("case-analysis", cmd_case_analysis, "classify product Kraus operators on a pair of states")
    sp.add_argument("--channel")
    sp.add_argument("--psi1")
    sp.add_argument("--psi2")
    sp.add_argument("--target")
    sp.add_argument("--builtin", action="store_true", help="use the built-in channel and states")

    for name, fn, help_ in (
        ("pmax", cmd_pmax, "maximum LOCC conversion probability between pure states"),
        ("majorize", cmd_majorize, "deterministic LOCC convertibility (majorization)"),
    ):
        sp = add(name, fn, help_)
        sp.add_argument("--src", required=True, help="comma-separated weights or a pure-state file")
        sp.add_argument("--tgt", required=True, help="comma-separated weights or a pure-state file")

    sp = add("locc-validate", cmd_locc_validate, "check a protocol tree")
    sp.add_argument("protocol")

    sp = add("locc-simulate", cmd_locc_simulate, "run a protocol tree on pure inputs")
    sp.add_argument("protocol")
    sp.add_argument("states", nargs="+")
    sp.add_argument("--pair", type=int, nargs=2, default=(0, 1), metavar=("I", "J"), help="inputs for the branch check")

    sp = add("locc-nielsen", cmd_locc_nielsen, "build the two-round protocol for a rank-2 conversion")
    sp.add_argument("src")
    sp.add_argument("tgt")
    sp.add_argument("--out", help="write the protocol to this file")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise UsageError("sepchan: error: a command is required")
        payload, ok = args.func(args)
    except SystemExit as exc:
        # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except (FormatError, StateError, DimensionError, WeightError, ProtocolError, ValueError) as exc:
        print(f"sepchan: error: {exc}", file=sys.stderr)
        return 2
    if payload is not None:
        sys.stdout.write(render(args.command, args.tol, payload, ok, args.format))
    return 1 if ok is False else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
