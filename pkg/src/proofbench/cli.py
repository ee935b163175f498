"""Command-line surface for generation, checking, translation, extraction.

Exit codes: 0 pass, 1 semantic reject or failed verification, 2 usage or
format error, 3 budget exhausted.  Every command that writes a proof
rechecks it before reporting success, and every report begins with the
seed in effect so runs are reproducible byte for byte.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .circuits import (
    MonotoneCircuit,
    eval_circuit,
    parse_circuit,
    render_circuit,
    to_bounded_fanin,
)
from .formula import (
    Formula,
    FormulaSyntaxError,
    formula_size,
    parse_formula,
    render_formula,
)
from .frege import (
    check_frege_dag,
    check_frege_seq,
    frege_metrics,
    parse_frege_dag,
    parse_frege_seq,
    render_frege_dag,
    render_frege_seq,
    seq_to_dag,
)
from .natded import (
    BudgetExceeded,
    StructureError,
    check_nm,
    nm_metrics,
    parse_nm,
    render_nm,
)
from .semantics import decide, render_kripke
from .tautgen import build_tau, make_shape, specialize_to_cc, validate_tau
from .interp import extract_interpolant
from .circuits import check_interpolates, check_separates
from .transforms import (
    frege_dag_to_tree,
    frege_to_nm,
    nm_to_frege,
    nm_to_tree,
)

__all__ = ["main"]

PASS, REJECT, USAGE, BUDGET = 0, 1, 2, 3


class _CliError(Exception):
    def __init__(self, message: str, code: int = USAGE):
        super().__init__(message)
        self.code = code


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise _CliError(f"cannot read {path}: {e}")


def _parse_goal(args) -> Formula:
    try:
        if args.goal is not None:
            return parse_formula(args.goal)
        return parse_formula(_read(args.goal_file))
    except FormulaSyntaxError as e:
        raise _CliError(f"bad goal formula: {e}")


def _parse_assumptions(path: str | None) -> list[Formula]:
    if path is None:
        return []
    out = []
    for lineno, raw in enumerate(_read(path).splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(parse_formula(line))
        except FormulaSyntaxError as e:
            raise _CliError(f"assumptions line {lineno}: {e}")
    return out


def _print_metrics(m) -> None:
    for k in ("lines", "size", "height", "formula_size", "inferential_size"):
        print(f"{k}\t{getattr(m, k)}")


# ---------------------------------------------------------------------------
# circuit files


def _load_circuit(path: str) -> MonotoneCircuit:
    try:
        return parse_circuit(_read(path))
    except ValueError as e:
        raise _CliError(f"ill-formed circuit: {e}")


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    if args.n < 2:
        raise _CliError("n must be at least 2")
    if args.kind == "tau":
        inst = build_tau(args.n)
        text = render_formula(inst.tau) + "\n"
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            path = out / f"tau_{args.n}.txt"
            path.write_text(text)
            print(f"wrote {path}")
        else:
            print(text, end="")
        print(f"n={inst.n} k={inst.k} size={formula_size(inst.tau)}",
              file=sys.stderr)
    else:
        n, k = args.n, int(args.n ** 0.5)
        print(f"n={n} k={k} edge_vars={n * (n - 1) // 2}")
    return PASS


def cmd_decide(args) -> int:
    print(f"seed\t{args.seed}")
    goal = _parse_goal(args)
    gamma = _parse_assumptions(args.assumptions)
    try:
        res = decide(gamma, goal, budget=args.budget_nodes)
    except BudgetExceeded:
        print("verdict\tbudget")
        return BUDGET
    print(f"verdict\t{res.verdict}")
    if res.valid:
        rep = check_nm(res.witness, gamma, goal)
        if not rep:
            raise RuntimeError(f"witness fails checking: {rep.reason}")
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            path = out / "witness.nm"
            path.write_text(render_nm(res.witness))
            print(f"witness\t{path}")
        return PASS
    print(f"world\t{res.world}")
    print(render_kripke(res.countermodel), end="")
    return REJECT


def _load_proof(system: str, path: str):
    text = _read(path)
    try:
        if system == "nm":
            return parse_nm(text)
        if system == "frege-seq":
            return parse_frege_seq(text)
        return parse_frege_dag(text)
    except (StructureError, FormulaSyntaxError) as e:
        raise _CliError(f"cannot parse proof: {e}")


def cmd_check(args) -> int:
    goal = _parse_goal(args)
    gamma = _parse_assumptions(args.assumptions)
    proof = _load_proof(args.system, args.proof)
    if args.system == "nm":
        rep = check_nm(proof, gamma, goal)
    elif args.system == "frege-seq":
        rep = check_frege_seq(proof, gamma, goal)
    else:
        rep = check_frege_dag(proof, gamma, goal)
    if rep:
        print("accepted")
        return PASS
    where = f" at {rep.node}" if rep.node else ""
    print(f"rejected{where}: {rep.reason}")
    return REJECT


def cmd_metrics(args) -> int:
    proof = _load_proof(args.system, args.proof)
    gamma = _parse_assumptions(args.assumptions)
    if args.system == "nm":
        _print_metrics(nm_metrics(proof))
    else:
        try:
            _print_metrics(frege_metrics(proof, gamma))
        except StructureError as e:
            raise _CliError(f"proof does not linearize: {e}", REJECT)
    return PASS


def cmd_translate(args) -> int:
    print(f"seed\t{args.seed}")
    goal = _parse_goal(args)
    gamma = _parse_assumptions(args.assumptions)
    proof = _load_proof(args.source, args.proof)
    if args.source == "frege-seq":
        try:
            proof = seq_to_dag(proof, set(gamma))
        except StructureError as e:
            raise _CliError(f"cannot convert to dag: {e}", REJECT)
        source = "frege"
    else:
        source = {"nm": "nm", "frege-dag": "frege"}[args.source]
    try:
        if source == "nm" and args.target == "frege":
            out, rep = nm_to_frege(proof, gamma, goal, mode=args.mode)
            text, ext = render_frege_dag(out), "frege"
        elif source == "frege" and args.target == "nm":
            out, rep = frege_to_nm(proof, gamma, goal)
            text, ext = render_nm(out), "nm"
        elif source == "frege" and args.target == "tree":
            out, rep = frege_dag_to_tree(proof, gamma, goal)
            text, ext = render_frege_dag(out), "frege"
        elif source == "nm" and args.target == "tree":
            out, nm_leg, rep = nm_to_tree(proof, gamma, goal)
            text, ext = render_frege_dag(out), "frege"
        else:
            raise _CliError(f"unsupported direction {args.source} -> "
                            f"{args.target}")
    except ValueError as e:
        raise _CliError(str(e), REJECT)
    for k, v in rep.constants.items():
        print(f"{k}\t{v:.6g}")
    print(f"lines\t{rep.output_metrics.lines}")
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / f"translated.{ext}"
        path.write_text(text)
        print(f"output\t{path}")
        if source == "nm" and args.target == "tree":
            leg = outdir / "translated_tree.nm"
            leg.write_text(render_nm(nm_leg))
            print(f"nm_leg\t{leg}")
    return PASS


def cmd_extract(args) -> int:
    print(f"seed\t{args.seed}")
    inst = build_tau(args.n)
    shape = make_shape(inst)
    proof = _load_proof("nm", args.proof)
    try:
        circ, info = extract_interpolant(proof, shape)
    except ValueError as e:
        raise _CliError(str(e), REJECT)
    for k, v in info.items():
        print(f"{k}\t{v}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"interpolant_{args.n}.circ"
        path.write_text(render_circuit(circ))
        print(f"circuit\t{path}")
    return PASS


def cmd_circuit(args) -> int:
    c = _load_circuit(args.circuit)
    if args.action == "eval":
        assign = {}
        for item in (args.assign.split(",") if args.assign else []):
            name, _, val = item.partition("=")
            if val not in ("0", "1"):
                raise _CliError(f"bad assignment {item!r}")
            assign[name.strip()] = val == "1"
        missing = c.variables() - set(assign)
        if missing:
            raise _CliError(f"unassigned variables: {sorted(missing)}")
        print(int(eval_circuit(c, assign)))
        return PASS
    if args.action == "fanin2":
        b = to_bounded_fanin(c)
        print(f"wires\t{c.size}")
        print(f"wires_bounded\t{b.size}")
        if args.out:
            Path(args.out).write_text(render_circuit(b))
            print(f"output\t{args.out}")
        return PASS
    # separate: exhaustive disjoint-pair verification at brute-force scale
    if args.n is None:
        raise _CliError("--n is required for circuit separate")
    outcome = check_separates(c, args.n)
    print(f"separates\t{'pass' if outcome else 'fail'}")
    if not outcome:
        print(f"detail\t{outcome.detail}")
        return REJECT
    return PASS


def cmd_pipeline(args) -> int:
    print(f"seed\t{args.seed}")
    n = args.n
    if n < 2:
        raise _CliError("n must be at least 2")
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)

    def persist(name: str, text: str) -> None:
        if out:
            (out / name).write_text(text)
            print(f"wrote\t{out / name}")

    inst = build_tau(n)
    persist(f"tau_{n}.txt", render_formula(inst.tau) + "\n")
    try:
        res = validate_tau(n, budget=args.budget_nodes)
    except BudgetExceeded:
        print("stage\tdecide\nverdict\tbudget")
        return BUDGET
    if not res.valid:
        print("stage\tdecide\nverdict\tinvalid")
        return REJECT
    rep = check_nm(res.witness, [], inst.tau)
    if not rep:
        print(f"stage\trecheck\nverdict\tfail\t{rep.reason}")
        return REJECT
    persist(f"tau_{n}_proof.nm", render_nm(res.witness))
    shape = make_shape(inst)
    circ, info = extract_interpolant(res.witness, shape)
    for k, v in info.items():
        print(f"{k}\t{v}")
    cc = specialize_to_cc(circ, n)
    persist(f"interpolant_{n}.circ", render_circuit(cc))
    sep = check_separates(cc, n)
    print(f"separates\t{'pass' if sep else 'fail'}")
    itp = check_interpolates(circ, shape, budget_bits=args.budget_bits)
    print(f"interpolates\t{'pass' if itp else 'fail'}")
    if not (sep and itp):
        return REJECT
    print("pipeline\tpass")
    return PASS


def cmd_report(args) -> int:
    from .report import run_report
    summary = run_report(args.out, seed=args.seed)
    print(f"seed\t{summary['seed']}")
    print(f"rows\t{summary['rows']}")
    print(f"table\t{summary['table']}")
    for f in summary["figures"]:
        print(f"figure\t{f}")
    return PASS


# ---------------------------------------------------------------------------
# argument wiring


def _add_goal(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--goal", help="goal formula, inline")
    g.add_argument("--goal-file", help="file containing the goal formula")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="proofbench",
        description="implicational intuitionistic logic workbench")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for randomized steps (default 0)")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a tautology or pair instance")
    g.add_argument("kind", choices=["tau", "cc"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--out")
    g.set_defaults(fn=cmd_gen)

    d = sub.add_parser("decide", help="decide derivability")
    _add_goal(d)
    d.add_argument("--assumptions")
    d.add_argument("--budget-nodes", type=int, default=1_000_000)
    d.add_argument("--out")
    d.set_defaults(fn=cmd_decide)

    c = sub.add_parser("check", help="check a proof file")
    c.add_argument("--system", choices=["nm", "frege-seq", "frege-dag"],
                   required=True)
    c.add_argument("--proof", required=True)
    c.add_argument("--assumptions")
    _add_goal(c)
    c.set_defaults(fn=cmd_check)

    m = sub.add_parser("metrics", help="print proof metrics")
    m.add_argument("--system", choices=["nm", "frege-seq", "frege-dag"],
                   required=True)
    m.add_argument("--proof", required=True)
    m.add_argument("--assumptions")
    m.set_defaults(fn=cmd_metrics)

    t = sub.add_parser("translate", help="translate between proof systems")
    t.add_argument("--from", dest="source",
                   choices=["nm", "frege-seq", "frege-dag"], required=True)
    t.add_argument("--to", dest="target", choices=["nm", "frege", "tree"],
                   required=True)
    t.add_argument("--mode", choices=["basic", "ret"], default="basic")
    t.add_argument("--proof", required=True)
    t.add_argument("--assumptions")
    _add_goal(t)
    t.add_argument("--out")
    t.set_defaults(fn=cmd_translate)

    e = sub.add_parser("extract", help="extract a monotone interpolant")
    e.add_argument("--proof", required=True)
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--out")
    e.set_defaults(fn=cmd_extract)

    ci = sub.add_parser("circuit", help="evaluate or transform circuits")
    ci.add_argument("action", choices=["eval", "fanin2", "separate"])
    ci.add_argument("--circuit", required=True)
    ci.add_argument("--assign", help="comma-separated name=bit pairs")
    ci.add_argument("--out")
    ci.add_argument("--n", type=int)
    ci.set_defaults(fn=cmd_circuit)

    pl = sub.add_parser("pipeline", help="end-to-end tau pipeline")
    pl.add_argument("--n", type=int, required=True)
    pl.add_argument("--budget-nodes", type=int, default=4_000_000)
    pl.add_argument("--budget-bits", type=int, default=24)
    pl.add_argument("--out")
    pl.set_defaults(fn=cmd_pipeline)

    r = sub.add_parser("report", help="run the metric battery with figures")
    r.add_argument("--out", required=True)
    r.set_defaults(fn=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except _CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except BudgetExceeded as e:
        print(f"budget exhausted: {e}", file=sys.stderr)
        return BUDGET


if __name__ == "__main__":
    sys.exit(main())
