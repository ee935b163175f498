"""Metric reports: delimited tables plus rendered figures.

The report path runs a fixed, seeded battery over the tautology family,
the modus-ponens chain family, and the translation stack, writes every
measurement into a tab-separated table, and renders one figure per
family next to it.  All output is deterministic for a given seed.
"""

from __future__ import annotations

import math
import random
from pathlib import Path

from .formula import FormulaSeq, formula_size, imp, var
from .frege import FregeSeqDerivation, check_frege_seq, frege_metrics, seq_to_dag
from .natded import nm_metrics
from .semantics import decide
from .tautgen import build_tau
from .transforms import chain_proof, frege_dag_to_tree, nm_to_frege

__all__ = ["ReportRow", "run_report", "write_table"]


class ReportRow:
    """One measurement: a family tag, a label, and named values."""

    __slots__ = ("family", "label", "values")

    def __init__(self, family: str, label: str, values: dict[str, float]):
        self.family = family
        self.label = label
        self.values = values


def write_table(rows: list[ReportRow], path: Path) -> None:
    cols: list[str] = []
    for r in rows:
        for k in r.values:
            if k not in cols:
                cols.append(k)
    out = ["\t".join(["family", "label", *cols])]
    for r in rows:
        cells = [r.family, r.label]
        for k in cols:
            v = r.values.get(k)
            cells.append("" if v is None else f"{v:.6g}")
        out.append("\t".join(cells))
    path.write_text("\n".join(out) + "\n")


def _tau_rows(rows: list[ReportRow]) -> list[tuple[int, int]]:
    pts = []
    for n in range(2, 9):
        s = formula_size(build_tau(n).tau)
        rows.append(ReportRow("tau-size", f"n={n}",
                              {"n": n, "size": s, "size_per_n3": s / n ** 3}))
        pts.append((n, s))
    return pts


def _chain_rows(rows: list[ReportRow]) -> list[tuple[int, int]]:
    pts = []
    for j in range(1, 7):
        n = 1 << j
        phis = [var(f"c{i}") for i in range(n + 1)]
        m = frege_metrics(chain_proof(phis))
        rows.append(ReportRow("chain", f"n={n}",
                              {"n": n, "lines": m.lines, "height": m.height,
                               "height_per_logn": m.height / j}))
        pts.append((n, m.height))
    return pts


def _mp_chain(n: int) -> tuple[FregeSeqDerivation, list, object]:
    vs = [var(f"c{i}") for i in range(n + 1)]
    hyp = [vs[0]] + [imp(vs[i], vs[i + 1]) for i in range(n)]
    lines = tuple(hyp) + tuple(vs[1:])
    d = FregeSeqDerivation(lines)
    rep = check_frege_seq(d, hyp, vs[n])
    if not rep:
        raise RuntimeError(f"internal error: chain fails checking: {rep.reason}")
    return d, hyp, vs[n]


def _tree_rows(rows: list[ReportRow]) -> list[tuple[int, int]]:
    pts = []
    for j in range(1, 5):
        n = 1 << j
        d, hyp, goal = _mp_chain(n)
        dag = seq_to_dag(d, set(hyp))
        _, rep = frege_dag_to_tree(dag, hyp, goal)
        t = rep.input_metrics.lines
        rows.append(ReportRow("dag-to-tree", f"n={n}", {
            "t": t,
            "lines": rep.output_metrics.lines,
            "height": rep.output_metrics.height,
            **{k: v for k, v in rep.constants.items()},
        }))
        pts.append((t, rep.output_metrics.lines))
    return pts


def _translate_rows(rows: list[ReportRow], seed: int) -> None:
    rng = random.Random(seed)
    p, q, r = var("p"), var("q"), var("r")
    goals = [
        imp(p, imp(q, p)),
        imp(imp(p, imp(q, r)), imp(imp(p, q), imp(p, r))),
        imp(imp(imp(p, q), p), imp(imp(p, q), q)),
        imp(imp(imp(imp(p, q), q), q), imp(p, q)),
    ]
    rng.shuffle(goals)
    for i, phi in enumerate(goals):
        w = decide([], phi).witness
        for mode in ("basic", "ret"):
            _, rep = nm_to_frege(w, [], phi, mode=mode)
            rows.append(ReportRow(f"nm-to-frege-{mode}", f"goal{i}", {
                "t": nm_metrics(w).lines,
                "lines": rep.output_metrics.lines,
                **{k: v for k, v in rep.constants.items()},
            }))


def _render_figures(out: Path, tau_pts, chain_pts, tree_pts) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []

    def save(fig, name):
        path = out / name
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ns = [n for n, _ in tau_pts]
    ax.plot(ns, [s for _, s in tau_pts], "o-", label="size")
    c = tau_pts[-1][1] / ns[-1] ** 3
    ax.plot(ns, [c * n ** 3 for n in ns], "--", label="fitted cubic")
    ax.set_xlabel("n")
    ax.set_ylabel("formula size")
    ax.legend()
    fig.tight_layout()
    save(fig, "tau_size.png")

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogx(*zip(*chain_pts), "o-", base=2)
    ax.set_xlabel("chain length")
    ax.set_ylabel("proof height")
    fig.tight_layout()
    save(fig, "chain_height.png")

    fig, ax = plt.subplots(figsize=(5, 3.5))
    ts = [t for t, _ in tree_pts]
    ax.plot(ts, [l / (t * max(1.0, math.log2(t))) for t, l in tree_pts], "o-")
    ax.set_xlabel("input lines t")
    ax.set_ylabel("tree lines / (t log t)")
    fig.tight_layout()
    save(fig, "tree_blowup.png")
    return written


def run_report(out_dir: str | Path, seed: int = 0) -> dict:
    """Run the battery; write metrics.tsv and figures under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[ReportRow] = []
    tau_pts = _tau_rows(rows)
    chain_pts = _chain_rows(rows)
    tree_pts = _tree_rows(rows)
    _translate_rows(rows, seed)
    table = out / "metrics.tsv"
    write_table(rows, table)
    figures = _render_figures(out, tau_pts, chain_pts, tree_pts)
    return {"seed": seed, "rows": len(rows), "table": table,
            "figures": figures}
