"""Proof-system simulations: natural deduction, Hilbert style, trees.

Every construction here emits a derivation that is re-checked before it
is returned.  The common engine is a library of schema templates: small
tree Hilbert derivations over metavariables, generated once from the
decision procedure via the deduction theorem, then instantiated by
substitution wherever a translation needs a constant-size subproof.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .formula import (
    TOP,
    TOP_NAME,
    Formula,
    FormulaSeq,
    Imp,
    Substitution,
    apply_subst,
    fold_imp,
    imp,
    parse_formula,
    render_formula,
    ret_build,
    ret_hat,
    ret_join,
    var,
)
from .frege import (
    FregeDagBuilder,
    FregeDagDerivation,
    FregeSeqDerivation,
    SchemaTemplate,
    check_frege_dag,
    check_frege_seq,
    dag_to_seq,
    dedup,
    frege_metrics,
    frege_unravel,
    is_axiom,
    is_axiom_a1,
    is_axiom_a2,
    seq_to_dag,
    _justify,
)
from .natded import (
    CheckReport,
    NmDerivation,
    ProofMetrics,
    StructureError,
    assumptions,
    check_nm,
    nm_metrics,
)
from .semantics import decide

__all__ = [
    "TransformReport",
    "SegmentTable",
    "schema_proof",
    "freeze_schema_library",
    "chain_proof",
    "subset_proof",
    "WeakeningProofs",
    "weakening_proofs",
    "ret_subset_proof",
    "ret_transfer_proof",
    "frege_to_nm",
    "nm_to_frege",
    "frege_dag_to_tree",
    "nm_to_tree",
    "deduction",
]


@dataclass(frozen=True)
class TransformReport:
    input_metrics: ProofMetrics
    output_metrics: ProofMetrics
    constants: dict[str, float]
    verdict: CheckReport


@dataclass(frozen=True)
class SegmentTable:
    """Per-node open-assumption sequences and stage formulas.

    aprime[v] indexes the non-hypothesis open assumptions of v by their
    position in an injective enumeration of all distinct node labels;
    delta[v] is the node's stage formula.
    """

    order: tuple[str, ...]
    enum: tuple[Formula, ...]
    aprime: dict[str, FormulaSeq]
    delta: dict[str, Formula]


# ---------------------------------------------------------------------------
# deduction-theorem translation of tree natural deduction into lines
#
# A justified line is (formula, tag) with tag ("hyp",), ("ax",) or
# ("mp", minor_index, major_index); indices are absolute.

_JLine = tuple[Formula, tuple]


def _append_identity(out: list[_JLine], alpha: Formula) -> None:
    aa = imp(alpha, alpha)
    base = len(out)
    out.append((imp(imp(alpha, imp(aa, alpha)), imp(imp(alpha, aa), aa)), ("ax",)))
    out.append((imp(alpha, imp(aa, alpha)), ("ax",)))
    out.append((imp(imp(alpha, aa), aa), ("mp", base + 1, base)))
    out.append((imp(alpha, aa), ("ax",)))
    out.append((aa, ("mp", base + 3, base + 2)))


def _abstract(lines: list[_JLine], alpha: Formula) -> list[_JLine]:
    """Turn a proof using hypothesis alpha into a proof of alpha -> (.).

    Only the cone of lines that actually depend on alpha is rebuilt; the
    rest is kept verbatim and lifted on demand, which keeps the output
    linear outside the cone and single-use when the input is single-use.
    """
    out: list[_JLine] = []
    pos: dict[int, int] = {}      # untransformed copy of line i
    lifted: dict[int, int] = {}   # index of (alpha -> line i)

    def lift(i: int) -> int:
        if i not in lifted:
            g = lines[i][0]
            out.append((imp(g, imp(alpha, g)), ("ax",)))
            out.append((imp(alpha, g), ("mp", pos[i], len(out) - 1)))
            lifted[i] = len(out) - 1
        return lifted[i]

    dep: list[bool] = []
    for i, (g, tag) in enumerate(lines):
        d = g == alpha or (tag[0] == "mp" and (dep[tag[1]] or dep[tag[2]]))
        dep.append(d)
        if not d:
            if tag[0] == "mp":
                tag = ("mp", pos[tag[1]], pos[tag[2]])
            out.append((g, tag))
            pos[i] = len(out) - 1
        elif g == alpha:
            _append_identity(out, alpha)
            lifted[i] = len(out) - 1
        else:
            j, k = tag[1], tag[2]
            ja, ka = lift(j), lift(k)
            gj = lines[j][0]
            out.append((imp(imp(alpha, imp(gj, g)),
                            imp(imp(alpha, gj), imp(alpha, g))), ("ax",)))
            out.append((imp(imp(alpha, gj), imp(alpha, g)),
                        ("mp", ka, len(out) - 1)))
            out.append((imp(alpha, g), ("mp", ja, len(out) - 1)))
            lifted[i] = len(out) - 1
    lift(len(lines) - 1)
    return out


def _tree_lines(d: NmDerivation) -> list[_JLine]:
    """Justified lines for a tree derivation, hypotheses left open."""
    result: dict[str, list[_JLine]] = {}
    for v in d.topological():
        ps = d.premises.get(v, ())
        g = d.labels[v]
        if not ps:
            result[v] = [(g, ("hyp",))]
        elif len(ps) == 1:
            assert isinstance(g, Imp)
            result[v] = _abstract(result.pop(ps[0]), g.left)
        else:
            a, b = ps
            ga, gb = d.labels[a], d.labels[b]
            if not (isinstance(gb, Imp) and gb.left == ga and gb.right == g):
                a, b = b, a
            la, lb = result.pop(a), result.pop(b)
            off = len(la)
            lines = la + [(f, t if t[0] != "mp" else ("mp", t[1] + off, t[2] + off))
                          for f, t in lb]
            lines.append((g, ("mp", off - 1, len(lines) - 1)))
            result[v] = lines
    return result[d.root]


def _lines_to_dag(lines: list[_JLine]) -> FregeDagDerivation:
    labels = {str(i): f for i, (f, _) in enumerate(lines)}
    premises = {str(i): ((str(t[1]), str(t[2])) if t[0] == "mp" else ())
                for i, (_, t) in enumerate(lines)}
    root = str(len(lines) - 1)
    keep: set[str] = set()
    work = [root]
    while work:
        v = work.pop()
        if v in keep:
            continue
        keep.add(v)
        work.extend(premises[v])
    return FregeDagDerivation({v: labels[v] for v in keep},
                              {v: premises[v] for v in keep}, root)


# ---------------------------------------------------------------------------
# schema library

_SCHEMA_CACHE: dict[tuple, SchemaTemplate] = {}
_LIBRARY_FILE = Path(__file__).parent / "data" / "schema_library.txt"
_library_loaded = False
_name_counter = itertools.count()


def _generate_template(premises: tuple[Formula, ...], conclusion: Formula,
                       name: str) -> SchemaTemplate:
    if len(set(premises)) != len(premises):
        raise ValueError("duplicate premise patterns")
    folded: list[Formula] = []
    remaining = list(premises)
    while True:
        goal = fold_imp(FormulaSeq.of(folded), conclusion)
        res = decide(remaining, goal, budget=2_000_000, tree_witness=True)
        if not res.valid:
            raise RuntimeError(f"schema pattern is not intuitionistically "
                               f"valid: {render_formula(goal)}")
        tree = frege_unravel(_lines_to_dag(_tree_lines(res.witness)))
        counts = {p: [] for p in remaining}
        for v, f in tree.labels.items():
            if not tree.premises[v] and f in counts:
                counts[f].append(v)
        over = [p for p in remaining if len(counts[p]) > 1]
        if not over:
            break
        for p in over:
            remaining.remove(p)
            folded.append(p)
    labels = dict(tree.labels)
    prem_map = dict(tree.premises)
    root = tree.root
    prem_nodes: dict[Formula, str] = {p: ns[0] for p, ns in counts.items() if ns}

    def fresh(f: Formula, ps: tuple[str, ...]) -> str:
        from .frege import _fresh_node
        nid = _fresh_node()
        labels[nid] = f
        prem_map[nid] = ps
        return nid

    for p in reversed(folded):
        lp = fresh(p, ())
        root = fresh(labels[root].right, (lp, root))
        prem_nodes[p] = lp
    for p in remaining:
        if p in prem_nodes:
            continue
        # premise unused by the found proof: consume it vacuously
        lp = fresh(p, ())
        ax = fresh(imp(conclusion, imp(p, conclusion)), ())
        mid = fresh(imp(p, conclusion), (root, ax))
        root = fresh(conclusion, (lp, mid))
        prem_nodes[p] = lp
    deriv = FregeDagDerivation(labels, prem_map, root)
    t = SchemaTemplate(name, premises, conclusion, deriv,
                       tuple(prem_nodes[p] for p in premises))
    rep = check_frege_dag(deriv, set(premises), conclusion)
    if not rep:
        raise RuntimeError(f"generated template fails checking: {rep.reason}")
    if not deriv.is_tree():
        raise RuntimeError("generated template is not a tree")
    return t


def schema_proof(premises: Iterable[Formula], conclusion: Formula,
                 name: str = "") -> SchemaTemplate:
    """Template proving the conclusion pattern from the premise patterns.

    Each premise is consumed exactly once; results are cached by pattern
    and persisted to the packaged schema library when frozen.
    """
    _ensure_library()
    premises = tuple(premises)
    key = (premises, conclusion)
    t = _SCHEMA_CACHE.get(key)
    if t is None:
        t = _generate_template(premises, conclusion,
                               name or f"s{next(_name_counter)}")
        _SCHEMA_CACHE[key] = t
    return t


def _ensure_library() -> None:
    global _library_loaded
    if _library_loaded:
        return
    _library_loaded = True
    if not _LIBRARY_FILE.exists():
        return
    try:
        for t in _parse_library(_LIBRARY_FILE.read_text()):
            _SCHEMA_CACHE[(t.premises, t.conclusion)] = t
    except (ValueError, KeyError, StructureError):
        _SCHEMA_CACHE.clear()


def _parse_library(text: str) -> list[SchemaTemplate]:
    out: list[SchemaTemplate] = []
    block: dict = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        if head == "template":
            block = {"name": rest.strip(), "premises": [], "labels": {},
                     "premise_map": {}}
        elif head == "premise":
            block["premises"].append(parse_formula(rest))
        elif head == "conclusion":
            block["conclusion"] = parse_formula(rest)
        elif head == "node":
            nid, _, f = rest.partition("|")
            block["labels"][nid.strip()] = parse_formula(f)
            block["premise_map"].setdefault(nid.strip(), ())
        elif head == "mp":
            c, a, b = rest.split()
            block["premise_map"][c] = (a, b)
        elif head == "root":
            block["root"] = rest.strip()
        elif head == "attach":
            block["attach"] = tuple(rest.split())
        elif head == "end":
            deriv = FregeDagDerivation(block["labels"], block["premise_map"],
                                       block["root"])
            t = SchemaTemplate(block["name"], tuple(block["premises"]),
                               block["conclusion"], deriv,
                               block.get("attach", ()))
            rep = check_frege_dag(deriv, set(t.premises), t.conclusion)
            if rep and deriv.is_tree():
                out.append(t)
    return out


def freeze_schema_library(path: str | Path | None = None) -> int:
    """Write all cached templates to the packaged data file."""
    path = Path(path) if path is not None else _LIBRARY_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    chunks = []
    for t in _SCHEMA_CACHE.values():
        lines = [f"template {t.name}"]
        lines += [f"premise {render_formula(p)}" for p in t.premises]
        lines.append(f"conclusion {render_formula(t.conclusion)}")
        for v in t.derivation.topological():
            lines.append(f"node {v} | {render_formula(t.derivation.labels[v])}")
        for v in t.derivation.topological():
            ps = t.derivation.premises[v]
            if ps:
                lines.append(f"mp {v} {ps[0]} {ps[1]}")
        lines.append(f"root {t.derivation.root}")
        if t.premise_nodes:
            lines.append("attach " + " ".join(t.premise_nodes))
        lines.append("end")
        chunks.append("\n".join(lines))
    path.write_text("\n\n".join(chunks) + "\n")
    return len(_SCHEMA_CACHE)


# shared metavariables
_A, _B, _C, _D, _F, _G, _X, _Y, _Z = (var(n) for n in "abcdfgxyz")


def _identity_node(b: FregeDagBuilder, phi: Formula) -> str:
    return b.add_template(schema_proof((), imp(_A, _A), "identity"),
                          {"a": phi})


# ---------------------------------------------------------------------------
# chains and subsets


def _chain_nodes(b: FregeDagBuilder, phis: Sequence[Formula],
                 leaf_fn: Callable[[int], str]) -> str:
    """Node proving phis[0] -> phis[-1]; leaf_fn(i) proves step i."""
    comp = schema_proof((imp(_A, _B), imp(_B, _C)), imp(_A, _C), "compose")
    n = len(phis) - 1

    def rec(i: int, j: int) -> str:
        if j == i + 1:
            return leaf_fn(i)
        k = (j - i - 1).bit_length()
        mid = min(i + (1 << (k - 1)), n)
        return b.add_template(comp, {"a": phis[i], "b": phis[mid], "c": phis[j]},
                              (rec(i, mid), rec(mid, j)))

    return rec(0, n)


def chain_proof(phis: Sequence[Formula]) -> FregeDagDerivation:
    """Balanced composition of phis[0] -> ... -> phis[-1].

    Assumption leaves are the steps phis[i] -> phis[i+1], each used once.
    """
    if len(phis) < 2:
        raise ValueError("need at least two formulas to chain")
    b = FregeDagBuilder()
    root = _chain_nodes(b, phis, lambda i: b.add_leaf(imp(phis[i], phis[i + 1])))
    return b.finish(root)


def _prefix_chain(b: FregeDagBuilder, start: Formula,
                  steps: list[tuple[SchemaTemplate, Substitution]]) -> str:
    """Node proving the endpoint of a schema-driven chain from start.

    Each step template proves phi_i -> phi_{i+1} from no premises; the
    start formula (phi_0) must be self-evident, so it is required to be
    an identity instance that gets detached at the end.
    """
    if not steps:
        raise ValueError("empty chain")
    phis = [start]
    nodes = []
    for t, sigma in steps:
        nodes.append(b.add_template(t, sigma))
        concl = b.labels[nodes[-1]]
        assert isinstance(concl, Imp) and concl.left == phis[-1]
        phis.append(concl.right)
    top = _chain_nodes(b, phis, lambda i: nodes[i])
    assert isinstance(start, Imp) and start.left == start.right
    return b.add_mp(_identity_node(b, start.left), top)


def subset_proof(gamma: FormulaSeq, delta: FormulaSeq,
                 phi: Formula) -> FregeDagDerivation:
    """Tree proof of (delta -> phi) -> (gamma -> phi) for a subsequence."""
    if not delta.is_subseq_of(gamma):
        raise ValueError("delta is not an indexed subsequence of gamma")
    b = FregeDagBuilder()
    root = _subset_node(b, gamma, delta, phi)
    return b.finish(root)


_T_KEEP = None
_T_SKIP = None


def _subset_node(b: FregeDagBuilder, gamma: FormulaSeq, delta: FormulaSeq,
                 phi: Formula) -> str:
    keep = schema_proof((), imp(imp(_D, _G), imp(imp(_A, _D), imp(_A, _G))),
                        "subset-keep")
    skip = schema_proof((), imp(imp(_D, _G), imp(_D, imp(_A, _G))),
                        "subset-skip")
    if not gamma.entries:
        return _identity_node(b, phi)
    dd = delta.dom
    cur_d, cur_g = phi, phi
    steps = []
    for idx, alpha in gamma.entries:
        sigma = {"a": alpha, "d": cur_d, "g": cur_g}
        if idx in dd:
            steps.append((keep, sigma))
            cur_d = imp(alpha, cur_d)
        else:
            steps.append((skip, sigma))
        cur_g = imp(alpha, cur_g)
    return _prefix_chain(b, imp(phi, phi), steps)


# ---------------------------------------------------------------------------
# the four weakening-style derivations


@dataclass(frozen=True)
class WeakeningProofs:
    distribution: FregeDagDerivation  # (G->f->p) -> (G->f) -> (G->p)
    evaluation: FregeDagDerivation    # G -> (G->f) -> f
    contraction: FregeDagDerivation   # (G->G->f) -> (G->f)
    exchange: FregeDagDerivation      # (Th->G->D->f) -> (Th->D->G->f)


def _distribution_node(b: FregeDagBuilder, gamma: FormulaSeq,
                       phi: Formula, psi: Formula) -> str:
    step = schema_proof(
        (), imp(imp(_X, imp(_Y, _Z)),
                imp(imp(_A, _X), imp(imp(_A, _Y), imp(_A, _Z)))),
        "distribution-step")
    fp = imp(phi, psi)
    if not gamma.entries:
        return _identity_node(b, fp)
    x, y, z = fp, phi, psi
    steps = []
    for _, alpha in gamma.entries:
        steps.append((step, {"a": alpha, "x": x, "y": y, "z": z}))
        x, y, z = imp(alpha, x), imp(alpha, y), imp(alpha, z)
    return _prefix_chain(b, imp(fp, fp), steps)


def _evaluation_node(b: FregeDagBuilder, gamma: FormulaSeq,
                     phi: Formula) -> str:
    step = schema_proof(
        (), imp(imp(imp(_A, _B), _D), imp(imp(_A, imp(_G, _B)), imp(_G, _D))),
        "evaluation-step")
    gf = fold_imp(gamma, phi)
    start = imp(imp(gf, phi), imp(gf, phi))
    if not gamma.entries:
        return _identity_node(b, phi)
    bb, dd = phi, imp(gf, phi)
    steps = []
    for _, alpha in gamma.entries:
        steps.append((step, {"a": gf, "b": bb, "g": alpha, "d": dd}))
        bb, dd = imp(alpha, bb), imp(alpha, dd)
    top = _prefix_chain(b, start, steps)
    # endpoint is ((gf -> gf) -> (G -> (gf -> phi))); detach the identity
    return b.add_mp(_identity_node(b, gf), top)


def _contraction_node(b: FregeDagBuilder, gamma: FormulaSeq,
                      phi: Formula) -> str:
    gf = fold_imp(gamma, phi)
    n10 = _evaluation_node(b, gamma, phi)
    n9 = _distribution_node(b, gamma, gf, phi)
    return b.add_mp(n10, n9)


def _exchange_node(b: FregeDagBuilder, theta: FormulaSeq, gamma: FormulaSeq,
                   delta: FormulaSeq, phi: Formula) -> str:
    gf, df, tf = gamma.formulas, delta.formulas, theta.formulas
    s2 = FormulaSeq.of(gf + df + gf + df)
    s1 = s2.restrict(range(len(gf), 2 * len(gf) + len(df)))
    x = FormulaSeq.of(gf + df)
    a = fold_imp(s1, phi)          # G -> D -> phi
    bmid = fold_imp(s2, phi)       # D -> G -> D -> G -> phi
    c = fold_imp(x, phi)           # D -> G -> phi
    n8 = _subset_node(b, s2, s1, phi)
    n11 = _contraction_node(b, x, phi)
    comp = schema_proof((imp(_A, _B), imp(_B, _C)), imp(_A, _C), "compose")
    core = b.add_template(comp, {"a": a, "b": bmid, "c": c}, (n8, n11))
    if not theta.entries:
        return core
    t = imp(a, c)
    n8b = _subset_node(b, FormulaSeq.of(tf), FormulaSeq.of(()), t)
    n_t = b.add_mp(core, n8b)      # Th -> (a -> c)
    n9 = _distribution_node(b, theta, a, c)
    return b.add_mp(n_t, n9)


def weakening_proofs(gamma: FormulaSeq, delta: FormulaSeq, theta: FormulaSeq,
                     phi: Formula, psi: Formula) -> WeakeningProofs:
    out = []
    for fn in (lambda b: _distribution_node(b, gamma, phi, psi),
               lambda b: _evaluation_node(b, gamma, phi),
               lambda b: _contraction_node(b, gamma, phi),
               lambda b: _exchange_node(b, theta, gamma, delta, phi)):
        b = FregeDagBuilder()
        out.append(b.finish(fn(b)))
    return WeakeningProofs(*out)


# ---------------------------------------------------------------------------
# relative-conjunction subproofs


def _ret_pattern(nonempty: bool, tag: str) -> Formula:
    return imp(var(tag), _F) if nonempty else TOP


def ret_subset_proof(phi: Formula, gamma: FormulaSeq,
                     i0: Iterable[int], i1: Iterable[int],
                     i2: Iterable[int]) -> FregeDagDerivation:
    """Tree proof of RET(G|i0) -> RET(G|i1) -> RET(G|i2), i2 within i0+i1."""
    b = FregeDagBuilder()
    root = _ret_subset_node(b, phi, gamma, i0, i1, i2)
    return b.finish(root)


def _ret_subset_node(b: FregeDagBuilder, phi: Formula, gamma: FormulaSeq,
                     i0: Iterable[int], i1: Iterable[int],
                     i2: Iterable[int]) -> str:
    s0, s1, s2 = frozenset(i0), frozenset(i1), frozenset(i2)
    if not s2 <= s0 | s1:
        raise ValueError("target index set exceeds the two sources")
    for s in (s0, s1, s2):
        if not s <= gamma.dom:
            raise ValueError("index set outside the sequence domain")
    table = dict(gamma.entries)

    def rformula(s: frozenset[int]) -> Formula:
        return ret_build(phi, gamma.restrict(s), 1 << 62)

    def rec(t0: frozenset[int], t1: frozenset[int], t2: frozenset[int]) -> str:
        allidx = sorted(t0 | t1 | t2)
        if len(allidx) <= 1:
            sets = (t0, t1, t2)
            pats = [_ret_pattern(bool(s), "a") for s in sets]
            sigma: dict[str, Formula] = {"f": phi}
            if allidx:
                sigma["a"] = imp(table[allidx[0]], phi)
            t = schema_proof((), imp(pats[0], imp(pats[1], pats[2])),
                             "ret-subset-base")
            return b.add_template(t, sigma)
        split = 1 << (allidx[-1].bit_length() - 1)
        if allidx[0] >= split:
            shifted = FormulaSeq.indexed((i - split, table[i]) for i in allidx)
            return _ret_subset_node(b, phi, shifted,
                                    {i - split for i in t0},
                                    {i - split for i in t1},
                                    {i - split for i in t2})
        los = tuple(frozenset(i for i in s if i < split) for s in (t0, t1, t2))
        his = tuple(frozenset(i for i in s if i >= split) for s in (t0, t1, t2))
        nlow = rec(*los)
        nhigh = rec(*his)
        lpat = [_ret_pattern(bool(s), f"l{u}") for u, s in enumerate(los)]
        hpat = [_ret_pattern(bool(s), f"h{u}") for u, s in enumerate(his)]
        xpat = []
        for u in range(3):
            if los[u] and his[u]:
                xpat.append(ret_join(lpat[u], hpat[u], _F))
            elif los[u]:
                xpat.append(lpat[u])
            elif his[u]:
                xpat.append(hpat[u])
            else:
                xpat.append(TOP)
        glue = schema_proof(
            (imp(lpat[0], imp(lpat[1], lpat[2])),
             imp(hpat[0], imp(hpat[1], hpat[2]))),
            imp(xpat[0], imp(xpat[1], xpat[2])),
            "ret-subset-merge")
        sigma = {"f": phi}
        for u in range(3):
            if los[u]:
                sigma[f"l{u}"] = rformula(los[u]).left
            if his[u]:
                sigma[f"h{u}"] = rformula(his[u]).left
        return b.add_template(glue, sigma, (nlow, nhigh))

    return rec(s0, s1, s2)


def _ret_sub2(b: FregeDagBuilder, phi: Formula, gamma: FormulaSeq,
              i0: Iterable[int], i2: Iterable[int]) -> str:
    """Node proving RET(G|i0) -> RET(G|i2) directly, i2 within i0."""
    i0, i2 = frozenset(i0), frozenset(i2)
    mid = _ret_subset_node(b, phi, gamma, i0, frozenset(), i2)
    drop = schema_proof((imp(_X, imp(TOP, _Z)),), imp(_X, _Z), "top-drop")
    r0 = ret_build(phi, gamma.restrict(i0), 1 << 62)
    r2 = ret_build(phi, gamma.restrict(i2), 1 << 62)
    return b.add_template(drop, {"x": r0, "z": r2}, (mid,))


def ret_transfer_proof(phi: Formula, psi: Formula,
                       gamma: FormulaSeq) -> FregeDagDerivation:
    """Tree proof of RET_phi(G) -> (RET_psi(G))^phi."""
    b = FregeDagBuilder()
    root = _ret_transfer_node(b, phi, psi, gamma)
    return b.finish(root)


def _ret_transfer_node(b: FregeDagBuilder, phi: Formula, psi: Formula,
                       gamma: FormulaSeq) -> str:
    def rec(items: tuple[tuple[int, Formula], ...]) -> str:
        if not items:
            t = schema_proof((), imp(TOP, ret_hat(TOP, _F)), "transfer-empty")
            return b.add_template(t, {"f": phi})
        if len(items) == 1:
            t = schema_proof((), imp(ret_hat(_A, _F),
                                     ret_hat(ret_hat(_A, _G), _F)),
                             "transfer-single")
            return b.add_template(t, {"a": items[0][1], "f": phi, "g": psi})
        split = 1 << (items[-1][0].bit_length() - 1)
        if items[0][0] >= split:
            return rec(tuple((i - split, f) for i, f in items))
        low = tuple(p for p in items if p[0] < split)
        high = tuple((i - split, f) for i, f in items if i >= split)
        nlow, nhigh = rec(low), rec(high)
        lp, hp, lq, hq = var("lp"), var("hp"), var("lq"), var("hq")
        glue = schema_proof(
            (imp(lp, ret_hat(lq, _F)), imp(hp, ret_hat(hq, _F))),
            imp(ret_join(lp, hp, _F), ret_hat(ret_join(lq, hq, _G), _F)),
            "transfer-merge")
        seq_low = FormulaSeq.indexed(low)
        seq_high = FormulaSeq.indexed(high)
        sigma = {"f": phi, "g": psi,
                 "lp": ret_build(phi, seq_low, 1 << 62),
                 "lq": ret_build(psi, seq_low, 1 << 62),
                 "hp": ret_build(phi, seq_high, 1 << 62),
                 "hq": ret_build(psi, seq_high, 1 << 62)}
        return b.add_template(glue, sigma, (nlow, nhigh))

    return rec(gamma.entries)


# ---------------------------------------------------------------------------
# Hilbert -> natural deduction


def _orient(d: NmDerivation, v: str) -> tuple[str, str]:
    """Premises of a binary node as (minor, major)."""
    p0, p1 = d.premises[v]
    g1 = d.labels[p1]
    if isinstance(g1, Imp) and g1.left == d.labels[p0] and g1.right == d.labels[v]:
        return p0, p1
    return p1, p0


def frege_to_nm(d: FregeDagDerivation, gamma: Iterable[Formula],
                phi: Formula) -> tuple[NmDerivation, TransformReport]:
    """Reinterpret modus ponens as elimination; expand axiom leaves."""
    gamma_set = frozenset(gamma)
    rep = check_frege_dag(d, gamma_set, phi)
    if not rep:
        raise ValueError(f"input does not check: {rep.reason}")
    counter = itertools.count()
    labels: dict[str, Formula] = {}
    premises: dict[str, tuple[str, ...]] = {}

    def new(f: Formula, ps: tuple[str, ...]) -> str:
        nid = f"t{next(counter)}"
        labels[nid] = f
        premises[nid] = ps
        return nid

    node_map: dict[str, str] = {}
    for v in d.topological():
        g = d.labels[v]
        ps = d.premises.get(v, ())
        if ps:
            g1 = d.labels[ps[1]]
            if isinstance(g1, Imp) and g1.left == d.labels[ps[0]] and g1.right == g:
                minor, major = ps
            else:
                major, minor = ps
            node_map[v] = new(g, (node_map[minor], node_map[major]))
        elif g in gamma_set:
            node_map[v] = new(g, ())
        elif is_axiom_a1(g):
            al, be = g.left, g.right.left
            lf = new(al, ())
            i1 = new(imp(be, al), (lf,))
            node_map[v] = new(g, (i1,))
        elif is_axiom_a2(g):
            al = g.left.left
            be = g.left.right.left
            ga = g.left.right.right
            z1, z2 = new(al, ()), new(al, ())
            y = new(imp(al, be), ())
            x = new(imp(al, imp(be, ga)), ())
            e1 = new(be, (z1, y))
            e2 = new(imp(be, ga), (z2, x))
            e3 = new(ga, (e1, e2))
            i1 = new(imp(al, ga), (e3,))
            i2 = new(imp(imp(al, be), imp(al, ga)), (i1,))
            node_map[v] = new(g, (i2,))
        else:
            raise ValueError("leaf is neither axiom nor assumption")
    out = NmDerivation(labels, premises, node_map[d.root])
    rep2 = check_nm(out, gamma_set, phi)
    if not rep2:
        raise RuntimeError(f"translated proof fails checking: {rep2.reason}")
    im, om = frege_metrics(d), nm_metrics(out)
    report = TransformReport(im, om, {
        "lines_per_line": om.lines / im.lines,
        "height_delta": float(om.height - im.height),
    }, rep2)
    return out, report


# ---------------------------------------------------------------------------
# natural deduction -> Hilbert

_BIG = 1 << 62


def _segment_table(d: NmDerivation, gamma_set: frozenset[Formula],
                   mode: str) -> SegmentTable:
    order = [v for v in d.topological() if v != d.root] + [d.root]
    a = assumptions(d)
    enum: list[Formula] = []
    pos: dict[Formula, int] = {}
    for v in order:
        g = d.labels[v]
        if g not in pos:
            pos[g] = len(enum)
            enum.append(g)
    aprime = {v: FormulaSeq.indexed((pos[g], g) for g in a[v]
                                    if g not in gamma_set)
              for v in order}
    if mode == "basic":
        delta = {v: fold_imp(aprime[v], d.labels[v]) for v in order}
    else:
        delta = {v: imp(ret_build(d.labels[v], aprime[v], _BIG), d.labels[v])
                 for v in order}
    return SegmentTable(tuple(order), tuple(enum), aprime, delta)


def _alpha_position(st: SegmentTable, u: str, alpha: Formula) -> int | None:
    """Enumeration position of alpha if it is open at u, else None."""
    try:
        p = st.enum.index(alpha)
    except ValueError:
        return None
    return p if p in st.aprime[u].dom else None


def _basic_leaf(b: FregeDagBuilder, g: Formula,
                gamma_set: frozenset[Formula]) -> str:
    if g in gamma_set:
        return b.add_leaf(g)
    return _identity_node(b, g)


def _basic_intro(b: FregeDagBuilder, st: SegmentTable, v: str, u: str,
                 alpha: Formula, beta: Formula) -> str:
    """Node proving delta_u -> delta_v for an introduction node."""
    apu = st.aprime[u]
    p = _alpha_position(st, u, alpha)
    if p is not None:
        below = FormulaSeq.of(f for i, f in apu.entries if i < p)
        above = FormulaSeq.of(f for i, f in apu.entries if i > p)
        return _exchange_node(b, above, FormulaSeq.of((alpha,)), below, beta)
    gb = FormulaSeq.of((alpha, *apu.formulas))
    return _subset_node(b, gb, gb.restrict(range(1, len(apu) + 1)), beta)


def nm_to_frege(d: NmDerivation, gamma: Iterable[Formula], phi: Formula,
                mode: str = "basic") -> tuple[FregeDagDerivation, TransformReport]:
    """Stage-formula simulation; mode picks flat folds or balanced RET."""
    if mode not in ("basic", "ret"):
        raise ValueError(f"unknown mode {mode!r}")
    gamma_set = frozenset(gamma)
    rep = check_nm(d, gamma_set, phi)
    if not rep:
        raise ValueError(f"input does not check: {rep.reason}")
    st = _segment_table(d, gamma_set, mode)
    b = FregeDagBuilder()
    node_map: dict[str, str] = {}
    for v in st.order:
        ps = d.premises.get(v, ())
        g = d.labels[v]
        if not ps:
            if mode == "basic":
                node_map[v] = _basic_leaf(b, g, gamma_set)
            else:
                node_map[v] = _ret_leaf(b, g, gamma_set)
        elif len(ps) == 1:
            assert isinstance(g, Imp)
            if mode == "basic":
                step = _basic_intro(b, st, v, ps[0], g.left, g.right)
            else:
                step = _ret_intro_step(b, st, v, ps[0], g.left, g.right)
            node_map[v] = b.add_mp(node_map[ps[0]], step)
        else:
            minor, major = _orient(d, v)
            if mode == "basic":
                apv = st.aprime[v]
                alpha = d.labels[minor]
                s1 = _subset_node(b, apv, st.aprime[major], d.labels[major])
                n1 = b.add_mp(node_map[major], s1)
                w = _distribution_node(b, apv, alpha, g)
                n2 = b.add_mp(n1, w)
                s0 = _subset_node(b, apv, st.aprime[minor], alpha)
                n0 = b.add_mp(node_map[minor], s0)
                node_map[v] = b.add_mp(n0, n2)
            else:
                step = _ret_elim_step(b, st, d, v, minor, major, outer=minor)
                n = b.add_mp(node_map[minor], step)
                node_map[v] = b.add_mp(node_map[major], n)
    root = node_map[d.root]
    if mode == "ret":
        root = b.add_mp(_identity_node(b, var(TOP_NAME)), root)
    out = b.finish(root)
    rep2 = check_frege_dag(out, gamma_set, phi)
    if not rep2:
        raise RuntimeError(f"translated proof fails checking: {rep2.reason}")
    im, om = nm_metrics(d), frege_metrics(out)
    t = im.lines
    logt = max(1.0, math.log2(t)) if t else 1.0
    if mode == "basic":
        constants = {"lines_over_t2": om.lines / (t * t),
                     "size_over_st2": om.size / (im.formula_size * t * t)}
    else:
        constants = {"lines_over_tlogt": om.lines / (t * logt),
                     "size_over_stlogt": om.size / (im.formula_size * t * logt)}
    return out, TransformReport(im, om, constants, rep2)


def _ret_leaf(b: FregeDagBuilder, g: Formula,
              gamma_set: frozenset[Formula]) -> str:
    if g in gamma_set:
        t = schema_proof((_X,), imp(TOP, _X), "top-weaken")
        return b.add_template(t, {"x": g})
    t = schema_proof((), imp(ret_hat(_X, _X), _X), "self-delta")
    return b.add_template(t, {"x": g})


def _ret_intro_step(b: FregeDagBuilder, st: SegmentTable, v: str, u: str,
                    alpha: Formula, beta: Formula) -> str:
    """Node proving delta_u -> delta_v (RET form) for an introduction."""
    apv, apu = st.aprime[v], st.aprime[u]
    enumseq = FormulaSeq.of(st.enum)
    gv = imp(alpha, beta)
    x = ret_build(beta, apv, _BIG)
    z = ret_build(beta, apu, _BIG)
    aa = ret_build(gv, apv, _BIG)
    p = _alpha_position(st, u, alpha)
    t1 = _ret_transfer_node(b, gv, beta, apv)
    al, be = var("k"), var("l")
    gvp = imp(al, be)
    if p is not None:
        r12 = _ret_subset_node(b, beta, enumseq, apv.dom, {p}, apu.dom)
        prem1 = imp(_X, imp(ret_hat(al, be), _Z))
    else:
        r12 = _ret_subset_node(b, beta, enumseq, apv.dom, frozenset(), apu.dom)
        prem1 = imp(_X, imp(TOP, _Z))
    glue = schema_proof(
        (prem1, imp(_A, ret_hat(_X, gvp))),
        imp(imp(_Z, be), imp(_A, gvp)),
        "ret-intro-glue")
    sigma = {"x": x, "z": z, "a": aa, "k": alpha, "l": beta}
    return b.add_template(glue, sigma, (r12, t1))


def _ret_elim_step(b: FregeDagBuilder, st: SegmentTable, d: NmDerivation,
                   v: str, minor: str, major: str, outer: str) -> str:
    """Node proving (delta_outer) -> (delta_inner) -> delta_v."""
    apv = st.aprime[v]
    enumseq = FormulaSeq.of(st.enum)
    alpha, beta = d.labels[minor], d.labels[v]
    ab = d.labels[major]
    x = ret_build(beta, apv, _BIG)
    z0 = ret_build(beta, st.aprime[minor], _BIG)
    w0 = ret_build(alpha, st.aprime[minor], _BIG)
    z1 = ret_build(beta, st.aprime[major], _BIG)
    w1 = ret_build(ab, st.aprime[major], _BIG)
    r0 = _ret_subset_node(b, beta, enumseq, apv.dom, frozenset(),
                          st.aprime[minor].dom)
    t0 = _ret_transfer_node(b, beta, alpha, st.aprime[minor])
    r1 = _ret_subset_node(b, beta, enumseq, apv.dom, frozenset(),
                          st.aprime[major].dom)
    t1 = _ret_transfer_node(b, beta, ab, st.aprime[major])
    al, be = var("k"), var("l")
    mv_z0, mv_w0, mv_z1, mv_w1 = var("p"), var("q"), var("r"), var("s")
    pat_minor = imp(mv_w0, al)
    pat_major = imp(mv_w1, imp(al, be))
    p_out, p_in = ((pat_minor, pat_major) if outer == minor
                   else (pat_major, pat_minor))
    glue = schema_proof(
        (imp(_X, imp(TOP, mv_z0)), imp(mv_z0, ret_hat(mv_w0, be)),
         imp(_X, imp(TOP, mv_z1)), imp(mv_z1, ret_hat(mv_w1, be))),
        imp(p_out, imp(p_in, imp(_X, be))),
        "ret-elim-glue")
    sigma = {"x": x, "p": z0, "q": w0, "r": z1, "s": w1,
             "k": alpha, "l": beta}
    return b.add_template(glue, sigma, (r0, t0, r1, t1))


# ---------------------------------------------------------------------------
# block merging for tree outputs


def _block_tree(b: FregeDagBuilder, phi: Formula, seq: FormulaSeq,
                edges_into: list[tuple[int, ...]],
                stage0: Callable[[int], str]) -> str:
    """Node proving (last element)^phi via balanced interval merging.

    stage0(j) must prove RET(premises of line j) -> (line j)^phi; the
    merge stages combine intervals of lines, and the result is cut down
    to the hat of the final line.
    """
    t = len(seq)

    def pjk(j: int, k: int) -> frozenset[int]:
        j2 = min(j + (1 << k), t)
        return frozenset(i for jj in range(j, j2)
                         for i in edges_into[jj] if i < j)

    def rformula(s: Iterable[int]) -> Formula:
        return ret_build(phi, seq.restrict(s), _BIG)

    mv = {n: var(n) for n in "abcxyz"}
    glue = schema_proof(
        (imp(mv["a"], mv["b"]), imp(mv["a"], imp(mv["x"], mv["c"])),
         imp(mv["x"], imp(mv["y"], mv["z"])),
         imp(mv["b"], mv["x"]), imp(mv["c"], mv["y"])),
        imp(mv["a"], mv["z"]),
        "block-merge")

    def stage(j: int, k: int) -> str:
        if k == 0:
            return stage0(j)
        j2 = j + (1 << (k - 1))
        if j2 >= t:
            return stage(j, k - 1)
        s0, s1 = stage(j, k - 1), stage(j2, k - 1)
        pj, p0, p1 = pjk(j, k), pjk(j, k - 1), pjk(j2, k - 1)
        g0 = frozenset(range(j, j2))
        g1 = frozenset(range(j2, min(j + (1 << k), t)))
        r1 = _ret_sub2(b, phi, seq, pj, p0)
        r2 = _ret_subset_node(b, phi, seq, pj, g0, p1)
        r3 = _ret_subset_node(b, phi, seq, g0, g1, g0 | g1)
        sigma = {"a": rformula(pj), "b": rformula(p0), "c": rformula(p1),
                 "x": rformula(g0), "y": rformula(g1),
                 "z": rformula(g0 | g1)}
        return b.add_template(glue, sigma, (r1, r2, r3, s0, s1))

    big = 0
    while (1 << big) < t:
        big += 1
    top = stage(0, big)
    nall = b.add_mp(_identity_node(b, var(TOP_NAME)), top)
    nsub = _ret_sub2(b, phi, seq, frozenset(range(t)), frozenset({t - 1}))
    return b.add_mp(nall, nsub)


def frege_dag_to_tree(d: FregeDagDerivation, gamma: Iterable[Formula],
                      phi: Formula) -> tuple[FregeDagDerivation, TransformReport]:
    """Tree-like Hilbert proof with near-linear blowup in the line count."""
    gamma_set = frozenset(gamma)
    rep = check_frege_dag(d, gamma_set, phi)
    if not rep:
        raise ValueError(f"input does not check: {rep.reason}")
    order = [v for v in d.topological() if v != d.root] + [d.root]
    lines = list(dedup(FregeSeqDerivation(
        tuple(d.labels[v] for v in order))).lines)
    lines = lines[:lines.index(phi) + 1]
    just, repj = _justify(lines, gamma_set)
    if not repj:
        raise RuntimeError(f"linearized proof fails checking: {repj.reason}")
    edges_into = [tuple(sorted({tag[1], tag[2]})) if tag[0] == "mp" else ()
                  for tag in just]
    seq = FormulaSeq.of(lines)
    b = FregeDagBuilder()
    line_hat = schema_proof((_X,), imp(TOP, ret_hat(_X, _F)), "line-hat")

    def stage0(j: int) -> str:
        tag = just[j]
        if tag[0] != "mp":
            return b.add_template(line_hat, {"x": lines[j], "f": phi})
        jm, km = tag[1], tag[2]
        pats = {jm: ret_hat(_A, _F), km: ret_hat(imp(_A, _C), _F)}
        lo, hi = min(jm, km), max(jm, km)
        t = schema_proof(
            (), imp(ret_join(pats[lo], pats[hi], _F), ret_hat(_C, _F)),
            "line-mp")
        return b.add_template(t, {"a": lines[jm], "c": lines[j], "f": phi})

    nhat = _block_tree(b, phi, seq, edges_into, stage0)
    fin = schema_proof((ret_hat(_X, _X),), _X, "hat-discharge")
    out = b.finish(b.add_template(fin, {"x": phi}, (nhat,)))
    rep2 = check_frege_dag(out, gamma_set, phi)
    if not rep2:
        raise RuntimeError(f"tree proof fails checking: {rep2.reason}")
    if not out.is_tree():
        raise RuntimeError("output is not tree-like")
    im, om = frege_metrics(d), frege_metrics(out)
    t_in = len(lines)
    logt = max(1.0, math.log2(t_in))
    constants = {
        "lines_over_tlogt": om.lines / (t_in * logt),
        "height_over_logt": om.height / logt,
        "size_over_bound": om.size / ((im.size + im.formula_size * t_in)
                                      * logt * logt),
    }
    return out, TransformReport(im, om, constants, rep2)


def nm_to_tree(d: NmDerivation, gamma: Iterable[Formula], phi: Formula
               ) -> tuple[FregeDagDerivation, NmDerivation, TransformReport]:
    """Tree Hilbert and tree natural-deduction forms of a dag proof."""
    gamma_set = frozenset(gamma)
    rep = check_nm(d, gamma_set, phi)
    if not rep:
        raise ValueError(f"input does not check: {rep.reason}")
    st = _segment_table(d, gamma_set, "ret")
    order = st.order
    idx = {v: i for i, v in enumerate(order)}
    deltas = [st.delta[v] for v in order]
    seq = FormulaSeq.of(deltas)
    edges_into = [tuple(sorted(idx[u] for u in d.premises.get(v, ())))
                  for v in order]
    b = FregeDagBuilder()
    hat0 = schema_proof((_D,), imp(TOP, ret_hat(_D, _F)), "delta-hat0")
    hat1 = schema_proof((imp(_A, _D),),
                        imp(ret_hat(_A, _F), ret_hat(_D, _F)), "delta-hat1")
    a_mv, b_mv = var("a"), var("b")
    hat2 = schema_proof(
        (imp(b_mv, imp(a_mv, _D)),),
        imp(ret_join(ret_hat(a_mv, _F), ret_hat(b_mv, _F), _F),
            ret_hat(_D, _F)),
        "delta-hat2")

    def stage0(j: int) -> str:
        v = order[j]
        ps = d.premises.get(v, ())
        g = d.labels[v]
        if not ps:
            psi = _ret_leaf(b, g, gamma_set)
            return b.add_template(hat0, {"d": deltas[j], "f": phi}, (psi,))
        if len(ps) == 1:
            assert isinstance(g, Imp)
            psi = _ret_intro_step(b, st, v, ps[0], g.left, g.right)
            return b.add_template(hat1, {"a": st.delta[ps[0]],
                                         "d": deltas[j], "f": phi}, (psi,))
        minor, major = _orient(d, v)
        hi, lo = ((minor, major) if idx[minor] > idx[major]
                  else (major, minor))
        psi = _ret_elim_step(b, st, d, v, minor, major, outer=hi)
        return b.add_template(hat2, {"a": st.delta[lo], "b": st.delta[hi],
                                     "d": deltas[j], "f": phi}, (psi,))

    nhat = _block_tree(b, phi, seq, edges_into, stage0)
    fin = schema_proof((ret_hat(imp(TOP, _X), _X),), _X,
                       "top-hat-discharge")
    out = b.finish(b.add_template(fin, {"x": phi}, (nhat,)))
    rep2 = check_frege_dag(out, gamma_set, phi)
    if not rep2:
        raise RuntimeError(f"tree proof fails checking: {rep2.reason}")
    if not out.is_tree():
        raise RuntimeError("output is not tree-like")
    nm_tree, _ = frege_to_nm(out, gamma_set, phi)
    if not nm_tree_is_tree(nm_tree):
        raise RuntimeError("natural-deduction leg is not tree-like")
    im, om = nm_metrics(d), frege_metrics(out)
    t_in = im.lines
    logt = max(1.0, math.log2(t_in))
    constants = {
        "lines_over_t2": om.lines / (t_in * t_in),
        "height_over_logt": om.height / logt,
        "size_over_bound": om.size / (im.formula_size * t_in * logt * logt),
    }
    return out, nm_tree, TransformReport(im, om, constants, rep2)


def nm_tree_is_tree(d: NmDerivation) -> bool:
    out: dict[str, int] = {}
    for v, ps in d.premises.items():
        for u in ps:
            out[u] = out.get(u, 0) + 1
    return all(out.get(v, 0) <= 1 for v in d.labels)


# ---------------------------------------------------------------------------
# deduction theorem


def _justify_free(lines: Sequence[Formula]) -> list[tuple]:
    """Axiom-first, then earliest MP, otherwise hypothesis."""
    just: list[tuple] = []
    first_index: dict[Formula, int] = {}
    majors: dict[Formula, list[tuple[int, Formula]]] = {}
    for i, g in enumerate(lines):
        if is_axiom(g):
            just.append(("ax",))
        else:
            found = None
            for k, left in majors.get(g, ()):
                j = first_index.get(left)
                if j is not None:
                    found = ("mp", j, k)
                    break
            just.append(found if found else ("hyp",))
        if g not in first_index:
            first_index[g] = i
        if isinstance(g, Imp):
            majors.setdefault(g.right, []).append((i, g.left))
    return just


def deduction(pi: FregeSeqDerivation | FregeDagDerivation,
              gamma: FormulaSeq
              ) -> FregeSeqDerivation | FregeDagDerivation:
    """Internalize hypotheses: from a proof of phi, one of gamma -> phi.

    The remaining hypotheses stay open; the output is returned in the
    input's presentation.
    """
    was_dag = isinstance(pi, FregeDagDerivation)
    seqd = dag_to_seq(pi) if was_dag else pi
    lines = [(g, tag) for g, tag in zip(seqd.lines, _justify_free(seqd.lines))]
    for _, alpha in gamma.entries:
        lines = _abstract(lines, alpha)
    out = FregeSeqDerivation(tuple(f for f, _ in lines))
    goal = fold_imp(gamma, seqd.lines[-1])
    if out.lines[-1] != goal:
        raise RuntimeError("internal error: deduction endpoint mismatch")
    hyps = {f for f, tag in lines if tag == ("hyp",)}
    rep = check_frege_seq(out, hyps, goal)
    if not rep:
        raise RuntimeError(f"deduction output fails checking: {rep.reason}")
    return seq_to_dag(out, hyps) if was_dag else out
