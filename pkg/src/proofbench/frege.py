"""The implicational Hilbert system: axioms K and S plus modus ponens.

Derivations come in two presentations: a flat sequence of formulas, and
a labelled dag whose leaves are axioms or assumptions and whose binary
nodes are modus ponens.  Conversions, duplicate elimination, metrics,
and schema-template instantiation live here; the heavy proof
constructions live in the transforms module.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .formula import (
    Formula,
    Imp,
    Substitution,
    apply_subst,
    formula_size,
    formula_vars,
    imp,
    parse_formula,
    render_formula,
)
from .natded import BudgetExceeded, CheckReport, ProofMetrics, StructureError

__all__ = [
    "FregeSeqDerivation",
    "FregeDagDerivation",
    "SchemaTemplate",
    "FregeDagBuilder",
    "is_axiom_a1",
    "is_axiom_a2",
    "is_axiom",
    "check_frege_seq",
    "check_frege_dag",
    "seq_to_dag",
    "dag_to_seq",
    "dedup",
    "frege_metrics",
    "frege_unravel",
    "instantiate_schema",
    "parse_frege_seq",
    "render_frege_seq",
    "parse_frege_dag",
    "render_frege_dag",
]


def is_axiom_a1(phi: Formula) -> bool:
    """alpha -> beta -> alpha."""
    return (isinstance(phi, Imp) and isinstance(phi.right, Imp)
            and phi.right.right == phi.left)


def is_axiom_a2(phi: Formula) -> bool:
    """(alpha -> beta -> gamma) -> (alpha -> beta) -> (alpha -> gamma)."""
    if not (isinstance(phi, Imp) and isinstance(phi.left, Imp)
            and isinstance(phi.left.right, Imp) and isinstance(phi.right, Imp)):
        return False
    first, rest = phi.left, phi.right
    alpha, beta, gamma = first.left, first.right.left, first.right.right
    return (rest.left == imp(alpha, beta)
            and rest.right == imp(alpha, gamma))


def is_axiom(phi: Formula) -> bool:
    return is_axiom_a1(phi) or is_axiom_a2(phi)


@dataclass(frozen=True)
class FregeSeqDerivation:
    lines: tuple[Formula, ...]

    def __post_init__(self):
        if not self.lines:
            raise ValueError("a derivation must have at least one line")


@dataclass
class FregeDagDerivation:
    """Labelled dag; in-degree 0 leaves, in-degree 2 modus ponens nodes."""

    labels: dict[str, Formula]
    premises: dict[str, tuple[str, ...]]
    root: str
    _topo: tuple[str, ...] | None = field(default=None, repr=False, compare=False)

    def is_tree(self) -> bool:
        out: dict[str, int] = {}
        for v, ps in self.premises.items():
            for u in ps:
                out[u] = out.get(u, 0) + 1
        return all(out.get(v, 0) <= 1 for v in self.labels)

    def topological(self) -> tuple[str, ...]:
        if self._topo is not None:
            return self._topo
        indeg = {v: 0 for v in self.labels}
        consumers: dict[str, list[str]] = {v: [] for v in self.labels}
        for v, ps in self.premises.items():
            for u in ps:
                if u not in self.labels:
                    raise StructureError(f"edge from unknown node {u!r}")
                indeg[v] += 1
                consumers[u].append(v)
        ready = [v for v, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order: list[str] = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for w in consumers[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    heapq.heappush(ready, w)
        if len(order) != len(self.labels):
            raise StructureError("derivation graph contains a cycle")
        self._topo = tuple(order)
        return self._topo


def _justify(lines: tuple[Formula, ...], gamma: set[Formula]
             ) -> tuple[list[tuple], CheckReport]:
    """Per-line justifications, or a report naming the first bad line.

    Justifications: ("hyp",), ("a1",), ("a2",), ("mp", j, k) with j the
    minor and k the major premise index, earliest (k, j) preferred.
    """
    just: list[tuple] = []
    first_index: dict[Formula, int] = {}
    majors: dict[Formula, list[tuple[int, Formula]]] = {}
    for i, g in enumerate(lines):
        if g in gamma:
            just.append(("hyp",))
        elif is_axiom_a1(g):
            just.append(("a1",))
        elif is_axiom_a2(g):
            just.append(("a2",))
        else:
            found = None
            for k, left in majors.get(g, ()):
                j = first_index.get(left)
                if j is not None:
                    found = ("mp", j, k)
                    break
            if found is None:
                return just, CheckReport(False, "line has no justification", str(i))
            just.append(found)
        if g not in first_index:
            first_index[g] = i
        if isinstance(g, Imp):
            majors.setdefault(g.right, []).append((i, g.left))
    return just, CheckReport(True)


def check_frege_seq(d: FregeSeqDerivation, gamma: Iterable[Formula],
                    phi: Formula) -> CheckReport:
    just, rep = _justify(d.lines, set(gamma))
    if not rep:
        return rep
    if d.lines[-1] != phi:
        return CheckReport(False, "last line differs from the goal",
                           str(len(d.lines) - 1))
    return CheckReport(True)


def check_frege_dag(d: FregeDagDerivation, gamma: Iterable[Formula],
                    phi: Formula) -> CheckReport:
    gamma = set(gamma)
    if d.root not in d.labels:
        return CheckReport(False, "root is not a node", d.root)
    out_deg: dict[str, int] = {v: 0 for v in d.labels}
    for v in d.labels:
        ps = d.premises.get(v, ())
        if len(ps) not in (0, 2):
            return CheckReport(False, "in-degree must be 0 or 2", v)
        for u in ps:
            if u not in d.labels:
                return CheckReport(False, f"dangling premise {u!r}", v)
            out_deg[u] += 1
    sinks = sorted(v for v, n in out_deg.items() if n == 0)
    if sinks != [d.root]:
        bad = [v for v in sinks if v != d.root] or [d.root]
        return CheckReport(False, "node of out-degree 0 other than the root", bad[0])
    try:
        d.topological()
    except StructureError as e:
        return CheckReport(False, str(e))
    for v in d.labels:
        ps = d.premises.get(v, ())
        g = d.labels[v]
        if not ps:
            if g not in gamma and not is_axiom(g):
                return CheckReport(False, "leaf is neither axiom nor assumption", v)
        else:
            a, b = d.labels[ps[0]], d.labels[ps[1]]
            ok = (isinstance(b, Imp) and b.left == a and b.right == g) or \
                 (isinstance(a, Imp) and a.left == b and a.right == g)
            if not ok:
                return CheckReport(False, "node is not a modus ponens instance", v)
    if d.labels[d.root] != phi:
        return CheckReport(False, "root label differs from the goal", d.root)
    return CheckReport(True)


def seq_to_dag(d: FregeSeqDerivation, gamma: Iterable[Formula]
               ) -> FregeDagDerivation:
    """Dag form with earliest-justification edges, pruned to the root."""
    just, rep = _justify(d.lines, set(gamma))
    if not rep:
        raise StructureError(f"{rep.reason} [{rep.node}]")
    t = len(d.lines)
    premises: dict[str, tuple[str, ...]] = {}
    for i, tag in enumerate(just):
        premises[str(i)] = (str(tag[1]), str(tag[2])) if tag[0] == "mp" else ()
    keep: set[str] = set()
    work = [str(t - 1)]
    while work:
        v = work.pop()
        if v in keep:
            continue
        keep.add(v)
        work.extend(premises[v])
    return FregeDagDerivation({v: d.lines[int(v)] for v in keep},
                              {v: premises[v] for v in keep}, str(t - 1))


def dag_to_seq(d: FregeDagDerivation) -> FregeSeqDerivation:
    order = d.topological()
    return FregeSeqDerivation(tuple(d.labels[v] for v in order))


def dedup(d: FregeSeqDerivation) -> FregeSeqDerivation:
    """Keep only the first occurrence of every formula."""
    seen: set[Formula] = set()
    lines = []
    for g in d.lines:
        if g not in seen:
            seen.add(g)
            lines.append(g)
    return FregeSeqDerivation(tuple(lines))


def frege_metrics(d: FregeDagDerivation | FregeSeqDerivation,
                  gamma: Iterable[Formula] = ()) -> ProofMetrics:
    if isinstance(d, FregeSeqDerivation):
        d = seq_to_dag(d, gamma)
    order = d.topological()
    sizes = {v: formula_size(d.labels[v]) for v in order}
    height: dict[str, int] = {}
    for v in order:
        ps = d.premises.get(v, ())
        height[v] = 0 if not ps else 1 + max(height[u] for u in ps)
    inf = sum(sizes[v] + sum(sizes[u] for u in d.premises.get(v, ()))
              for v in order)
    return ProofMetrics(
        lines=len(order),
        size=sum(sizes.values()),
        height=height[d.root],
        formula_size=max(sizes.values()),
        inferential_size=inf,
    )


def frege_unravel(d: FregeDagDerivation, budget: int = 2_000_000
                  ) -> FregeDagDerivation:
    labels: dict[str, Formula] = {}
    premises: dict[str, tuple[str, ...]] = {}
    counter = itertools.count()
    stack: list[tuple[str, str]] = []

    def fresh(v: str) -> str:
        nid = f"n{next(counter)}"
        labels[nid] = d.labels[v]
        if len(labels) > budget:
            raise BudgetExceeded("unravelling budget exhausted")
        stack.append((v, nid))
        return nid

    root = fresh(d.root)
    while stack:
        v, nid = stack.pop()
        premises[nid] = tuple(fresh(u) for u in d.premises.get(v, ()))
    return FregeDagDerivation(labels, premises, root)


# ---------------------------------------------------------------------------
# schema templates


@dataclass(frozen=True)
class SchemaTemplate:
    """A reusable tree derivation over metavariables.

    The stored derivation proves the conclusion pattern from the premise
    patterns, using each premise exactly once; premise_nodes names the
    leaf carrying each premise, in order.  Instantiation is plain
    substitution.
    """

    name: str
    premises: tuple[Formula, ...]
    conclusion: Formula
    derivation: FregeDagDerivation
    premise_nodes: tuple[str, ...]

    def metavariables(self) -> frozenset[str]:
        out = frozenset()
        for f in (*self.premises, self.conclusion):
            out |= formula_vars(f)
        return out


_node_counter = itertools.count()


def _fresh_node() -> str:
    return f"f{next(_node_counter)}"


def instantiate_schema(t: SchemaTemplate, sigma: Substitution
                       ) -> FregeDagDerivation:
    """Substituted copy of the template derivation with fresh node ids."""
    missing = t.metavariables() - set(sigma)
    if missing:
        raise ValueError(f"unbound metavariable {sorted(missing)[0]!r}")
    rename = {v: _fresh_node() for v in t.derivation.labels}
    labels = {rename[v]: apply_subst(sigma, f)
              for v, f in t.derivation.labels.items()}
    premises = {rename[v]: tuple(rename[u] for u in ps)
                for v, ps in t.derivation.premises.items()}
    return FregeDagDerivation(labels, premises, rename[t.derivation.root])


class FregeDagBuilder:
    """Incremental dag assembly with subproof grafting.

    Subproofs are copied in with fresh ids; their assumption leaves can
    be attached to existing nodes, which is what shares structure (and
    keeps trees trees when every node is consumed once).
    """

    def __init__(self):
        self.labels: dict[str, Formula] = {}
        self.premises: dict[str, tuple[str, ...]] = {}

    def add_leaf(self, phi: Formula) -> str:
        nid = _fresh_node()
        self.labels[nid] = phi
        self.premises[nid] = ()
        return nid

    def add_mp(self, minor: str, major: str) -> str:
        g = self.labels[major]
        if not (isinstance(g, Imp) and g.left == self.labels[minor]):
            raise StructureError("modus ponens premises do not match")
        nid = _fresh_node()
        self.labels[nid] = g.right
        self.premises[nid] = (minor, major)
        return nid

    def add_subproof(self, d: FregeDagDerivation,
                     attach: Mapping[Formula, str] | None = None) -> str:
        """Copy d in; leaves with labels in attach reuse existing nodes."""
        attach = attach or {}
        rename: dict[str, str] = {}
        for v in d.topological():
            ps = d.premises.get(v, ())
            if not ps and d.labels[v] in attach:
                rename[v] = attach[d.labels[v]]
                continue
            nid = _fresh_node()
            rename[v] = nid
            self.labels[nid] = d.labels[v]
            self.premises[nid] = tuple(rename[u] for u in ps)
        return rename[d.root]

    def add_template(self, t: SchemaTemplate, sigma: Substitution,
                     attach: Iterable[str | None] = ()) -> str:
        """Instantiate a template in place; attach[i] supplies premise i.

        Unattached premises become assumption leaves with their
        instantiated labels.
        """
        attach = list(attach)
        attach += [None] * (len(t.premises) - len(attach))
        targets = {t.premise_nodes[i]: a
                   for i, a in enumerate(attach) if a is not None}
        rename: dict[str, str] = {}
        for v in t.derivation.topological():
            if v in targets:
                got = self.labels[targets[v]]
                want = apply_subst(sigma, t.derivation.labels[v])
                if got != want:
                    raise StructureError("attached node label does not match")
                rename[v] = targets[v]
                continue
            nid = _fresh_node()
            rename[v] = nid
            self.labels[nid] = apply_subst(sigma, t.derivation.labels[v])
            self.premises[nid] = tuple(rename[u]
                                       for u in t.derivation.premises[v])
        return rename[t.derivation.root]

    def finish(self, root: str) -> FregeDagDerivation:
        keep: set[str] = set()
        work = [root]
        while work:
            v = work.pop()
            if v in keep:
                continue
            keep.add(v)
            work.extend(self.premises[v])
        return FregeDagDerivation({v: self.labels[v] for v in keep},
                                  {v: self.premises[v] for v in keep}, root)


# ---------------------------------------------------------------------------
# file formats


def parse_frege_seq(text: str) -> FregeSeqDerivation:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(parse_formula(line))
    return FregeSeqDerivation(tuple(lines))


def render_frege_seq(d: FregeSeqDerivation) -> str:
    return "\n".join(render_formula(g) for g in d.lines) + "\n"


def parse_frege_dag(text: str) -> FregeDagDerivation:
    """Node/edge format shared with natural deduction; roles are inferred."""
    from .natded import parse_nm
    nm = parse_nm(text)
    return FregeDagDerivation(dict(nm.labels), dict(nm.premises), nm.root)


def render_frege_dag(d: FregeDagDerivation) -> str:
    lines = [f"{v} | {render_formula(d.labels[v])}" for v in sorted(d.labels)]
    for v in sorted(d.premises):
        for u in d.premises[v]:
            lines.append(f"{u} -> {v}")
    lines.append(f"root {d.root}")
    return "\n".join(lines) + "\n"
