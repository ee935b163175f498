"""Dag-like natural deduction: derivations, checking, threads, metrics.

A derivation is a labelled dag whose nodes have in-degree 0 (assumption
leaf), 1 (arrow introduction) or 2 (arrow elimination).  Discharge
checking goes through the per-node open-assumption sets computed in one
topological pass; the naive thread semantics is kept as an independent
oracle.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .formula import (
    Formula,
    Imp,
    formula_size,
    parse_formula,
    render_formula,
)

__all__ = [
    "NmDerivation",
    "CheckReport",
    "ProofMetrics",
    "StructureError",
    "BudgetExceeded",
    "assumptions",
    "check_nm",
    "check_threads_naive",
    "unravel",
    "nm_metrics",
    "share",
    "leaf",
    "intro",
    "elim",
    "graft",
    "parse_nm",
    "render_nm",
]


class StructureError(ValueError):
    """The node/edge structure is not a well-formed proof skeleton."""


class BudgetExceeded(RuntimeError):
    """A configurable resource limit was hit before an answer was found."""


@dataclass(frozen=True)
class CheckReport:
    ok: bool
    reason: str = ""
    node: str | None = None

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class ProofMetrics:
    lines: int
    size: int
    height: int
    formula_size: int
    inferential_size: int


@dataclass
class NmDerivation:
    """Labelled dag; premises[v] lists the premise node ids of v."""

    labels: dict[str, Formula]
    premises: dict[str, tuple[str, ...]]
    root: str
    _topo: tuple[str, ...] | None = field(default=None, repr=False, compare=False)

    def nodes(self) -> Iterable[str]:
        return self.labels.keys()

    def is_tree(self) -> bool:
        out: dict[str, int] = {}
        for v, ps in self.premises.items():
            for u in ps:
                out[u] = out.get(u, 0) + 1
        return all(out.get(v, 0) <= 1 for v in self.labels)

    def topological(self) -> tuple[str, ...]:
        """Premise-first order, recomputed (never trusted from input)."""
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
        # stable: the heap always yields the smallest ready id
        if len(order) != len(self.labels):
            raise StructureError("derivation graph contains a cycle")
        self._topo = tuple(order)
        return self._topo


def _structural_check(d: NmDerivation) -> CheckReport:
    if d.root not in d.labels:
        return CheckReport(False, "root is not a node", d.root)
    if set(d.premises) - set(d.labels):
        stray = sorted(set(d.premises) - set(d.labels))[0]
        return CheckReport(False, "premise record for unknown node", stray)
    out_deg: dict[str, int] = {v: 0 for v in d.labels}
    for v in d.labels:
        ps = d.premises.get(v, ())
        if len(ps) > 2:
            return CheckReport(False, "in-degree above 2", v)
        for u in ps:
            if u not in d.labels:
                return CheckReport(False, f"dangling premise {u!r}", v)
            out_deg[u] += 1
    sinks = [v for v, k in out_deg.items() if k == 0]
    if sinks != [d.root]:
        bad = sorted(set(sinks) - {d.root}) or [d.root]
        return CheckReport(False, "node of out-degree 0 other than the root"
                           if sinks != [d.root] else "", bad[0])
    try:
        d.topological()
    except StructureError as e:
        return CheckReport(False, str(e))
    for v in d.labels:
        ps = d.premises.get(v, ())
        g = d.labels[v]
        if len(ps) == 1:
            if not (isinstance(g, Imp) and d.labels[ps[0]] == g.right):
                return CheckReport(False, "introduction node premise mismatch", v)
        elif len(ps) == 2:
            a, b = d.labels[ps[0]], d.labels[ps[1]]
            ok = (isinstance(b, Imp) and b.left == a and b.right == g) or \
                 (isinstance(a, Imp) and a.left == b and a.right == g)
            if not ok:
                return CheckReport(False, "elimination node premise mismatch", v)
    return CheckReport(True)


def assumptions(d: NmDerivation) -> dict[str, frozenset[Formula]]:
    """Open-assumption set of every node, in one topological pass."""
    rep = _structural_check(d)
    if not rep:
        raise StructureError(f"{rep.reason} [{rep.node}]")
    a: dict[str, frozenset[Formula]] = {}
    for v in d.topological():
        ps = d.premises.get(v, ())
        if not ps:
            a[v] = frozenset((d.labels[v],))
        elif len(ps) == 1:
            g = d.labels[v]
            assert isinstance(g, Imp)
            a[v] = a[ps[0]] - {g.left}
        else:
            a[v] = a[ps[0]] | a[ps[1]]
    return a


def check_nm(d: NmDerivation, gamma: Iterable[Formula], phi: Formula) -> CheckReport:
    """Accept iff well-formed, root labelled phi, and A_root within gamma."""
    rep = _structural_check(d)
    if not rep:
        return rep
    if d.labels[d.root] != phi:
        return CheckReport(False, "root label differs from the goal", d.root)
    open_at_root = assumptions(d)[d.root]
    extra = open_at_root - set(gamma)
    if extra:
        culprit = min(extra, key=lambda f: (formula_size(f), hash(f)))
        return CheckReport(False,
                           f"open assumption not among the hypotheses: {culprit}",
                           d.root)
    return CheckReport(True)


def check_threads_naive(d: NmDerivation, gamma: Iterable[Formula], phi: Formula,
                        budget: int = 200_000) -> bool:
    """Thread-by-thread discharge check on the unravelled tree.

    Exponential in the worst case; exists as an oracle for the A_v
    recursion, not for production use.
    """
    rep = _structural_check(d)
    if not rep:
        return False
    if d.labels[d.root] != phi:
        return False
    gamma = set(gamma)
    consumers: dict[str, list[str]] = {v: [] for v in d.labels}
    for v, ps in d.premises.items():
        for u in ps:
            consumers[u].append(v)
    leaves = [v for v in d.labels if not d.premises.get(v, ())]
    count = 0
    for start in leaves:
        # enumerate all directed paths start -> root
        stack: list[tuple[str, bool]] = [(start, False)]
        path_discharged: list[bool] = []
        while stack:
            count += 1
            if count > budget:
                raise BudgetExceeded("thread enumeration budget exhausted")
            v, discharged = stack.pop()
            g = d.labels[v]
            if len(d.premises.get(v, ())) == 1 and isinstance(g, Imp) \
                    and g.left == d.labels[start]:
                discharged = True
            if v == d.root:
                if not discharged and d.labels[start] not in gamma:
                    return False
                continue
            for w in consumers[v]:
                stack.append((w, discharged))
    return True


def unravel(d: NmDerivation, budget: int = 500_000) -> NmDerivation:
    """Duplicate shared subderivations into a tree with the same threads."""
    rep = _structural_check(d)
    if not rep:
        raise StructureError(f"{rep.reason} [{rep.node}]")
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
    return NmDerivation(labels, premises, root)


def nm_metrics(d: NmDerivation) -> ProofMetrics:
    rep = _structural_check(d)
    if not rep:
        raise StructureError(f"{rep.reason} [{rep.node}]")
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


# ---------------------------------------------------------------------------
# construction helpers

_counter = itertools.count()


def _fresh_id() -> str:
    return f"v{next(_counter)}"


def leaf(phi: Formula) -> NmDerivation:
    v = _fresh_id()
    return NmDerivation({v: phi}, {v: ()}, v)


def intro(phi: Imp, sub: NmDerivation) -> NmDerivation:
    """Arrow introduction over sub, which must conclude phi.right."""
    if sub.labels[sub.root] != phi.right:
        raise StructureError("introduction premise does not match")
    v = _fresh_id()
    labels = dict(sub.labels)
    premises = dict(sub.premises)
    labels[v] = phi
    premises[v] = (sub.root,)
    return NmDerivation(labels, premises, v)


def elim(minor: NmDerivation, major: NmDerivation) -> NmDerivation:
    """Arrow elimination: major concludes minor's conclusion -> result."""
    g = major.labels[major.root]
    if not (isinstance(g, Imp) and g.left == minor.labels[minor.root]):
        raise StructureError("elimination premises do not match")
    labels = dict(minor.labels)
    labels.update(major.labels)
    premises = dict(minor.premises)
    premises.update(major.premises)
    if len(labels) != len(minor.labels) + len(major.labels):
        raise StructureError("node id clash when joining derivations")
    v = _fresh_id()
    labels[v] = g.right
    premises[v] = (minor.root, major.root)
    return NmDerivation(labels, premises, v)


def graft(d: NmDerivation, target: Formula, replacement: NmDerivation) -> NmDerivation:
    """Replace every leaf labelled target by the root of replacement.

    A single copy of the replacement is attached, so the result is
    generally a dag even when both inputs are trees.
    """
    hit = [v for v in d.labels
           if not d.premises.get(v, ()) and d.labels[v] == target]
    if not hit:
        return d
    hit_set = set(hit)
    labels = {v: f for v, f in d.labels.items() if v not in hit_set}
    labels.update(replacement.labels)
    if len(labels) != len(d.labels) - len(hit) + len(replacement.labels):
        raise StructureError("node id clash when grafting")
    premises: dict[str, tuple[str, ...]] = {}
    for v, ps in d.premises.items():
        if v in hit_set:
            continue
        premises[v] = tuple(replacement.root if u in hit_set else u for u in ps)
    premises.update(replacement.premises)
    root = replacement.root if d.root in hit_set else d.root
    return NmDerivation(labels, premises, root)


def share(d: NmDerivation) -> NmDerivation:
    """Merge nodes with identical label and premise list (hash-consing)."""
    rep = _structural_check(d)
    if not rep:
        raise StructureError(f"{rep.reason} [{rep.node}]")
    canon: dict[tuple, str] = {}
    alias: dict[str, str] = {}
    labels: dict[str, Formula] = {}
    premises: dict[str, tuple[str, ...]] = {}
    for v in d.topological():
        ps = tuple(alias[u] for u in d.premises.get(v, ()))
        key = (d.labels[v], ps)
        if key in canon:
            alias[v] = canon[key]
            continue
        canon[key] = v
        alias[v] = v
        labels[v] = d.labels[v]
        premises[v] = ps
    root = alias[d.root]
    reachable: set[str] = set()
    work = [root]
    while work:
        v = work.pop()
        if v in reachable:
            continue
        reachable.add(v)
        work.extend(premises[v])
    return NmDerivation({v: labels[v] for v in reachable},
                        {v: premises[v] for v in reachable}, root)


# ---------------------------------------------------------------------------
# file format: `id | formula`, `premise -> conclusion`, `root id`


def parse_nm(text: str) -> NmDerivation:
    labels: dict[str, Formula] = {}
    edges: list[tuple[str, str]] = []
    root: str | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("root "):
            root = line[5:].strip()
        elif "|" in line:
            nid, _, f = line.partition("|")
            labels[nid.strip()] = parse_formula(f)
        elif "->" in line:
            a, _, b = line.partition("->")
            edges.append((a.strip(), b.strip()))
        else:
            raise StructureError(f"line {lineno}: unrecognized record {line!r}")
    if root is None:
        raise StructureError("missing root declaration")
    premises: dict[str, tuple[str, ...]] = {v: () for v in labels}
    for a, b in edges:
        if b not in premises:
            raise StructureError(f"edge into unknown node {b!r}")
        premises[b] = premises[b] + (a,)
    return NmDerivation(labels, premises, root)


def render_nm(d: NmDerivation) -> str:
    lines = [f"{v} | {render_formula(d.labels[v])}" for v in sorted(d.labels)]
    for v in sorted(d.premises):
        for u in d.premises[v]:
            lines.append(f"{u} -> {v}")
    lines.append(f"root {d.root}")
    return "\n".join(lines) + "\n"
