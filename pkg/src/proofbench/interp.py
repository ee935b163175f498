"""Closure of a derivation, closure circuits, slash, and extraction.

The central object is the closure of a formula set P under a derivation:
repeatedly add the conclusion of any node whose open assumptions are all
already present.  The closure is computed by a worklist, mirrored by a
literal round-by-round oracle, and compiled into a monotone circuit
whose inputs select the starting set.  Interpolant extraction fixes most
of those inputs to constants and folds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .circuits import Gate, MonotoneCircuit, prune, simplify
from .formula import Formula, FormulaSeq, Imp, Var, fold_imp, formula_vars, imp, var
from .natded import CheckReport, NmDerivation, assumptions, check_nm

__all__ = [
    "ClosureTrace",
    "SlashContext",
    "InterpolationShape",
    "closure",
    "closure_literal",
    "closure_circuit",
    "slash",
    "slash_strong",
    "extract_disjunct",
    "extract_interpolant",
]


@dataclass(frozen=True)
class ClosureTrace:
    stages: tuple[frozenset[Formula], ...]

    @property
    def final(self) -> frozenset[Formula]:
        return self.stages[-1]

    @property
    def fixpoint(self) -> int:
        return len(self.stages) - 1

    def __contains__(self, phi: Formula) -> bool:
        return phi in self.final


def closure(d: NmDerivation, p: Iterable[Formula]) -> ClosureTrace:
    """Worklist closure with the same stage boundaries as the literal rounds."""
    a = assumptions(d)
    nodes = list(d.topological())
    current = frozenset(p)
    occurs: dict[Formula, list[str]] = {}
    missing: dict[str, int] = {}
    for v in nodes:
        left = [f for f in a[v] if f not in current]
        missing[v] = len(left)
        for f in left:
            occurs.setdefault(f, []).append(v)
    pending = [v for v in nodes if missing[v] == 0]
    stages = [current]
    while True:
        fresh = {d.labels[v] for v in pending} - current
        if not fresh:
            break
        current = current | fresh
        stages.append(current)
        pending = []
        for f in fresh:
            for v in occurs.get(f, ()):
                missing[v] -= 1
                if missing[v] == 0:
                    pending.append(v)
    return ClosureTrace(tuple(stages))


def closure_literal(d: NmDerivation, p: Iterable[Formula]) -> ClosureTrace:
    """Direct round-by-round iteration; the test oracle for closure()."""
    a = assumptions(d)
    nodes = list(d.topological())
    current = frozenset(p)
    stages = [current]
    while True:
        nxt = current | {d.labels[v] for v in nodes if a[v] <= current}
        if nxt == current:
            break
        stages.append(nxt)
        current = nxt
    return ClosureTrace(tuple(stages))


def closure_circuit(d: NmDerivation, f_list: list[Formula],
                    phi: Formula) -> MonotoneCircuit:
    """Monotone circuit whose input x_i selects f_list[i] into the start set.

    Output is 1 exactly when phi lands in the closure.  Inputs outside
    the derivation's label set only matter through the direct phi input.
    """
    if len(set(f_list)) != len(f_list):
        raise ValueError("formula list contains duplicates")
    index = {g: i for i, g in enumerate(f_list)}
    if phi not in index:
        raise ValueError("target formula is not in the list")
    labels = []
    seen = set()
    for v in d.topological():
        g = d.labels[v]
        if g not in seen:
            seen.add(g)
            labels.append(g)
    for g in labels:
        if g not in index:
            raise ValueError(f"derivation label missing from the list: {g}")
    gates: dict[str, Gate] = {f"x_{i}": ("var", f"x{i}") for i in range(len(f_list))}
    if phi not in seen:
        return MonotoneCircuit(gates, f"x_{index[phi]}")
    a = assumptions(d)
    nodes = list(d.topological())
    t = len(nodes)
    lab_ids = {g: j for j, g in enumerate(labels)}
    stages = min(t, len(labels))

    def y_gate(g: Formula, j: int) -> str:
        # stage 0 is identified with the inputs, per the y_{i,0} = x_i wiring
        return f"x_{index[g]}" if j == 0 else f"y_{lab_ids[g]}_{j}"

    for j in range(stages):
        for vi, v in enumerate(nodes):
            gates[f"z_{vi}_{j}"] = ("and", tuple(y_gate(g, j)
                                                 for g in sorted(a[v], key=lambda x: lab_ids[x])))
        producers: dict[int, list[str]] = {}
        for vi, v in enumerate(nodes):
            producers.setdefault(lab_ids[d.labels[v]], []).append(f"z_{vi}_{j}")
        for g in labels:
            li = lab_ids[g]
            gates[f"y_{li}_{j + 1}"] = ("or", (y_gate(g, j), *producers.get(li, ())))
    return prune(MonotoneCircuit(gates, y_gate(phi, stages)))


# ---------------------------------------------------------------------------
# slash


@dataclass(frozen=True)
class SlashContext:
    """Membership set P plus the free choice of the predicate on variables.

    Variables absent from base default to true, matching the usual
    everything-but-the-sink choice.
    """

    p: frozenset[Formula]
    base: Mapping[str, bool] = field(default_factory=dict)
    default: bool = True


def slash(ctx: SlashContext, phi: Formula) -> bool:
    if isinstance(phi, Var):
        return bool(ctx.base.get(phi.name, ctx.default))
    return not slash_strong(ctx, phi.left) or slash(ctx, phi.right)


def slash_strong(ctx: SlashContext, phi: Formula) -> bool:
    """The conjunction of the slash and membership in P."""
    return phi in ctx.p and slash(ctx, phi)


# ---------------------------------------------------------------------------
# extraction


def extract_disjunct(d: NmDerivation, u: Var) -> int:
    """From a proof of (a0 -> u) -> (a1 -> u) -> u, pick a provable a_i.

    Returns the smallest qualifying index.
    """
    root = d.labels[d.root]
    shape_ok = (isinstance(root, Imp) and isinstance(root.left, Imp)
                and root.left.right == u
                and isinstance(root.right, Imp)
                and isinstance(root.right.left, Imp)
                and root.right.left.right == u
                and root.right.right == u)
    if not shape_ok:
        raise ValueError("root label is not a two-disjunct implication shape")
    a0 = root.left.left
    a1 = root.right.left.left
    if u.name in formula_vars(a0) | formula_vars(a1):
        raise ValueError("sink variable occurs in a disjunct")
    rep = check_nm(d, [], root)
    if not rep:
        raise ValueError(f"invalid proof: {rep.reason}")
    final = closure(d, {imp(a0, u), imp(a1, u)}).final
    for i, ai in enumerate((a0, a1)):
        if ai in final:
            return i
    raise RuntimeError("internal error: neither disjunct is in the closure")


@dataclass(frozen=True)
class InterpolationShape:
    """Variable partition and the two sides of the interpolation target.

    alpha may mention p and q variables plus private sinks; beta may
    mention the primed p variables and r variables plus private sinks.
    The sink u is fresh to both.
    """

    n: int
    p_vars: tuple[str, ...]
    pp_vars: tuple[str, ...]
    q_vars: tuple[str, ...]
    r_vars: tuple[str, ...]
    u: str
    alpha: Formula
    beta: Formula

    def __post_init__(self):
        if len(self.p_vars) != self.n or len(self.pp_vars) != self.n:
            raise ValueError("p and primed-p lists must have length n")
        groups = [set(self.p_vars), set(self.pp_vars),
                  set(self.q_vars), set(self.r_vars), {self.u}]
        total = sum(len(g) for g in groups)
        if len(set().union(*groups)) != total:
            raise ValueError("variable groups must be pairwise disjoint")
        va = formula_vars(self.alpha)
        vb = formula_vars(self.beta)
        if va & (set(self.pp_vars) | set(self.r_vars) | {self.u}):
            raise ValueError("alpha mentions primed, r, or sink variables")
        if vb & (set(self.p_vars) | set(self.q_vars) | {self.u}):
            raise ValueError("beta mentions plain-p, q, or sink variables")

    def pair_axioms(self) -> tuple[Formula, ...]:
        """(p_i -> u) -> (pp_i -> u) -> u, for each i in order."""
        u = var(self.u)
        return tuple(imp(imp(var(p), u), imp(imp(var(pp), u), u))
                     for p, pp in zip(self.p_vars, self.pp_vars))

    def target(self) -> Formula:
        u = var(self.u)
        tail = imp(imp(self.alpha, u), imp(imp(self.beta, u), u))
        return fold_imp(FormulaSeq.of(self.pair_axioms()), tail)


def extract_interpolant(d: NmDerivation, shape: InterpolationShape
                        ) -> tuple[MonotoneCircuit, dict[str, int]]:
    """Monotone circuit over the p variables interpolating the shape.

    Returns the folded circuit and a size report with pre- and post-fold
    wire counts.
    """
    target = shape.target()
    if d.labels[d.root] != target:
        raise ValueError("proof root does not match the shape's target")
    rep = check_nm(d, [], target)
    if not rep:
        raise ValueError(f"invalid proof: {rep.reason}")
    u = var(shape.u)
    p_set = {imp(shape.alpha, u), imp(shape.beta, u), *shape.pair_axioms()}
    f_list: list[Formula] = []
    seen: set[Formula] = set()
    for g in [*p_set,
              *(var(x) for x in shape.p_vars),
              *(var(x) for x in shape.pp_vars),
              *(d.labels[v] for v in d.topological())]:
        if g not in seen:
            seen.add(g)
            f_list.append(g)
    raw = closure_circuit(d, f_list, shape.alpha)
    pre_size = raw.size
    p_names = {var(x): x for x in shape.p_vars}
    true_set = p_set | {var(x) for x in shape.pp_vars}
    gates: dict[str, Gate] = {}
    for gid, g in raw.gates.items():
        if g[0] != "var":
            gates[gid] = g
            continue
        i = int(g[1][1:])
        f = f_list[i]
        if f in p_names:
            gates[gid] = ("var", p_names[f])
        elif f in true_set:
            gates[gid] = ("and", ())
        else:
            gates[gid] = ("or", ())
    folded = simplify(MonotoneCircuit(gates, raw.root))
    report = {"pre_fold_wires": pre_size,
              "post_fold_wires": folded.size,
              "lines": len(d.labels),
              "formula_count": len(f_list)}
    return folded, report
