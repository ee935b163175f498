"""Monotone Boolean circuits and brute-force separation checking.

Circuits are gate dags over AND/OR/variable gates; size is the wire
count.  Constants follow the empty-gate convention: an AND with no
inputs is true, an OR with no inputs is false.  Exhaustive checks
evaluate all assignments at once using big integers as bit vectors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import isqrt
from typing import Iterable, Mapping

from .formula import Formula, Imp

__all__ = [
    "MonotoneCircuit",
    "CliqueColouringPair",
    "CheckOutcome",
    "eval_circuit",
    "eval_circuit_all",
    "classical_eval_all",
    "circuit_true",
    "circuit_false",
    "prune",
    "constant_fold",
    "simplify",
    "to_bounded_fanin",
    "cc_membership",
    "check_separates",
    "check_interpolates",
    "parse_circuit",
    "render_circuit",
]

Gate = tuple  # ("var", name) | ("and", ids...) | ("or", ids...)


@dataclass(frozen=True)
class CheckOutcome:
    ok: bool
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


class MonotoneCircuit:
    def __init__(self, gates: Mapping[str, Gate], root: str):
        self.gates = dict(gates)
        self.root = root
        if root not in self.gates:
            raise ValueError(f"root {root!r} is not a gate")
        for gid, g in self.gates.items():
            if g[0] == "var":
                if len(g) != 2 or not isinstance(g[1], str):
                    raise ValueError(f"malformed variable gate {gid!r}")
            elif g[0] in ("and", "or"):
                for src in g[1]:
                    if src not in self.gates:
                        raise ValueError(f"gate {gid!r} reads unknown {src!r}")
            else:
                raise ValueError(f"unknown gate kind {g[0]!r}")
        self._order = self._toposort()

    def _toposort(self) -> tuple[str, ...]:
        indeg = {g: 0 for g in self.gates}
        consumers: dict[str, list[str]] = {g: [] for g in self.gates}
        for gid, g in self.gates.items():
            if g[0] != "var":
                for src in g[1]:
                    indeg[gid] += 1
                    consumers[src].append(gid)
        ready = sorted((g for g, d in indeg.items() if d == 0), reverse=True)
        order: list[str] = []
        while ready:
            gid = ready.pop()
            order.append(gid)
            fresh = []
            for w in consumers[gid]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    fresh.append(w)
            if fresh:
                ready.extend(fresh)
                ready.sort(reverse=True)
        if len(order) != len(self.gates):
            raise ValueError("circuit contains a cycle")
        return tuple(order)

    @property
    def size(self) -> int:
        """Total wire count."""
        return sum(len(g[1]) for g in self.gates.values() if g[0] != "var")

    @property
    def num_gates(self) -> int:
        return len(self.gates)

    def variables(self) -> frozenset[str]:
        return frozenset(g[1] for g in self.gates.values() if g[0] == "var")

    def max_fanin(self) -> int:
        return max((len(g[1]) for g in self.gates.values() if g[0] != "var"),
                   default=0)


def circuit_true() -> MonotoneCircuit:
    return MonotoneCircuit({"g0": ("and", ())}, "g0")


def circuit_false() -> MonotoneCircuit:
    return MonotoneCircuit({"g0": ("or", ())}, "g0")


def eval_circuit(c: MonotoneCircuit, a: Mapping[str, int | bool]) -> bool:
    vals: dict[str, bool] = {}
    for gid in c._order:
        g = c.gates[gid]
        if g[0] == "var":
            vals[gid] = bool(a[g[1]])
        elif g[0] == "and":
            vals[gid] = all(vals[s] for s in g[1])
        else:
            vals[gid] = any(vals[s] for s in g[1])
    return vals[c.root]


def _var_masks(names: list[str]) -> tuple[dict[str, int], int]:
    """Bit-vector masks over all 2^len(names) assignments.

    Assignment index i sets variable j true iff bit j of i is set; the
    mask for a variable has bit i set iff it is true in assignment i.
    """
    m = len(names)
    total = 1 << (1 << m)
    full = total - 1
    masks = {}
    for j, name in enumerate(names):
        period = 1 << (j + 1)
        unit = ((1 << (1 << j)) - 1) << (1 << j)
        masks[name] = unit * (full // ((1 << period) - 1))
    return masks, full


def eval_circuit_all(c: MonotoneCircuit, names: list[str]) -> int:
    """Truth table of the circuit over the listed variables, as a bigint."""
    masks, full = _var_masks(names)
    vals: dict[str, int] = {}
    for gid in c._order:
        g = c.gates[gid]
        if g[0] == "var":
            vals[gid] = masks[g[1]]
        elif g[0] == "and":
            out = full
            for s in g[1]:
                out &= vals[s]
            vals[gid] = out
        else:
            out = 0
            for s in g[1]:
                out |= vals[s]
            vals[gid] = out
    return vals[c.root]


def classical_eval_all(phi: Formula, names: list[str],
                       fixed: Mapping[str, int] | None = None) -> int:
    """Truth table of a formula over the listed variables, as a bigint.

    Variables not listed must appear in fixed (constant bits).
    """
    masks, full = _var_masks(names)
    if fixed:
        for name, bit in fixed.items():
            masks.setdefault(name, full if bit else 0)
    memo: dict[int, int] = {}

    def go(f: Formula) -> int:
        out = memo.get(id(f))
        if out is not None:
            return out
        if isinstance(f, Imp):
            out = (full ^ go(f.left)) | go(f.right)
        else:
            out = masks[f.name]
        memo[id(f)] = out
        return out

    return go(phi)


def prune(c: MonotoneCircuit) -> MonotoneCircuit:
    """Drop gates from which the root is unreachable."""
    keep: set[str] = set()
    work = [c.root]
    while work:
        gid = work.pop()
        if gid in keep:
            continue
        keep.add(gid)
        g = c.gates[gid]
        if g[0] != "var":
            work.extend(g[1])
    return MonotoneCircuit({g: c.gates[g] for g in keep}, c.root)


def constant_fold(c: MonotoneCircuit) -> MonotoneCircuit:
    """Propagate empty-gate constants and collapse single-input gates."""
    const: dict[str, int | None] = {}
    alias: dict[str, str] = {}

    def resolve(gid: str) -> str:
        while gid in alias:
            gid = alias[gid]
        return gid

    gates: dict[str, Gate] = {}
    for gid in c._order:
        g = c.gates[gid]
        if g[0] == "var":
            const[gid] = None
            gates[gid] = g
            continue
        absorbing = 0 if g[0] == "and" else 1
        inputs = []
        value: int | None = 1 if g[0] == "and" else 0
        for s in g[1]:
            s = resolve(s)
            cv = const[s]
            if cv is None:
                if s not in inputs:
                    inputs.append(s)
                value = None if value != absorbing else value
            elif cv == absorbing:
                value = absorbing
        if value is not None:
            const[gid] = value
            gates[gid] = ("and", ()) if value else ("or", ())
        elif len(inputs) == 1:
            const[gid] = None
            alias[gid] = inputs[0]
        else:
            const[gid] = None
            gates[gid] = (g[0], tuple(inputs))
    root = resolve(c.root)
    return prune(MonotoneCircuit(gates, root))


def simplify(c: MonotoneCircuit) -> MonotoneCircuit:
    """Fold constants, merge structurally equal gates, flatten chains.

    Same-kind gates feeding exactly one consumer are inlined, and
    duplicate inputs collapse, so ladder-shaped OR/AND chains reduce to
    a single wide gate.  The function computed is unchanged.
    """
    c = constant_fold(c)
    while True:
        fanout: dict[str, int] = {g: 0 for g in c.gates}
        for g in c.gates.values():
            if g[0] != "var":
                for s in g[1]:
                    fanout[s] += 1
        alias: dict[str, str] = {}
        seen: dict[tuple, str] = {}

        def resolve(gid: str) -> str:
            while gid in alias:
                gid = alias[gid]
            return gid

        gates: dict[str, Gate] = {}
        changed = False
        for gid in c._order:
            g = c.gates[gid]
            if g[0] == "var":
                key: tuple = ("var", g[1])
                new = g
            else:
                inputs: list[str] = []
                for s in g[1]:
                    s = resolve(s)
                    sg = gates[s]
                    if sg[0] == g[0] and fanout[s] == 1:
                        inputs.extend(x for x in sg[1] if x not in inputs)
                        changed = True
                    elif s not in inputs:
                        inputs.append(s)
                if len(inputs) != len(g[1]):
                    changed = True
                if len(inputs) == 1:
                    alias[gid] = inputs[0]
                    changed = True
                    continue
                key = (g[0], frozenset(inputs))
                new = (g[0], tuple(inputs))
            hit = seen.get(key)
            if hit is not None:
                alias[gid] = hit
                changed = True
                continue
            seen[key] = gid
            gates[gid] = new
        c = prune(MonotoneCircuit(gates, resolve(c.root)))
        if not changed:
            return c


def to_bounded_fanin(c: MonotoneCircuit) -> MonotoneCircuit:
    """Split every wide gate into a chain of binary gates of the same kind."""
    gates: dict[str, Gate] = {}
    counter = itertools.count()
    for gid, g in c.gates.items():
        if g[0] == "var" or len(g[1]) <= 2:
            gates[gid] = g
            continue
        acc = g[1][0]
        for src in g[1][1:-1]:
            mid = f"{gid}_f{next(counter)}"
            gates[mid] = (g[0], (acc, src))
            acc = mid
        gates[gid] = (g[0], (acc, g[1][-1]))
    return MonotoneCircuit(gates, c.root)


# ---------------------------------------------------------------------------
# Clique-Colouring disjoint pair


def edge_var(i: int, j: int) -> str:
    if i == j:
        raise ValueError("no loops")
    return f"e_{min(i, j)}_{max(i, j)}"


@dataclass(frozen=True)
class CliqueColouringPair:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")

    @property
    def k(self) -> int:
        return isqrt(self.n)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(edge_var(i, j)
                     for i in range(self.n) for j in range(i + 1, self.n))


def cc_membership(n: int, edges: Iterable[frozenset[int]], side: int,
                  max_n: int = 8) -> bool:
    """Side 0: k-colourable; side 1: contains a (k+1)-clique.  Brute force."""
    if n > max_n:
        raise ValueError(f"n={n} above the brute-force bound {max_n}")
    k = isqrt(n)
    eset = {frozenset(e) for e in edges}
    if side == 0:
        for colours in itertools.product(range(k), repeat=n):
            if all(colours[i] != colours[j]
                   for e in eset for i, j in [sorted(e)]):
                return True
        return False
    if side == 1:
        for group in itertools.combinations(range(n), k + 1):
            if all(frozenset((i, j)) in eset
                   for i, j in itertools.combinations(group, 2)):
                return True
        return False
    raise ValueError("side must be 0 or 1")


def check_separates(c: MonotoneCircuit, n: int) -> CheckOutcome:
    """Exhaustively verify the circuit separates the pair for small n."""
    pair = CliqueColouringPair(n)
    names = list(pair.variables)
    if len(names) > 8:
        raise ValueError("edge-set enumeration limited to 2^8 graphs")
    stray = c.variables() - set(names)
    if stray:
        return CheckOutcome(False, f"stray circuit variable {sorted(stray)[0]}")
    pairs = [frozenset(map(int, v.split("_")[1:])) for v in names]
    table = eval_circuit_all(c, names)
    for idx in range(1 << len(names)):
        edges = [pairs[b] for b in range(len(names)) if (idx >> b) & 1]
        out = (table >> idx) & 1
        if cc_membership(n, edges, 0) and out != 0:
            return CheckOutcome(False, f"colourable graph {sorted(map(sorted, edges))} accepted")
        if cc_membership(n, edges, 1) and out != 1:
            return CheckOutcome(False, f"clique graph {sorted(map(sorted, edges))} rejected")
    return CheckOutcome(True)


def check_interpolates(c: MonotoneCircuit, shape, budget_bits: int = 24) -> CheckOutcome:
    """Exhaustively verify the monotone interpolation contract.

    The circuit must satisfy: whenever beta with its primed variables
    replaced by negated plain ones evaluates false, the circuit accepts;
    and whenever the circuit accepts, alpha evaluates true.
    """
    p = list(shape.p_vars)
    stray = c.variables() - set(p)
    if stray:
        return CheckOutcome(False, f"stray circuit variable {sorted(stray)[0]}")

    from .formula import formula_vars  # local to avoid import noise at top

    # side 1: not beta(~p, r)  =>  C
    beta_extra = sorted(formula_vars(shape.beta) - set(shape.pp_vars))
    names1 = p + beta_extra
    if len(names1) > budget_bits:
        raise ValueError("beta-side enumeration exceeds the bit budget")
    masks1, full1 = _var_masks(names1)
    subst_masks = dict(masks1)
    for pv, ppv in zip(shape.p_vars, shape.pp_vars):
        subst_masks[ppv] = full1 ^ masks1[pv]
    beta_table = _eval_with_masks(shape.beta, subst_masks, full1)
    c_table1 = eval_circuit_all(c, names1)
    viol = (full1 ^ beta_table) & (full1 ^ c_table1)
    if viol:
        idx = (viol & -viol).bit_length() - 1
        a = {v: (idx >> j) & 1 for j, v in enumerate(names1)}
        return CheckOutcome(False, f"beta side fails at {a}")

    # side 2: C => alpha
    alpha_extra = sorted(formula_vars(shape.alpha) - set(p))
    names2 = p + alpha_extra
    if len(names2) > budget_bits:
        raise ValueError("alpha-side enumeration exceeds the bit budget")
    masks2, full2 = _var_masks(names2)
    alpha_table = _eval_with_masks(shape.alpha, masks2, full2)
    c_table2 = eval_circuit_all(c, names2)
    viol = c_table2 & (full2 ^ alpha_table)
    if viol:
        idx = (viol & -viol).bit_length() - 1
        a = {v: (idx >> j) & 1 for j, v in enumerate(names2)}
        return CheckOutcome(False, f"alpha side fails at {a}")
    return CheckOutcome(True)


def _eval_with_masks(phi: Formula, masks: Mapping[str, int], full: int) -> int:
    memo: dict[int, int] = {}

    def go(f: Formula) -> int:
        out = memo.get(id(f))
        if out is not None:
            return out
        if isinstance(f, Imp):
            out = (full ^ go(f.left)) | go(f.right)
        else:
            out = masks[f.name]
        memo[id(f)] = out
        return out

    return go(phi)


# ---------------------------------------------------------------------------
# file format: `id = VAR name` / `id = AND a,b` / `id = OR` / `root id`


def parse_circuit(text: str) -> MonotoneCircuit:
    gates: dict[str, Gate] = {}
    root: str | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("root "):
            root = line[5:].strip()
            continue
        gid, sep, body = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: unrecognized record {line!r}")
        gid = gid.strip()
        body = body.strip()
        kind, _, args = body.partition(" ")
        args = args.strip()
        if kind == "VAR":
            gates[gid] = ("var", args)
        elif kind in ("AND", "OR"):
            inputs = tuple(s.strip() for s in args.split(",") if s.strip())
            gates[gid] = (kind.lower(), inputs)
        else:
            raise ValueError(f"line {lineno}: unknown gate kind {kind!r}")
    if root is None:
        raise ValueError("missing root declaration")
    return MonotoneCircuit(gates, root)


def render_circuit(c: MonotoneCircuit) -> str:
    lines = []
    for gid in sorted(c.gates):
        g = c.gates[gid]
        if g[0] == "var":
            lines.append(f"{gid} = VAR {g[1]}")
        else:
            lines.append(f"{gid} = {g[0].upper()} {','.join(g[1])}".rstrip())
    lines.append(f"root {c.root}")
    return "\n".join(lines) + "\n"
