"""The clique-colouring tautology family and its interpolation bridge.

For n >= 2 and k = isqrt(n), alpha says that an n-vertex graph described
by the p variables admits no proper k-colouring certificate, beta says
the primed complement graph admits no (k+1)-clique certificate, and tau
combines them through a shared sink into a single implicational
tautology.  Multi-indexed blocks are enumerated in ascending
lexicographic order throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isqrt

from .circuits import Gate, MonotoneCircuit, edge_var, simplify
from .formula import Formula, FormulaSeq, fold_imp, imp, var
from .interp import InterpolationShape
from .semantics import DecisionResult, decide

__all__ = [
    "TautFamilyInstance",
    "build_tau",
    "validate_tau",
    "make_shape",
    "specialize_to_cc",
]


@dataclass(frozen=True)
class TautFamilyInstance:
    n: int
    k: int
    alpha: Formula
    beta: Formula
    tau: Formula
    p_vars: tuple[str, ...]   # p_i_j over (i,j), lexicographic
    pp_vars: tuple[str, ...]  # pp_i_j, same order
    q_vars: tuple[str, ...]   # q_i_l over (i,l)
    r_vars: tuple[str, ...]   # r_m_i over (m,i)


def build_tau(n: int) -> TautFamilyInstance:
    if n < 2:
        raise ValueError("n must be at least 2")
    k = isqrt(n)
    u, v, w = var("u"), var("v"), var("w")

    guards_a = [fold_imp(FormulaSeq.of(imp(var(f"q_{i}_{l}"), v) for l in range(k)), v)
                for i in range(n)]
    triples_a = [imp(var(f"q_{i}_{l}"),
                     imp(var(f"q_{j}_{l}"), imp(var(f"p_{i}_{j}"), v)))
                 for i in range(n) for j in range(n) for l in range(k)]
    alpha = fold_imp(FormulaSeq.of(guards_a),
                     fold_imp(FormulaSeq.of(triples_a), v))

    guards_b = [fold_imp(FormulaSeq.of(imp(var(f"r_{m}_{i}"), w) for i in range(n)), w)
                for m in range(k + 1)]
    triples_b = [imp(var(f"r_{l}_{i}"),
                     imp(var(f"r_{m}_{j}"), imp(var(f"pp_{i}_{j}"), w)))
                 for l in range(k + 1) for m in range(l + 1, k + 1)
                 for i in range(n) for j in range(n)]
    beta = fold_imp(FormulaSeq.of(guards_b),
                    fold_imp(FormulaSeq.of(triples_b), w))

    pairs = [imp(imp(var(f"p_{i}_{j}"), u), imp(imp(var(f"pp_{i}_{j}"), u), u))
             for i in range(n) for j in range(n)]
    tau = fold_imp(FormulaSeq.of(pairs),
                   imp(imp(alpha, u), imp(imp(beta, u), u)))

    return TautFamilyInstance(
        n=n, k=k, alpha=alpha, beta=beta, tau=tau,
        p_vars=tuple(f"p_{i}_{j}" for i in range(n) for j in range(n)),
        pp_vars=tuple(f"pp_{i}_{j}" for i in range(n) for j in range(n)),
        q_vars=tuple(f"q_{i}_{l}" for i in range(n) for l in range(k)),
        r_vars=tuple(f"r_{m}_{i}" for m in range(k + 1) for i in range(n)),
    )


def validate_tau(n: int, budget: int = 1_000_000,
                 tree_witness: bool = False) -> DecisionResult:
    """Decide the instance from no hypotheses; the witness feeds the pipeline."""
    inst = build_tau(n)
    return decide([], inst.tau, budget=budget, tree_witness=tree_witness)


def make_shape(inst: TautFamilyInstance) -> InterpolationShape:
    shape = InterpolationShape(
        n=inst.n * inst.n,
        p_vars=inst.p_vars,
        pp_vars=inst.pp_vars,
        q_vars=inst.q_vars,
        r_vars=inst.r_vars,
        u="u",
        alpha=inst.alpha,
        beta=inst.beta,
    )
    if shape.target() != inst.tau:
        raise RuntimeError("internal error: shape does not reconstruct tau")
    return shape


def specialize_to_cc(c: MonotoneCircuit, n: int) -> MonotoneCircuit:
    """Rename p_i_j inputs to unordered edge variables; kill the diagonal."""
    gates: dict[str, Gate] = {}
    for gid, g in c.gates.items():
        if g[0] != "var":
            gates[gid] = g
            continue
        parts = g[1].split("_")
        if len(parts) != 3 or parts[0] != "p":
            raise ValueError(f"stray circuit variable {g[1]!r}")
        i, j = int(parts[1]), int(parts[2])
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"variable index out of range in {g[1]!r}")
        if i == j:
            gates[gid] = ("or", ())
        else:
            gates[gid] = ("var", edge_var(i, j))
    return simplify(MonotoneCircuit(gates, c.root))
