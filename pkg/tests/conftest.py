"""Shared generators for random proofs and formulas."""

import random

from proofbench.formula import Formula, Imp, imp, var
from proofbench.natded import NmDerivation

VARS = tuple(var(n) for n in "pqrs")


def random_formula(rng: random.Random, depth: int = 2) -> Formula:
    if depth == 0 or rng.random() < 0.5:
        return rng.choice(VARS)
    return imp(random_formula(rng, depth - 1), random_formula(rng, depth - 1))


def random_nm_dag(rng: random.Random, max_nodes: int = 10) -> NmDerivation:
    """Well-formed dag grown bottom-up, pruned to the last node as root."""
    labels: dict[str, Formula] = {}
    premises: dict[str, tuple[str, ...]] = {}
    order: list[str] = []

    def add(f: Formula, ps: tuple[str, ...]) -> str:
        nid = f"n{len(order)}"
        labels[nid] = f
        premises[nid] = ps
        order.append(nid)
        return nid

    add(random_formula(rng), ())
    while len(order) < max_nodes:
        roll = rng.random()
        if roll < 0.3:
            add(random_formula(rng), ())
        elif roll < 0.65:
            u = rng.choice(order)
            add(imp(random_formula(rng, 1), labels[u]), (u,))
        else:
            pairs = [(a, b) for a in order for b in order
                     if isinstance(labels[b], Imp)
                     and labels[b].left == labels[a]]
            if not pairs:
                continue
            a, b = rng.choice(pairs)
            add(labels[b].right, (a, b))
    root = order[-1]
    keep: set[str] = set()
    work = [root]
    while work:
        v = work.pop()
        if v in keep:
            continue
        keep.add(v)
        work.extend(premises[v])
    return NmDerivation({v: labels[v] for v in keep},
                        {v: premises[v] for v in keep}, root)
