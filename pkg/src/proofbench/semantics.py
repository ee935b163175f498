"""Semantic ground truth: Kripke forcing, classical evaluation, decision.

The decision procedure is a contraction-free backward sequent search for
the implicational fragment.  Valid goals come back with a natural
deduction witness assembled from hash-consed proof terms; invalid goals
come back with a finite countermodel built by gluing the countermodels
of the failed branch premises under a fresh root.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .formula import Formula, Imp, Var, formula_vars, imp, parse_formula, var
from .natded import BudgetExceeded, NmDerivation, unravel

__all__ = [
    "KripkeModel",
    "DecisionResult",
    "forces",
    "holds",
    "classical_eval",
    "decide",
    "enumerate_posets",
    "enumerate_models",
    "parse_kripke",
    "render_kripke",
]


class KripkeModel:
    """Finite partial order of worlds with a persistent valuation.

    The supplied order pairs are closed reflexively and transitively;
    antisymmetry and persistence are verified at construction.
    """

    def __init__(self, worlds: Iterable[str],
                 order: Iterable[tuple[str, str]],
                 valuation: Mapping[str, Iterable[str]]):
        self.worlds = tuple(sorted(set(worlds)))
        wset = set(self.worlds)
        le: set[tuple[str, str]] = {(w, w) for w in self.worlds}
        for a, b in order:
            if a not in wset or b not in wset:
                raise ValueError(f"order pair over unknown world ({a!r},{b!r})")
            le.add((a, b))
        changed = True
        while changed:
            changed = False
            for a, b in list(le):
                for c in self.worlds:
                    if (b, c) in le and (a, c) not in le:
                        le.add((a, c))
                        changed = True
        for a, b in le:
            if a != b and (b, a) in le:
                raise ValueError(f"order is not antisymmetric on ({a!r},{b!r})")
        self.le = frozenset(le)
        self.val = {w: frozenset(valuation.get(w, ())) for w in self.worlds}
        for a, b in self.le:
            if not self.val[a] <= self.val[b]:
                raise ValueError(f"valuation not persistent along ({a!r},{b!r})")
        self.up = {w: tuple(y for y in self.worlds if (w, y) in self.le)
                   for w in self.worlds}
        self._forces: dict[tuple[str, int], bool] = {}


def forces(model: KripkeModel, w: str, phi: Formula) -> bool:
    """Kripke forcing at a world; memoized on the model."""
    if w not in model.val:
        raise KeyError(f"unknown world {w!r}")
    memo = model._forces
    key = (w, id(phi))
    out = memo.get(key)
    if out is not None:
        return out
    if isinstance(phi, Var):
        out = phi.name in model.val[w]
    else:
        out = all(not forces(model, y, phi.left) or forces(model, y, phi.right)
                  for y in model.up[w])
    memo[key] = out
    return out


def holds(model: KripkeModel, phi: Formula) -> bool:
    return all(forces(model, w, phi) for w in model.worlds)


def classical_eval(a: Mapping[str, int | bool], phi: Formula) -> bool:
    """Two-valued evaluation; raises KeyError on an unbound variable."""
    while isinstance(phi, Imp):
        if not classical_eval(a, phi.left):
            return True
        phi = phi.right
    return bool(a[phi.name])


@dataclass(frozen=True)
class DecisionResult:
    verdict: str  # "valid" | "invalid"
    witness: NmDerivation | None = None
    countermodel: KripkeModel | None = None
    world: str | None = None

    @property
    def valid(self) -> bool:
        return self.verdict == "valid"


# ---------------------------------------------------------------------------
# proof terms: hash-consed, converted to a derivation only at the end

class _Wit:
    __slots__ = ("kind", "phi", "minor", "major", "concl")

    def __init__(self, kind: int, phi: Formula | None,
                 minor: "_Wit | None", major: "_Wit | None", concl: Formula):
        self.kind = kind  # 0 leaf, 1 intro, 2 elim
        self.phi = phi
        self.minor = minor
        self.major = major
        self.concl = concl


def _sort_key(f: Formula) -> tuple[int, int]:
    return (f._size, f._hash)


class _Decider:
    def __init__(self, budget: int):
        self.budget = budget
        self.states = 0
        self.memo: dict[tuple[frozenset[Formula], Formula], tuple] = {}
        self.wcache: dict[tuple, _Wit] = {}
        self.world_counter = itertools.count()

    # -- proof term constructors -------------------------------------------

    def wleaf(self, phi: Formula) -> _Wit:
        key = (0, id(phi))
        w = self.wcache.get(key)
        if w is None:
            w = self.wcache[key] = _Wit(0, phi, None, None, phi)
        return w

    def wintro(self, phi: Imp, sub: _Wit) -> _Wit:
        key = (1, id(phi), id(sub))
        w = self.wcache.get(key)
        if w is None:
            w = self.wcache[key] = _Wit(1, phi, sub, None, phi)
        return w

    def welim(self, minor: _Wit, major: _Wit) -> _Wit:
        key = (2, id(minor), id(major))
        w = self.wcache.get(key)
        if w is None:
            g = major.concl
            assert isinstance(g, Imp) and g.left == minor.concl
            w = self.wcache[key] = _Wit(2, None, minor, major, g.right)
        return w

    def wsubst(self, w: _Wit, target: Formula, rep: _Wit) -> _Wit:
        """Replace every leaf labelled target by rep (dag substitution)."""
        memo: dict[int, _Wit] = {}

        def go(x: _Wit) -> _Wit:
            out = memo.get(id(x))
            if out is not None:
                return out
            if x.kind == 0:
                out = rep if x.phi == target else x
            elif x.kind == 1:
                sub = go(x.minor)
                out = x if sub is x.minor else self.wintro(x.phi, sub)
            else:
                a, b = go(x.minor), go(x.major)
                out = x if a is x.minor and b is x.major else self.welim(a, b)
            memo[id(x)] = out
            return out

        return go(w)

    # -- search ------------------------------------------------------------

    def solve(self, gamma: frozenset[Formula], goal: Formula) -> tuple:
        """Returns ("valid", _Wit) or ("invalid", cm) with cm a raw model.

        Raw countermodels are (val: dict world -> frozenset of names,
        pairs: set of (below, above), root).
        """
        key = (gamma, goal)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.states += 1
        if self.states > self.budget:
            raise BudgetExceeded("decision search budget exhausted")

        # saturation: invertible steps, recorded for witness reassembly
        steps: list[tuple] = []
        g = gamma
        while isinstance(goal, Imp):
            steps.append(("intro", goal))
            g = g | {goal.left}
            goal = goal.right
        result = None
        while True:
            if goal in g:
                result = ("valid", self.wleaf(goal))
                break
            atoms = {f.name for f in g if isinstance(f, Var)}
            hit_l0 = None
            for f in sorted(g, key=_sort_key):
                if isinstance(f, Imp) and isinstance(f.left, Var) \
                        and f.left.name in atoms:
                    hit_l0 = f
                    break
            if hit_l0 is None:
                break
            steps.append(("detach", hit_l0))
            g = (g - {hit_l0}) | {hit_l0.right}
        if result is None:
            result = self._branch(g, goal)
        # fold the saturation steps back into the result
        if result[0] == "valid":
            w = result[1]
            for step in reversed(steps):
                if step[0] == "intro":
                    w = self.wintro(step[1], w)
                else:
                    f = step[1]
                    w = self.wsubst(w, f.right,
                                    self.welim(self.wleaf(f.left), self.wleaf(f)))
            result = ("valid", w)
        value = self.memo[key] = result
        return value

    def _branch(self, gamma: frozenset[Formula], goal: Var) -> tuple:
        """Irreducible-core branching on nested-implication hypotheses."""
        failed: list[tuple] = []
        for chi in sorted(gamma, key=_sort_key):
            if not (isinstance(chi, Imp) and isinstance(chi.left, Imp)):
                continue
            ab, psi = chi.left, chi.right
            alpha, beta = ab.left, ab.right
            rest = gamma - {chi}
            r1 = self.solve(rest | {imp(beta, psi), alpha}, beta)
            if r1[0] != "valid":
                failed.append(r1[1])
                continue
            r2 = self.solve(rest | {psi}, goal)
            if r2[0] != "valid":
                # psi is forced everywhere above r2's root, hence chi is too
                return r2
            # beta -> psi from chi alone, via a vacuous discharge of alpha
            bp = self.wintro(imp(beta, psi),
                             self.welim(self.wintro(ab, self.wleaf(beta)),
                                        self.wleaf(chi)))
            d1 = self.wsubst(r1[1], imp(beta, psi), bp)
            w_psi = self.welim(self.wintro(ab, d1), self.wleaf(chi))
            return ("valid", self.wsubst(r2[1], psi, w_psi))
        # glue a fresh root below every failed first-premise countermodel
        root = f"x{next(self.world_counter)}"
        val = {root: frozenset(f.name for f in gamma if isinstance(f, Var))}
        pairs: set[tuple[str, str]] = set()
        for cval, cpairs, croot in failed:
            rename = {w: f"x{next(self.world_counter)}" for w in cval}
            for w, names in cval.items():
                val[rename[w]] = names
            pairs.update((rename[a], rename[b]) for a, b in cpairs)
            pairs.update((root, rename[w]) for w in cval)
        return ("invalid", (val, pairs, root))

    # -- output conversion -------------------------------------------------

    def to_derivation(self, w: _Wit) -> NmDerivation:
        ids: dict[int, str] = {}
        labels: dict[str, Formula] = {}
        premises: dict[str, tuple[str, ...]] = {}
        counter = itertools.count()
        stack: list[tuple[_Wit, bool]] = [(w, False)]
        while stack:
            x, ready = stack.pop()
            if id(x) in ids and not ready:
                continue
            if not ready:
                stack.append((x, True))
                if x.kind == 1:
                    stack.append((x.minor, False))
                elif x.kind == 2:
                    stack.append((x.major, False))
                    stack.append((x.minor, False))
                continue
            if id(x) in ids:
                continue
            nid = f"n{next(counter)}"
            ids[id(x)] = nid
            labels[nid] = x.concl
            if x.kind == 0:
                premises[nid] = ()
            elif x.kind == 1:
                premises[nid] = (ids[id(x.minor)],)
            else:
                premises[nid] = (ids[id(x.minor)], ids[id(x.major)])
        return NmDerivation(labels, premises, ids[id(w)])


def decide(gamma: Iterable[Formula], phi: Formula,
           budget: int = 1_000_000, tree_witness: bool = True) -> DecisionResult:
    """Sound and complete decision for the implicational fragment.

    Valid goals carry a derivation witness (a tree unless tree_witness is
    false, in which case shared subproofs are kept as a dag); invalid
    goals carry a countermodel and a designated world refuting the
    sequent.  Budget exhaustion raises, and is never reported as invalid.
    """
    gamma = frozenset(gamma)
    limit = sys.getrecursionlimit()
    if limit < 100_000:
        sys.setrecursionlimit(100_000)
    try:
        dec = _Decider(budget)
        kind, payload = dec.solve(gamma, phi)
    finally:
        sys.setrecursionlimit(limit)
    if kind == "valid":
        d = dec.to_derivation(payload)
        if tree_witness:
            d = unravel(d, budget=max(budget, 1_000_000))
        return DecisionResult("valid", witness=d)
    val, pairs, root = payload
    model = KripkeModel(val.keys(), pairs, val)
    for f in gamma:
        if not forces(model, root, f):
            raise RuntimeError("internal error: countermodel rejects a hypothesis")
    if forces(model, root, phi):
        raise RuntimeError("internal error: countermodel forces the goal")
    return DecisionResult("invalid", countermodel=model, world=root)


# ---------------------------------------------------------------------------
# exhaustive model enumeration (oracle duty)


def enumerate_posets(n: int) -> list[tuple[tuple[str, ...], frozenset[tuple[int, int]]]]:
    """All partial orders on n labelled worlds, one per isomorphism class.

    Returned as (world names, strict pairs by index).  Intended for small
    n only; the filtering is brute force over all pair subsets.
    """
    worlds = tuple(f"w{i}" for i in range(n))
    pairs_all = [(i, j) for i in range(n) for j in range(n) if i != j]
    perms = list(itertools.permutations(range(n)))
    seen: set[tuple[tuple[int, int], ...]] = set()
    out = []
    for bits in itertools.product((0, 1), repeat=len(pairs_all)):
        rel = frozenset(p for p, b in zip(pairs_all, bits) if b)
        ok = all((a, c) in rel
                 for a, b in rel for b2, c in rel
                 if b == b2 and a != c) and \
            not any((b, a) in rel for a, b in rel)
        if not ok:
            continue
        canon = min(tuple(sorted((pi[a], pi[b]) for a, b in rel))
                    for pi in perms)
        if canon in seen:
            continue
        seen.add(canon)
        out.append((worlds, rel))
    return out


def enumerate_models(n_worlds: int, variables: Iterable[str]) -> Iterator[KripkeModel]:
    """Every model (up to order isomorphism) with at most n_worlds worlds."""
    names = sorted(variables)
    for n in range(1, n_worlds + 1):
        for worlds, rel in enumerate_posets(n):
            upsets = []
            for bits in itertools.product((0, 1), repeat=n):
                s = frozenset(i for i in range(n) if bits[i])
                if all(b in s for a, b in rel if a in s):
                    upsets.append(s)
            for choice in itertools.product(upsets, repeat=len(names)):
                valuation = {worlds[i]: [v for v, s in zip(names, choice) if i in s]
                             for i in range(n)}
                yield KripkeModel(worlds,
                                  [(worlds[a], worlds[b]) for a, b in rel],
                                  valuation)


# ---------------------------------------------------------------------------
# serialization


def render_kripke(model: KripkeModel) -> str:
    lines = [f"world {w} : {' '.join(sorted(model.val[w]))}".rstrip()
             for w in model.worlds]
    for a, b in sorted(model.le):
        if a != b:
            lines.append(f"order {a} <= {b}")
    return "\n".join(lines) + "\n"


def parse_kripke(text: str) -> KripkeModel:
    worlds: list[str] = []
    order: list[tuple[str, str]] = []
    valuation: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("world "):
            head, _, names = line[6:].partition(":")
            w = head.strip()
            worlds.append(w)
            valuation[w] = names.split()
        elif line.startswith("order "):
            a, sep, b = line[6:].partition("<=")
            if not sep:
                raise ValueError(f"line {lineno}: malformed order record")
            order.append((a.strip(), b.strip()))
        else:
            raise ValueError(f"line {lineno}: unrecognized record {line!r}")
    return KripkeModel(worlds, order, valuation)
