"""Implicational formulas: construction, parsing, printing, folds.

The only connective is a right-associative arrow.  Formulas are interned
so that equality checks are usually pointer comparisons, and every
formula carries a deterministic structural hash (no dependence on
PYTHONHASHSEED), which keeps set iteration orders reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

__all__ = [
    "Formula",
    "Var",
    "Imp",
    "var",
    "imp",
    "TOP",
    "TOP_NAME",
    "formula_size",
    "formula_vars",
    "parse_formula",
    "render_formula",
    "FormulaSyntaxError",
    "FormulaSeq",
    "Substitution",
    "apply_subst",
    "fold_imp",
    "ret_build",
    "ret_hat",
    "ret_join",
]

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = (1 << 63) - 1


def _fnv(data: Iterable[int]) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return h


class Formula:
    """Base class; instances are Var or Imp, immutable after creation."""

    __slots__ = ("_hash", "_size")

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Formula({render_formula(self)!r})"

    def __str__(self) -> str:
        return render_formula(self)


class Var(Formula):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._hash = _fnv(name.encode())
        self._size = 1

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        return isinstance(other, Var) and other.name == self.name

    __hash__ = Formula.__hash__


class Imp(Formula):
    __slots__ = ("left", "right")

    def __init__(self, left: Formula, right: Formula):
        self.left = left
        self.right = right
        self._hash = _fnv((0x1D, left._hash & 0xFF, (left._hash >> 8) & 0xFFFFFFFF,
                           right._hash & 0xFF, (right._hash >> 8) & 0xFFFFFFFF,
                           left._hash >> 40, right._hash >> 40))
        self._size = 1 + left._size + right._size

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Imp) or other._hash != self._hash:
            return False
        # iterative right-spine walk; left subtrees compared recursively
        a: Formula = self
        b: Formula = other
        while isinstance(a, Imp):
            if not isinstance(b, Imp) or a is b:
                return a is b
            if a.left != b.left:
                return False
            a, b = a.right, b.right
        return a == b

    __hash__ = Formula.__hash__


_var_cache: dict[str, Var] = {}
_imp_cache: dict[tuple[int, int], Imp] = {}


def var(name: str) -> Var:
    """Interned variable constructor."""
    f = _var_cache.get(name)
    if f is None:
        f = _var_cache[name] = Var(name)
    return f


def imp(left: Formula, right: Formula) -> Imp:
    """Interned implication constructor."""
    key = (id(left), id(right))
    f = _imp_cache.get(key)
    if f is None:
        f = _imp_cache[key] = Imp(left, right)
    return f


#: Reserved variable name; user input may not use it (it anchors TOP).
TOP_NAME = "_t"

#: The designated closed tautology standing in for "true".
TOP = imp(var(TOP_NAME), var(TOP_NAME))


def formula_size(phi: Formula) -> int:
    """Number of variable and connective occurrences."""
    return phi._size


def formula_vars(phi: Formula) -> frozenset[str]:
    """Set of variable names occurring in the formula."""
    names: set[str] = set()
    stack = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, Var):
            names.add(f.name)
        else:
            stack.append(f.left)
            stack.append(f.right)
    return frozenset(names)


# ---------------------------------------------------------------------------
# parsing / printing
#
# formula := atom | atom "->" formula
# atom    := IDENT | "(" formula ")"

_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | set("0123456789'")


class FormulaSyntaxError(ValueError):
    """Malformed formula text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c in _IDENT_START:
            j = i + 1
            while j < n and text[j] in _IDENT_CONT:
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
        elif c == "(":
            tokens.append(("lpar", c, i))
            i += 1
        elif c == ")":
            tokens.append(("rpar", c, i))
            i += 1
        elif text.startswith("->", i):
            tokens.append(("arrow", "->", i))
            i += 2
        else:
            raise FormulaSyntaxError(f"unexpected character {c!r}", i)
    return tokens


def parse_formula(text: str) -> Formula:
    """Parse formula text; `->` associates to the right."""
    tokens = _tokenize(text)
    pos = 0

    def parse_atom() -> Formula:
        nonlocal pos
        if pos >= len(tokens):
            raise FormulaSyntaxError("unexpected end of input", len(text))
        kind, value, at = tokens[pos]
        if kind == "ident":
            pos += 1
            return var(value)
        if kind == "lpar":
            pos += 1
            f = parse_imp()
            if pos >= len(tokens) or tokens[pos][0] != "rpar":
                raise FormulaSyntaxError("missing closing bracket", at)
            pos += 1
            return f
        raise FormulaSyntaxError(f"unexpected token {value!r}", at)

    def parse_imp() -> Formula:
        nonlocal pos
        atoms = [parse_atom()]
        while pos < len(tokens) and tokens[pos][0] == "arrow":
            pos += 1
            atoms.append(parse_atom())
        f = atoms[-1]
        for g in reversed(atoms[:-1]):
            f = imp(g, f)
        return f

    f = parse_imp()
    if pos != len(tokens):
        raise FormulaSyntaxError(f"trailing input {tokens[pos][1]!r}", tokens[pos][2])
    return f


def render_formula(phi: Formula) -> str:
    """Canonical rendering with minimal brackets under right associativity."""
    parts: list[str] = []
    # stack entries: (formula, needs_parens)
    stack: list[tuple[Formula, bool] | str] = [(phi, False)]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            parts.append(item)
            continue
        f, bracket = item
        if isinstance(f, Var):
            parts.append(f.name)
        else:
            if bracket:
                parts.append("(")
                stack.append(")")
            stack.append((f.right, False))
            stack.append(" -> ")
            stack.append((f.left, isinstance(f.left, Imp)))
    return "".join(parts)


# ---------------------------------------------------------------------------
# indexed sequences and folds


@dataclass(frozen=True)
class FormulaSeq:
    """Finite formula sequence indexed by a strictly increasing integer set."""

    entries: tuple[tuple[int, Formula], ...]

    def __post_init__(self):
        indices = [i for i, _ in self.entries]
        if any(i < 0 for i in indices):
            raise ValueError("indices must be nonnegative")
        if any(a >= b for a, b in zip(indices, indices[1:])):
            raise ValueError("indices must be strictly increasing")

    @classmethod
    def of(cls, formulas: Iterable[Formula]) -> "FormulaSeq":
        """Plain sequence indexed 0..n-1."""
        return cls(tuple(enumerate(formulas)))

    @classmethod
    def indexed(cls, pairs: Iterable[tuple[int, Formula]]) -> "FormulaSeq":
        return cls(tuple(sorted(pairs, key=lambda p: p[0])))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[int, Formula]]:
        return iter(self.entries)

    @property
    def formulas(self) -> tuple[Formula, ...]:
        return tuple(f for _, f in self.entries)

    @property
    def dom(self) -> frozenset[int]:
        return frozenset(i for i, _ in self.entries)

    @property
    def total_size(self) -> int:
        return sum(formula_size(f) for _, f in self.entries)

    def restrict(self, keep: Iterable[int]) -> "FormulaSeq":
        keep = set(keep)
        return FormulaSeq(tuple((i, f) for i, f in self.entries if i in keep))

    def shift(self, offset: int) -> "FormulaSeq":
        return FormulaSeq(tuple((i + offset, f) for i, f in self.entries))

    def reindex(self) -> "FormulaSeq":
        """Same formulas re-indexed densely from 0."""
        return FormulaSeq.of(self.formulas)

    def concat(self, other: "FormulaSeq") -> "FormulaSeq":
        """Concatenation, reindexed densely (self first, then other)."""
        return FormulaSeq.of(self.formulas + other.formulas)

    def is_subseq_of(self, other: "FormulaSeq") -> bool:
        table = dict(other.entries)
        return all(table.get(i) == f for i, f in self.entries)


def fold_imp(gamma: FormulaSeq | Iterable[Formula], psi: Formula) -> Formula:
    """Nested implication with the maximum-index entry outermost."""
    if not isinstance(gamma, FormulaSeq):
        gamma = FormulaSeq.of(gamma)
    f = psi
    for _, g in gamma.entries:
        f = imp(g, f)
    return f


Substitution = Mapping[str, Formula]


def apply_subst(sigma: Substitution, phi: Formula) -> Formula:
    """Homomorphic extension of a variable-to-formula map."""
    memo: dict[int, Formula] = {}

    def go(f: Formula) -> Formula:
        out = memo.get(id(f))
        if out is not None:
            return out
        if isinstance(f, Var):
            out = sigma.get(f.name, f)
        else:
            out = imp(go(f.left), go(f.right))
        memo[id(f)] = out
        return out

    return go(phi)


# ---------------------------------------------------------------------------
# conjunction emulation relative to a fixed formula


def ret_hat(alpha: Formula, phi: Formula) -> Formula:
    """(alpha -> phi) -> phi."""
    return imp(imp(alpha, phi), phi)


def ret_join(a: Formula, b: Formula, phi: Formula) -> Formula:
    """(a -> b -> phi) -> phi, the pairing of two phi-relative values."""
    return imp(imp(a, imp(b, phi)), phi)


def ret_build(phi: Formula, gamma: FormulaSeq, m: int) -> Formula:
    """Balanced relative-conjunction of an indexed sequence.

    Empty input yields TOP; a singleton yields the hat form; otherwise the
    sequence is split at the largest power of two not exceeding its top
    index, so that index sets contained in an upper half-interval produce
    the same formula as their downward shift.
    """
    if m < 1:
        raise ValueError("ambient bound m must be at least 1")
    if gamma.entries and max(gamma.dom) >= m:
        raise ValueError("sequence indices must lie below m")

    def go(items: tuple[tuple[int, Formula], ...]) -> Formula:
        if not items:
            return TOP
        if len(items) == 1:
            return ret_hat(items[0][1], phi)
        hi = items[-1][0]
        split = 1 << (hi.bit_length() - 1)
        low = tuple(p for p in items if p[0] < split)
        high = tuple((i - split, f) for i, f in items if i >= split)
        if not low:
            return go(high)
        return ret_join(go(low), go(high), phi)

    return go(gamma.entries)
