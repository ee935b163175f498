"""Monotone circuits: evaluation, rewriting, fan-in bounding, separation."""

import itertools
import random

import pytest

from proofbench.circuits import (
    CliqueColouringPair,
    MonotoneCircuit,
    cc_membership,
    check_separates,
    circuit_false,
    circuit_true,
    classical_eval_all,
    constant_fold,
    edge_var,
    eval_circuit,
    eval_circuit_all,
    parse_circuit,
    prune,
    render_circuit,
    simplify,
    to_bounded_fanin,
)
from proofbench.formula import imp, var


def random_circuit(rng: random.Random, names, max_gates=12) -> MonotoneCircuit:
    gates = {f"v{i}": ("var", n) for i, n in enumerate(names)}
    ids = list(gates)
    for i in range(rng.randint(1, max_gates)):
        kind = rng.choice(("and", "or"))
        width = rng.randint(0, min(4, len(ids)))
        gates[f"g{i}"] = (kind, tuple(rng.sample(ids, width)))
        ids.append(f"g{i}")
    return MonotoneCircuit(gates, ids[-1])


class TestEvaluation:
    def test_and_or_var(self):
        c = MonotoneCircuit({"a": ("var", "x"), "b": ("var", "y"),
                             "g": ("and", ("a", "b")),
                             "h": ("or", ("a", "g"))}, "h")
        assert eval_circuit(c, {"x": 1, "y": 0})
        assert not eval_circuit(c, {"x": 0, "y": 1})

    def test_empty_and_is_true(self):
        assert eval_circuit(circuit_true(), {})

    def test_empty_or_is_false(self):
        assert not eval_circuit(circuit_false(), {})

    def test_monotone(self):
        rng = random.Random(31)
        names = ["x", "y", "z"]
        for _ in range(50):
            c = random_circuit(rng, names)
            for a in itertools.product((0, 1), repeat=3):
                for j in range(3):
                    if a[j]:
                        continue
                    b = list(a)
                    b[j] = 1
                    lo = eval_circuit(c, dict(zip(names, a)))
                    hi = eval_circuit(c, dict(zip(names, b)))
                    assert lo <= hi

    def test_eval_all_matches_pointwise(self):
        rng = random.Random(37)
        names = ["x", "y", "z"]
        for _ in range(30):
            c = random_circuit(rng, names)
            table = eval_circuit_all(c, names)
            for idx in range(8):
                a = {n: (idx >> j) & 1 for j, n in enumerate(names)}
                assert bool((table >> idx) & 1) == eval_circuit(c, a)

    def test_classical_eval_all(self):
        p, q = var("p"), var("q")
        table = classical_eval_all(imp(p, q), ["p", "q"])
        # false only where p=1, q=0, i.e. assignment index 1
        assert table == 0b1101

    def test_classical_eval_all_fixed(self):
        p, q = var("p"), var("q")
        assert classical_eval_all(imp(p, q), ["p"], {"q": 1}) == 0b11
        assert classical_eval_all(imp(p, q), ["p"], {"q": 0}) == 0b01

    def test_cycle_rejected(self):
        with pytest.raises(ValueError):
            MonotoneCircuit({"a": ("and", ("b",)), "b": ("or", ("a",))}, "a")

    def test_unknown_input_rejected(self):
        with pytest.raises(ValueError):
            MonotoneCircuit({"a": ("and", ("zz",))}, "a")


class TestMetrics:
    def test_size_counts_wires(self):
        c = MonotoneCircuit({"a": ("var", "x"), "b": ("var", "y"),
                             "g": ("and", ("a", "b")),
                             "h": ("or", ("g", "a", "b"))}, "h")
        assert c.size == 5
        assert c.num_gates == 4
        assert c.max_fanin() == 3
        assert c.variables() == {"x", "y"}


class TestRewrites:
    NAMES = ["x", "y", "z"]

    def check_same_function(self, c1, c2):
        assert eval_circuit_all(c1, self.NAMES) == eval_circuit_all(c2, self.NAMES)

    def test_prune_drops_unreachable(self):
        c = MonotoneCircuit({"a": ("var", "x"), "dead": ("and", ()),
                             "g": ("or", ("a",))}, "g")
        out = prune(c)
        assert "dead" not in out.gates
        self.check_same_function(c, out)

    def test_constant_fold_absorbs(self):
        c = MonotoneCircuit({"a": ("var", "x"), "t": ("and", ()),
                             "g": ("or", ("a", "t"))}, "g")
        out = constant_fold(c)
        assert eval_circuit(out, {"x": 0})
        assert out.num_gates == 1

    def test_rewrites_preserve_function(self):
        rng = random.Random(41)
        for _ in range(100):
            c = random_circuit(rng, self.NAMES)
            for rw in (prune, constant_fold, simplify, to_bounded_fanin):
                self.check_same_function(c, rw(c))

    def test_simplify_collapses_ladders(self):
        gates = {"v": ("var", "x")}
        prev = "v"
        for i in range(6):
            gates[f"o{i}"] = ("or", (prev, "v"))
            prev = f"o{i}"
        out = simplify(MonotoneCircuit(gates, prev))
        assert out.num_gates == 1

    def test_simplify_never_grows(self):
        rng = random.Random(43)
        for _ in range(50):
            c = random_circuit(rng, self.NAMES)
            assert simplify(c).size <= c.size


class TestBoundedFanin:
    def test_exhaustive_equivalence(self):
        names = [f"x{i}" for i in range(14)]
        gates = {f"v{i}": ("var", n) for i, n in enumerate(names)}
        gates["wide_and"] = ("and", tuple(f"v{i}" for i in range(7)))
        gates["wide_or"] = ("or", tuple(f"v{i}" for i in range(7, 14)))
        gates["top"] = ("or", ("wide_and", "wide_or"))
        c = MonotoneCircuit(gates, "top")
        b = to_bounded_fanin(c)
        assert b.max_fanin() <= 2
        assert eval_circuit_all(b, names) == eval_circuit_all(c, names)

    def test_wire_bound(self):
        rng = random.Random(47)
        for _ in range(100):
            c = random_circuit(rng, ["x", "y", "z", "w"])
            b = to_bounded_fanin(c)
            assert b.max_fanin() <= 2
            assert b.size <= 2 * c.size

    def test_small_gates_untouched(self):
        c = MonotoneCircuit({"a": ("var", "x"), "g": ("or", ("a",))}, "g")
        assert to_bounded_fanin(c).gates == c.gates


class TestCliqueColouring:
    def test_pair_parameters(self):
        pair = CliqueColouringPair(4)
        assert pair.k == 2
        assert len(pair.variables) == 6
        assert pair.variables[0] == "e_0_1"

    def test_edge_var_normalizes(self):
        assert edge_var(3, 1) == "e_1_3"
        with pytest.raises(ValueError):
            edge_var(2, 2)

    def test_membership_examples(self):
        # triangle on 4 vertices with k = 2: not 2-colourable, has a 3-clique
        tri = [frozenset((0, 1)), frozenset((1, 2)), frozenset((0, 2))]
        assert not cc_membership(4, tri, 0)
        assert cc_membership(4, tri, 1)
        # a single edge is 2-colourable and clique-free
        one = [frozenset((0, 1))]
        assert cc_membership(4, one, 0)
        assert not cc_membership(4, one, 1)

    def test_sides_disjoint(self):
        pairs = list(itertools.combinations(range(4), 2))
        for idx in range(1 << len(pairs)):
            edges = [frozenset(pairs[b]) for b in range(len(pairs))
                     if (idx >> b) & 1]
            assert not (cc_membership(4, edges, 0) and cc_membership(4, edges, 1))

    def test_brute_force_bound(self):
        with pytest.raises(ValueError):
            cc_membership(9, [], 0)


class TestCheckSeparates:
    def test_n2_edge_variable(self):
        # with n = 2 and k = 1, any edge is already a 2-clique and only the
        # empty graph is 1-colourable, so the single edge variable separates
        c = MonotoneCircuit({"a": ("var", "e_0_1")}, "a")
        assert check_separates(c, 2)

    def test_n2_constant_fails(self):
        out = check_separates(circuit_true(), 2)
        assert not out and "accepted" in out.detail

    def test_stray_variable(self):
        c = MonotoneCircuit({"a": ("var", "bogus")}, "a")
        assert not check_separates(c, 2)

    def test_n4_hand_built(self):
        # accept iff some triangle is present: sound for k = 2
        pairs = list(itertools.combinations(range(4), 2))
        gates = {f"v_{i}_{j}": ("var", edge_var(i, j)) for i, j in pairs}
        tri_ids = []
        for a, b, c in itertools.combinations(range(4), 3):
            gid = f"t{a}{b}{c}"
            gates[gid] = ("and", (f"v_{a}_{b}", f"v_{a}_{c}", f"v_{b}_{c}"))
            tri_ids.append(gid)
        gates["top"] = ("or", tuple(tri_ids))
        out = check_separates(MonotoneCircuit(gates, "top"), 4)
        # colourable graphs have no triangle; clique graphs contain one
        assert out


class TestIo:
    def test_round_trip(self):
        rng = random.Random(53)
        for _ in range(25):
            c = random_circuit(rng, ["x", "y"])
            c2 = parse_circuit(render_circuit(c))
            assert c2.gates == c.gates and c2.root == c.root

    def test_comments_and_blanks(self):
        c = parse_circuit("# a comment\n\na = VAR x\ng = OR a\nroot g\n")
        assert c.gates["g"] == ("or", ("a",))

    def test_missing_root(self):
        with pytest.raises(ValueError):
            parse_circuit("a = VAR x\n")

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            parse_circuit("a = XOR b,c\nroot a\n")
