"""Command-line interface: exit codes, artifacts, determinism."""

import pytest

from proofbench import cli
from proofbench.circuits import parse_circuit
from proofbench.formula import parse_formula
from proofbench.frege import check_frege_dag, parse_frege_dag
from proofbench.natded import check_nm, parse_nm

HARD_GOAL = " -> ".join(["(((a -> b) -> c) -> d)"] * 6 + ["d"])


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestUsage:
    def test_no_command(self, capsys):
        code, _, _ = run(capsys, )
        assert code == cli.USAGE

    def test_unknown_command(self, capsys):
        code, _, _ = run(capsys, "frobnicate")
        assert code == cli.USAGE

    def test_bad_goal_formula(self, capsys):
        code, _, err = run(capsys, "decide", "--goal", "p ->")
        assert code == cli.USAGE
        assert "error" in err

    def test_missing_proof_file(self, capsys):
        code, _, _ = run(capsys, "check", "--system", "nm",
                         "--proof", "/nonexistent.nm", "--goal", "p")
        assert code == cli.USAGE


class TestGen:
    def test_tau_to_stdout(self, capsys):
        code, out, err = run(capsys, "gen", "tau", "--n", "2")
        assert code == cli.PASS
        assert parse_formula(out.strip()) is not None
        assert "size=145" in err

    def test_tau_to_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "gen", "tau", "--n", "2",
                         "--out", str(tmp_path))
        assert code == cli.PASS
        assert (tmp_path / "tau_2.txt").exists()

    def test_cc_metadata(self, capsys):
        code, out, _ = run(capsys, "gen", "cc", "--n", "4")
        assert code == cli.PASS
        assert "k=2" in out and "edge_vars=6" in out

    def test_n_too_small(self, capsys):
        code, _, _ = run(capsys, "gen", "tau", "--n", "1")
        assert code == cli.USAGE


class TestDecide:
    def test_valid_writes_witness(self, capsys, tmp_path):
        code, out, _ = run(capsys, "decide", "--goal", "p -> p",
                           "--out", str(tmp_path))
        assert code == cli.PASS
        assert "verdict\tvalid" in out
        assert "seed\t0" in out
        w = parse_nm((tmp_path / "witness.nm").read_text())
        assert check_nm(w, [], parse_formula("p -> p"))

    def test_invalid_prints_countermodel(self, capsys):
        code, out, _ = run(capsys, "decide", "--goal", "((p -> q) -> p) -> p")
        assert code == cli.REJECT
        assert "world\t" in out

    def test_assumptions(self, capsys, tmp_path):
        hyps = tmp_path / "hyps.txt"
        hyps.write_text("p\np -> q\n")
        code, out, _ = run(capsys, "decide", "--goal", "q",
                           "--assumptions", str(hyps))
        assert code == cli.PASS

    def test_budget(self, capsys):
        code, out, _ = run(capsys, "decide", "--goal", HARD_GOAL,
                           "--budget-nodes", "1")
        assert code == cli.BUDGET

    def test_deterministic(self, capsys):
        runs = [run(capsys, "decide", "--goal", "p -> q -> p")[1]
                for _ in range(2)]
        assert runs[0] == runs[1]


class TestCheckAndMetrics:
    @pytest.fixture
    def witness_file(self, capsys, tmp_path):
        run(capsys, "decide", "--goal", "p -> q -> p", "--out", str(tmp_path))
        capsys.readouterr()
        return tmp_path / "witness.nm"

    def test_check_accepts(self, capsys, witness_file):
        code, out, _ = run(capsys, "check", "--system", "nm",
                           "--proof", str(witness_file),
                           "--goal", "p -> q -> p")
        assert code == cli.PASS and "accepted" in out

    def test_check_rejects_wrong_goal(self, capsys, witness_file):
        code, out, _ = run(capsys, "check", "--system", "nm",
                           "--proof", str(witness_file), "--goal", "p -> p")
        assert code == cli.REJECT and "rejected" in out

    def test_check_garbage_file(self, capsys, tmp_path):
        bad = tmp_path / "bad.nm"
        bad.write_text("not a proof\n")
        code, _, _ = run(capsys, "check", "--system", "nm",
                         "--proof", str(bad), "--goal", "p")
        assert code == cli.USAGE

    def test_metrics(self, capsys, witness_file):
        code, out, _ = run(capsys, "metrics", "--system", "nm",
                           "--proof", str(witness_file))
        assert code == cli.PASS
        assert "lines\t" in out and "height\t" in out


class TestTranslate:
    @pytest.fixture
    def witness_file(self, capsys, tmp_path):
        run(capsys, "decide", "--goal", "(p -> q) -> p -> q",
            "--out", str(tmp_path))
        capsys.readouterr()
        return tmp_path / "witness.nm"

    @pytest.mark.parametrize("mode", ["basic", "ret"])
    def test_nm_to_frege(self, capsys, tmp_path, witness_file, mode):
        out_dir = tmp_path / mode
        code, out, _ = run(capsys, "translate", "--from", "nm",
                           "--to", "frege", "--mode", mode,
                           "--proof", str(witness_file),
                           "--goal", "(p -> q) -> p -> q",
                           "--out", str(out_dir))
        assert code == cli.PASS
        assert "lines\t" in out
        d = parse_frege_dag((out_dir / "translated.frege").read_text())
        assert check_frege_dag(d, set(), parse_formula("(p -> q) -> p -> q"))

    def test_nm_to_tree_writes_both_legs(self, capsys, tmp_path, witness_file):
        out_dir = tmp_path / "tree"
        code, _, _ = run(capsys, "translate", "--from", "nm", "--to", "tree",
                         "--proof", str(witness_file),
                         "--goal", "(p -> q) -> p -> q",
                         "--out", str(out_dir))
        assert code == cli.PASS
        fd = parse_frege_dag((out_dir / "translated.frege").read_text())
        nm = parse_nm((out_dir / "translated_tree.nm").read_text())
        assert fd.is_tree() and nm.is_tree()
        goal = parse_formula("(p -> q) -> p -> q")
        assert check_frege_dag(fd, set(), goal)
        assert check_nm(nm, [], goal)

    def test_goal_mismatch_rejected(self, capsys, witness_file):
        code, _, _ = run(capsys, "translate", "--from", "nm", "--to", "frege",
                         "--proof", str(witness_file), "--goal", "p -> p")
        assert code == cli.REJECT

    def test_unsupported_direction(self, capsys, witness_file):
        code, _, _ = run(capsys, "translate", "--from", "nm", "--to", "nm",
                         "--proof", str(witness_file),
                         "--goal", "(p -> q) -> p -> q")
        assert code == cli.USAGE


class TestCircuit:
    @pytest.fixture
    def edge_circuit(self, tmp_path):
        path = tmp_path / "edge.circ"
        path.write_text("a = VAR e_0_1\nroot a\n")
        return path

    def test_eval(self, capsys, edge_circuit):
        code, out, _ = run(capsys, "circuit", "eval",
                           "--circuit", str(edge_circuit),
                           "--assign", "e_0_1=1")
        assert code == cli.PASS and out.strip() == "1"

    def test_eval_missing_assignment(self, capsys, edge_circuit):
        code, _, _ = run(capsys, "circuit", "eval",
                         "--circuit", str(edge_circuit))
        assert code == cli.USAGE

    def test_fanin2(self, capsys, tmp_path):
        path = tmp_path / "wide.circ"
        path.write_text("a = VAR x\nb = VAR y\nc = VAR z\n"
                        "g = AND a,b,c\nroot g\n")
        code, out, _ = run(capsys, "circuit", "fanin2",
                           "--circuit", str(path))
        assert code == cli.PASS
        assert "wires\t3" in out and "wires_bounded\t4" in out

    def test_separate_pass(self, capsys, edge_circuit):
        code, out, _ = run(capsys, "circuit", "separate",
                           "--circuit", str(edge_circuit), "--n", "2")
        assert code == cli.PASS and "separates\tpass" in out

    def test_separate_fail(self, capsys, tmp_path):
        path = tmp_path / "true.circ"
        path.write_text("a = AND\nroot a\n")
        code, out, _ = run(capsys, "circuit", "separate",
                           "--circuit", str(path), "--n", "2")
        assert code == cli.REJECT and "separates\tfail" in out

    def test_separate_needs_n(self, capsys, edge_circuit):
        code, _, _ = run(capsys, "circuit", "separate",
                         "--circuit", str(edge_circuit))
        assert code == cli.USAGE


class TestPipeline:
    def test_n2_end_to_end(self, capsys, tmp_path):
        code, out, _ = run(capsys, "pipeline", "--n", "2",
                           "--out", str(tmp_path))
        assert code == cli.PASS
        assert "pipeline\tpass" in out
        assert "separates\tpass" in out and "interpolates\tpass" in out
        assert (tmp_path / "tau_2.txt").exists()
        proof = parse_nm((tmp_path / "tau_2_proof.nm").read_text())
        tau = parse_formula((tmp_path / "tau_2.txt").read_text())
        assert check_nm(proof, [], tau)
        parse_circuit((tmp_path / "interpolant_2.circ").read_text())

    def test_budget(self, capsys):
        code, out, _ = run(capsys, "pipeline", "--n", "2",
                           "--budget-nodes", "1")
        assert code == cli.BUDGET

    def test_deterministic(self, capsys):
        runs = [run(capsys, "pipeline", "--n", "2")[1] for _ in range(2)]
        assert runs[0] == runs[1]


class TestReport:
    def test_artifacts(self, capsys, tmp_path):
        code, out, _ = run(capsys, "report", "--out", str(tmp_path))
        assert code == cli.PASS
        assert "seed\t0" in out
        assert (tmp_path / "metrics.tsv").exists()
        figures = list(tmp_path.glob("*.png"))
        assert len(figures) >= 3
