import pytest

from ucst.cli import main
from ucst.fileformat import parse_pep, parse_ucst
from ucst.model import LOSSY, validate_run
from tests.test_fileformat import FIG6_TEXT


@pytest.fixture
def fig6_file(tmp_path):
    path = tmp_path / "fig6.ucst"
    path.write_text(FIG6_TEXT)
    return str(path)


UNREACHABLE_TEXT = """\
alphabet: a
sender: p0 p1
receiver: q0
rule s: p0 -> p1 : r!a
instance: p0 p1 q0 q0
U: EPS
V: EPS
Up: EPS
Vp: EPS
"""


class TestReach:
    def test_explore_fig6(self, fig6_file, capsys):
        code = main(["reach", fig6_file, "--bound", "2", "--steps", "1000"])
        out = capsys.readouterr().out
        assert code == 0
        assert "REACHABLE" in out and "rule s#0" in out

    def test_pipeline_fig6(self, fig6_file, capsys):
        code = main(["reach", fig6_file, "--method", "pipeline",
                     "--pep-len", "6"])
        out = capsys.readouterr().out
        assert code == 0
        assert "REACHABLE" in out
        # seven steps: six rules and one loss
        assert out.count("\n  ") == 7 or "7." in out

    def test_trivial_self_instance(self, tmp_path, capsys):
        text = FIG6_TEXT.replace("instance: p_in p_fi q_in q_fi",
                                 "instance: p_in p_in q_in q_in")
        path = tmp_path / "self.ucst"
        path.write_text(text)
        assert main(["reach", str(path), "--bound", "1"]) == 0

    def test_unreachable_exits_1(self, tmp_path):
        path = tmp_path / "dead.ucst"
        path.write_text(UNREACHABLE_TEXT)
        assert main(["reach", str(path), "--bound", "4"]) == 1

    def test_parse_error_exits_2(self, tmp_path, capsys):
        path = tmp_path / "broken.ucst"
        path.write_text("alphabet: a\n")
        assert main(["reach", str(path)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_saturation_fallback_for_r_tests(self, tmp_path, capsys):
        text = """\
alphabet: a
sender: p0 p1 p2
receiver: q0 q1
rule s: p0 -> p1 : r!a
rule s: p1 -> p2 : r=EPS
rule r: q0 -> q1 : r?a
instance: p0 p2 q0 q1
U: EPS
V: EPS
Up: EPS
Vp: EPS
"""
        path = tmp_path / "rtest.ucst"
        path.write_text(text)
        code = main(["reach", str(path), "--method", "pipeline", "--bound", "3"])
        out = capsys.readouterr().out
        assert code == 0
        assert "saturation" in out


class TestReduce:
    def test_reduce_to_pep(self, fig6_file, tmp_path, capsys):
        out_file = tmp_path / "fig6.pep"
        code = main(["reduce", fig6_file, "--to", "pep", "-o", str(out_file)])
        assert code == 0
        pep = parse_pep(out_file.read_text())
        from ucst.pep import is_solution

        assert is_solution(pep, ("d0", "d4", "d1", "d5", "d2", "d3"))

    def test_reduce_stage_file_reparses(self, tmp_path, capsys):
        source = tmp_path / "zn.ucst"
        source.write_text("""\
alphabet: a
sender: p0 p1
receiver: q0 q1
rule s: p0 -> p1 : l!a
rule r: q0 -> q1 : l=EPS
instance: p0 p1 q0 q1
U: EPS
V: EPS
Up: EPS
Vp: EPS
""")
        out_file = tmp_path / "zn.z1n1.ucst"
        assert main(["reduce", str(source), "--to", "z1n1",
                     "-o", str(out_file)]) == 0
        inst, stage = parse_ucst(out_file.read_text())
        assert stage == "z1n1"
        assert "z" in inst.system.alphabet

    def test_identity_stage_is_noop(self, fig6_file, tmp_path, capsys):
        out_file = tmp_path / "same.ucst"
        assert main(["reduce", fig6_file, "--to", "z1n1",
                     "-o", str(out_file)]) == 0
        inst, _ = parse_ucst(out_file.read_text())
        original, _ = parse_ucst(FIG6_TEXT)
        from ucst.fileformat import instance_equal

        assert instance_equal(inst, original)

    def test_fragment_violation_exits_2(self, tmp_path, capsys):
        path = tmp_path / "parity.ucst"
        path.write_text("""\
alphabet: a
sender: p0 p1
receiver: q0
rule s: p0 -> p1 : r=(ANY ANY)*
instance: p0 p1 q0 q0
U: EPS
V: EPS
Up: EPS
Vp: EPS
""")
        assert main(["reduce", str(path), "--to", "z1n1"]) == 2


class TestGen:
    def test_gen_queue_parity(self, tmp_path, capsys):
        out_file = tmp_path / "qa.ucst"
        assert main(["gen", "queue-parity", "--ops", "w:a,r:a",
                     "-o", str(out_file)]) == 0
        inst, stage = parse_ucst(out_file.read_text())
        assert stage == "generated"
        from ucst.explore import Bound, bounded_reach

        assert bounded_reach(inst, Bound(3, 500), LOSSY).reachable

    def test_gen_thue(self, tmp_path):
        out_file = tmp_path / "thue.ucst"
        assert main(["gen", "thue", "--rules", "ab>ba,ba>ab",
                     "-o", str(out_file)]) == 0
        inst, stage = parse_ucst(out_file.read_text())
        assert stage == "generated"
        assert "#" in inst.system.alphabet

    def test_gen_writelossy(self, tmp_path):
        out_file = tmp_path / "wl.ucst"
        assert main(["gen", "writelossy", "--ops", "w:a,r:a",
                     "-o", str(out_file)]) == 0
        text = out_file.read_text()
        assert "--mode write-lossy" in text
        parse_ucst(text)


class TestValidateCommand:
    def test_small_run_passes_and_reproduces(self, capsys, monkeypatch):
        code = main(["validate", "--samples", "3", "--seed", "5"])
        first = capsys.readouterr().out
        assert code == 0
        assert "FAIL" not in first
        code = main(["validate", "--samples", "3", "--seed", "5"])
        second = capsys.readouterr().out
        assert code == 0 and first == second

    def test_env_seed_override(self, capsys, monkeypatch):
        monkeypatch.setenv("UCST_SEED", "5")
        main(["validate", "--samples", "3", "--seed", "99"])
        via_env = capsys.readouterr().out
        monkeypatch.delenv("UCST_SEED")
        main(["validate", "--samples", "3", "--seed", "5"])
        direct = capsys.readouterr().out
        assert via_env == direct


class TestWitnessesRevalidate:
    def test_printed_pipeline_witness_validates(self, fig6_file, capsys):
        main(["reach", fig6_file, "--method", "pipeline", "--pep-len", "6"])
        capsys.readouterr()
        # the pipeline transports the solved word back into a run; re-check
        # the same machinery end to end through the library
        from ucst.explore import Bound, bounded_reach
        from ucst.pep import bounded_solve, postpone_stabilize, run_from_postpone_stable
        from ucst.reductions import bridge_context, run_pipeline

        inst, _ = parse_ucst(FIG6_TEXT)
        trace = run_pipeline(inst, to="pep")
        word = bounded_solve(trace.pep, 6)
        ctx = bridge_context(trace.final_instance)
        run = run_from_postpone_stable(ctx, postpone_stabilize(ctx, word))
        assert validate_run(trace.final_instance.system, run, LOSSY)
