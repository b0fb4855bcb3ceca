import json
import os


from lcer.cli import main
from tests.conftest import FIXTURES


def fx(name):
    return os.path.join(FIXTURES, name)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv, "--format", "json")
    doc = json.loads(out)
    assert doc["schema"] == "lcer-report/1"
    assert doc["exit_code"] == code
    return code, doc


def test_parse(capsys):
    code, doc = run_json(capsys, "parse", fx("mod12.th"))
    assert code == 0 and doc["model"] == "lia" and doc["goals"] == ["clock"]


def test_parse_input_error(capsys, tmp_path):
    bad = tmp_path / "bad.th"
    bad.write_text("(theory (model lia) (fun f (Wat) Int))")
    code, doc = run_json(capsys, "parse", str(bad))
    assert code == 3 and doc["verdict"] == "input-error"


def test_convert_modular(capsys):
    code, doc = run_json(capsys, "convert", fx("mod12.th"),
                         "-l", "cong(+(7,31))", "-r", "cong(14)", "--bound", "3")
    assert code == 0
    assert doc["steps"] == 2


def test_convert_bound_exhausted(capsys):
    code, doc = run_json(capsys, "convert", fx("mod12.th"),
                         "-l", "cong(1)", "-r", "cong(2)", "--bound", "2")
    assert code == 2 and doc["verdict"] == "no-conversion-within-bound"


def test_convert_with_named_goal(capsys):
    code, out = run(capsys, "convert", fx("mod12.th"), "-g", "clock", "--bound", "3")
    assert code == 0 and "2 steps" in out


def test_validate(capsys):
    code, doc = run_json(capsys, "validate", fx("absmax.th"), "-g", "absneg",
                         "--bound", "8", "--box", "5")
    assert code == 0 and doc["verdict"] == "confirmed-on-samples" and doc["samples"] == 11
    code, doc = run_json(capsys, "validate", fx("absmax.th"), "-g", "absneg0",
                         "--bound", "8")
    assert code == 1 and doc["verdict"] == "no-conversion-within-bound"


def test_check_proof(capsys):
    code, out = run(capsys, "check", fx("group.th"), "-p", fx("expinv.prf"))
    assert code == 0 and "accepted" in out


def test_check_rejected(capsys, tmp_path):
    bad = tmp_path / "bad.prf"
    bad.write_text("(Refl (conclusion (vars) e (op e e) true))")
    code, doc = run_json(capsys, "check", fx("group.th"), "-p", str(bad))
    assert code == 1 and doc["rule"] == "Refl"


def test_prove_and_check_round_trip(capsys, tmp_path):
    out_file = tmp_path / "n3.prf"
    code, _ = run(capsys, "prove", fx("nneg.th"), "-l", "nneg(3)", "-r", "true",
                  "--bound", "10", "-o", str(out_file))
    assert code == 0 and out_file.exists()
    code, _ = run(capsys, "check", fx("nneg.th"), "-p", str(out_file))
    assert code == 0


def test_prove_no_proof(capsys):
    code, doc = run_json(capsys, "prove", fx("nneg.th"), "-g", "param")
    assert code == 2 and doc["verdict"] == "no-proof"


def test_consistent(capsys):
    code, doc = run_json(capsys, "consistent", fx("inconsistent.th"), "--depth", "2")
    assert code == 1 and doc["verdict"] == "inconsistent"
    assert len(doc["trace"]) == 2
    code, doc = run_json(capsys, "consistent", fx("group.th"), "--depth", "8")
    assert code == 0 and doc["verdict"] == "consistent-up-to"


def test_refute(capsys, tmp_path):
    out_file = tmp_path / "cm.alg"
    code, doc = run_json(capsys, "refute", fx("refute_bool.th"), "-g", "gf",
                         "--extra", "1", "-o", str(out_file))
    assert code == 0 and doc["verdict"] == "refuted"
    code, doc = run_json(capsys, "model-check", fx("refute_bool.th"),
                         "-a", str(out_file), "-g", "gf")
    assert code == 0 and doc["refutes"] is True


def test_refute_infinite_model_refused(capsys):
    code, doc = run_json(capsys, "refute", fx("inconsistent.th"),
                         "-l", "a", "-r", "0")
    assert code == 3 and "finite underlying model" in doc["detail"]


def test_model_check_shipped_algebra(capsys):
    code, doc = run_json(capsys, "model-check", fx("refute_bool.th"),
                         "-a", fx("boolcm.alg"), "-g", "gf")
    assert code == 0 and doc["verdict"] == "model" and doc["refutes"] is True


def test_rewrite(capsys):
    code, doc = run_json(capsys, "rewrite", fx("mod12.th"), "-t", "cong(+(7,31))",
                         "--pool", "0,1,2,14")
    assert code == 0 and doc["normal_form"] == "(cong 38)"
    assert "(cong 14)" in doc["successors"]


def test_exit_codes_are_total(capsys):
    # the verdict-to-exit-code mapping, exercised end to end
    table = [
        (["parse", fx("mod12.th")], 0),
        (["convert", fx("mod12.th"), "-g", "clock", "--bound", "3"], 0),
        (["convert", fx("mod12.th"), "-l", "cong(1)", "-r", "cong(2)",
          "--bound", "1"], 2),
        (["validate", fx("absmax.th"), "-g", "absneg0"], 1),
        (["check", fx("group.th"), "-p", fx("expinv.prf")], 0),
        (["consistent", fx("inconsistent.th"), "--depth", "2"], 1),
        (["consistent", fx("mod12.th"), "--depth", "2"], 0),
        (["refute", fx("refute_bool.th"), "-g", "gf"], 0),
        (["model-check", fx("refute_bool.th"), "-a", fx("boolcm.alg")], 0),
    ]
    for argv, expected in table:
        code, _ = run(capsys, *argv)
        assert code == expected, argv


def test_text_and_json_agree(capsys):
    code_t, out = run(capsys, "consistent", fx("inconsistent.th"), "--depth", "2")
    code_j, doc = run_json(capsys, "consistent", fx("inconsistent.th"), "--depth", "2")
    assert code_t == code_j == 1
    assert "inconsistent" in out and doc["verdict"] == "inconsistent"


def test_rewrite_multi_step(capsys):
    code, doc = run_json(capsys, "rewrite", fx("nneg.th"), "-t", "nneg(2)",
                         "--steps", "3", "--limit", "20")
    assert code == 0
    assert any(s.startswith("true") for s in doc["successors"])


def test_unknown_goal_name(capsys):
    code, doc = run_json(capsys, "validate", fx("absmax.th"), "-g", "nope")
    assert code == 3 and "no goal named" in doc["detail"]


def test_ill_sorted_inline_goal(capsys):
    code, doc = run_json(capsys, "convert", fx("mod12.th"),
                         "-l", "cong(true)", "-r", "cong(1)")
    assert code == 3


def _weakening_proof_text():
    # conclusion constraint true entails x*x >= 0 over the integers, but no
    # built-in backend proves it; an external solver is required
    return (
        "(Weakening (conclusion (vars (x Int)) (abs x) (abs x) true)\n"
        "  (Refl (conclusion (vars (x Int)) (abs x) (abs x) (>= (* x x) 0))))"
    )


def test_solver_flag_discharges_oracle(capsys, tmp_path):
    import sys
    import textwrap

    prf = tmp_path / "needs_solver.prf"
    prf.write_text(_weakening_proof_text())
    code, doc = run_json(capsys, "check", fx("absmax.th"), "-p", str(prf))
    assert code == 2 and doc["verdict"] == "oracle-unknown"

    fake = tmp_path / "unsat.py"
    fake.write_text(textwrap.dedent("""
        import sys
        for line in iter(sys.stdin.readline, ""):
            if "(check-sat)" in line:
                print("unsat", flush=True)
    """))
    code, doc = run_json(capsys, "check", fx("absmax.th"), "-p", str(prf),
                         "--solver", f"{sys.executable} -u {fake}")
    assert code == 0 and doc["verdict"] == "accepted"


def test_solver_env_var(capsys, tmp_path, monkeypatch):
    import sys
    import textwrap

    prf = tmp_path / "needs_solver.prf"
    prf.write_text(_weakening_proof_text())
    fake = tmp_path / "unsat.py"
    fake.write_text(textwrap.dedent("""
        import sys
        for line in iter(sys.stdin.readline, ""):
            if "(check-sat)" in line:
                print("unsat", flush=True)
    """))
    monkeypatch.setenv("LCRE_SOLVER", f"{sys.executable} -u {fake}")
    code, _ = run(capsys, "check", fx("absmax.th"), "-p", str(prf))
    assert code == 0


def test_solver_failure_exit_code(capsys, tmp_path):
    prf = tmp_path / "needs_solver.prf"
    prf.write_text(_weakening_proof_text())
    code, doc = run_json(capsys, "check", fx("absmax.th"), "-p", str(prf),
                         "--solver", "/nonexistent/solver")
    assert code == 4 and doc["verdict"] == "oracle-failure"


def test_seed_echoed_in_json(capsys):
    code, doc = run_json(capsys, "parse", fx("mod12.th"), "--seed", "7")
    assert doc["seed"] == 7
