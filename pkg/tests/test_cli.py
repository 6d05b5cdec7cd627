import io
import json

import pytest

from fellerkit.cli import EXIT_DISAGREE, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_OK, main
from fellerkit.instances import Truth, generate_instance
from fellerkit.specfile import BUILTINS, SpecError, builtin, dumps, export_document, instance_document, load, load_document


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def write_spec(tmp_path, doc, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestFilterVerb:
    def test_two_state_posterior(self):
        code, out, _ = run("filter", "--spec", "twostate-demo", "--prior", "uniform", "--actions", "a1",
                           "--observations", "y1")
        assert code == EXIT_OK
        last = out.strip().splitlines()[-1].split(",")
        assert float(last[3]) == pytest.approx(9 / 11, abs=1e-12)
        assert float(last[4]) == pytest.approx(2 / 11, abs=1e-12)

    def test_empty_actions_keep_the_prior(self):
        code, out, _ = run("filter", "--spec", "twostate-demo", "--prior", "uniform")
        assert code == EXIT_OK
        rows = out.strip().splitlines()
        assert len(rows) == 2 and rows[1].split(",")[3:5] == ["0.5", "0.5"]

    def test_json_to_out_dir(self, tmp_path):
        code, out, _ = run("filter", "--spec", "twostate-demo", "--actions", "a1", "--observations", "y2",
                           "--format", "json", "--out-dir", str(tmp_path))
        assert code == EXIT_OK
        doc = json.loads((tmp_path / "trajectory.json").read_text())
        assert len(doc["trajectory"]) == 2
        assert out.startswith("final belief")

    def test_malformed_row_names_the_input(self, tmp_path):
        doc = builtin("twostate-demo")
        doc["kernels"]["Q2"]["rows"][1]["weight"] = 0.0
        code, _, err = run("filter", "--spec", write_spec(tmp_path, doc), "--prior", "uniform")
        assert code == EXIT_INPUT
        assert "a1|w1" in err and "0.9" in err

    def test_unknown_observation(self):
        code, _, err = run("filter", "--spec", "twostate-demo", "--actions", "a1", "--observations", "y9")
        assert code == EXIT_INPUT and "y9" in err

    def test_zero_evidence_warns(self, tmp_path):
        doc = builtin("twostate-demo")
        doc["kernels"]["Q2"]["rows"] = [
            {"given": ["a1", "w1"], "outcome": "y1", "weight": 1.0},
            {"given": ["a1", "w2"], "outcome": "y1", "weight": 1.0},
        ]
        code, out, err = run("filter", "--spec", write_spec(tmp_path, doc), "--actions", "a1", "--observations", "y2")
        assert code == EXIT_OK
        assert "ZERO_EVIDENCE" in err and "ZERO_EVIDENCE" in out

    def test_broken_json_reports_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"format": ')
        code, _, err = run("filter", "--spec", str(path))
        assert code == EXIT_INPUT and "line 1" in err

    def test_missing_file(self, tmp_path):
        code, _, err = run("filter", "--spec", str(tmp_path / "absent.json"))
        assert code == EXIT_INPUT and "cannot read" in err

    def test_kernel_document_is_not_a_model(self):
        code, _, err = run("filter", "--spec", "constant")
        assert code == EXIT_INPUT and "filter needs a model" in err


class TestDiagnoseVerb:
    def test_example1_suf_a(self, tmp_path):
        code, out, _ = run("diagnose", "--spec", "example1", "--sequence", "w=1/n", "--conditions", "SUF_A",
                           "--family", "clipped-abs", "--out-dir", str(tmp_path))
        assert code == EXIT_OK
        assert "SUF_A            (condition)              PASS" in out
        lines = (tmp_path / "gaps.csv").read_text().splitlines()
        gaps = [float(line.split(",")[-1]) for line in lines[1:] if ",clipped-abs," in line]
        assert gaps == [1.0 / n for n in range(1, 65)]

    def test_remark_suf_a_fails_with_unit_gap(self):
        code, out, _ = run("diagnose", "--spec", "remark", "--sequence", "w=1/n", "--conditions", "SUF_A")
        assert code == EXIT_OK
        assert "constant-one" in out and "terminal_gap=1.0" in out
        assert "(condition)              FAIL" in out

    def test_constant_kernel_zero_gaps(self, tmp_path):
        code, out, _ = run("diagnose", "--spec", "constant", "--format", "json", "--out-dir", str(tmp_path))
        assert code == EXIT_OK
        report = json.loads((tmp_path / "report.json").read_text())
        assert {r["verdict"] for r in report["reports"]} == {"PASS"}
        terminal = [g["terminal_gap"] for r in report["reports"] for g in r["reports"]]
        assert terminal and set(terminal) == {0.0}

    def test_declared_diagnostics(self):
        code, out, _ = run("diagnose", "--spec", "example1")
        assert code == EXIT_OK and "summary:" in out

    def test_unknown_condition(self):
        code, _, err = run("diagnose", "--spec", "example1", "--sequence", "w=1/n", "--conditions", "BOGUS")
        assert code == EXIT_INPUT and "BOGUS" in err

    def test_unknown_sequence(self):
        code, _, err = run("diagnose", "--spec", "example1", "--sequence", "nope")
        assert code == EXIT_INPUT and "nope" in err

    def test_inconclusive_exit(self):
        # a constant unit gap that never decays, judged against a floor above it
        code, out, _ = run("diagnose", "--spec", "remark", "--sequence", "w=1/n", "--conditions", "SUF_A",
                           "--fail-floor", "10")
        assert code == EXIT_INCONCLUSIVE
        assert "INCONCLUSIVE" in out


class TestEquivalenceVerb:
    def test_small_run(self):
        code, out, _ = run("equivalence", "--seeds", "3", "--sizes", "2,2")
        assert code == EXIT_OK
        assert "summary: 6/6 instances agree with ground truth (100.0%)" in out

    def test_zero_seeds(self):
        code, out, _ = run("equivalence", "--seeds", "0")
        assert code == EXIT_OK and "0 instances" in out

    def test_budget(self):
        code, _, err = run("equivalence", "--seeds", "1", "--sizes", "2,11")
        assert code == EXIT_INPUT and "budget" in err

    def test_bad_sizes(self):
        code, _, _ = run("equivalence", "--sizes", "two")
        assert code == EXIT_INPUT

    def test_single_atom_jump_rejected(self):
        code, _, _ = run("equivalence", "--seeds", "1", "--sizes", "1,1")
        assert code == EXIT_INPUT

    def test_csv_output(self, tmp_path):
        code, _, _ = run("equivalence", "--seeds", "1", "--truth", "CONTINUOUS", "--out-dir", str(tmp_path))
        assert code == EXIT_OK
        assert (tmp_path / "equivalence.csv").read_text().startswith("seed,truth,agree")

    def test_disagreement_code_is_distinct(self):
        assert EXIT_DISAGREE not in (EXIT_OK, EXIT_INPUT)


class TestExport:
    @pytest.mark.parametrize("name", sorted(BUILTINS))
    def test_round_trip(self, name, tmp_path):
        code, _, _ = run("export", "--spec", name, "--out-dir", str(tmp_path))
        assert code == EXIT_OK
        path = tmp_path / f"{name}.json"
        reloaded = load(str(path))
        assert dumps(export_document(reloaded)) == path.read_text()

    def test_bytes_are_deterministic(self):
        first = run("export", "--spec", "twostate-demo")[1]
        second = run("export", "--spec", "twostate-demo")[1]
        assert first == second and first.endswith("\n")

    def test_exported_model_filters_identically(self, tmp_path):
        run("export", "--spec", "twostate-demo", "--out-dir", str(tmp_path))
        args = ("--prior", "uniform", "--actions", "a1,a1", "--observations", "y1,y2")
        a = run("filter", "--spec", "twostate-demo", *args)[1]
        b = run("filter", "--spec", str(tmp_path / "twostate-demo.json"), *args)[1]
        assert a == b

    def test_generated_instance_document(self, tmp_path):
        code, _, _ = run("export", "--seeds", "2", "--sizes", "2,3", "--truth", "DISCONTINUOUS_AT_LIMIT",
                         "--out-dir", str(tmp_path))
        assert code == EXIT_OK
        files = sorted(p.name for p in tmp_path.iterdir())
        assert files == ["generated-0-discontinuous_at_limit.json", "generated-1-discontinuous_at_limit.json"]
        spec = load(str(tmp_path / files[0]))
        inst = generate_instance(0, Truth.DISCONTINUOUS, (2, 3))
        kernel = spec.kernel("psi")
        t = next(iter(spec.sequences.values())).terms[3]
        assert kernel(t).sorted_items() == inst.kernel(t).sorted_items()

    def test_instance_document_is_loadable(self):
        doc = instance_document(generate_instance(1, Truth.CONTINUOUS))
        assert load_document(doc).name == doc["name"]


class TestSpecErrors:
    def test_unknown_format(self):
        with pytest.raises(SpecError, match="unknown format"):
            load_document({"format": "other/1"})

    def test_not_an_object(self):
        with pytest.raises(SpecError):
            load_document([])


def test_module_entry_point_exit_code():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "fellerkit", "diagnose", "--spec", "example1", "--conditions", "BOGUS"],
        capture_output=True, text=True,
    )
    assert proc.returncode == EXIT_INPUT
    assert "unknown condition" in proc.stderr
