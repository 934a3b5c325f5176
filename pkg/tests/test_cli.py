import csv
import io
import json

import pytest
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

from uplift_sgt.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, SEED_ENV, main
from uplift_sgt.schemas import all_schemas

SMALL = ["--n", "400", "--max-iters", "60"]


@pytest.fixture(scope="module")
def validators():
    schemas = all_schemas()
    registry = Registry().with_resources(
        (s["$id"], Resource.from_contents(s)) for s in schemas.values()
    )
    return {name: Draft202012Validator(s, registry=registry) for name, s in schemas.items()}


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run(["simulate", "--n", "800", "--seed", "4", "--history", "--out", str(d / "h.csv")])[0] == 0
    assert run(["simulate", "--n", "800", "--seed", "4", "--out", str(d / "t.csv")])[0] == 0
    code, _, _ = run([
        "train", "--population", str(d / "h.csv"), "--max-iters", "200",
        "--out-treat", str(d / "mt.json"), "--out-control", str(d / "mc.json"),
    ])
    assert code == 0
    return d


class TestUsage:
    def test_unknown_flag(self):
        code, out, err = run(["suite", "--bogus"])
        assert code == EXIT_USAGE
        assert out == ""
        assert "usage:" in err

    def test_no_subcommand(self):
        code, _, err = run([])
        assert code == EXIT_USAGE and "usage:" in err

    def test_unknown_subcommand(self):
        assert run(["explode"])[0] == EXIT_USAGE

    def test_invalid_value_is_usage_error(self):
        code, _, err = run(["simulate", "--n", "0"])
        assert code == EXIT_USAGE and "n_individuals" in err

    def test_bad_seed_env(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV, "seven")
        assert run(["simulate", "--n", "5"])[0] == EXIT_USAGE

    def test_help(self, capsys):
        assert main(["--help"]) == EXIT_OK


class TestSimulateAndTrain:
    def test_seed_env_fallback(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV, "9")
        via_env = run(["simulate", "--n", "50"])[1]
        explicit = run(["simulate", "--n", "50", "--seed", "9"])[1]
        assert via_env == explicit
        monkeypatch.delenv(SEED_ENV)
        assert run(["simulate", "--n", "50"])[1] == run(["simulate", "--n", "50", "--seed", "0"])[1]

    def test_simulate_stdout_deterministic(self):
        assert run(["simulate", "--n", "100", "--seed", "2"])[1] == run(["simulate", "--n", "100", "--seed", "2"])[1]

    def test_models_validate(self, workdir, validators):
        for name in ("mt.json", "mc.json"):
            validators["model"].validate(json.loads((workdir / name).read_text()))

    def test_train_from_observed_kpi(self, workdir, tmp_path):
        assert run(["sgt", "--population", str(workdir / "t.csv"), "--treat-model", str(workdir / "mt.json"),
                    "--control-model", str(workdir / "mc.json"),
                    "--launched-out", str(tmp_path / "l.csv")])[0] == 0
        text = (tmp_path / "l.csv").read_text().splitlines()
        header = text[0].split(",")
        cut = header.index("y_treated")
        stripped = "\n".join(",".join(line.split(",")[:cut]) for line in text) + "\n"
        (tmp_path / "obs.csv").write_text(stripped)
        code, out, _ = run(["train", "--population", str(tmp_path / "obs.csv"), "--max-iters", "50"])
        assert code == EXIT_OK
        assert set(json.loads(out)) == {"treat", "control"}


class TestSgt:
    def test_labels_csv(self, workdir):
        code, out, _ = run([
            "sgt", "--population", str(workdir / "t.csv"),
            "--treat-model", str(workdir / "mt.json"), "--control-model", str(workdir / "mc.json"),
            "--budget", "0.1",
        ])
        assert code == EXIT_OK
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 800
        assert sum(int(r["sgt_label"]) for r in rows) == 80
        assert sum(int(r["treated_in_campaign"]) for r in rows) == 80

    def test_launched_file_reused(self, workdir, tmp_path):
        args = ["--treat-model", str(workdir / "mt.json"), "--control-model", str(workdir / "mc.json")]
        launched = tmp_path / "l.csv"
        first = run(["sgt", "--population", str(workdir / "t.csv"), "--launched-out", str(launched), *args])
        second = run(["sgt", "--population", str(launched), *args])
        assert first[1] == second[1]

    def test_missing_file_is_data_error(self, workdir):
        code, _, err = run([
            "sgt", "--population", str(workdir / "nope.csv"),
            "--treat-model", str(workdir / "mt.json"), "--control-model", str(workdir / "mc.json"),
        ])
        assert code == EXIT_DATA and "data error" in err

    def test_corrupt_population_is_data_error(self, workdir, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("id,treated,kpi,f0_start,f0_end\n1,,,zz,0\n")
        code, _, err = run([
            "sgt", "--population", str(bad),
            "--treat-model", str(workdir / "mt.json"), "--control-model", str(workdir / "mc.json"),
        ])
        assert code == EXIT_DATA and "line 2" in err


class TestFairness:
    @pytest.fixture
    def files(self, tmp_path):
        preds = tmp_path / "p.csv"
        members = tmp_path / "m.csv"
        labels = tmp_path / "l.csv"
        preds.write_text("id,pred\n1,1\n2,0\n3,1\n4,0\n5,1\n6,0\n")
        members.write_text("id,age,income\n1,0,1\n2,0,0\n3,0,1\n4,1,0\n5,1,1\n6,1,0\n")
        labels.write_text("id,label\n1,1\n2,1\n3,0\n4,0\n5,1\n6,0\n")
        return preds, members, labels

    def test_base_mode_without_labels(self, files, validators):
        preds, members, _ = files
        code, out, _ = run(["fairness", "--preds", str(preds), "--membership", str(members)])
        assert code == EXIT_OK
        reports = json.loads(out)
        validators["fairness_reports"].validate(reports)
        for rep in reports:
            assert rep["mode"] == "base"
            assert [r["metric"] for r in rep["results"]] == ["SP", "DI"]

    def test_enhanced_mode_with_labels(self, files, validators):
        preds, members, labels = files
        code, out, _ = run(["fairness", "--preds", str(preds), "--membership", str(members),
                            "--labels", str(labels), "--attribute", "age"])
        reports = json.loads(out)
        validators["fairness_reports"].validate(reports)
        assert [r["attribute"] for r in reports] == ["age"]
        assert len(reports[0]["results"]) == 6

    def test_missing_ids(self, files, tmp_path):
        _, members, _ = files
        short = tmp_path / "short.csv"
        short.write_text("id,pred\n1,1\n")
        assert run(["fairness", "--preds", str(short), "--membership", str(members)])[0] == EXIT_DATA


class TestSuiteAndReport:
    def test_suite_json_validates_and_is_deterministic(self, validators):
        argv = ["suite", "--seed", "7", "--budgets", "0.05,0.10,0.15,0.20", "--campaigns", "2", *SMALL]
        code, out, _ = run(argv)
        assert code == EXIT_OK
        report = json.loads(out)
        validators["suite_report"].validate(report)
        assert len(report["campaigns"]) == 2
        assert run(argv)[1] == out

    def test_suite_from_files_matches_round_trip(self, workdir, validators):
        code, out, _ = run(["suite", "--history", str(workdir / "h.csv"), "--test", str(workdir / "t.csv"),
                            "--budgets", "0.1", "--n", "800", "--seed", "4", "--max-iters", "60"])
        assert code == EXIT_OK
        validators["suite_report"].validate(json.loads(out))

    def test_test_without_history(self, workdir):
        assert run(["suite", "--test", str(workdir / "t.csv")])[0] == EXIT_USAGE

    def test_report_writes_csv_and_figures(self, tmp_path):
        out_dir = tmp_path / "rep"
        code, out, _ = run(["report", "--campaigns", "2", "--seed", "1", "--out-dir", str(out_dir), *SMALL])
        assert code == EXIT_OK
        assert (out_dir / "suite.csv").read_text() == out
        for name in ("gap_closed.png", "profits.png", "fairness.png"):
            assert (out_dir / name).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_report_from_existing_suite(self, tmp_path):
        suite = tmp_path / "s.json"
        assert run(["suite", "--campaigns", "1", "--budgets", "0.1", "--out", str(suite), *SMALL])[0] == 0
        code, out, _ = run(["report", "--suite", str(suite), "--out-dir", str(tmp_path / "r")])
        assert code == EXIT_OK and out.startswith("campaign,budget,")


class TestIngestCommand:
    def test_ingest(self, tmp_path):
        (tmp_path / "e.csv").write_text(
            "customer_id,event,time,offer_id,amount\n2,offer received,120,4,\n2,transaction,121,,31.78\n"
            "2,transaction,oops,,1\n"
        )
        (tmp_path / "p.csv").write_text("customer_id,age,gender,income,became_member_on\n2,33,M,,20180101\n")
        (tmp_path / "c.csv").write_text("id,type,channels,difficulty,duration,reward\n4,discount,web,10,7,2\n")
        code, out, err = run(["ingest", "--events", str(tmp_path / "e.csv"), "--profiles", str(tmp_path / "p.csv"),
                              "--portfolio", str(tmp_path / "c.csv")])
        assert code == EXIT_OK
        assert "line 4" in err and "1 malformed" in err
        rows = list(csv.DictReader(io.StringIO(out)))
        assert round(float(rows[0]["purchase"]), 1) == 136.2

    def test_missing_column_is_data_error(self, tmp_path):
        for name in ("e", "p", "c"):
            (tmp_path / f"{name}.csv").write_text("x\n1\n")
        code, _, err = run(["ingest", "--events", str(tmp_path / "e.csv"), "--profiles", str(tmp_path / "p.csv"),
                            "--portfolio", str(tmp_path / "c.csv")])
        assert code == EXIT_DATA and "MissingColumn" in err
