import subprocess
import sys

import pytest

from conftest import FIXTURES
from rnnbounds import load_dataset, load_model
from rnnbounds.cli import main
from rnnbounds.reports import read_csv

MODEL = str(FIXTURES / "vanilla_model.json")
DATA = str(FIXTURES / "running_sign.json")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestUsage:
    def test_bound_without_gamma(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["bound", "--cell", "vanilla", "--model", MODEL, "--t", "5"])
        assert info.value.code == 1
        err = capsys.readouterr().err
        assert err.startswith("usage:") and "--gamma" in err

    def test_no_command(self, capsys):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 1

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "audit", "--model", str(tmp_path / "nope.json"))
        assert code == 1 and "nope.json" in err

    def test_bad_model_file(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"format_version": 1, "cell_type": "gru"}')
        code, _, err = run(capsys, "audit", "--model", str(bad))
        assert code == 1 and "gru" in err

    def test_cell_mismatch(self, capsys):
        code, _, _ = run(capsys, "bound", "--cell", "lstm", "--model", MODEL, "--gamma", "1", "--t", "5",
                         "--m", "10")
        assert code == 1

    def test_console_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "rnnbounds.cli", "bound", "--model", MODEL],
                              capture_output=True, text=True)
        assert proc.returncode == 1


class TestAudit:
    def test_norm_and_assumption_tables(self, capsys):
        code, out, _ = run(capsys, "audit", "--model", MODEL, "--data", DATA)
        assert code == 0
        norms, assumptions = out.split("\n\n")
        rows = read_csv(norms)
        assert [r["matrix"] for r in rows] == ["U", "V", "W"]
        assert float(rows[0]["spectral"]) == pytest.approx(2.0, rel=1e-9)
        checks = {r["id"]: r["passed"] for r in read_csv(assumptions)}
        assert checks["A1_input_norm"] == "true"

    def test_strict_failure(self, capsys, tmp_path):
        code, _, err = run(capsys, "audit", "--model", MODEL, "--data", DATA, "--B-x", "0.5", "--strict")
        assert code == 2 and "A1_input_norm" in err


class TestBoundAndCompare:
    def test_bound_rows(self, capsys):
        code, out, _ = run(capsys, "bound", "--cell", "vanilla", "--model", MODEL, "--data", DATA,
                           "--gamma", "1", "--t", "20")
        assert code == 0
        rows = read_csv(out)
        assert [r["bound_id"] for r in rows] == ["vanilla_erc", "refined_21", "pacbayes"]
        assert all(r["m"] == "200" and r["regime"] == "III" for r in rows)
        assert rows[2]["order_only"] == "true"

    def test_squared_toggle(self, capsys):
        _, out, _ = run(capsys, "bound", "--model", MODEL, "--gamma", "1", "--t", "20", "--m", "200",
                        "--squared-21")
        assert read_csv(out)[1]["bound_id"] == "refined_21_squared"

    def test_compare_ordering(self, capsys, tmp_path):
        path = tmp_path / "cmp.csv"
        code, _, _ = run(capsys, "compare", "--model", MODEL, "--data", DATA, "--gamma", "1", "--t", "20",
                         "--out", str(path))
        assert code == 0
        v = {r["bound_id"]: float(r["value"]) for r in read_csv(path.read_text())}
        assert v["ours"] == min(v.values())
        assert v["ours"] < v["bound3"] <= v["bound2"]

    def test_strict_compare(self, capsys):
        code, _, _ = run(capsys, "compare", "--model", MODEL, "--data", DATA, "--gamma", "1", "--t", "20",
                         "--B-x", "0.5", "--strict")
        assert code == 2


class TestVerify:
    @pytest.mark.slow
    def test_fixture_model_all_suites(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "all", "--seed", "7", "--model", MODEL,
                           "--data", DATA)
        assert code == 0
        rows = read_csv(out)
        kinds = {r["trial_kind"] for r in rows}
        assert {"hidden_norm_vanilla_model", "output_lipschitz_vanilla_model", "margin_lipschitz"} <= kinds
        assert all(r["violations"] == "0" and r["seed"] == "7" for r in rows)

    def test_single_suite(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "margin", "--trials", "50")
        assert code == 0
        assert read_csv(out)[0]["trials"] == "500"


class TestPipeline:
    def test_generate_train_bound(self, capsys, tmp_path):
        data, model, log = tmp_path / "d.json", tmp_path / "m.json", tmp_path / "log.csv"
        assert main(["gen-data", "--m", "30", "--T", "6", "--d-x", "3", "--K", "2", "--rule", "running-sign",
                     "--seed", "3", "--out", str(data)]) == 0
        assert load_dataset(data).max_input_norm() <= 1.0
        assert main(["train", "--data", str(data), "--hidden", "4", "--epochs", "3", "--out", str(model),
                     "--log", str(log), "--target-U", "1.0"]) == 0
        assert load_model(model).d_h == 4
        assert len(read_csv(log.read_text())) == 4
        code, out, _ = run(capsys, "bound", "--model", str(model), "--data", str(data), "--gamma", "0.5",
                           "--t", "6")
        assert code == 0 and read_csv(out)[0]["regime"] == "II"

    def test_gen_data_needs_out(self, capsys):
        code, _, _ = run(capsys, "gen-data", "--m", "3", "--T", "2", "--d-x", "2", "--K", "2")
        assert code == 1

    def test_erc(self, capsys, tmp_path):
        data = tmp_path / "d.json"
        main(["gen-data", "--m", "10", "--T", "3", "--d-x", "2", "--K", "2", "--out", str(data)])
        code, out, _ = run(capsys, "erc", "--data", str(data), "--draws", "10", "--candidates", "20")
        row = read_csv(out)[0]
        assert code == 0 and 0 < float(row["estimate"]) <= float(row["vanilla_erc_bound"])

    def test_regime_sweep(self, capsys, tmp_path):
        data = tmp_path / "d.json"
        main(["gen-data", "--m", "20", "--T", "4", "--d-x", "2", "--K", "2", "--out", str(data)])
        code, out, _ = run(capsys, "regime-sweep", "--data", str(data), "--norms", "0.5,1.5", "--seeds", "2",
                           "--epochs", "2", "--hidden", "3")
        rows = read_csv(out)
        assert code == 0 and [r["regime"] for r in rows] == ["I", "III"]

    def test_bad_norm_list(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["regime-sweep", "--data", DATA, "--norms", "a,b"])
        assert info.value.code == 1
