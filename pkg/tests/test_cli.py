import csv
import io
import json
import subprocess
import sys
import time

import pytest

from photonsim import circuit, cli, verify
from photonsim.cli import main
from photonsim.detect import SideClass
from photonsim import gates


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_truth_table_cz(capsys):
    code, out, _ = run(capsys, "truth-table", "--gate", "cz", "--json")
    rows = json.loads(out)
    assert code == 0
    signs = {r["input"]: complex(*r["output"][["VV", "VH", "HV", "HH"].index(r["input"])]) for r in rows}
    assert signs["VV"] == pytest.approx(-1)
    for k in ("VH", "HV", "HH"):
        assert signs[k] == pytest.approx(1)
    assert all(r["p_accept"] == pytest.approx(0.0625) for r in rows)


def test_truth_table_cnot(capsys):
    rows = cli.truth_table("cnot", cli.DetectorModel(1, 1))
    swapped = {"VV": "VH", "VH": "VV", "HV": "HV", "HH": "HH"}
    for r in rows:
        k = gates.QUBIT_BASIS.index(swapped[r["input"]])
        assert abs(r["output"][k]) == pytest.approx(1, abs=1e-10)
        assert r["p_accept"] == pytest.approx(0.0625)
        assert r["fidelity"] == pytest.approx(1, abs=1e-10)


def test_truth_table_eta_zero_warns(capsys):
    code, out, err = run(capsys, "truth-table", "--eta", "0")
    assert code == 0 and "warning" in err


def test_invalid_flag_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["truth-table", "--eta", "1.5"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["truth-table", "--gate", "swap"])
    assert e.value.code == 2


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_sweep_scheme1_spot_value(capsys):
    code, out, _ = run(capsys, "sweep", "--scheme", "1", "--eta", "1", "--eta2", "0")
    (row,) = read_csv(out)
    assert code == 0
    assert list(row) == cli.CSV_COLUMNS
    assert float(row["p_false_formula"]) == 0.3125
    assert float(row["p_true_sim"]) == pytest.approx(0.0625)


def test_sweep_scheme3(capsys):
    _, out, _ = run(capsys, "sweep", "--scheme", "3", "--eta", "1", "--eta2", "1")
    (row,) = read_csv(out)
    assert float(row["p_true_formula"]) == 0.25
    assert float(row["p_true_sim"]) == pytest.approx(0.25, abs=1e-12)


def test_sweep_empty_range_header_only(tmp_path, capsys):
    out = tmp_path / "e.csv"
    code, _, _ = run(capsys, "sweep", "--eta", "0:1", "--eta-steps", "0", "--out", str(out))
    assert code == 0
    assert out.read_text() == ",".join(cli.CSV_COLUMNS) + "\n"


def test_sweep_unwritable_exit_3(tmp_path, capsys):
    code, _, err = run(capsys, "sweep", "--eta", "1", "--eta2", "1", "--out", str(tmp_path / "no" / "x.csv"))
    assert code == 3 and "cannot write" in err


def test_sweep_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert run(capsys, "sweep", "--eta", "0.3:1", "--eta-steps", "3", "--eta2", "0,1", "--out", str(p))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_run_shipped_matches_truth_table(capsys):
    code, out, _ = run(capsys, "run", "--circuit", "scheme1", "--input", "HH", "--json")
    doc = json.loads(out)
    row = next(r for r in cli.truth_table("cz", cli.DetectorModel(1, 1)) if r["input"] == "HH")
    assert code == 0
    assert doc["p_accept"] == pytest.approx(row["p_accept"], abs=1e-12)
    assert doc["fidelity"] == pytest.approx(row["fidelity"], abs=1e-10)


def test_run_text_output(capsys):
    code, out, _ = run(capsys, "run", "--circuit", "scheme1_lossy", "--input", "0.5,0,0.5,0,0.5,0,0.5,0")
    assert code == 0
    assert "p_accept 0.0625" in out


def test_run_bad_circuit_exit_2(tmp_path, capsys):
    doc = json.loads(json.dumps(circuit.shipped_documents()["scheme1"]))
    doc["elements"][7]["modes"][0] = "0a"
    bad = tmp_path / "bad.circuit"
    bad.write_text(json.dumps(doc))
    code, _, err = run(capsys, "run", "--circuit", str(bad), "--input", "HH")
    assert code == 2
    assert "elements[7].modes[0]" in err


def test_run_missing_file_exit_3(tmp_path, capsys):
    code, _, _ = run(capsys, "run", "--circuit", str(tmp_path / "none.circuit"), "--input", "HH")
    assert code == 3


def test_run_bad_input_exit_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["run", "--circuit", "scheme1", "--input", "1,2,3"])
    assert e.value.code == 2


def test_verify_filter(capsys):
    code, out, _ = run(capsys, "verify", "--filter", "scheme3")
    names = [line.split()[1] for line in out.splitlines() if line.startswith("[")]
    assert code == 0 and names and all(n.startswith("scheme3.") for n in names)


def test_verify_reports_p_false_deviation():
    (res,) = verify.run_checks("scheme1.p_false")
    assert res.status in (verify.AGREEMENT, verify.DEVIATION)
    assert "0.3125" in res.detail and "0.1875" in res.detail


def test_corrupted_table_fails_unification():
    bad = dict(gates.default_table())
    bad[SideClass.SAME_PORT_7] = (0.0, 0.0)
    (res,) = verify.run_checks("sixteen_branch_unification", table=bad)
    assert res.status == verify.FAIL


def test_full_verify_under_a_minute():
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "photonsim", "verify"], capture_output=True, text=True)
    assert time.perf_counter() - t0 < 60
    assert proc.returncode == 0, proc.stdout + proc.stderr
