"""
Test Suite for the Command-Line Interface
End-to-end encode, damage, repair, verify, report and simulate runs
"""

import json
import os
import sys

import pandas as pd
import pytest

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from agents.coordinator import RepairCoordinator
from main import EXIT_AUDIT, EXIT_OK, EXIT_REJECTED, main, smallest_rs_field

ARRAY13 = ["--racks", "4", "--rack-size", "3", "--k", "7", "--helpers", "3"]


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    """Logs go to a temporary directory and no budget override leaks in"""
    monkeypatch.setenv("RACKCODE_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.delenv("RACKCODE_BUDGET", raising=False)
    monkeypatch.delenv("RACKCODE_FIELD_SEED", raising=False)
    return tmp_path


def test_params_command(capsys):
    assert main(["params", *ARRAY13]) == EXIT_OK
    out = capsys.readouterr().out
    described = json.loads(out[:out.rindex("}") + 1])
    assert described["q"] == 13 and described["ell"] == 16 and described["s_bar"] == 2


def test_params_rejected():
    assert main(["params", "--racks", "4", "--rack-size", "3", "--k", "7",
                 "--helpers", "3", "--q", "7"]) == EXIT_REJECTED
    assert main(["params", "--racks", "4", "--rack-size", "3", "--k", "7"]) == EXIT_REJECTED


def test_smallest_rs_field():
    assert smallest_rs_field(2) == 3
    assert smallest_rs_field(3) == 7
    assert smallest_rs_field(4) == 5


def test_encode_damage_repair_verify(isolated):
    cw = str(isolated / "cw.json")
    damaged = str(isolated / "damaged.json")
    fixed = str(isolated / "fixed.json")
    assert main(["encode", *ARRAY13, "--seed", "3", "--out", cw]) == EXIT_OK
    assert main(["verify", "--in", cw, "--budget", "40"]) == EXIT_OK
    assert main(["damage", "--in", cw, "--out", damaged, "--host", "1",
                 "--failed", "0", "2"]) == EXIT_OK
    assert main(["repair", "--in", damaged, "--out", fixed]) == EXIT_OK

    transcript = json.loads((isolated / "fixed.transcript.json").read_text())
    assert transcript["scheme"] == "base"
    assert transcript["failed"] == [0, 2]
    assert transcript["downloaded_symbols"] == 48
    assert transcript["accessed_symbols"] == 72
    assert transcript["ok"] is True

    original = json.loads(open(cw).read())
    repaired = json.loads(open(fixed).read())
    assert repaired["columns"] == original["columns"]
    assert repaired["erased"] == []


def test_nothing_to_repair(isolated):
    cw = str(isolated / "cw.json")
    assert main(["encode", *ARRAY13, "--out", cw]) == EXIT_OK
    assert main(["repair", "--in", cw, "--out", str(isolated / "x.json")]) == EXIT_REJECTED


def test_damage_rejects_bad_targets(isolated):
    cw = str(isolated / "cw.json")
    out = str(isolated / "d.json")
    assert main(["encode", *ARRAY13, "--out", cw]) == EXIT_OK
    assert main(["damage", "--in", cw, "--out", out, "--host", "4", "--failed", "0"]) \
        == EXIT_REJECTED
    assert main(["damage", "--in", cw, "--out", out, "--host", "0", "--failed", "3"]) \
        == EXIT_REJECTED
    assert main(["damage", "--in", cw, "--out", out, "--host", "0", "--failed", "1",
                 "--corrupt", "0"]) == EXIT_REJECTED


def test_corruption_beyond_tolerance_fails_audit(isolated):
    """e_bar = 0 cannot see a corrupted helper: the repair is wrong and the audit says so"""
    cw = str(isolated / "cw.json")
    damaged = str(isolated / "damaged.json")
    assert main(["encode", *ARRAY13, "--out", cw]) == EXIT_OK
    assert main(["damage", "--in", cw, "--out", damaged, "--host", "0", "--failed", "1",
                 "--corrupt", "2"]) == EXIT_OK
    assert main(["repair", "--in", damaged, "--out", str(isolated / "bad.json")]) == EXIT_AUDIT


def test_missing_input_file(isolated):
    assert main(["verify", "--in", str(isolated / "absent.json")]) == EXIT_REJECTED


def test_store_and_report(isolated):
    cw = str(isolated / "cw.json")
    store = str(isolated / "store")
    assert main(["encode", *ARRAY13, "--out", cw]) == EXIT_OK
    for host in (0, 3):
        damaged = str(isolated / f"d{host}.json")
        assert main(["damage", "--in", cw, "--out", damaged, "--host", str(host),
                     "--failed", "1"]) == EXIT_OK
        assert main(["repair", "--in", damaged, "--out", str(isolated / f"r{host}.json"),
                     "--store", store]) == EXIT_OK

    csv_path = isolated / "report.csv"
    assert main(["report", "--in", store, "--out", str(csv_path)]) == EXIT_OK
    frame = pd.read_csv(csv_path)
    assert sorted(frame["host"]) == [0, 3]
    assert set(frame["downloaded_symbols"]) == {24}
    assert main(["report", "--in", str(isolated / "empty"), "--out", str(csv_path)]) \
        == EXIT_REJECTED


def test_simulate_command(isolated):
    prefix = str(isolated / "sim")
    assert main(["simulate", *ARRAY13, "--h", "2", "--runs", "2", "--name", "cli",
                 "--out", prefix]) == EXIT_OK
    data = json.loads(open(prefix + ".json").read())
    assert data["name"] == "cli"
    assert data["runs_checked"] == 4 * 3 * 2
    assert all(r["downloaded"] == 48 for r in data["records"])
    assert len(pd.read_csv(prefix + ".csv")) == 24


def test_simulate_rejects_extended_without_spare_rack(isolated):
    assert main(["simulate", *ARRAY13, "--h", "3", "--out", str(isolated / "x")]) \
        == EXIT_REJECTED


def test_rs_round_trip(isolated):
    """RS codeword files carry K elements as coefficient lists"""
    rs = ["--kind", "rs", "--racks", "3", "--rack-size", "2", "--k", "3", "--helpers", "2"]
    cw = str(isolated / "rs.json")
    damaged = str(isolated / "rs_d.json")
    fixed = str(isolated / "rs_f.json")
    assert main(["encode", *rs, "--out", cw]) == EXIT_OK
    assert main(["damage", "--in", cw, "--out", damaged, "--host", "2",
                 "--failed", "1"]) == EXIT_OK
    assert main(["repair", "--in", damaged, "--out", fixed,
                 "--transcript", str(isolated / "rs_t.json")]) == EXIT_OK
    transcript = json.loads((isolated / "rs_t.json").read_text())
    assert transcript["code"] == "rs"
    assert transcript["downloaded_symbols"] == 210
    assert json.loads(open(fixed).read())["columns"] == json.loads(open(cw).read())["columns"]


def test_flag_ranges_checked_before_work():
    assert main(["params", *ARRAY13, "--errors", "-1"]) == EXIT_REJECTED
    assert main(["simulate", *ARRAY13, "--budget", "0"]) == EXIT_REJECTED


def test_zero_budget_in_environment_rejected(isolated, monkeypatch):
    cw = str(isolated / "cw.json")
    assert main(["encode", *ARRAY13, "--out", cw]) == EXIT_OK
    monkeypatch.setenv("RACKCODE_BUDGET", "0")
    assert main(["verify", "--in", cw]) == EXIT_REJECTED
    assert main(["simulate", *ARRAY13, "--out", str(isolated / "sim")]) == EXIT_REJECTED


def test_repair_audits_helper_access(isolated, monkeypatch):
    """A repair that reads more than ell / s_bar per helper node fails the audit"""
    cw = str(isolated / "cw.json")
    damaged = str(isolated / "damaged.json")
    assert main(["encode", *ARRAY13, "--out", cw]) == EXIT_OK
    assert main(["damage", "--in", cw, "--out", damaged, "--host", "2",
                 "--failed", "1"]) == EXIT_OK

    original = RepairCoordinator.process_repair

    def over_reading(self, *args, **kwargs):
        recovered, transcript = original(self, *args, **kwargs)
        transcript.accessed_per_node = 16
        return recovered, transcript

    monkeypatch.setattr(RepairCoordinator, "process_repair", over_reading)
    out = str(isolated / "fixed.json")
    assert main(["repair", "--in", damaged, "--out", out]) == EXIT_AUDIT
    transcript = json.loads((isolated / "fixed.transcript.json").read_text())
    assert transcript["ok"] is False
    assert "access audit" in transcript["note"]
