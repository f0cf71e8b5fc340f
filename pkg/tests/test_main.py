from __future__ import annotations

import json

import pytest

from rhsim.main import EXIT_FAILED, EXIT_OK, EXIT_USAGE, _sweep_values, main


def test_scenario_command(tmp_path, capsys):
    assert main(["scenario", "nashville", "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "scenario-nashville.json").read_text())
    assert report["passed"]
    assert "assertions hold" in capsys.readouterr().out
    assert main(["scenario", "table2_fixture", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "scenario-table2_fixture.json").exists()


def test_missing_files_are_usage_errors(tmp_path):
    assert main(["scenario", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert main(["bench", "--config", "nope.json", "--seed", "1"]) == EXIT_USAGE
    assert main(["verify-chain", str(tmp_path / "blocks.jsonl")]) == EXIT_USAGE


def test_bench_command(tmp_path):
    args = ["bench", "--seed", "3", "--rides", "2", "--out", str(tmp_path)]
    assert main(args + ["--delay-ms", "0"]) == EXIT_USAGE
    assert main(args[:1] + ["--rides", "2"]) == EXIT_USAGE
    assert main(args + ["--stem", "small"]) == EXIT_OK
    rows = (tmp_path / "small.csv").read_text().splitlines()
    assert len(rows) == 13
    summary = json.loads((tmp_path / "small.json").read_text())
    assert summary["config"]["seed"] == 3
    assert summary["counts"]["valid"] == 12


def test_bench_with_poisson_and_pi_peers(tmp_path):
    args = [
        "bench",
        "--seed",
        "3",
        "--rides",
        "1",
        "--profile",
        "poisson",
        "--lambda-interarrival-ms",
        "50",
        "--node-profile",
        "pi",
        "--out",
        str(tmp_path),
    ]
    assert main(args) == EXIT_OK
    summary = json.loads((tmp_path / "bench.json").read_text())
    assert summary["config"]["profile"] == "pi"
    assert summary["config"]["traffic"] == "poisson(20 tps)"
    assert main(args[:-2] + ["--node-profile", "mainframe"]) == EXIT_USAGE


def test_sweep_values():
    assert _sweep_values("peers", 1, 3, 1) == [1, 2, 3]
    assert _sweep_values("delay", 10, 20, 5) == [10.0, 15.0, 20.0]
    assert _sweep_values("lambda", 0.5, 1.0, 0.25) == [0.5, 0.75, 1.0]


def test_sweep_command(tmp_path):
    args = ["sweep", "--axis", "orgs", "--from", "1", "--to", "2", "--rides", "1"]
    assert main(args + ["--seed", "4", "--out", str(tmp_path)]) == EXIT_OK
    trend = (tmp_path / "trend-orgs.csv").read_text().splitlines()
    assert len(trend) == 3
    summary = json.loads((tmp_path / "orgs-1.json").read_text())
    assert summary["counts"]["valid"] == 6
    assert main(args + ["--seed", "4", "--policy", "CROSS_ORG:1"]) == EXIT_USAGE
    assert main(args + ["--seed", "4", "--step", "0"]) == EXIT_USAGE


def test_dump_and_verify_chain(tmp_path, capsys):
    assert main(["dump", "--out", str(tmp_path), "--file", "chain.jsonl"]) == EXIT_OK
    path = tmp_path / "chain.jsonl"
    assert main(["verify-chain", str(path)]) == EXIT_OK
    assert "ok:" in capsys.readouterr().out

    lines = path.read_text().splitlines()
    block = json.loads(lines[2])
    block["timestamp"] += 1
    lines[2] = json.dumps(block)
    path.write_text("\n".join(lines) + "\n")
    assert main(["verify-chain", str(path)]) == EXIT_FAILED
    assert "chain broken at height 3" in capsys.readouterr().out


def flip(text: str) -> str:
    return ("1" if text[0] == "0" else "0") + text[1:]


def test_verify_chain_covers_the_newest_block(tmp_path, capsys):
    assert main(["dump", "--out", str(tmp_path), "--file", "chain.jsonl"]) == EXIT_OK
    path = tmp_path / "chain.jsonl"
    pristine = path.read_text().splitlines()
    newest = len(pristine) - 2
    capsys.readouterr()

    lines = list(pristine)
    block = json.loads(lines[newest])
    block["txs"][0]["tx_id"] = flip(block["txs"][0]["tx_id"])
    lines[newest] = json.dumps(block)
    path.write_text("\n".join(lines) + "\n")
    assert main(["verify-chain", str(path)]) == EXIT_FAILED
    assert f"chain broken at height {newest}" in capsys.readouterr().out

    lines = list(pristine)
    block = json.loads(lines[3])
    block["data_hash"] = flip(block["data_hash"])
    lines[3] = json.dumps(block)
    path.write_text("\n".join(lines) + "\n")
    assert main(["verify-chain", str(path)]) == EXIT_FAILED
    assert "chain broken at height 3" in capsys.readouterr().out

    path.write_text("\n".join(pristine[:-1]) + "\n")
    assert main(["verify-chain", str(path)]) == EXIT_FAILED


def test_dump_unknown_peer(tmp_path):
    args = ["dump", "table2_fixture", "--peer", "peer9.Org1PeerOrg", "--out", str(tmp_path)]
    assert main(args) == EXIT_USAGE


@pytest.mark.parametrize("scenario", ["Eclipse", "MaliciousQuery", "StaleEndorser"])
def test_adversary_command(tmp_path, scenario):
    args = ["adversary", "--scenario", scenario, "--seed", "2", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    verdict = json.loads((tmp_path / f"adversary-{scenario}.json").read_text())
    assert verdict["passed"]


def test_unknown_command():
    with pytest.raises(SystemExit) as e:
        main(["mine"])
    assert e.value.code == 2
