from __future__ import annotations

import json

import pytest

from dnsamp.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main


def test_run_attack_writes_report(tmp_path, capsys):
    rc = main(["run-attack", "--variant", "b", "--n", "37", "--requests", "1", "--fetch-policy", "fetch-all",
               "--out", str(tmp_path), "--no-timestamp"])
    assert rc == EXIT_OK
    report = json.loads((tmp_path / "report-b.json").read_text())
    assert report["victim_cost_pkts"] == 148 and report["PAF"] == 74.0
    assert report["timestamp"] is None and report["scenario"]["n"] == 37
    assert (tmp_path / "series-b.csv").read_text().splitlines()[1] == "1,150,148,2"
    assert "PAF=74.00" in capsys.readouterr().out


def test_honest_run(tmp_path, capsys):
    assert main(["run-attack", "--variant", "honest", "--out", str(tmp_path)]) == EXIT_OK
    assert "resolver_upstream_pkts=6 PAF=n/a" in capsys.readouterr().out


def test_reproducible_bytes(tmp_path):
    args = ["run-attack", "--variant", "a", "--n", "20", "--seed", "3", "--no-timestamp"]
    main([*args, "--out", str(tmp_path / "one")])
    main([*args, "--out", str(tmp_path / "two")])
    assert (tmp_path / "one/report-a.json").read_bytes() == (tmp_path / "two/report-a.json").read_bytes()


def test_usage_errors(tmp_path, capsys):
    assert main(["bogus"]) == EXIT_USAGE
    assert main(["run-attack", "--variant", "q", "--out", str(tmp_path)]) == EXIT_USAGE
    assert "variant" in capsys.readouterr().err
    assert main(["run-attack", "--requests", "many"]) == EXIT_USAGE
    assert main(["compare", "--policies", "fetch-all", "--out", str(tmp_path)]) == EXIT_USAGE


def test_infeasible_exit_code(tmp_path):
    assert main(["run-attack", "--breadth-cap", "0", "--out", str(tmp_path)]) == EXIT_INFEASIBLE


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "sc.json"
    cfg.write_text(json.dumps({"variant": "b", "n": 10, "requests": 2}))
    assert main(["run-attack", "--config", str(cfg), "--requests", "3", "--out", str(tmp_path),
                 "--no-timestamp"]) == EXIT_OK
    report = json.loads((tmp_path / "report-b.json").read_text())
    assert report["scenario"]["n"] == 10 and report["requests"] == 3
    assert report["victim_cost_pkts"] == 3 * 40


def test_yaml_config(tmp_path):
    cfg = tmp_path / "sc.yaml"
    cfg.write_text("variant: a\nn: 5\nmax-rq: 75\ntc_model: forced-0\n")
    assert main(["run-attack", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "report-a.json").read_text())
    assert report["victim_cost_pkts"] == 20


def test_bad_config(tmp_path):
    cfg = tmp_path / "sc.json"
    cfg.write_text("[1, 2]")
    assert main(["run-attack", "--config", str(cfg)]) == EXIT_USAGE
    cfg.write_text('{"wavelength": 3}')
    assert main(["run-attack", "--config", str(cfg)]) == EXIT_USAGE
    assert main(["run-attack", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE


def test_compare(tmp_path, capsys):
    rc = main(["compare", "--variant", "b", "--requests", "10", "--policies", "fetch-all,maxfetch:1",
               "--out", str(tmp_path), "--no-timestamp"])
    assert rc == EXIT_OK
    doc = json.loads((tmp_path / "compare.json").read_text())
    row = doc["comparisons"][0]["rows"]["resolver_upstream_pkts"]
    assert row == {"baseline": 1500, "mitigated": 60, "reduction": 25.0}
    assert (tmp_path / "compare.csv").exists() and (tmp_path / "series-1-maxfetch1.csv").exists()
    assert "25.00x" in capsys.readouterr().out


def test_compare_breadth_cap(tmp_path):
    rc = main(["compare", "--variant", "b", "--n", "20", "--breadth-cap", "4", "--policies", "fetch-all,fetch-all",
               "--out", str(tmp_path), "--no-timestamp"])
    assert rc == EXIT_OK
    doc = json.loads((tmp_path / "compare.json").read_text())
    assert [r["victim_cost_pkts"] for r in doc["reports"]] == [16, 16]
    assert doc["comparisons"][0]["rows"]["resolver_upstream_pkts"]["reduction"] == 1.0


def test_analyze_bailiwick(tmp_path, capsys):
    src = tmp_path / "ns.jsonl"
    src.write_text('{"domain": "example.com", "rcode": "NOERROR", "nameservers": '
                   '[{"name": "ns.child.example.com", "glue": ["192.0.2.1"]}, {"name": "ns.example.net"}]}\n'
                   "garbage\n")
    assert main(["analyze-bailiwick", str(src), "--out", str(tmp_path)]) == EXIT_OK
    stats = json.loads((tmp_path / "bailiwick.json").read_text())
    assert stats["total_ns"] == 2 and stats["malformed_lines"] == 1
    assert (tmp_path / "bailiwick-ns_count_histogram.csv").read_text() == "bucket,count\n2,1\n"
    assert "line 2" in capsys.readouterr().err


def test_analyze_missing_input(tmp_path):
    assert main(["analyze-bailiwick", str(tmp_path / "nope.jsonl")]) == EXIT_USAGE


def test_report_rerender(tmp_path):
    main(["run-attack", "--variant", "b", "--requests", "2", "--out", str(tmp_path), "--no-timestamp"])
    assert main(["report", str(tmp_path / "report-b.json"), "--out", str(tmp_path / "r")]) == EXIT_OK
    series = (tmp_path / "r/report-b-series.csv").read_text().splitlines()
    assert series == ["request,resolver_upstream_pkts,victim_pkts,attacker_pkts", "1,150,148,2", "2,300,296,4"]
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["report", str(bad)]) == EXIT_USAGE


def test_module_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "dnsamp", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "run-attack" in out.stdout


@pytest.mark.parametrize("flag", ["--loss-capacity", "--breadth-cap"])
def test_optional_int_flags_accept_none(tmp_path, flag):
    assert main(["run-attack", flag, "none", "--out", str(tmp_path)]) == EXIT_OK
