import pathlib

import pytest

from rismec.cli import main


def test_run_writes_outputs(tmp_path):
    out = tmp_path / "res"
    rc = main(["run", "--set", "num_slots=5", "--set", "ce_mode=perfect",
               "--seed", "3", "--out", str(out)])
    assert rc == 0
    trace = (out / "trace.csv").read_text()
    summary = (out / "summary.csv").read_text()
    assert "q_local_u0" in trace
    assert "max_final_latency_s" in summary
    assert "# rng_seed = 3" in trace


def test_run_reads_config_file_and_overrides(tmp_path):
    cfgfile = tmp_path / "scenario.cfg"
    cfgfile.write_text("num_slots = 4\nce_mode = perfect\n# comment\n")
    rc = main(["run", "--config", str(cfgfile), "--set", "num_ues=2"])
    assert rc == 0


def test_run_dump_channels(tmp_path):
    dump = tmp_path / "chan.csv"
    rc = main(["run", "--set", "num_slots=2", "--dump-channels", str(dump)])
    assert rc == 0
    lines = dump.read_text().strip().splitlines()
    assert lines[0] == "slot,ue,antenna,re,im"
    assert len(lines) > 1


def test_sweep_writes_summary(tmp_path):
    out = tmp_path / "sw"
    rc = main(["sweep", "--axis", "tau", "--values", "0.1,0.2",
               "--seeds", "2", "--workers", "1", "--out", str(out),
               "--set", "num_slots=5", "--set", "ce_mode=perfect"])
    assert rc == 0
    text = (out / "summary.csv").read_text()
    rows = [l for l in text.splitlines() if l and not l.startswith("#")]
    assert len(rows) == 1 + 4      # header + 2 values x 2 seeds


def test_sweep_range_expansion(tmp_path, capsys):
    rc = main(["sweep", "--axis", "tau", "--values", "0.1:0.3:0.1",
               "--seeds", "1", "--workers", "1",
               "--set", "num_slots=3", "--set", "ce_mode=perfect"])
    assert rc == 0
    rows = [l for l in capsys.readouterr().out.splitlines()
            if l and not l.startswith("#") and not l.startswith("axis")]
    assert len(rows) == 3


def test_sweep_ce_axis(tmp_path):
    out = tmp_path / "ce"
    rc = main(["sweep", "--axis", "ce", "--values", "64:0.5,64:0.9",
               "--seeds", "1", "--workers", "1", "--out", str(out),
               "--set", "num_slots=3"])
    assert rc == 0
    assert (out / "summary.csv").exists()


def test_bad_config_key_is_reported(capsys):
    rc = main(["run", "--set", "bogus=1"])
    assert rc == 2
    assert "configuration error" in capsys.readouterr().err
