from muga.cli import main


def test_run_writes_csvs_and_prints_summary(tmp_path, capsys):
    out = tmp_path / "exp"
    code = main(["run", "--n", "40", "--mu", "2", "--pc", "0.5",
                 "--tie-break", "uniform", "--runs", "3", "--seed", "5",
                 "--out", str(out)])
    assert code == 0
    captured = capsys.readouterr().out
    assert "evaluations: mean" in captured
    for name in ("runs.csv", "levels.csv", "diversity.csv"):
        assert (out / name).exists()


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("n = 30\nmu = 2\npc = 0.5\ntie-break = uniform\nruns = 2\nseed = 4\n")
    code = main(["run", "--config", str(cfg), "--runs", "3"])
    assert code == 0
    assert "runs: 3" in capsys.readouterr().out  # flag beats file


def test_bad_flag_value_exits_one(capsys):
    assert main(["run", "--n", "-5"]) == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_config_key_exits_one(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("banana = 7\n")
    assert main(["run", "--config", str(cfg)]) == 1
    assert "banana" in capsys.readouterr().err


def test_unwritable_output_exits_two(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code = main(["run", "--n", "20", "--runs", "1", "--out", str(blocker / "sub")])
    assert code == 2
    assert "i/o error" in capsys.readouterr().err


def test_missing_config_file_exits_two(capsys):
    assert main(["run", "--config", "/nonexistent/path.cfg"]) == 2


def test_theory_prints_predictions(capsys):
    assert main(["theory", "--n", "200", "--chi", "1.0", "--pc", "0.6"]) == 0
    out = capsys.readouterr().out
    assert "34365.6" in out
    assert "0.9836065573770493" in out
    assert "0.2222222" in out


def test_check_unbiased_exact_mutation(capsys):
    assert main(["check-unbiased", "--op", "mutation", "--n", "4",
                 "--mode", "exact", "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "max deviation: 0.0" in out
    assert "pass: True" in out


def test_check_unbiased_sampling_tiebreak(capsys):
    assert main(["check-unbiased", "--op", "tiebreak", "--n", "6", "--mu", "2",
                 "--samples", "4000", "--seed", "2"]) == 0
    assert "pass: True" in capsys.readouterr().out


def test_compare_command(tmp_path, capsys):
    a = tmp_path / "a.cfg"
    b = tmp_path / "b.cfg"
    a.write_text("n = 40\nmu = 2\npc = 0.6\ntie-break = diversity\nruns = 3\n")
    b.write_text("n = 40\nmu = 2\npc = 0.6\ntie-break = uniform\nruns = 3\n")
    assert main(["compare", "--config-a", str(a), "--config-b", str(b),
                 "--seed", "6"]) == 0
    out = capsys.readouterr().out
    assert "mean ratio A/B:" in out
    assert "significant" in out


def test_compare_identical_configs_unit_ratio(tmp_path, capsys):
    a = tmp_path / "a.cfg"
    a.write_text("n = 40\nmu = 2\npc = 0.5\ntie-break = uniform\nruns = 2\n")
    assert main(["compare", "--config-a", str(a), "--config-b", str(a)]) == 0
    assert "mean ratio A/B: 1.000000" in capsys.readouterr().out


def test_flat_command(tmp_path, capsys):
    out = tmp_path / "flat"
    code = main(["flat", "--n", "60", "--mu", "2", "--pc", "0.5",
                 "--steps", "5000", "--seed", "3", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "time-average S" in printed
    assert (out / "flat_bins.csv").exists()
