import json
import subprocess
import sys

import numpy as np
import pytest

from coldsim.analytics import lower_bound, upper_bound
from coldsim.cli import EXIT_CONFIG, EXIT_INGEST, EXIT_NUMERIC, main
from coldsim.config import (
    SWEEP_COLUMNS,
    ConfigError,
    IngestError,
    dump_config,
    emit_sweep_csv,
    ingest_exchange_log,
    parse_config,
    parse_config_text,
    read_sweep_csv,
)
from coldsim.carrier import RateParams
from coldsim.hard_error import HardErrorParams
from coldsim.simulation import SimConfig, outcomes_csv, run_batch, sweep
from coldsim.states import enumerate_states

REFERENCE_FILE = """\
# reference parameters written out in full
n = 4
k = 2
lambda_per_hour = 1/50000
mu_per_hour = 1/24
theta_per_hour = 1/8760
kappa = 0.001
ucer = 1e-19
tape_capacity_bytes = 6e12
trials = 10000
"""

FAST = "n = 2\nk = 1\nlambda_per_hour = 0.005\ntheta_per_hour = 0.1\nmu_per_hour = 0.5\ntrials = 40\nseed = 17\n"


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


# --- config -----------------------------------------------------------------

def test_empty_config_requires_n_and_k():
    with pytest.raises(ConfigError, match="'n'.*required"):
        parse_config_text("")
    with pytest.raises(ConfigError, match="'k'"):
        parse_config_text("n = 4\n")


def test_defaults_are_the_reference_values():
    cfg = parse_config_text("n = 4\nk = 2\n")
    assert cfg.sim == SimConfig(4, 2)
    r, h = cfg.sim.rates, cfg.sim.hard_error
    assert (r.lam, r.mu, r.theta) == (1 / 50000, 1 / 24, 1 / 8760)
    assert (h.kappa, h.ucer, h.capacity_bytes, cfg.sim.trials) == (0.001, 1e-19, 6e12, 10000)


def test_explicit_reference_file_equals_defaults():
    assert parse_config_text(REFERENCE_FILE).sim == SimConfig(4, 2)


def test_negative_rate_names_the_key():
    with pytest.raises(ConfigError, match="lambda") as info:
        parse_config_text("n = 4\nk = 2\nlambda_per_hour = -1\n")
    assert info.value.key == "lambda_per_hour" and info.value.line == 3


@pytest.mark.parametrize(
    "text,key,line",
    [
        ("n = 4\nk = 2\nlamda = 1\n", "lamda", 3),
        ("n = 4\nn = 5\n", "n", 2),
        ("n = four\n", "n", 1),
        ("n = 4\nk = 2\nmode = fast\n", "mode", 3),
        ("n = 4\nk = 5\n", "k", 2),
        ("n = 4\nk = 2\nkappa = 1\n", "kappa", 3),
        ("n = 4\nk = 2\nsweep_grid = 3,2\n", "sweep_grid", 3),
    ],
)
def test_bad_entries_cite_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text)
    assert info.value.key == key and info.value.line == line


def test_malformed_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("n = 4\njust words\n")


def test_round_trip():
    text = FAST + "phi_per_hour = inf\nomega_xph = 0.3\nmode = approx\nucer_unit = byte\n" \
        "sweep_axis = exchange_rate\nsweep_grid = 1, 2.5, 10\noutput = out.csv\ntrials_csv = t.csv\n"
    cfg = parse_config_text(text)
    again = parse_config_text(dump_config(cfg))
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)
    assert parse_config_text(dump_config(parse_config_text("n=3\nk=3\n"))) == parse_config_text("n=3\nk=3\n")


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(tmp_path / "absent.cfg")


# --- exchange log ingestion -------------------------------------------------

def test_ingest_simple(tmp_path):
    log = ingest_exchange_log(write(tmp_path, "x.csv", "100\n200\n300\n"))
    assert log.values == [100.0, 200.0, 300.0]
    assert (log.count, log.minimum, log.maximum, log.mean) == (3, 100.0, 300.0, 200.0)


def test_ingest_header_and_extra_columns(tmp_path):
    log = ingest_exchange_log(write(tmp_path, "x.csv", "\nexchanges,robot\n5,a\n\n7.5,b\n"))
    assert log.values == [5.0, 7.5]


def test_ingest_reports_bad_line(tmp_path):
    rows = ["10", "20", "30", "40", "50", "60", "-5", "80"]
    with pytest.raises(IngestError, match="line 7") as info:
        ingest_exchange_log(write(tmp_path, "x.csv", "\n".join(rows) + "\n"))
    assert info.value.line == 7
    with pytest.raises(IngestError, match="line 3"):
        ingest_exchange_log(write(tmp_path, "y.csv", "count\n1\nabc\n"))


def test_ingest_rejects_empty(tmp_path):
    with pytest.raises(IngestError):
        ingest_exchange_log(write(tmp_path, "x.csv", ""))
    with pytest.raises(IngestError):
        ingest_exchange_log(write(tmp_path, "y.csv", "header only\n"))


# --- sweep CSV --------------------------------------------------------------

def test_sweep_csv_round_trip(tmp_path):
    cfg = SimConfig(2, 1, rates=RateParams(lam=0.005, theta=0.1, mu=0.5), trials=20, seed=3)
    results = sweep(cfg, "exchange_rate", [1.0, 5.0, 25.0])
    path = tmp_path / "s.csv"
    emit_sweep_csv(results, path, 11.5, 99.25)
    text = path.read_text().splitlines()
    assert text[0] == ",".join(SWEEP_COLUMNS) and len(text) == 4
    rows = read_sweep_csv(path)
    for (value, s), row in zip(results, rows):
        assert row["axis_value"] == value
        assert row["mttdl_hours"] == s.mttdl and row["mttdu_stderr"] == s.mttdu_stderr
        assert (row["lower_bound_hours"], row["upper_bound_hours"]) == (11.5, 99.25)
    with pytest.raises(ValueError):
        emit_sweep_csv([], path, 0, 0)


# --- command line -----------------------------------------------------------

def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_states(capsys):
    code, out, _ = run_cli(capsys, "states", "--n", "4", "--k", "2")
    assert code == 0
    assert out == (
        "index,i,j,z,is_failure\n0,4,0,0,0\n1,3,1,0,0\n2,3,0,1,0\n"
        "3,2,2,0,0\n4,2,1,1,0\n5,2,0,2,0\n6,0,0,0,1\n"
    )
    code, out, _ = run_cli(capsys, "states", "--n", "3", "--k", "2", "--s", "4")
    assert code == 0 and len(out.splitlines()) == 1 + 5
    code, _, err = run_cli(capsys, "states", "--n", "2", "--k", "3")
    assert code == EXIT_CONFIG and "k" in err


def test_cli_fit(tmp_path, capsys):
    data = 491669 * np.random.default_rng(8).weibull(0.76, 40_000)
    src = write(tmp_path, "log.csv", "exchanges\n" + "\n".join(repr(float(v)) for v in data) + "\n")
    dst = tmp_path / "fit.json"
    assert run_cli(capsys, "fit", "--input", str(src), "--output", str(dst))[0] == 0
    first = dst.read_text()
    fit = json.loads(first)
    assert set(fit) == {"shape", "scale", "mean_exchanges", "r_squared", "n_samples"}
    assert fit["shape"] == pytest.approx(0.76, rel=0.05)
    assert fit["scale"] == pytest.approx(491669, rel=0.05)
    assert fit["n_samples"] == 40_000
    code, out, _ = run_cli(capsys, "fit", "--input", str(src))
    assert code == 0 and out == first
    bad = write(tmp_path, "bad.csv", "1\n2\n0\n")
    code, _, err = run_cli(capsys, "fit", "--input", str(bad))
    assert code == EXIT_INGEST and "line 3" in err
    same = write(tmp_path, "same.csv", "4\n4\n4\n")
    assert run_cli(capsys, "fit", "--input", str(same))[0] == EXIT_INGEST


def test_cli_bounds(tmp_path, capsys):
    path = write(tmp_path, "c.cfg", REFERENCE_FILE)
    code, out, _ = run_cli(capsys, "bounds", "--config", str(path))
    assert code == 0
    got = json.loads(out)
    eta = HardErrorParams().eta
    assert got["lower_bound_hours"] == lower_bound(4, 2, 1 / 50000, eta)
    assert got["upper_bound_hours"] == upper_bound(enumerate_states(4, 2), RateParams(), eta)
    assert got["upper_bound_linear_solve_hours"] == pytest.approx(got["upper_bound_hours"], rel=1e-9)
    assert got["ub_method"] == "fundamental" and got["n_states"] == 7
    assert run_cli(capsys, "bounds", "--config", str(path))[1] == out


def test_cli_simulate(tmp_path, capsys, monkeypatch):
    cfg_path = write(tmp_path, "c.cfg", FAST)
    csv_a, csv_b = tmp_path / "a.csv", tmp_path / "b.csv"
    code, out, _ = run_cli(capsys, "simulate", "--config", str(cfg_path), "--trials-csv", str(csv_a))
    assert code == 0
    summary = json.loads(out)
    expected = run_batch(parse_config(cfg_path).sim)
    assert csv_a.read_text() == outcomes_csv(expected.outcomes)
    assert summary["mttdl_hours"] == expected.mttdl and summary["seed"] == 17
    assert summary["trials"] == 40 and summary["mode"] == "exact"

    monkeypatch.setenv("COLDSIM_SEED", "99")
    run_cli(capsys, "simulate", "--config", str(cfg_path), "--trials-csv", str(csv_b))
    assert csv_b.read_text() != csv_a.read_text()
    run_cli(capsys, "simulate", "--config", str(cfg_path), "--trials-csv", str(csv_a), "--workers", "2")
    assert csv_a.read_text() == csv_b.read_text()

    monkeypatch.setenv("COLDSIM_SEED", "minus one")
    assert run_cli(capsys, "simulate", "--config", str(cfg_path))[0] == EXIT_CONFIG


def test_cli_simulate_uses_config_csv_path(tmp_path, capsys):
    dst = tmp_path / "trials.csv"
    cfg_path = write(tmp_path, "c.cfg", FAST + f"trials_csv = {dst}\n")
    assert run_cli(capsys, "simulate", "--config", str(cfg_path))[0] == 0
    assert dst.read_text().count("\n") == 41


def test_cli_sweep(tmp_path, capsys):
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    cfg_path = write(tmp_path, "c.cfg", FAST + "sweep_axis = carrier_repair_rate\nsweep_grid = 0.01, 1\n"
                     f"output = {out_b}\n")
    code, _, _ = run_cli(capsys, "sweep", "--config", str(cfg_path), "--axis", "exchange_rate",
                         "--grid", "0.5,2,8", "--output", str(out_a))
    assert code == 0
    rows = read_sweep_csv(out_a)
    assert [r["axis_value"] for r in rows] == [0.5, 2.0, 8.0]
    assert len({(r["lower_bound_hours"], r["upper_bound_hours"]) for r in rows}) == 1
    sim = parse_config(cfg_path).sim
    assert rows[1]["mttdu_hours"] == sweep(sim, "exchange_rate", [2.0])[0][1].mttdu
    # axis, grid and output fall back to the config file
    assert run_cli(capsys, "sweep", "--config", str(cfg_path))[0] == 0
    assert [r["axis_value"] for r in read_sweep_csv(out_b)] == [0.01, 1.0]


@pytest.mark.parametrize(
    "extra,expected",
    [(["--grid", "3,1", "--axis", "exchange_rate"], EXIT_CONFIG),
     (["--grid", "x", "--axis", "exchange_rate"], EXIT_CONFIG),
     (["--grid", "1,2"], EXIT_CONFIG)],
)
def test_cli_sweep_errors(tmp_path, capsys, extra, expected):
    cfg_path = write(tmp_path, "c.cfg", FAST)
    code = run_cli(capsys, "sweep", "--config", str(cfg_path), "--output", str(tmp_path / "o.csv"), *extra)[0]
    assert code == expected


def test_cli_config_errors(tmp_path, capsys):
    code, _, err = run_cli(capsys, "bounds", "--config", str(write(tmp_path, "c.cfg", "n = 4\nk = 2\nfoo = 1\n")))
    assert code == EXIT_CONFIG and "foo" in err and "line 3" in err
    assert run_cli(capsys, "bounds", "--config", str(tmp_path / "missing.cfg"))[0] == EXIT_CONFIG


def test_cli_numeric_failure_exit_code(tmp_path, capsys, monkeypatch):
    from coldsim import analytics, cli

    def boom(*args, **kwargs):
        raise analytics.SingularChainError("I - L is singular")

    monkeypatch.setattr(cli, "upper_bound", boom)
    code, _, err = run_cli(capsys, "bounds", "--config", str(write(tmp_path, "c.cfg", "n = 4\nk = 2\n")))
    assert code == EXIT_NUMERIC and "singular" in err


def test_module_entry_point():
    done = subprocess.run(
        [sys.executable, "-m", "coldsim", "states", "--n", "1", "--k", "1"],
        capture_output=True, text=True, check=True,
    )
    assert done.stdout == "index,i,j,z,is_failure\n0,1,0,0,0\n1,0,0,0,1\n"
