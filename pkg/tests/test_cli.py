import subprocess
import sys
from pathlib import Path

import pytest

from adriana import config_io
from adriana.cli import main
from conftest import FIXTURE_DIR, FILES, ROOT

CONFIRMED = str(FIXTURE_DIR / FILES["confirmed"])


@pytest.fixture(scope="module")
def series(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli")
    assert main(["ingest", "--data", CONFIRMED, "--out", str(out)]) == 0
    return out / "series.csv"


def test_ingest(series, tmp_path):
    lines = series.read_text().splitlines()
    assert lines[0] == "date,value" and len(lines) == 459
    assert main(["--out", str(tmp_path), "ingest", "--data", CONFIRMED, "--cumulative", "--name", "c.csv"]) == 0
    cum = [float(l.split(",")[1]) for l in (tmp_path / "c.csv").read_text().splitlines()[1:]]
    daily = [float(l.split(",")[1]) for l in lines[1:]]
    assert sum(daily) == pytest.approx(cum[-1])


def test_ingest_unknown_country_is_validation_error(tmp_path, capsys):
    assert main(["ingest", "--data", CONFIRMED, "--country", "Atlantis", "--out", str(tmp_path)]) == 1
    assert "CountryNotFound" in capsys.readouterr().err


def test_missing_file_is_validation_error(tmp_path):
    assert main(["ingest", "--data", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 1


def test_bad_seed(tmp_path):
    assert main(["seir", "--seed", "-1", "--out", str(tmp_path)]) == 1


def test_analyze(series, tmp_path):
    assert main(["analyze", "--data", str(series), "--diff", "1", "--lags", "5", "--out", str(tmp_path)]) == 0
    acf = (tmp_path / "acf.csv").read_text().splitlines()
    assert acf[0] == "lag,value,band" and len(acf) == 7 and acf[1].startswith("0,1.0,")
    assert len((tmp_path / "pacf.csv").read_text().splitlines()) == 7
    assert "p-value" in (tmp_path / "adf.txt").read_text()


def test_train_forecast_evaluate(series, tmp_path):
    a = ["train", "--model", "mlp", "--data", str(series), "--set", "neurons=6", "--set", "window_size=4",
         "--set", "max_epochs=3", "--out", str(tmp_path)]
    assert main(a) == 0
    assert main(["train", "--model", "LR", "--data", str(series), "--set", "window_size=4",
                 "--name", "lr.json", "--out", str(tmp_path)]) == 0
    assert main(["forecast", "--model", str(tmp_path / "model.json"), "--data", str(series),
                 "--horizon", "12", "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "forecast.csv").read_text().splitlines()) == 13
    assert main(["evaluate", "--data", str(series), "--models", str(tmp_path / "model.json"),
                 str(tmp_path / "lr.json"), "--out", str(tmp_path)]) == 0
    rank = (tmp_path / "ranking.csv").read_text().splitlines()
    assert len(rank) == 3 and {r.split(",")[0] for r in rank[1:]} == {"MLP", "LR"}


def test_forecast_horizon_cap(series, tmp_path):
    main(["train", "--model", "LR", "--data", str(series), "--set", "window_size=3", "--out", str(tmp_path)])
    assert main(["forecast", "--model", str(tmp_path / "model.json"), "--data", str(series),
                 "--horizon", "501", "--out", str(tmp_path)]) == 1


def test_bad_hyperparameter(series, tmp_path):
    assert main(["train", "--model", "mlp", "--data", str(series), "--set", "neurons=0",
                 "--out", str(tmp_path)]) == 1


def test_optimize(series, tmp_path):
    assert main(["optimize", "--model", "mlp", "--data", str(series), "--generations", "2",
                 "--population", "4", "--epochs", "2", "--folds", "3", "--out", str(tmp_path)]) == 0
    hist = (tmp_path / "ga_history.csv").read_text().splitlines()
    assert hist[0] == "generation,best,mean" and len(hist) == 3
    best = config_io.load(tmp_path / "best_params.toml")
    assert 1 <= best["neurons"] <= 128 and 1 <= best["window_size"] <= 30


def test_seir(tmp_path, capsys):
    assert main(["seir", "--days", "50", "--beta", "0.4", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "seir.csv").read_text().splitlines()
    assert len(rows) == 52 and "R0 4" in capsys.readouterr().out
    assert main(["seir", "--gamma", "0", "--out", str(tmp_path)]) == 1
    assert main(["seir", "--init", "1,2,3", "--out", str(tmp_path)]) == 1


def test_des_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["des", "--days", "60", "--seed", "5", "--out", str(d)]) == 0
    assert (a / "des_report.csv").read_bytes() == (b / "des_report.csv").read_bytes()
    arr = tmp_path / "arr.csv"
    arr.write_text("time\n0.5\n1.5\n1.0\n")
    assert main(["des", "--arrivals", str(arr), "--days", "5", "--out", str(tmp_path)]) == 1


def test_run_horizon_too_large(tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--config", str(ROOT / "configs" / "pipeline.toml"), "--horizon", "501",
                 "--out", str(out)]) == 1
    assert not out.exists()


def test_run_small(tmp_path):
    cfg = config_io.load(ROOT / "configs" / "pipeline.toml")
    cfg["data"] = {k: str(FIXTURE_DIR / f) for k, f in FILES.items()}
    cfg["des"] = "des-default"
    cfg["series"] = ["death"]
    cfg["model"] = {"kind": "MLP", "neurons": 4, "window_size": 3, "max_epochs": 2}
    cfg["seir"]["days"] = 40
    path = tmp_path / "c.toml"
    path.write_text(config_io.dumps(cfg))
    assert main(["run", "--config", str(path), "--horizon", "7", "--out", str(tmp_path / "r")]) == 0
    assert len((tmp_path / "r" / "death" / "forecast.csv").read_text().splitlines()) == 8
    # a stage failing on unreadable input is an input error
    cfg["data"]["death"] = str(tmp_path / "missing.csv")
    path.write_text(config_io.dumps(cfg))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "r2")]) == 1


def test_runtime_failure_exit_code(monkeypatch, tmp_path):
    from adriana import seir
    from adriana.errors import StepProducedNaN

    def boom(*a, **k):
        raise StepProducedNaN("nan")

    monkeypatch.setattr(seir, "simulate", boom)
    assert main(["seir", "--out", str(tmp_path)]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "adriana.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("adriana ")
