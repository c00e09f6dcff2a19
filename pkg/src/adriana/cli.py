"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, config_io
from . import data_ingest as di
from . import hospital_des as des
from . import metrics as mt
from . import pipeline as pl
from . import seir
from . import stationarity as st
from .errors import AdrianaError, InvalidSpec, RuntimeFailure, StageError, ValidationError
from .surrogates import ModelKind, ModelSpec, TrainedModel, fit_model

log = logging.getLogger("adriana")


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(text, encoding="utf-8")
    return p


def _read_series(path) -> np.ndarray:
    _, values = di.parse_series_csv(Path(path).read_text(encoding="utf-8"))
    return values


def _config_table(args, key=None) -> dict:
    if not args.config:
        return {}
    m = config_io.load(args.config)
    return m.get(key, {}) if key else m


# -- subcommands -------------------------------------------------------------

def cmd_ingest(args):
    series = di.read_jhu_csv(args.data)
    cum = di.select_country(series, args.country)
    if args.cumulative:
        text = di.format_series_csv(cum.dates, cum.values)
    else:
        daily = di.to_daily(cum, di.SeriesKind(args.kind))
        for w in daily.warnings:
            log.warning(w)
        text = di.format_series_csv(daily.dates, daily.values)
    p = _write(args.out, args.name, text)
    print(f"wrote {p}")


def cmd_analyze(args):
    x = _read_series(args.data).astype(float)
    for _ in range(args.diff):
        x, _ = st.difference(x, 1)
    vals, band = st.acf(x, args.lags)
    _write(args.out, "acf.csv", "lag,value,band\n" + "".join(
        f"{k},{v!r},{band!r}\n" for k, v in enumerate(vals.tolist())))
    pv = st.pacf(x, args.lags)
    _write(args.out, "pacf.csv", "lag,value\n" + "".join(f"{k},{v!r}\n" for k, v in enumerate(pv.tolist())))
    adf = st.adf_test(x, args.max_lag)
    _write(args.out, "adf.txt", adf.summary())
    print(adf.summary(), end="")


def cmd_optimize(args):
    kind = ModelKind.parse(args.model)
    if not kind.is_neural:
        raise InvalidSpec("optimize tunes lstm, gru or mlp")
    cfg = pl.PipelineConfig.from_file(args.config) if args.config else pl.PipelineConfig()
    cfg.model = {**cfg.model, "kind": kind.value}
    cfg.seed = args.seed
    if args.generations is not None:
        cfg.ga.generations = args.generations
    if args.population is not None:
        cfg.ga.population = args.population
    if args.epochs is not None:
        cfg.ga.max_epochs = args.epochs
    if args.folds is not None:
        cfg.ga.folds = args.folds
    daily = _read_series(args.data)
    res = pl.optimize(cfg, "confirmed", daily)
    _write(args.out, "ga_history.csv", pl.ga_history_csv(res))
    _write(args.out, "best_params.toml",
           config_io.dumps({**res.best_hyperparameters, "fitness": res.best_fitness}))
    print(f"best {res.best_hyperparameters} rmse {res.best_fitness:.6g} "
          f"({res.evaluations} evaluations)")


def _spec_from_args(args) -> ModelSpec:
    hp = dict(_config_table(args, "model"))
    hp.pop("kind", None)
    if args.params:
        p = config_io.load(args.params)
        p.pop("fitness", None)
        hp.update(p)
    for item in args.set or []:
        k, _, v = item.partition("=")
        hp[k.strip()] = json.loads(v)
    spec = ModelSpec(args.model, hp)
    if "seed" in spec.hyperparameters and "seed" not in hp:
        spec = spec.with_params(seed=args.seed)
    return spec


def cmd_train(args):
    spec = _spec_from_args(args)
    prep = pl.prepare_series(_read_series(args.data), spec.window_size, args.train_fraction)
    if spec.kind.is_neural:
        fit, valid = pl.inner_split(prep.train())
        model = fit_model(spec, fit, valid)
    else:
        model = fit_model(spec, prep.train())
    p = _write(args.out, args.name, model.dumps())
    print(f"wrote {p}")


def _load_model(path) -> TrainedModel:
    return TrainedModel.loads(Path(path).read_text(encoding="utf-8"))


def cmd_forecast(args):
    model = _load_model(args.model)
    prep = pl.prepare_series(_read_series(args.data), model.window_size, args.train_fraction)
    fc = pl.forecast_series(model, prep, args.horizon)
    start = len(prep.daily)
    _write(args.out, "forecast.csv", "day,value\n" + "".join(
        f"{start + k},{v!r}\n" for k, v in enumerate(fc.values.tolist())))
    print(f"forecast of {fc.horizon} days written")


def cmd_evaluate(args):
    daily = _read_series(args.data)
    reports = []
    for path in args.models:
        model = _load_model(path)
        prep = pl.prepare_series(daily, model.window_size, args.train_fraction)
        reports.extend(pl.evaluate_model(model.spec.kind.value, model, prep))
    scale = mt.Scale(args.scale)
    _write(args.out, "metrics.csv", mt.metrics_csv(reports))
    ranking = mt.rank_models([r for r in reports if r.scale == scale])
    _write(args.out, "ranking.csv", mt.ranking_csv(ranking))
    for name, score in ranking:
        print(f"{score:3d}  {name}")


def _seir_block(ref) -> pl.SeirBlock:
    """SEIR settings from a flat TOML file or preset name (default: seir-default)."""
    m = config_io.load_config_or_preset(ref or "seir-default")
    try:
        return pl.SeirBlock(**m)
    except TypeError as exc:
        raise InvalidSpec(f"bad SEIR config: {exc}") from exc


def cmd_seir(args):
    base = _seir_block(args.config)
    for key in ("beta", "sigma", "gamma", "population", "dt", "days"):
        v = getattr(args, key)
        if v is not None:
            setattr(base, key, v)
    if args.init:
        parts = [float(v) for v in args.init.split(",")]
        if len(parts) != 4:
            raise ValidationError("--init takes four values s,e,i,r")
        init = seir.SeirState(*parts)
        if abs(init.total - base.population) > 1e-6 * base.population:
            raise ValidationError("--init compartments must sum to the population")
    else:
        init = base.initial()
    traj = seir.simulate(init, base.params(), base.days)
    _write(args.out, "seir.csv", seir.trajectory_csv(traj))
    day, peak = traj.peak()
    print(f"R0 {seir.r0(base.params()):.4g}; infectious peak {peak:.6g} on day {day}")


def cmd_des(args):
    cfg = des.DesConfig.from_mapping(config_io.load_config_or_preset(args.config or "des-default"))
    seed = args.seed if args.seed_given else cfg.seed
    if args.arrivals == "from-seir":
        sb = _seir_block(args.seir_config)
        sb.days = args.days
        traj = seir.simulate(sb.initial(), sb.params(), sb.days)
        arrivals = des.arrivals_from_seir(traj, sb.admission_fraction, seed)
    else:
        lines = Path(args.arrivals).read_text(encoding="utf-8").splitlines()
        if lines and not _is_number(lines[0].split(",")[0]):
            lines = lines[1:]
        arrivals = np.array([float(ln.split(",")[0]) for ln in lines if ln.strip()])
    report = des.run(cfg, arrivals, args.days, seed=seed)
    _write(args.out, "des_report.csv", report.to_csv())
    print(report.summary(), end="")


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def cmd_run(args):
    cfg = pl.PipelineConfig.from_file(args.config) if args.config else pl.PipelineConfig()
    if args.seed_given:
        cfg.seed = args.seed
    if args.out_given:
        cfg.out_dir = str(args.out)
    if args.horizon is not None:
        cfg.horizon = args.horizon
    if args.ga:
        cfg.ga.enabled = True
    cfg.validate()
    manifest = pl.run_pipeline(cfg)
    print(Path(manifest.out_dir, "peak_demand.txt").read_text(encoding="utf-8"), end="")
    print(f"manifest: {Path(manifest.out_dir) / 'manifest.json'}")


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def global_flags(parser, default):
        parser.add_argument("--config", default=default, help="TOML configuration file")
        parser.add_argument("--seed", type=int, default=default, help="random seed (unsigned 64-bit)")
        parser.add_argument("--out", type=Path, default=default, help="output directory")
        parser.add_argument("-v", "--verbose", action="store_true", default=default)

    # flags may come before or after the subcommand; the copy on each
    # subcommand suppresses its defaults so it cannot mask the global value
    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, argparse.SUPPRESS)
    p = argparse.ArgumentParser(prog="adriana")
    global_flags(p, None)
    p.add_argument("--version", action="version", version=f"adriana {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", parents=[common], help="JHU CSV -> date,value series")
    s.add_argument("--data", required=True)
    s.add_argument("--country", default="South Africa")
    s.add_argument("--kind", default="Confirmed", choices=[k.value for k in di.SeriesKind])
    s.add_argument("--cumulative", action="store_true", help="keep cumulative counts")
    s.add_argument("--name", default="series.csv")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("analyze", parents=[common], help="ACF, PACF and ADF of a series")
    s.add_argument("--data", required=True)
    s.add_argument("--lags", type=int, default=10)
    s.add_argument("--diff", type=int, default=0, help="difference this many times first")
    s.add_argument("--max-lag", type=int, default=None, help="ADF lag cap")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("optimize", parents=[common], help="GA search over neurons and window")
    s.add_argument("--model", default="lstm", choices=["lstm", "gru", "mlp"])
    s.add_argument("--data", required=True)
    s.add_argument("--generations", type=int, default=None)
    s.add_argument("--population", type=int, default=None)
    s.add_argument("--epochs", type=int, default=None, help="training epochs per fold")
    s.add_argument("--folds", type=int, default=None)
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("train", parents=[common], help="fit a model on the training span")
    s.add_argument("--model", default="LSTM")
    s.add_argument("--data", required=True)
    s.add_argument("--params", help="TOML of hyperparameters (e.g. best_params.toml)")
    s.add_argument("--set", action="append", metavar="KEY=VALUE")
    s.add_argument("--train-fraction", type=float, default=0.7)
    s.add_argument("--name", default="model.json")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("forecast", parents=[common], help="recursive forecast from a model file")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--horizon", type=int, default=400)
    s.add_argument("--train-fraction", type=float, default=0.7)
    s.set_defaults(func=cmd_forecast)

    s = sub.add_parser("evaluate", parents=[common], help="test-span metrics and ranking")
    s.add_argument("--data", required=True)
    s.add_argument("--models", nargs="+", required=True)
    s.add_argument("--train-fraction", type=float, default=0.7)
    s.add_argument("--scale", default="Raw", choices=[v.value for v in mt.Scale])
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("seir", parents=[common], help="simulate the SEIR model")
    for key, typ in (("beta", float), ("sigma", float), ("gamma", float),
                     ("population", float), ("days", int), ("dt", float)):
        s.add_argument(f"--{key}", type=typ, default=None)
    s.add_argument("--init", help="initial s,e,i,r")
    s.set_defaults(func=cmd_seir)

    s = sub.add_parser("des", parents=[common], help="hospital discrete-event simulation")
    s.add_argument("--seir-config", help="SEIR TOML or preset driving 'from-seir' arrivals")
    s.add_argument("--arrivals", default="from-seir", help="CSV of arrival times or 'from-seir'")
    s.add_argument("--days", type=int, default=400)
    s.set_defaults(func=cmd_des)

    s = sub.add_parser("run", parents=[common], help="full pipeline")
    s.add_argument("--horizon", type=int, default=None)
    s.add_argument("--ga", action="store_true", help="run the GA before training")
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.seed_given = args.seed is not None
    args.out_given = args.out is not None
    if args.seed is None:
        args.seed = 0
    elif not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 1
    if args.out is None:
        args.out = Path(".")
    args.verbose = bool(args.verbose)
    try:
        args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1 if isinstance(exc.cause, (ValidationError, OSError)) else 2
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (RuntimeFailure, AdrianaError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
