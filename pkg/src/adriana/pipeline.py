"""End-to-end run: daily series -> surrogate forecast, SEIR -> hospital DES.

Each of the confirmed, recovered and death series is handled on its own.
Transform order per series: daily counts, first difference, min-max scaling
fit on the training span of the differences only, sliding windows,
chronological split.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import io
import json
import logging
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, config_io
from . import data_ingest as di
from . import ga_optimizer as ga
from . import hospital_des as des
from . import metrics as mt
from . import seir
from . import stationarity as st
from .errors import (
    AdrianaError,
    HorizonTooLarge,
    IncompleteRun,
    InvalidSpec,
    StageError,
    ValidationError,
)
from .surrogates import (
    MAX_HORIZON,
    ModelKind,
    ModelSpec,
    ScaleTrace,
    TrainedModel,
    fit_model,
    recursive_forecast,
)

logger = logging.getLogger(__name__)

SERIES = ("confirmed", "recovered", "death")
_KIND = {"confirmed": di.SeriesKind.CONFIRMED, "recovered": di.SeriesKind.RECOVERED,
         "death": di.SeriesKind.DEATH}
_FILES = {"confirmed": "time_series_covid19_confirmed_global.csv",
          "recovered": "time_series_covid19_recovered_global.csv",
          "death": "time_series_covid19_deaths_global.csv"}

# per-series hyperparameters that differ between the three series
SERIES_OVERRIDES = {
    ModelKind.XGBR: {"confirmed": {"learning_rate": 1.0}, "recovered": {"learning_rate": 0.1},
                     "death": {"learning_rate": 0.1}},
    ModelKind.SVR: {"confirmed": {"epsilon": 0.6}, "recovered": {"epsilon": 0.6},
                    "death": {"epsilon": 0.4}},
}

VALID_FRACTION = 0.1  # tail of the training samples used for early stopping


@dataclass
class SeirBlock:
    beta: float = 0.5
    sigma: float = 0.2
    gamma: float = 0.1
    population: float = 11_500_000.0
    dt: float = 1.0
    days: int = 400
    exposed: float = 0.0
    infectious: float = 1.0
    recovered: float = 0.0
    admission_fraction: float = 0.001

    def params(self) -> seir.SeirParams:
        return seir.SeirParams(self.beta, self.sigma, self.gamma, self.population, self.dt)

    def initial(self) -> seir.SeirState:
        return seir.SeirState.seeded(self.population, self.exposed, self.infectious, self.recovered)


@dataclass
class GaBlock:
    enabled: bool = False
    generations: int = 45
    population: int = 10
    folds: int = 10
    max_epochs: int = 20  # per fold, keeps a GA run affordable
    neurons: tuple = (1, 128)
    window_size: tuple = (1, 30)


@dataclass
class PipelineConfig:
    data: dict = field(default_factory=lambda: {s: str(Path("data/jhu") / f) for s, f in _FILES.items()})
    country: str = "South Africa"
    series: tuple = SERIES
    train_fraction: float = 0.7
    horizon: int = 400
    model: dict = field(default_factory=lambda: {"kind": "LSTM", "neurons": 58, "window_size": 9})
    compare: tuple = ()  # extra model kinds evaluated and ranked next to the main one
    seed: int = 0
    seir: SeirBlock = field(default_factory=SeirBlock)
    des: str | dict = "des-default"  # preset name, TOML path or inline table
    ga: GaBlock = field(default_factory=GaBlock)
    out_dir: str = "runs/latest"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.horizon > MAX_HORIZON:
            raise HorizonTooLarge(f"horizon {self.horizon} exceeds {MAX_HORIZON}")
        if self.horizon < 1:
            raise ValidationError("horizon must be at least 1")
        if not 0 < self.train_fraction < 1:
            raise ValidationError("train_fraction must lie in (0, 1)")
        unknown = set(self.series) - set(SERIES)
        if unknown or not self.series:
            raise InvalidSpec(f"series must be drawn from {SERIES}")
        missing = [s for s in self.series if s not in self.data]
        if missing:
            raise InvalidSpec(f"no data path for {missing}")
        if "kind" not in self.model:
            raise InvalidSpec("model table needs a kind")
        ModelKind.parse(self.model["kind"])
        for k in self.compare:
            ModelKind.parse(k)

    @classmethod
    def from_mapping(cls, m: dict, base_dir=None) -> "PipelineConfig":
        m = dict(m)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(m) - known
        if extra:
            raise InvalidSpec(f"unknown config keys: {sorted(extra)}")
        if "seir" in m:
            m["seir"] = SeirBlock(**m["seir"])
        if "ga" in m:
            g = dict(m["ga"])
            for key in ("neurons", "window_size"):
                if key in g:
                    g[key] = tuple(g[key])
            m["ga"] = GaBlock(**g)
        for key in ("series", "compare"):
            if key in m:
                m[key] = tuple(m[key])
        if base_dir is not None:
            base = Path(base_dir)
            if "data" in m:
                m["data"] = {k: str(base / v) for k, v in m["data"].items()}
            if "out_dir" in m:
                m["out_dir"] = str(base / m["out_dir"])
            if isinstance(m.get("des"), str) and m["des"].endswith(".toml"):
                m["des"] = str(base / m["des"])
        try:
            return cls(**m)
        except TypeError as exc:
            raise InvalidSpec(str(exc)) from exc

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        path = Path(path)
        return cls.from_mapping(config_io.load(path), base_dir=path.parent)

    def to_mapping(self) -> dict:
        m = dataclasses.asdict(self)
        m["series"] = list(self.series)
        m["compare"] = list(self.compare)
        m["ga"]["neurons"] = list(self.ga.neurons)
        m["ga"]["window_size"] = list(self.ga.window_size)
        return m

    def model_spec(self, series: str, kind=None, **extra) -> ModelSpec:
        """Spec for ``series``: the model table for the main kind, defaults plus the
        shared window size for comparison kinds."""
        main = ModelKind.parse(self.model["kind"])
        kind = main if kind is None else ModelKind.parse(kind)
        if kind == main:
            hp = {k: v for k, v in self.model.items() if k != "kind"}
        else:
            hp = {"window_size": self.model.get("window_size", 9)}
        for k, v in SERIES_OVERRIDES.get(kind, {}).get(series, {}).items():
            hp.setdefault(k, v)
        if "seed" in ModelSpec(kind).hyperparameters:
            hp.setdefault("seed", self.seed)
        hp.update(extra)
        return ModelSpec(kind, hp)

    def des_config(self) -> des.DesConfig:
        m = self.des if isinstance(self.des, dict) else config_io.load_config_or_preset(self.des)
        return des.DesConfig.from_mapping(m)


@dataclass
class PreparedSeries:
    """Differenced, scaled and windowed view of one daily series."""

    daily: np.ndarray
    diffs: np.ndarray
    scaler: st.ScalerParams
    scaled: np.ndarray
    dataset: st.WindowedDataset
    n_train: int  # windowed training samples

    @property
    def window_size(self) -> int:
        return self.dataset.window_size

    @property
    def train_span(self) -> int:
        """Number of leading differences that training samples touch."""
        return self.n_train + self.window_size

    def train(self) -> st.WindowedDataset:
        return self.dataset.subset(np.arange(self.n_train))

    def test(self) -> st.WindowedDataset:
        return self.dataset.subset(np.arange(self.n_train, len(self.dataset)))

    def test_days(self) -> np.ndarray:
        """Indices into ``daily`` of the test targets."""
        return self.test().target_index + 1

    def scale_trace(self) -> ScaleTrace:
        return ScaleTrace(self.scaler, (float(self.daily[-1]),))


def prepare_series(daily, window_size: int, train_fraction: float) -> PreparedSeries:
    daily = np.asarray(daily, dtype=float)
    diffs, _ = st.difference(daily, 1)
    n_samples = len(diffs) - window_size
    if n_samples < 2:
        raise st.SeriesTooShort(f"{len(daily)} days cannot fill windows of {window_size}")
    n_train = st.split_point(n_samples, train_fraction)
    scaler = st.minmax_fit(diffs[:n_train + window_size])
    scaled = st.minmax_apply(diffs, scaler)
    return PreparedSeries(daily, diffs, scaler, scaled, st.make_windows(scaled, window_size), n_train)


def inner_split(train: st.WindowedDataset, fraction: float = VALID_FRACTION):
    """Split the chronological tail off the training samples for early stopping."""
    n_valid = max(1, int(round(fraction * len(train))))
    if len(train) - n_valid < 1:
        return train, None
    idx = np.arange(len(train))
    return train.subset(idx[:-n_valid]), train.subset(idx[-n_valid:])


def test_predictions(model: TrainedModel, prep: PreparedSeries):
    """One-step-ahead predictions over the test span on both scales.

    Returns (actual_raw, predicted_raw, actual_scaled, predicted_scaled), where
    raw means daily counts: the previous actual day plus the unscaled difference.
    """
    test = prep.test()
    pred_scaled = model.predict_batch(test.inputs)
    days = prep.test_days()
    pred_raw = prep.daily[days - 1] + st.minmax_invert(pred_scaled, prep.scaler)
    return prep.daily[days], pred_raw, test.targets, pred_scaled


def evaluate_model(name: str, model: TrainedModel, prep: PreparedSeries):
    a_raw, p_raw, a_sc, p_sc = test_predictions(model, prep)
    return (mt.evaluate(name, a_raw, p_raw, mt.Scale.RAW),
            mt.evaluate(name, a_sc, p_sc, mt.Scale.NORMALIZED))


def forecast_series(model: TrainedModel, prep: PreparedSeries, horizon: int):
    last = prep.scaled[-prep.window_size:]
    return recursive_forecast(model, last, horizon, prep.scale_trace())


@dataclass
class RunManifest:
    config: dict
    tool_version: str
    seeds: dict
    started: str = ""
    finished: str = ""
    stages: dict = field(default_factory=dict)  # stage -> [relative paths]
    digests: dict = field(default_factory=dict)  # relative path -> sha256
    details: dict = field(default_factory=dict)
    out_dir: str = ""
    completed: bool = False

    def to_mapping(self) -> dict:
        m = dataclasses.asdict(self)
        m["format"] = "adriana.manifest"
        return m

    @classmethod
    def from_mapping(cls, m: dict) -> "RunManifest":
        m = dict(m)
        m.pop("format", None)
        return cls(**m)

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls.from_mapping(json.loads(Path(path).read_text(encoding="utf-8")))


class _Writer:
    def __init__(self, out_dir: Path, manifest: RunManifest):
        self.out = out_dir
        self.manifest = manifest

    def write(self, stage: str, rel: str, text: str):
        path = self.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        data = text.encode("utf-8")
        path.write_bytes(data)
        self.manifest.stages.setdefault(stage, []).append(rel)
        self.manifest.digests[rel] = hashlib.sha256(data).hexdigest()

    def save_manifest(self):
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(
            json.dumps(self.manifest.to_mapping(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def _csv(header: str, rows) -> str:
    buf = io.StringIO()
    buf.write(header + "\n")
    for r in rows:
        buf.write(",".join(v if isinstance(v, str) else repr(v) for v in r) + "\n")
    return buf.getvalue()


def load_daily(config: PipelineConfig, name: str) -> di.DailySeries:
    cum = di.select_country(di.read_jhu_csv(config.data[name]), config.country)
    return di.to_daily(cum, _KIND[name]), cum


def optimize(config: PipelineConfig, name: str, daily, executor=None) -> ga.GaResult:
    """GA over (neurons, window) for the configured neural kind.

    Fitness sees only the training span of the differenced series, scaled with
    the same training-only scaler used later.
    """
    kind = ModelKind.parse(config.model["kind"])
    if not kind.is_neural:
        raise InvalidSpec("the GA tunes neural models only")
    diffs, _ = st.difference(np.asarray(daily, dtype=float), 1)
    # the narrowest window has the shortest training span, which lies inside
    # the training span of every candidate
    w_min = int(config.ga.window_size[0])
    n_train = st.split_point(len(diffs) - w_min, config.train_fraction)
    train_diffs = diffs[:n_train + w_min]
    scaled = st.minmax_apply(train_diffs, st.minmax_fit(train_diffs))
    space = {"neurons": ga.Bound(*config.ga.neurons, True),
             "window_size": ga.Bound(*config.ga.window_size, True)}
    fixed = {k: v for k, v in config.model.items() if k not in space}
    fixed["kind"] = kind.value
    fixed["max_epochs"] = config.ga.max_epochs
    fitness = ga.HyperparameterFitness(scaled, space, k=config.ga.folds, fixed=fixed, seed=config.seed)
    gcfg = ga.GaConfig(population_size=config.ga.population, generations=config.ga.generations,
                       seed=config.seed, search_space=space)
    return ga.run_ga(gcfg, fitness, executor)


def ga_history_csv(result: ga.GaResult) -> str:
    return _csv("generation,best,mean", result.history)


def run_pipeline(config: PipelineConfig, out_dir=None) -> RunManifest:
    """Execute every stage, writing outputs and ``manifest.json`` under ``out_dir``.

    A failing stage raises :class:`StageError` carrying the stage name and the
    partial manifest (which is also written to disk).
    """
    config.validate()
    out = Path(out_dir or config.out_dir)
    manifest = RunManifest(config=config.to_mapping(), tool_version=__version__,
                           seeds={"pipeline": config.seed, "arrivals": config.seed, "des": config.seed}, started=_now(),
                           out_dir=str(out))
    manifest.details["platform"] = platform.python_implementation()
    w = _Writer(out, manifest)
    stage = "setup"

    try:
        raw_reports = []
        for name in config.series:
            stage = f"ingest:{name}"
            daily, cum = load_daily(config, name)
            w.write(stage, f"{name}/daily.csv", di.format_series_csv(daily.dates, daily.values))
            info = {"days": len(daily.values), "start": daily.start_date.isoformat(),
                    "negative_days": len(daily.warnings)}

            stage = f"adf:{name}"
            adf = st.adf_test(cum.values.astype(float))
            w.write(stage, f"{name}/adf.txt", adf.summary())
            info["adf_p_cumulative"] = adf.p_value

            stage = f"optimize:{name}"
            spec = config.model_spec(name)
            if config.ga.enabled:
                res = optimize(config, name, daily.values)
                w.write(stage, f"{name}/ga_history.csv", ga_history_csv(res))
                w.write(stage, f"{name}/best_params.toml",
                        config_io.dumps({**res.best_hyperparameters, "fitness": res.best_fitness}))
                spec = spec.with_params(**res.best_hyperparameters)
                info["ga_best"] = dict(res.best_hyperparameters)

            stage = f"prepare:{name}"
            prep = prepare_series(daily.values, spec.window_size, config.train_fraction)
            info.update(samples=len(prep.dataset), train_samples=prep.n_train,
                        test_samples=len(prep.dataset) - prep.n_train,
                        scaler=[prep.scaler.min, prep.scaler.max], scaler_fit_span=prep.train_span,
                        cv_fold_sizes=[[len(a), len(b)] for a, b in
                                       st.forward_chain_folds(len(prep.dataset), 10)])

            stage = f"train:{name}"
            fit_set, valid_set = inner_split(prep.train())
            model = fit_model(spec, fit_set, valid_set) if spec.kind.is_neural else fit_model(spec, prep.train())
            w.write(stage, f"{name}/model.json", model.dumps())

            stage = f"evaluate:{name}"
            a_raw, p_raw, a_sc, p_sc = test_predictions(model, prep)
            days = prep.test_days()
            w.write(stage, f"{name}/test_predictions.csv",
                    _csv("day,actual,predicted", zip(days.tolist(), a_raw.tolist(), p_raw.tolist())))
            reports = [mt.evaluate(spec.kind.value, a_raw, p_raw, mt.Scale.RAW),
                       mt.evaluate(spec.kind.value, a_sc, p_sc, mt.Scale.NORMALIZED)]
            for kind in config.compare:
                other = config.model_spec(name, kind)
                oprep = prep if other.window_size == prep.window_size else prepare_series(
                    daily.values, other.window_size, config.train_fraction)
                ofit, ovalid = inner_split(oprep.train())
                omodel = fit_model(other, ofit, ovalid) if other.kind.is_neural else fit_model(other, oprep.train())
                reports.extend(evaluate_model(other.kind.value, omodel, oprep))
            w.write(stage, f"{name}/metrics.csv", mt.metrics_csv(reports))
            raw = [r for r in reports if r.scale == mt.Scale.RAW]
            w.write(stage, f"{name}/ranking.csv", mt.ranking_csv(mt.rank_models(raw)))
            raw_reports.append((name, raw[0]))

            stage = f"forecast:{name}"
            fc = forecast_series(model, prep, config.horizon)
            start = len(prep.daily)
            w.write(stage, f"{name}/forecast.csv",
                    _csv("day,value", zip(range(start, start + fc.horizon), fc.values.tolist())))
            manifest.details[name] = info

        stage = "seir"
        sb = config.seir
        traj = seir.simulate(sb.initial(), sb.params(), sb.days)
        w.write(stage, "seir.csv", seir.trajectory_csv(traj))
        manifest.details["seir"] = {"r0": seir.r0(sb.params()), "peak": list(traj.peak()),
                                    "clamped_steps": len(traj.deficits)}

        stage = "arrivals"
        arrivals = des.arrivals_from_seir(traj, sb.admission_fraction, config.seed)
        w.write(stage, "arrivals.csv", _csv("time", ((t,) for t in arrivals.tolist())))

        stage = "des"
        dcfg = config.des_config()
        report = des.run(dcfg, arrivals, sb.days, seed=config.seed)
        w.write(stage, "des_report.csv", report.to_csv())

        stage = "peak"
        peak_day, peak_occ = des.peak_demand(report)
        w.write(stage, "des_summary.txt", report.summary())
        w.write(stage, "peak_demand.txt", f"peak_day: {peak_day}\npeak_occupancy: {peak_occ}\n"
                f"bed_capacity: {dcfg.bed_capacity}\nmax_queue: {int(report.queue_length.max())}\n")

        stage = "plot"
        manifest.completed = True
        for rel, text in emit_plot_data(manifest).items():
            w.write(stage, rel, text)
    except AdrianaError as exc:
        manifest.finished = _now()
        w.save_manifest()
        raise StageError(stage, exc, manifest) from exc
    except Exception as exc:  # unexpected failure: still leave a partial manifest behind
        manifest.finished = _now()
        w.save_manifest()
        raise StageError(stage, exc, manifest) from exc
    manifest.finished = _now()
    w.save_manifest()
    return manifest


def emit_plot_data(manifest: RunManifest) -> dict:
    """Per-series ``day,kind,value`` tables: actual history, one-step test predictions
    and the recursive forecast. Returns {relative path: text}."""
    out = Path(manifest.out_dir)
    files = {}
    for name in manifest.config.get("series", SERIES):
        paths = {k: f"{name}/{k}.csv" for k in ("daily", "test_predictions", "forecast")}
        missing = [p for p in paths.values() if p not in manifest.digests]
        if missing:
            raise IncompleteRun(f"{name}: no output for {', '.join(missing)}")
        _, daily = di.parse_series_csv((out / paths["daily"]).read_text(encoding="utf-8"))
        pred = _read_table(out / paths["test_predictions"])
        fc = _read_table(out / paths["forecast"])
        if len(fc) == 0:
            raise IncompleteRun(f"{name}: empty forecast")
        rows = [(d, "actual", float(v)) for d, v in enumerate(daily)]
        rows += [(int(r[0]), "predicted", r[2]) for r in pred]
        rows += [(int(r[0]), "forecast", r[1]) for r in fc]
        files[f"{name}/plot.csv"] = _csv("day,kind,value", rows)
    return files


def _read_table(path) -> list:
    lines = Path(path).read_text(encoding="utf-8").splitlines()[1:]
    return [tuple(float(x) for x in ln.split(",")) for ln in lines if ln]
