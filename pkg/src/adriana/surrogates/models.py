"""Model specs, fitting dispatch, prediction, recursive forecasting and serialization."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    EmptyTrainingSet,
    HorizonTooLarge,
    InvalidSpec,
    NotANeuralSpec,
    ValidationError,
    WindowSizeMismatch,
)
from ..stationarity import ScalerParams, WindowedDataset, minmax_invert, reintegrate
from . import linear, trees
from .neural import Network, NetworkConfig, train_network
from .neural import count_params as _count_network_params

MAX_HORIZON = 500
FORMAT = "adriana.model"
FORMAT_VERSION = 1


class ModelKind(str, enum.Enum):
    MLP = "MLP"
    GRU = "GRU"
    LSTM = "LSTM"
    LR = "LR"
    AR = "AR"
    ARIMA110 = "ARIMA110"
    DTR = "DTR"
    RFR = "RFR"
    XGBR = "XGBRStyleBoost"
    SVR = "SVRLinear"

    @classmethod
    def parse(cls, text) -> "ModelKind":
        if isinstance(text, cls):
            return text
        key = str(text).strip().upper()
        aliases = {"XGBR": cls.XGBR, "XGBRSTYLEBOOST": cls.XGBR, "SVR": cls.SVR,
                   "SVRLINEAR": cls.SVR, "ARIMA": cls.ARIMA110}
        if key in aliases:
            return aliases[key]
        for k in cls:
            if k.value.upper() == key:
                return k
        raise InvalidSpec(f"unknown model kind {text!r}")

    @property
    def is_neural(self) -> bool:
        return self in (ModelKind.MLP, ModelKind.GRU, ModelKind.LSTM)


_NEURAL = {
    "neurons": 58, "window_size": 9, "learning_rate": 1e-3, "dropout": 0.2,
    "batch_size": 32, "max_epochs": 200, "patience": 10, "seed": 0,
}
DEFAULTS = {
    ModelKind.MLP: dict(_NEURAL),
    ModelKind.GRU: dict(_NEURAL),
    ModelKind.LSTM: dict(_NEURAL),
    ModelKind.LR: {"window_size": 9},
    ModelKind.AR: {"window_size": 9, "lag_order": 0},  # 0: choose by AIC up to window_size
    ModelKind.ARIMA110: {"window_size": 9},
    ModelKind.DTR: {"window_size": 9, "max_depth": 4, "min_split": 7, "min_leaf": 3},
    ModelKind.RFR: {"window_size": 9, "estimators": 50, "max_depth": 6, "min_split": 2,
                    "min_leaf": 1, "seed": 0},
    ModelKind.XGBR: {"window_size": 9, "estimators": 25, "learning_rate": 0.1, "max_depth": 1,
                     "max_features": 10, "seed": 0},
    ModelKind.SVR: {"window_size": 9, "epsilon": 0.6, "l2": 1e-4, "iterations": 4000},
}
# (low, high, integer?)
RANGES = {
    "neurons": (1, 4096, True), "window_size": (1, 365, True), "learning_rate": (0.0, 10.0, False),
    "dropout": (0.0, 0.999, False), "batch_size": (1, 1 << 20, True),
    "max_epochs": (1, 1 << 20, True), "patience": (0, 1 << 20, True), "seed": (0, 2**64 - 1, True),
    "lag_order": (0, 365, True), "max_depth": (1, 64, True), "min_split": (2, 1 << 30, True),
    "min_leaf": (1, 1 << 30, True), "estimators": (1, 10000, True),
    "max_features": (1, 1 << 20, True), "epsilon": (0.0, 1e6, False), "l2": (0.0, 1e6, False),
    "iterations": (1, 10**7, True),
}


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = ModelKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        hp = dict(DEFAULTS[kind])
        unknown = set(self.hyperparameters) - set(hp)
        if unknown:
            raise InvalidSpec(f"{kind.value} does not take {sorted(unknown)}")
        hp.update(self.hyperparameters)
        for key, value in hp.items():
            lo, hi, integer = RANGES[key]
            if integer:
                if float(value) != int(value):
                    raise InvalidSpec(f"{key} must be an integer, got {value!r}")
                value = int(value)
            else:
                value = float(value)
            if not lo <= value <= hi:
                raise InvalidSpec(f"{key}={value} outside [{lo}, {hi}]")
            hp[key] = value
        if kind == ModelKind.AR and hp["lag_order"] > hp["window_size"]:
            raise InvalidSpec("lag_order cannot exceed window_size")
        if kind == ModelKind.ARIMA110 and hp["window_size"] < 2:
            raise InvalidSpec("ARIMA(1,1,0) needs window_size >= 2")
        object.__setattr__(self, "hyperparameters", hp)

    @property
    def window_size(self) -> int:
        return self.hyperparameters["window_size"]

    def network_config(self) -> NetworkConfig:
        if not self.kind.is_neural:
            raise NotANeuralSpec(self.kind.value)
        hp = self.hyperparameters
        return NetworkConfig(self.kind.value, hp["window_size"], hp["neurons"], hp["dropout"])

    def with_params(self, **kw) -> "ModelSpec":
        hp = dict(self.hyperparameters)
        hp.update(kw)
        return ModelSpec(self.kind, hp)


def count_params(spec: ModelSpec) -> int:
    return _count_network_params(spec.network_config())


@dataclass
class TrainedModel:
    spec: ModelSpec
    state: dict
    report: dict = field(default_factory=dict)

    @property
    def window_size(self) -> int:
        return self.spec.window_size

    def predict_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.window_size:
            raise WindowSizeMismatch(f"model expects windows of {self.window_size}, got {X.shape[1]}")
        kind = self.spec.kind
        s = self.state
        if kind.is_neural:
            net = Network(self.spec.network_config())
            return net.predict(np.asarray(s["theta"]), X)
        if kind == ModelKind.LR:
            return s["intercept"] + s["slope"] * X[:, -1]
        if kind == ModelKind.AR:
            phi = np.asarray(s["coef"])
            lags = X[:, ::-1][:, :len(phi)]
            return s["intercept"] + lags @ phi
        if kind == ModelKind.ARIMA110:
            dlast = X[:, -1] - X[:, -2]
            return X[:, -1] + s["intercept"] + s["phi"] * dlast
        if kind == ModelKind.DTR:
            return s["tree"].predict(X)
        if kind == ModelKind.RFR:
            return trees.predict_forest(s["trees"], X)
        if kind == ModelKind.XGBR:
            return trees.predict_boosted(s["base"], s["trees"], self.spec.hyperparameters["learning_rate"], X)
        if kind == ModelKind.SVR:
            return X @ np.asarray(s["w"]) + s["b"]
        raise InvalidSpec(kind)

    # serialization ----------------------------------------------------
    def to_mapping(self) -> dict:
        state = {}
        for k, v in self.state.items():
            if isinstance(v, trees.Tree):
                state[k] = {"tree": v.to_mapping()}
            elif isinstance(v, list) and v and isinstance(v[0], trees.Tree):
                state[k] = {"trees": [t.to_mapping() for t in v]}
            elif isinstance(v, np.ndarray):
                state[k] = {"vector": [float(a) for a in v]}
            else:
                state[k] = {"scalar": float(v)}
        return {"format": FORMAT, "version": FORMAT_VERSION, "kind": self.spec.kind.value,
                "hyperparameters": self.spec.hyperparameters, "state": state,
                "report": self.report}

    def dumps(self) -> str:
        return json.dumps(self.to_mapping(), sort_keys=True, indent=1)

    @classmethod
    def from_mapping(cls, m: dict) -> "TrainedModel":
        if m.get("format") != FORMAT or m.get("version") != FORMAT_VERSION:
            raise ValidationError("not a version-1 adriana model file")
        spec = ModelSpec(m["kind"], m["hyperparameters"])
        state = {}
        for k, v in m["state"].items():
            if "tree" in v:
                state[k] = trees.Tree.from_mapping(v["tree"])
            elif "trees" in v:
                state[k] = [trees.Tree.from_mapping(t) for t in v["trees"]]
            elif "vector" in v:
                state[k] = np.array(v["vector"], dtype=float)
            else:
                state[k] = float(v["scalar"])
        return cls(spec, state, m.get("report", {}))

    @classmethod
    def loads(cls, text: str) -> "TrainedModel":
        return cls.from_mapping(json.loads(text))

    def parameter_vector(self) -> np.ndarray:
        if "theta" in self.state:
            return np.asarray(self.state["theta"])
        raise NotANeuralSpec(self.spec.kind.value)


def _check_window(spec: ModelSpec, ds: WindowedDataset):
    if ds.window_size != spec.window_size:
        raise WindowSizeMismatch(f"spec window {spec.window_size} vs data window {ds.window_size}")
    if len(ds) == 0:
        raise EmptyTrainingSet("no training samples")


def fit_neural(spec: ModelSpec, train: WindowedDataset, valid: WindowedDataset | None = None) -> TrainedModel:
    _check_window(spec, train)
    net = Network(spec.network_config())
    hp = spec.hyperparameters
    Xv = valid.inputs if valid is not None else None
    yv = valid.targets if valid is not None else None
    theta, rep = train_network(
        net, train.inputs, train.targets, Xv, yv, learning_rate=hp["learning_rate"],
        batch_size=hp["batch_size"], max_epochs=hp["max_epochs"],
        patience=hp["patience"] if hp["patience"] > 0 else None, seed=hp["seed"])
    report = rep.to_mapping()
    report["train_rmse"] = math.sqrt(rep.final_loss)
    report["n_params"] = int(net.size)
    return TrainedModel(spec, {"theta": theta}, report)


def fit_model(spec: ModelSpec, train: WindowedDataset, valid: WindowedDataset | None = None) -> TrainedModel:
    """Fit any model kind on windowed data (``valid`` only drives neural early stopping)."""
    _check_window(spec, train)
    kind = spec.kind
    hp = spec.hyperparameters
    X, y = train.inputs, train.targets
    if kind.is_neural:
        return fit_neural(spec, train, valid)
    if kind == ModelKind.LR:
        a, b = linear.ols_lag1(X[:, -1], y)
        return TrainedModel(spec, {"intercept": a, "slope": b})
    if kind == ModelKind.AR:
        # regress on the trailing window columns; all orders share one sample
        lags = X[:, ::-1]
        orders = [hp["lag_order"]] if hp["lag_order"] else range(1, hp["window_size"] + 1)
        best = None
        for p in orders:
            c, phi, rss = linear.ols(lags[:, :p], y)
            aic = linear.gaussian_aic(max(rss, 1e-300), len(y), p + 1)
            if best is None or aic < best[3]:
                best = (p, c, phi, aic)
        p, c, phi, aic = best
        return TrainedModel(spec, {"intercept": c, "coef": np.asarray(phi)},
                            {"lag_order": p, "aic": aic})
    if kind == ModelKind.ARIMA110:
        dlast = X[:, -1] - X[:, -2]
        c, phi = linear.ols_lag1(dlast, y - X[:, -1])
        rss = float(np.sum((y - X[:, -1] - c - phi * dlast) ** 2))
        return TrainedModel(spec, {"intercept": c, "phi": phi},
                            {"aic": linear.gaussian_aic(max(rss, 1e-300), len(y), 2),
                             "rss": rss, "nobs": len(y)})
    if kind == ModelKind.DTR:
        t = trees.fit_tree(X, y, hp["max_depth"], hp["min_split"], hp["min_leaf"])
        return TrainedModel(spec, {"tree": t})
    if kind == ModelKind.RFR:
        ts = trees.fit_forest(X, y, hp["estimators"], hp["max_depth"], hp["min_split"],
                              hp["min_leaf"], seed=hp["seed"])
        return TrainedModel(spec, {"trees": ts})
    if kind == ModelKind.XGBR:
        base, ts = trees.fit_boosted(X, y, hp["estimators"], hp["learning_rate"], hp["max_depth"],
                                     hp["max_features"], seed=hp["seed"])
        return TrainedModel(spec, {"base": base, "trees": ts})
    if kind == ModelKind.SVR:
        w, b, trace = linear.fit_svr_linear(X, y, hp["epsilon"], hp["l2"], hp["iterations"])
        return TrainedModel(spec, {"w": w, "b": b},
                            {"initial_objective": trace[0], "final_objective": trace[-1]})
    raise InvalidSpec(kind)


def predict(model: TrainedModel, window) -> float:
    w = np.asarray(window, dtype=float)
    if w.ndim != 1 or len(w) != model.window_size:
        raise WindowSizeMismatch(f"expected a window of {model.window_size}")
    return float(model.predict_batch(w[None, :])[0])


@dataclass(frozen=True)
class ScaleTrace:
    """Transforms applied before modelling, innermost last: difference then min-max."""

    scaler: ScalerParams | None = None
    anchors: tuple = ()  # last value of each differencing level of the original series

    def invert(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if self.scaler is not None:
            v = minmax_invert(v, self.scaler)
        if self.anchors:
            v = reintegrate(v, self.anchors)
        return v

    def to_mapping(self) -> dict:
        return {"scaler": None if self.scaler is None else [self.scaler.min, self.scaler.max],
                "anchors": [float(a) for a in self.anchors]}

    @classmethod
    def from_mapping(cls, m: dict) -> "ScaleTrace":
        sc = m.get("scaler")
        return cls(None if sc is None else ScalerParams(*sc), tuple(m.get("anchors", ())))


@dataclass
class Forecast:
    horizon: int
    values: np.ndarray
    model_scale: np.ndarray
    scale_trace: ScaleTrace


def recursive_forecast(model: TrainedModel, last_window, horizon: int,
                       scale_trace: ScaleTrace | None = None) -> Forecast:
    """Feed each one-step prediction back into the window, then undo the transforms."""
    if horizon > MAX_HORIZON:
        raise HorizonTooLarge(f"horizon {horizon} exceeds {MAX_HORIZON}")
    if horizon < 1:
        raise ValidationError("horizon must be at least 1")
    window = np.asarray(last_window, dtype=float).copy()
    if window.ndim != 1 or len(window) != model.window_size:
        raise WindowSizeMismatch(f"expected a window of {model.window_size}")
    out = np.empty(horizon)
    for k in range(horizon):
        out[k] = predict(model, window)
        window = np.roll(window, -1)
        window[-1] = out[k]
    trace = scale_trace or ScaleTrace()
    return Forecast(horizon, trace.invert(out), out, trace)
