"""Forecast error metrics and the composite model ranking."""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ConstantActuals, LengthMismatch, MixedScales, ValidationError


class Scale(str, enum.Enum):
    RAW = "Raw"
    NORMALIZED = "Normalized"


@dataclass(frozen=True)
class EvalReport:
    model_name: str
    rmse: float
    mae: float
    r2: float
    scale: Scale


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.ndim != 1:
        raise LengthMismatch(f"shapes {a.shape} and {p.shape} differ")
    if len(a) == 0:
        raise LengthMismatch("empty sequences")
    return a, p


def rmse(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return math.sqrt(float(np.mean((a - p) ** 2)))


def mae(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def r2(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0:
        raise ConstantActuals("R^2 is undefined for constant actuals")
    return 1.0 - float(np.sum((a - p) ** 2)) / ss_tot


def evaluate(name: str, actual, predicted, scale: Scale = Scale.RAW) -> EvalReport:
    return EvalReport(name, rmse(actual, predicted), mae(actual, predicted),
                      r2(actual, predicted), Scale(scale))


def rank_models(reports: list[EvalReport]) -> list[tuple[str, int]]:
    """Order models by their mean rank over RMSE, MAE (ascending) and R^2 (descending).

    Ties in mean rank go to the lower RMSE. The best of n models scores n, the worst 1.
    """
    if not reports:
        raise ValidationError("nothing to rank")
    if len({r.scale for r in reports}) > 1:
        raise MixedScales("reports mix raw and normalized metrics")
    rm = rankdata([r.rmse for r in reports])
    ma = rankdata([r.mae for r in reports])
    rr = rankdata([-r.r2 for r in reports])
    mean_rank = (rm + ma + rr) / 3.0
    order = sorted(range(len(reports)), key=lambda i: (mean_rank[i], reports[i].rmse, i))
    n = len(reports)
    return [(reports[i].model_name, n - pos) for pos, i in enumerate(order)]


def metrics_csv(reports: list[EvalReport]) -> str:
    buf = io.StringIO()
    buf.write("model,rmse,mae,r2,scale\n")
    for r in reports:
        buf.write(f"{r.model_name},{float(r.rmse)!r},{float(r.mae)!r},{float(r.r2)!r},{r.scale.value}\n")
    return buf.getvalue()


def ranking_csv(ranking: list[tuple[str, int]]) -> str:
    return "model,score\n" + "".join(f"{m},{s}\n" for m, s in ranking)
