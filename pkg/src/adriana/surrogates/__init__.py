"""Forecasting models: neural (MLP/GRU/LSTM), least squares, trees, linear SVR."""

from .models import (
    MAX_HORIZON,
    Forecast,
    ModelKind,
    ModelSpec,
    ScaleTrace,
    TrainedModel,
    count_params,
    fit_model,
    fit_neural,
    predict,
    recursive_forecast,
)

__all__ = [
    "MAX_HORIZON", "Forecast", "ModelKind", "ModelSpec", "ScaleTrace", "TrainedModel",
    "count_params", "fit_model", "fit_neural", "predict", "recursive_forecast",
]
