from .baselines import (
    DISPLAY_NAMES,
    MODEL_KINDS,
    BaselinePredictor,
    SeasonalNaiveRegressor,
    WindowLinearRegression,
    make_model,
    model_param_names,
)
from .deeptrend import PHASES, DeepTrendNetwork, DeepTrendRegressor, PhaseError
from .lstm import LSTMRegressor

__all__ = [
    "BaselinePredictor",
    "DISPLAY_NAMES",
    "DeepTrendNetwork",
    "DeepTrendRegressor",
    "LSTMRegressor",
    "MODEL_KINDS",
    "PHASES",
    "PhaseError",
    "SeasonalNaiveRegressor",
    "WindowLinearRegression",
    "make_model",
    "model_param_names",
]
