"""Traffic-flow forecasting with weekly detrending and the DeepTrend network."""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ExperimentConfig, read_config
from .dataio import FlowTable, SyntheticSpec, WindowedDataset, generate_synthetic, load_csv, make_windows, save_csv, split_train_test
from .detrend import SimpleAverageDetrender, StationSeries, Standardizer, TrendProfile, compute_residual, compute_trend, impute_missing
from .models import BaselinePredictor, DeepTrendRegressor, LSTMRegressor, WindowLinearRegression, make_model

__version__ = "0.1.0"

__all__ = [
    "BaselinePredictor",
    "DeepTrendRegressor",
    "ExperimentConfig",
    "FlowTable",
    "LSTMRegressor",
    "SimpleAverageDetrender",
    "Standardizer",
    "StationSeries",
    "SyntheticSpec",
    "TrendProfile",
    "WindowLinearRegression",
    "WindowedDataset",
    "compute_residual",
    "compute_trend",
    "generate_synthetic",
    "impute_missing",
    "load_checkpoint",
    "load_csv",
    "make_model",
    "make_windows",
    "read_config",
    "save_checkpoint",
    "save_csv",
    "split_train_test",
]
