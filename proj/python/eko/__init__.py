"""Sensor data preprocessing, ARMA-family forecasting and forecaster comparison.

Heavy lifting happens in the compiled ``_eko`` module; the helpers here turn
its JSON payloads into plain Python objects.
"""

import json

from ._eko import (
    ArmaModel,
    IoError,
    LevinsonResult,
    NumericalError,
    PQScore,
    ValidationError,
    WaveletDecomposition,
    autocovariance,
    design_cheby2,
    dwt,
    filtfilt,
    fit_arma,
    forecast,
    idwt,
    kalman_forecast,
    levinson_durbin,
    parse_export,
    prediction_quality,
)
from . import _eko

__all__ = [
    "ArmaModel",
    "IoError",
    "LevinsonResult",
    "NumericalError",
    "PQScore",
    "ValidationError",
    "WaveletDecomposition",
    "autocovariance",
    "compare_block",
    "compare_ensemble",
    "design_cheby2",
    "dwt",
    "filtfilt",
    "fit_arma",
    "forecast",
    "idwt",
    "kalman_forecast",
    "levinson_durbin",
    "medal_table",
    "parse_export",
    "prediction_quality",
    "simulate_blocks",
]


def simulate_blocks(seed=7, settings=""):
    """Simulated, preprocessed blocks as dicts (block_code, grid, channels)."""
    return [json.loads(text) for text in _eko.simulate_blocks(seed, settings)]


def compare_block(block, settings=""):
    """Report bundle for one block; ``block`` is a dict from simulate_blocks."""
    return json.loads(_eko.compare_block(json.dumps(block), settings))


def compare_ensemble(seed=7, settings="", workers=None):
    """Report bundles for every configured block of one simulated run."""
    return [json.loads(text) for text in _eko.compare_ensemble(seed, settings, workers)]


def medal_table(bundles):
    """Medal counts per predictor over a list of bundles."""
    return _eko.medal_table([json.dumps(b) for b in bundles])
