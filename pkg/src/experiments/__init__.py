"""Experiments module for hullcert."""

from src.experiments.experiment_registry import get_registry
# importing each module registers its experiment
from src.experiments.theorem1_check import Theorem1Check, run_theorem1_verification
from src.experiments.rate_curves import RateCurves, run_rate_curves
from src.experiments.erm_trials import ErmTrials, run_erm_trials
from src.experiments.calibration import Calibration, run_calibration

# Export commonly used functions and classes
__all__ = [
    'get_registry',
    'Theorem1Check',
    'RateCurves',
    'ErmTrials',
    'Calibration',
    'run_theorem1_verification',
    'run_rate_curves',
    'run_erm_trials',
    'run_calibration',
]
