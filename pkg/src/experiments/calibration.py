"""Calibration of the certificate constant on holdout risk."""

import logging
from pathlib import Path

import numpy as np

from src.bounds.certificate import MIN_CALIBRATION_TRIALS, calibrate_constant
from src.bounds.profile import save_profile
from src.config import MC_BAND
from src.experiments.base_experiment import BaseExperiment
from src.experiments.erm_trials import run_trials
from src.experiments.experiment_config import ExperimentConfig
from src.experiments.experiment_registry import register_experiment
from src.experiments.utils.report_writer import ExperimentReport

logger = logging.getLogger(__name__)

CALIBRATION_STREAM = 1
VALIDATION_STREAM = 2


def run_calibration(config: ExperimentConfig, min_trials: int = MIN_CALIBRATION_TRIALS) -> ExperimentReport:
    """Fit K_thm on one set of trials and check its coverage on a fresh set.

    K is the smallest constant with risk <= K (r_hat + r0) on at least the
    target fraction of the fitting trials. The validation coverage must stay
    within MC_BAND binomial standard errors of the target. The fitted profile
    is written to ``profile_calibrated.json`` in the output directory.

    Args:
        config: First generator and first n of the sweep are used
        min_trials: Minimum number of fitting trials

    Returns:
        Report with one row per trial and the calibrated profile in the summary
    """
    if not config.generators:
        raise ValueError("Calibration needs a generator to draw holdout samples")
    spec = config.generators[0]
    n = config.n_grid[0] if config.n_grid else spec.n
    base_profile = config.profile()
    report = ExperimentReport(name="calibration", config=config)

    fitted = run_trials(spec, [n], config, base_profile, report, stream=CALIBRATION_STREAM)
    risks = np.array([r.risk for r in fitted])
    rates = np.array([r.base_rate for r in fitted])
    K = calibrate_constant(risks, rates, config.target_coverage, min_trials=min_trials)
    note = (f"calibrated on {spec.label}, n={n}, t={config.t:g}, {len(fitted)} trials, "
            f"coverage {config.target_coverage:g}, psi={config.psi_method}, "
            f"config {config.config_hash()[:12]}")
    profile = base_profile.with_constant("K_thm", K, note)
    profile = profile.model_copy(update={"name": f"calibrated-{spec.kind}"})
    profile_path = save_profile(profile, Path(config.out_dir) / "profile_calibrated.json")

    validated = run_trials(spec, [n], config, profile, report, stream=VALIDATION_STREAM)
    for phase, results in (("fit", fitted), ("validate", validated)):
        for r in results:
            report.rows.append({"class": spec.label, "phase": phase, "n": r.n, "trial": r.trial,
                                "seed": r.seed, "risk": r.risk, "r_hat": r.r_hat, "r0": r.r0,
                                "base_rate": r.base_rate, "bound": K * r.base_rate,
                                "covered": r.risk <= K * r.base_rate})
    coverage = float(np.mean([r.covered for r in validated])) if validated else 0.0
    target = config.target_coverage
    band = MC_BAND * np.sqrt(target * (1.0 - target) / max(len(validated), 1))
    report.checks[f"calibrated_coverage:{spec.label}"] = bool(validated) and coverage >= target - band
    report.summary.update({
        "K_thm": K, "profile_path": str(profile_path), "profile": profile.model_dump(),
        "fit_trials": len(fitted), "validation_trials": len(validated),
        "validation_coverage": coverage, "coverage_band": float(band),
    })
    logger.info(f"Calibrated K_thm={K:.6g}; validation coverage {coverage:.3f} "
                f"(target {target:g} - {band:.3f})")
    return report


@register_experiment
class Calibration(BaseExperiment):
    """Smallest certificate constant reaching the target coverage."""

    def __init__(self):
        super().__init__(name="calibrate",
                         description="Calibrate K_thm on holdout risk and validate it on fresh trials")

    def _run(self, config: ExperimentConfig) -> ExperimentReport:
        return run_calibration(config)
