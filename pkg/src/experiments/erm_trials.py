"""Convex-hull ERM trials with zero-error certificates and holdout risk."""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from src.bounds.certificate import certificate
from src.bounds.fixed_point import (PsiFunction, build_psi_direct, build_psi_entropy,
                                    build_psi_theorem1, solve_zero_error)
from src.bounds.profile import ConstantsProfile
from src.classes.classdata import SampledClass, evaluate_combination
from src.classes.generators import GeneratorSpec, random_convex_combination, sample_class_pair
from src.classes.nets import covering_curve
from src.experiments.base_experiment import BaseExperiment
from src.experiments.experiment_config import ExperimentConfig
from src.experiments.experiment_registry import register_experiment
from src.experiments.utils.rate_fit import fit_log_log
from src.experiments.utils.report_writer import ExperimentReport
from src.processes.hullopt import FrozenHullRademacherOracle, erm_convex_hull
from src.processes.process import modulus_finite

logger = logging.getLogger(__name__)

ERM_FIT_TOL = 1e-8
RATE_TOL = 0.15


@dataclass(frozen=True)
class TrialResult:
    n: int
    trial: int
    seed: int
    train_objective: float
    lp_gap: float
    risk: float
    r_hat: float
    r0: float
    bound: float
    covered: bool

    @property
    def base_rate(self) -> float:
        return self.r_hat + self.r0


def trial_seed(seed: int, n: int, trial: int, stream: int = 0) -> int:
    """Independent seed per (run seed, n, trial, stream)."""
    return int(np.random.SeedSequence([seed, n, trial, stream]).generate_state(1)[0])


def build_psi(G: SampledClass, config: ExperimentConfig, seed: int) -> PsiFunction:
    """psi_n for the configured method on the training class."""
    if config.psi_method == "entropy_integral":
        return build_psi_entropy(covering_curve(G, config.eps_values(G)), G.n, config.psi_values())
    if config.psi_method == "theorem1":
        eps = config.eps_values(G)
        mod = modulus_finite(G, eps, config.draws, seed)
        return build_psi_theorem1(mod, covering_curve(G, eps), G.n, config.psi_values(),
                                  G.distinct_count())
    oracle = FrozenHullRademacherOracle(G, config.draws, seed)
    return build_psi_direct(oracle, config.psi_values(), G.n)


def run_trial(spec: GeneratorSpec, n: int, trial: int, config: ExperimentConfig,
              profile: ConstantsProfile, stream: int = 0) -> TrialResult:
    """One ERM fit of a random target in conv(G), with its certificate and holdout risk.

    Args:
        spec: Generator of the base class; its n and seed are replaced
        n: Training sample size
        trial: Trial index
        config: Supplies t, draws, grids, support and holdout size
        profile: Constants for the certificate
        stream: Separates calibration from validation trials

    Returns:
        TrialResult for the trial
    """
    seed = trial_seed(config.seed, n, trial, stream)
    spec = GeneratorSpec.model_validate({**spec.model_dump(), "n": n, "seed": seed})
    train, hold = sample_class_pair(spec, config.n_holdout)
    target = random_convex_combination(train.m, seed, support=config.support)
    erm = erm_convex_hull(train, evaluate_combination(train, target))
    risk = float(np.mean(np.abs(evaluate_combination(hold, erm.combination)
                                - evaluate_combination(hold, target))))
    r_hat = solve_zero_error(build_psi(train, config, seed))
    cert = certificate(train.label, config.t, n, r_hat, profile, seed=seed)
    logger.debug(f"Trial {trial} (n={n}): objective={erm.objective_value:.2g}, "
                 f"risk={risk:.4g}, bound={cert.bound:.4g}")
    return TrialResult(n=n, trial=trial, seed=seed, train_objective=erm.objective_value,
                       lp_gap=erm.residual, risk=risk, r_hat=cert.r_hat, r0=cert.r0,
                       bound=cert.bound, covered=risk <= cert.bound)


def run_trials(spec: GeneratorSpec, ns: Sequence[int], config: ExperimentConfig,
               profile: ConstantsProfile, report: ExperimentReport,
               stream: int = 0) -> List[TrialResult]:
    """All trials for every n, in parallel; failed trials are recorded and skipped."""
    cells = [(n, j) for n in ns for j in range(config.trials)]

    def safe(n: int, j: int) -> Tuple[Optional[TrialResult], Optional[Exception]]:
        try:
            return run_trial(spec, n, j, config, profile, stream), None
        except Exception as e:
            return None, e

    outcomes = Parallel(n_jobs=config.threads, prefer="threads")(
        delayed(safe)(n, j) for n, j in cells)
    results = []
    for (n, j), (result, error) in zip(cells, outcomes):
        if error is not None:
            report.record_failure(f"{spec.label}:n={n}:trial={j}", error)
        else:
            results.append(result)
    return results


def rate_exponent_target(spec: GeneratorSpec) -> Optional[float]:
    """Exponent of r_hat in n for covering exponent V = d of ball(d)."""
    if spec.kind != "ball":
        return None
    V = float(spec.d)
    return -(2.0 + V) / (2.0 * (1.0 + V))


def _summarize(spec: GeneratorSpec, ns: Sequence[int], results: List[TrialResult],
               config: ExperimentConfig, report: ExperimentReport) -> Dict:
    per_n = {}
    for n in ns:
        at_n = [r for r in results if r.n == n]
        if not at_n:
            continue
        per_n[int(n)] = {
            "trials": len(at_n),
            "coverage": float(np.mean([r.covered for r in at_n])),
            "mean_r_hat": float(np.mean([r.r_hat for r in at_n])),
            "mean_risk": float(np.mean([r.risk for r in at_n])),
            "mean_bound": float(np.mean([r.bound for r in at_n])),
            "max_train_objective": float(max(r.train_objective for r in at_n)),
        }
    summary = {"per_n": per_n}
    if results:
        summary["coverage"] = float(np.mean([r.covered for r in results]))
        report.checks[f"erm_fit:{spec.label}"] = all(r.train_objective <= ERM_FIT_TOL for r in results)
        if config.check_coverage:
            report.checks[f"coverage:{spec.label}"] = summary["coverage"] >= config.target_coverage

    sizes = sorted(per_n)
    if len(sizes) >= 2 and all(per_n[n]["mean_r_hat"] > 0 for n in sizes):
        fit = fit_log_log(sizes, [per_n[n]["mean_r_hat"] for n in sizes])
        summary["r_hat_fit"] = fit.to_dict()
        target = rate_exponent_target(spec)
        if target is not None and len(sizes) >= 3:
            summary["r_hat_fit"]["target"] = target
            report.checks[f"r_hat_exponent:{spec.label}"] = abs(fit.exponent - target) <= RATE_TOL
        report.plots[spec.label] = {"mean r_hat": (sizes, [per_n[n]["mean_r_hat"] for n in sizes]),
                                    "mean holdout risk": (sizes, [per_n[n]["mean_risk"] for n in sizes])}
    return summary


def run_erm_trials(config: ExperimentConfig) -> ExperimentReport:
    """ERM over conv(G) on random targets, with certificates, coverage and a rate fit.

    Every trial draws a fresh class instance and sample from the generator,
    a random target in its convex hull, and an independent holdout sample.

    Args:
        config: Generators, n sweep, trials, t and psi method

    Returns:
        Report with one row per trial and per-generator summaries
    """
    if not config.generators:
        raise ValueError("ERM trials need generators to draw holdout samples")
    profile = config.profile()
    report = ExperimentReport(name="erm_trials", config=config)
    report.summary["profile"] = profile.model_dump()
    for spec in config.generators:
        ns = config.n_grid or [spec.n]
        results = run_trials(spec, ns, config, profile, report)
        for r in results:
            report.rows.append(dict(asdict(r), **{"class": spec.label, "base_rate": r.base_rate}))
        report.summary[spec.label] = _summarize(spec, ns, results, config, report)
        logger.info(f"{spec.label}: {len(results)} trials, "
                    f"coverage {report.summary[spec.label].get('coverage', float('nan')):.3f}")
    return report


@register_experiment
class ErmTrials(BaseExperiment):
    """Convex-hull ERM with certificates over repeated trials."""

    def __init__(self):
        super().__init__(name="trials",
                         description="Fit random hull targets by ERM and check certificate coverage")

    def _run(self, config: ExperimentConfig) -> ExperimentReport:
        return run_erm_trials(config)
