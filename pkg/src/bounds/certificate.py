"""Generalization certificates for convex-hull ERM and calibration of their constant."""

import logging
from typing import Dict, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

from src.bounds.fixed_point import FixedPointResult, r_zero
from src.bounds.profile import ConstantsProfile

logger = logging.getLogger(__name__)

MIN_CALIBRATION_TRIALS = 200


class Certificate(BaseModel):
    """bound = K (P_n f + r_hat + r0), with P_n f = 0 in the zero-error form."""

    bound: float
    r_hat: float = Field(ge=0)
    t: float = Field(gt=0)
    n: int = Field(ge=3)
    r0: float
    K: float = Field(gt=0)
    empirical_term: float = 0.0
    form: Literal["corollary", "theorem"] = "corollary"
    class_label: str = "class"
    seed: Optional[int] = None
    profile: Dict = Field(default_factory=dict)

    def recompute(self) -> float:
        """Re-derive the bound from the stored components."""
        return self.K * (self.empirical_term + self.r_hat + self.r0)


def certificate(class_label: str, t: float, n: int, r_hat: Union[FixedPointResult, float],
                profile: ConstantsProfile, empirical_mean: Optional[float] = None,
                seed: Optional[int] = None) -> Certificate:
    """Assemble K (r_hat + (t + log log n) / n), adding K P_n f when given.

    Args:
        class_label: Label of the base class
        t: Confidence parameter
        n: Sample size, at least 3
        r_hat: Zero-error rate or the fixed-point result holding it
        profile: Source of K
        empirical_mean: P_n f for the theorem form
        seed: Seed of the run that produced r_hat

    Returns:
        Certificate with every component stored
    """
    r0 = r_zero(t, n)
    value = r_hat.value if isinstance(r_hat, FixedPointResult) else float(r_hat)
    if value < 0:
        raise ValueError(f"r_hat must be nonnegative, got {value}")
    empirical = 0.0 if empirical_mean is None else float(empirical_mean)
    K = profile.K_thm
    cert = Certificate(bound=K * (empirical + value + r0), r_hat=value, t=t, n=n, r0=r0, K=K,
                       empirical_term=empirical,
                       form="corollary" if empirical_mean is None else "theorem",
                       class_label=class_label, seed=seed, profile=profile.model_dump())
    logger.info(f"Certificate for '{class_label}': bound={cert.bound:.6g} (r_hat={value:.4g}, r0={r0:.4g}, K={K:g})")
    return cert


def calibrate_constant(risks: Sequence[float], base_rates: Sequence[float],
                       target_coverage: float = 0.95,
                       min_trials: int = MIN_CALIBRATION_TRIALS) -> float:
    """Smallest K with risk <= K * base_rate in at least ``target_coverage`` of the trials.

    Args:
        risks: Holdout risks P|g_hat - g_0| per trial
        base_rates: r_hat + r0 per trial
        target_coverage: Required fraction in (0, 1]
        min_trials: Minimum number of trials accepted

    Returns:
        The calibrated constant (positive)
    """
    risks = np.asarray(risks, dtype=float)
    base = np.asarray(base_rates, dtype=float)
    if risks.shape != base.shape:
        raise ValueError("risks and base_rates must have the same length")
    if risks.size < min_trials:
        raise ValueError(f"Calibration needs at least {min_trials} trials, got {risks.size}")
    if not 0 < target_coverage <= 1:
        raise ValueError(f"Coverage must lie in (0, 1], got {target_coverage}")
    if np.any(base < 0) or np.any(risks < 0):
        raise ValueError("Risks and rates must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        needed = np.where(base > 0, risks / base, np.where(risks > 0, np.inf, 0.0))
    needed = np.sort(needed)
    k = int(np.ceil(target_coverage * needed.size)) - 1
    K = float(needed[k])
    if not np.isfinite(K):
        raise ValueError("Coverage target unreachable: positive risk with zero rate")
    # rounded up so that risk <= K * rate holds in floating point for the order statistic
    K = max(K * (1.0 + 1e-12), np.finfo(float).tiny)
    logger.info(f"Calibrated K={K:.6g} for coverage {target_coverage:g} over {risks.size} trials")
    return K
