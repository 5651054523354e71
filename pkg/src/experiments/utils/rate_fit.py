"""Least-squares power-law fits on log-log scale."""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from src.config import FIT_DROP

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RateFit:
    """y ~ exp(intercept) * x^exponent over ``x_range``."""

    exponent: float
    intercept: float
    residual: float
    x_range: Tuple[float, float]
    points: int

    def predict(self, x: float) -> float:
        return float(np.exp(self.intercept) * x ** self.exponent)

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "intercept": self.intercept,
                "residual": self.residual, "x_min": self.x_range[0],
                "x_max": self.x_range[1], "points": self.points}


def fit_log_log(x: Sequence[float], y: Sequence[float], drop: int = FIT_DROP) -> RateFit:
    """Fit log y against log x after dropping ``drop`` points at each end of the x range.

    Nonpositive or non-finite pairs are discarded first. When too few points
    remain for the full trim, the trim shrinks so that at least two are kept.

    Args:
        x: Abscissae, e.g. 1/eps, n or delta
        y: Positive measured values
        drop: Points removed at each end (smallest and largest x)

    Returns:
        RateFit with the RMS residual of the log-log regression
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"x and y lengths differ: {x.size} vs {y.size}")
    keep = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    x, y = x[keep], y[keep]
    if x.size < 2:
        raise ValueError(f"A log-log fit needs at least 2 positive points, got {x.size}")
    order = np.argsort(x)
    x, y = x[order], y[order]
    trim = min(max(drop, 0), (x.size - 2) // 2)
    if trim < drop:
        logger.warning(f"Only {x.size} points; trimming {trim} instead of {drop} at each end")
    if trim:
        x, y = x[trim:-trim], y[trim:-trim]

    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise ValueError("A log-log fit needs at least two distinct x values")
    reg = stats.linregress(lx, ly)
    resid = ly - (reg.intercept + reg.slope * lx)
    fit = RateFit(exponent=float(reg.slope), intercept=float(reg.intercept),
                  residual=float(np.sqrt(np.mean(resid ** 2))),
                  x_range=(float(x[0]), float(x[-1])), points=int(x.size))
    logger.debug(f"Log-log fit: exponent={fit.exponent:.4f}, residual={fit.residual:.3g}")
    return fit
