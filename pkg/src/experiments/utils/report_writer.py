"""Utility for writing experiment reports as CSV, JSON and SVG."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.experiments.experiment_config import ExperimentConfig

logger = logging.getLogger(__name__)

Series = Tuple[List[float], List[float]]


@dataclass
class ExperimentReport:
    """Rows, summary, failures and acceptance checks of one run.

    ``plots`` maps a plot title to named (x, y) series drawn on log-log axes.
    """

    name: str
    config: ExperimentConfig
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    failures: List[Dict[str, Any]] = field(default_factory=list)
    checks: Dict[str, bool] = field(default_factory=dict)
    plots: Dict[str, Dict[str, Series]] = field(default_factory=dict)
    paths: Dict[str, Path] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def record_failure(self, cell: str, error: Exception) -> None:
        logger.error(f"{self.name}: cell '{cell}' failed: {str(error)}")
        self.failures.append({"cell": cell, "error": type(error).__name__, "message": str(error)})


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


class ReportWriter:
    """Writes reports and standalone artifacts under one output directory."""

    def __init__(self, out_dir: Union[str, Path]):
        self.out_dir = Path(out_dir)

    def _path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def write(self, report: ExperimentReport) -> Dict[str, Path]:
        """Write ``<name>.csv``, ``<name>.json`` and, if enabled, one SVG per plot.

        Args:
            report: Finished report

        Returns:
            Mapping of artifact kind to path
        """
        config = report.config
        paths = {"csv": self.write_rows(report.name, report.rows, config)}
        payload = {
            "experiment": report.name,
            "passed": report.passed,
            "checks": report.checks,
            "summary": report.summary,
            "failures": report.failures,
            "config_hash": config.config_hash(),
            "config": config.model_dump(mode="json"),
        }
        paths["json"] = self.write_json(report.name, payload)
        if config.plots:
            for title, series in report.plots.items():
                slug = "".join(ch if ch.isalnum() else "_" for ch in title).strip("_")
                paths[f"svg:{title}"] = self.write_svg(f"{report.name}_{slug}", title, series)
        return paths

    def write_rows(self, name: str, rows: List[Dict[str, Any]],
                   config: Optional[ExperimentConfig] = None) -> Path:
        """CSV with the seed, draw count and config hash on every row."""
        frame = pd.DataFrame(rows)
        if config is not None:
            if "seed" not in frame.columns:
                frame["seed"] = config.seed
            frame["draws"] = config.draws
            frame["config_hash"] = config.config_hash()
        path = self._path(f"{name}.csv")
        frame.to_csv(path, index=False, float_format="%.12g")
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    def write_frame(self, name: str, frame: pd.DataFrame, **columns: Any) -> Path:
        """CSV of a curve frame with constant provenance columns appended."""
        frame = frame.copy()
        for key, value in columns.items():
            frame[key] = value
        path = self._path(f"{name}.csv")
        frame.to_csv(path, index=False, float_format="%.12g")
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        path = self._path(f"{name}.json")
        path.write_text(json.dumps(_jsonable(payload), indent=2), encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path

    def write_svg(self, name: str, title: str, series: Dict[str, Series]) -> Path:
        """Log-log line plot of the named series."""
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        try:
            for label, (x, y) in series.items():
                x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
                keep = (x > 0) & (y > 0)
                ax.plot(x[keep], y[keep], marker="o", markersize=3, label=label)
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_title(title)
            ax.legend()
            path = self._path(f"{name}.svg")
            fig.savefig(path, format="svg", bbox_inches="tight")
        finally:
            plt.close(fig)
        logger.info(f"Wrote plot {path}")
        return path
