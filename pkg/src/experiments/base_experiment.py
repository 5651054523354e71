"""Base class for all experiments."""

import logging
import time
from abc import ABC, abstractmethod
from typing import Optional

from src.experiments.experiment_config import ExperimentConfig
from src.experiments.utils.report_writer import ExperimentReport, ReportWriter

logger = logging.getLogger(__name__)


class BaseExperiment(ABC):
    """Base class for all experiments."""

    def __init__(self, name: str, description: str):
        """Initialize the experiment.

        Args:
            name: Subcommand name of the experiment
            description: Description of what the experiment checks
        """
        self.name = name
        self.description = description

    @abstractmethod
    def _run(self, config: ExperimentConfig) -> ExperimentReport:
        """Compute the report rows, summary and checks.

        Args:
            config: Resolved configuration

        Returns:
            Unwritten report
        """
        pass

    def run(self, config: ExperimentConfig, writer: Optional[ReportWriter] = None) -> ExperimentReport:
        """Run the experiment and write its report.

        Args:
            config: Resolved configuration
            writer: Destination; defaults to one on ``config.out_dir``

        Returns:
            The report, with the paths of the written files
        """
        logger.info(f"Running {self.name} (seed={config.seed}, draws={config.draws}, "
                    f"hash={config.config_hash()[:12]})")
        start = time.perf_counter()
        report = self._run(config)
        report.summary["elapsed_seconds"] = round(time.perf_counter() - start, 3)
        writer = writer or ReportWriter(config.out_dir)
        report.paths = writer.write(report)
        status = "passed" if report.passed else "FAILED"
        logger.info(f"{self.name} {status}: {len(report.rows)} rows, "
                    f"{len(report.failures)} failures, {len(report.checks)} checks")
        return report
