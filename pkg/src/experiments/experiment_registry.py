"""Experiment registry for managing available experiments."""

import logging
from typing import Dict, Optional, Type

from src.experiments.base_experiment import BaseExperiment

logger = logging.getLogger(__name__)


class ExperimentRegistry:
    """Registry for managing available experiments."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(ExperimentRegistry, cls).__new__(cls)
        return cls._instance

    def __init__(self):
        """Initialize the experiment registry."""
        if not hasattr(self, 'experiments'):
            self.experiments: Dict[str, BaseExperiment] = {}

    def register(self, experiment: BaseExperiment):
        """Register a new experiment.

        Args:
            experiment: Experiment to register
        """
        if not isinstance(experiment, BaseExperiment):
            raise ValueError(f"Experiment must be an instance of BaseExperiment, got {type(experiment)}")
        if experiment.name in self.experiments:
            logger.warning(f"Experiment {experiment.name} already registered, overwriting")
        self.experiments[experiment.name] = experiment
        logger.debug(f"Registered experiment: {experiment.name}")

    def get_experiment(self, name: str) -> Optional[BaseExperiment]:
        """Get an experiment by name.

        Args:
            name: Experiment name

        Returns:
            Experiment instance, or None if unknown
        """
        return self.experiments.get(name)

    def get_all_experiments(self) -> Dict[str, BaseExperiment]:
        """Get all registered experiments.

        Returns:
            Dictionary of experiment names to experiment instances
        """
        return self.experiments.copy()


def get_registry() -> ExperimentRegistry:
    """Get the experiment registry instance.

    Returns:
        Experiment registry instance
    """
    return ExperimentRegistry()


def register_experiment(experiment_class: Type[BaseExperiment]) -> Type[BaseExperiment]:
    """Class decorator that instantiates and registers an experiment.

    Args:
        experiment_class: Experiment class to register
    """
    get_registry().register(experiment_class())
    return experiment_class


__all__ = ['BaseExperiment', 'ExperimentRegistry', 'get_registry', 'register_experiment']
