"""Experiment configuration files (JSON or TOML) and their resolution."""

import hashlib
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from src.bounds.profile import ConstantsProfile, load_profile
from src.classes.classdata import SampledClass, load_class_csv
from src.classes.generators import GeneratorSpec, generate
from src.classes.nets import geometric_grid, parse_grid
from src.config import DEFAULT_DRAWS, DEFAULT_SEED, DEFAULT_THREADS, OUTPUT_DIR

logger = logging.getLogger(__name__)

ExperimentKind = Literal["theorem1-check", "rates", "trials", "calibrate"]
PsiMethod = Literal["theorem1", "entropy_integral", "direct_mc"]
Grid = Union[str, List[float], None]

# fields that never change computed values
_UNHASHED = {"out_dir", "threads", "plots"}


class ExperimentConfig(BaseModel):
    """Everything needed to re-derive a run; grids are absolute unless None.

    None grids default to geometric grids scaled by each class diameter.
    """

    experiment: ExperimentKind = "theorem1-check"
    generators: List[GeneratorSpec] = Field(default_factory=list)
    class_file: Optional[str] = None
    range_checked: bool = True
    delta_grid: Grid = None
    eps_grid: Grid = None
    psi_grid: Grid = None
    n_grid: List[int] = Field(default_factory=list)
    draws: int = Field(DEFAULT_DRAWS, ge=1)
    seed: int = DEFAULT_SEED
    threads: int = Field(DEFAULT_THREADS, ge=1)
    t: float = Field(3.0, gt=0)
    trials: int = Field(20, ge=1)
    n_holdout: int = Field(4000, ge=1)
    support: Optional[int] = Field(None, ge=1)
    psi_method: PsiMethod = "theorem1"
    target_coverage: float = Field(0.95, gt=0, le=1)
    check_coverage: bool = False
    profile_path: Optional[str] = None
    out_dir: str = str(OUTPUT_DIR)
    plots: bool = False

    @model_validator(mode="after")
    def _check_inputs(self) -> "ExperimentConfig":
        for grid in (self.delta_grid, self.eps_grid, self.psi_grid):
            if grid is not None:
                values = parse_grid(grid)
                if values.size == 0 or np.any(values < 0):
                    raise ValueError(f"Grids must be nonempty and nonnegative, got {grid}")
        if any(n < 3 for n in self.n_grid):
            raise ValueError(f"Sample sizes must be at least 3, got {self.n_grid}")
        return self

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of every value-affecting field."""
        payload = self.model_dump(mode="json", exclude=_UNHASHED)
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with every non-None override applied and re-validated."""
        updates = {k: v for k, v in overrides.items() if v is not None}
        return ExperimentConfig.model_validate({**self.model_dump(), **updates})

    def classes(self) -> List[SampledClass]:
        """The configured classes: the CSV file (if any) followed by the generators."""
        out = []
        if self.class_file:
            out.append(load_class_csv(self.class_file, assert_range_01=self.range_checked))
        out.extend(generate(spec) for spec in self.generators)
        if not out:
            raise ValueError("Config names no class: set class_file or generators")
        return out

    def profile(self) -> ConstantsProfile:
        return load_profile(self.profile_path)

    def delta_values(self, F: SampledClass, count: int = 10) -> np.ndarray:
        scale = _scale(F)
        if self.delta_grid is None:
            return geometric_grid(scale, 0.05 * scale, count)
        return parse_grid(self.delta_grid)

    def eps_values(self, F: SampledClass, count: int = 14) -> np.ndarray:
        scale = _scale(F)
        if self.eps_grid is None:
            return geometric_grid(scale, 0.02 * scale, count)
        values = np.unique(parse_grid(self.eps_grid))[::-1]
        return values[values > 0]

    def psi_values(self) -> np.ndarray:
        if self.psi_grid is None:
            return np.linspace(0.0, 1.0, 41)
        return parse_grid(self.psi_grid)


def _scale(F: SampledClass) -> float:
    return F.diameter if F.diameter > 0 else 1.0


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read a JSON or TOML config file.

    Args:
        path: File ending in .json or .toml

    Returns:
        Validated ExperimentConfig
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    try:
        if path.suffix.lower() == ".toml":
            with open(path, "rb") as f:
                data = tomllib.load(f)
        elif path.suffix.lower() == ".json":
            data = json.loads(path.read_text(encoding="utf-8"))
        else:
            raise ValueError(f"Config must be .json or .toml, got {path.suffix}")
        config = ExperimentConfig.model_validate(data)
    except Exception as e:
        logger.error(f"Error loading config {path}: {str(e)}")
        raise
    logger.info(f"Loaded {config.experiment} config from {path} (hash {config.config_hash()[:12]})")
    return config
