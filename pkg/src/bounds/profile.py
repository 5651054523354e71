"""Absolute constants used by the bounds, with provenance."""

import logging
from pathlib import Path
from typing import Dict, Union

from pydantic import BaseModel, Field

from src.config import DEFAULT_PROFILE_PATH

logger = logging.getLogger(__name__)


class ConstantsProfile(BaseModel):
    """Unspecified absolute constants; every value must be positive."""

    name: str = "default"
    K_thm: float = Field(1.0, gt=0)
    K_1: float = Field(1.0, gt=0)
    K_2: float = Field(1.0, gt=0)
    K_rate: float = Field(1.0, gt=0)
    notes: Dict[str, str] = Field(default_factory=dict)

    def with_constant(self, key: str, value: float, note: str) -> "ConstantsProfile":
        """Copy with one constant replaced and its provenance recorded."""
        if key not in ("K_thm", "K_1", "K_2", "K_rate"):
            raise ValueError(f"Unknown constant: {key}")
        notes = dict(self.notes)
        notes[key] = note
        return self.model_copy(update={key: value, "notes": notes})


def load_profile(path: Union[str, Path, None] = None) -> ConstantsProfile:
    """Load a profile from JSON; a missing default file yields the all-ones profile."""
    path = Path(path) if path is not None else DEFAULT_PROFILE_PATH
    if not path.exists():
        if path == DEFAULT_PROFILE_PATH:
            logger.warning(f"Profile {path} not found, using default constants")
            return ConstantsProfile()
        raise FileNotFoundError(f"Constants profile not found: {path}")
    try:
        profile = ConstantsProfile.model_validate_json(path.read_text(encoding="utf-8"))
    except Exception as e:
        logger.error(f"Error loading constants profile {path}: {str(e)}")
        raise
    logger.info(f"Loaded constants profile '{profile.name}' from {path}")
    return profile


def save_profile(profile: ConstantsProfile, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(profile.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Saved constants profile '{profile.name}' to {path}")
    return path
