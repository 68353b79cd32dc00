"""
Settings for zeta_dist.

Built-in defaults live in the dataclasses below. A YAML settings file can
override any of them:

    prime_limit: 200000
    tail_tol: 1.0e-6
    witness:
      t_max: 1.0e6
      target_cutoff: 6
    sampler:
      block_size: 8192

Explicit CLI flags override the file.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from zeta_dist.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WitnessSettings:
    """Defaults of the witness search."""

    t_max: float = 1.0e7
    phase_resolution: float = 1.0e-3  # radians per grid step, DirectMax
    kronecker_resolution: float = 0.05  # radians per grid step, KroneckerTargets
    target_cutoff: int = 4  # K: primes <= 2K are phase targets
    coarse_mass_fraction: float = 1.0e-3
    max_coarse_atoms: int = 512
    chunk_size: int = 4096
    refine_iterations: int = 40
    max_certifications: int = 64


@dataclass(frozen=True)
class SamplerSettings:
    """Defaults of the compound Poisson sampler."""

    block_size: int = 4096
    normal_threshold: float = 50.0


@dataclass(frozen=True)
class Settings:
    """Every tunable default of the library."""

    prime_limit: int = 100_000
    power_limit: Optional[int] = None  # None: max(2, ceil(40 / v))
    tail_tol: Optional[float] = None  # None: never auto-raise the prime limit
    atom_rel_threshold: float = 1.0e-16
    weight_floor: float = 1.0e-40
    max_prime_limit: int = 2**31
    witness: WitnessSettings = field(default_factory=WitnessSettings)
    sampler: SamplerSettings = field(default_factory=SamplerSettings)

    def with_overrides(self, **overrides: Any) -> "Settings":
        """Return a copy with the non-None top-level overrides applied."""
        kept = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **kept)


DEFAULT_SETTINGS = Settings()

_NESTED = {"witness": WitnessSettings, "sampler": SamplerSettings}


def _build(cls: type, data: Dict[str, Any], prefix: str) -> Any:
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs: Dict[str, Any] = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(
                f"Unknown settings key: {prefix}{key}",
                {"key": f"{prefix}{key}", "allowed": sorted(known)},
            )
        if key in _NESTED and cls is Settings:
            if not isinstance(value, dict):
                raise ConfigError(f"Settings key '{key}' must be a mapping", {"key": key})
            kwargs[key] = _build(_NESTED[key], value, f"{key}.")
        else:
            kwargs[key] = value
    return cls(**kwargs)


def settings_from_dict(data: Optional[Dict[str, Any]]) -> Settings:
    """Build Settings from a parsed mapping (None or empty gives the defaults)."""
    if not data:
        return DEFAULT_SETTINGS
    if not isinstance(data, dict):
        raise ConfigError("Settings document must be a mapping")
    return _build(Settings, data, "")


def load_settings(path: Optional[Path]) -> Settings:
    """Load a YAML settings file; None gives the built-in defaults."""
    if path is None:
        return DEFAULT_SETTINGS

    if not path.exists():
        raise ConfigError(f"Settings file not found: {path}", {"path": str(path)})

    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"Cannot parse settings file {path}: {exc}", {"path": str(path)})

    settings = settings_from_dict(data)
    logger.info("Loaded settings from %s", path)
    return settings


def settings_to_dict(settings: Settings) -> Dict[str, Any]:
    return dataclasses.asdict(settings)
