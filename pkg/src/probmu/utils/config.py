"""Configuration management for solver caps, sampling and caching."""

import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import psutil


@dataclass
class SolverConfig:
    """Caps guarding the fixpoint computations."""
    max_iterations: int = 10000
    max_goals: int = 20000
    mu_unfold_depth: int = 32
    max_universe: int = 2000


@dataclass
class SamplingConfig:
    """Defaults for random systems and sampled distributions."""
    samples: int = 20
    seed: int = 0
    denominator_bound: int = 6


@dataclass
class CacheConfig:
    """Weak transition table cache settings."""
    enabled: bool = True
    max_tables: int = 64


def _default_workers() -> int:
    return max(1, min(8, psutil.cpu_count(logical=False) or 1))


@dataclass
class PerformanceConfig:
    """Parallel execution settings for cross-validation."""
    max_workers: int = field(default_factory=_default_workers)
    parallel_xval: bool = False


@dataclass
class Settings:
    """Overall toolkit settings."""
    solver: SolverConfig = field(default_factory=SolverConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    cache: CacheConfig = field(default_factory=CacheConfig)
    performance: PerformanceConfig = field(default_factory=PerformanceConfig)


_SECTION_TYPES = {
    "solver": SolverConfig,
    "sampling": SamplingConfig,
    "cache": CacheConfig,
    "performance": PerformanceConfig,
}
_SECTIONS = tuple(_SECTION_TYPES)

_INT_OVERRIDES = {
    "PROBMU_MAX_ITERATIONS": ("solver", "max_iterations"),
    "PROBMU_MAX_GOALS": ("solver", "max_goals"),
    "PROBMU_MU_DEPTH": ("solver", "mu_unfold_depth"),
    "PROBMU_MAX_UNIVERSE": ("solver", "max_universe"),
    "PROBMU_MAX_WORKERS": ("performance", "max_workers"),
    "PROBMU_SEED": ("sampling", "seed"),
}

# smallest accepted value of each integer setting; unlisted ones must be positive
_MINIMUMS = {("sampling", "seed"): 0, ("sampling", "samples"): 0}

logger = logging.getLogger("probmu.config")


def check_range(section: str, key: str, value: int) -> int:
    """Return value, or raise ValueError when it is below the setting's minimum."""
    minimum = _MINIMUMS.get((section, key), 1)
    if value < minimum:
        raise ValueError(f"{section}.{key} must be at least {minimum}, got {value}")
    return value


def _check_settings(settings: "Settings") -> None:
    for section in _SECTIONS:
        for key, value in asdict(getattr(settings, section)).items():
            if isinstance(value, int) and not isinstance(value, bool):
                check_range(section, key, value)


class ConfigManager:
    """Loads settings from a JSON file and the PROBMU_* environment."""

    def __init__(self, config_file: Optional[Path] = None):
        self.config_file = config_file or Path.home() / ".probmu" / "config.json"
        self._settings: Optional[Settings] = None

    def _read_file(self) -> Settings:
        if not self.config_file.exists():
            return Settings()
        try:
            raw = json.loads(self.config_file.read_text())
            settings = Settings(**{name: kind(**raw.get(name, {})) for name, kind in _SECTION_TYPES.items()})
            _check_settings(settings)
            return settings
        except (OSError, ValueError, TypeError, AttributeError):
            # unreadable or stale file
            return Settings()

    def load_config(self) -> Settings:
        """Effective settings, read once and then memoised until reset()."""
        if self._settings is None:
            self._settings = self._read_file()
            self._apply_env_overrides()
        return self._settings

    def save_config(self, settings: Settings) -> None:
        self.config_file.parent.mkdir(parents=True, exist_ok=True)
        self.config_file.write_text(json.dumps(asdict(settings), indent=2))
        self._settings = settings

    def update_setting(self, section: str, key: str, value: str) -> Any:
        """Parse value for section.key, store it and persist the file."""
        if section not in _SECTIONS:
            raise KeyError(f"unknown section '{section}'")
        settings = self.load_config()
        target = getattr(settings, section)
        if not hasattr(target, key):
            raise KeyError(f"unknown setting '{section}.{key}'")

        current = getattr(target, key)
        if isinstance(current, bool):
            parsed: Any = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            parsed = check_range(section, key, int(value))
        else:
            parsed = value
        setattr(target, key, parsed)
        self.save_config(settings)
        return parsed

    def _apply_env_overrides(self) -> None:
        settings = self._settings
        if settings is None:
            return
        for variable, (section, key) in _INT_OVERRIDES.items():
            raw = os.getenv(variable)
            if not raw:
                continue
            try:
                value = check_range(section, key, int(raw))
            except ValueError as exc:
                logger.warning("ignoring %s=%r: %s", variable, raw, exc)
                continue
            setattr(getattr(settings, section), key, value)
        cache_flag = os.getenv("PROBMU_CACHE_ENABLED")
        if cache_flag:
            settings.cache.enabled = cache_flag.lower() == "true"

    def as_dict(self) -> Dict[str, Dict[str, Any]]:
        return asdict(self.load_config())

    def reset(self) -> None:
        """Forget loaded settings; the next access re-reads file and environment."""
        self._settings = None


config_manager = ConfigManager()


def get_solver_config() -> SolverConfig:
    return config_manager.load_config().solver


def get_sampling_config() -> SamplingConfig:
    return config_manager.load_config().sampling


def get_cache_config() -> CacheConfig:
    return config_manager.load_config().cache


def get_performance_config() -> PerformanceConfig:
    return config_manager.load_config().performance
