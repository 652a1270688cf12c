"""Tests for configuration management."""

import json

import pytest

from src.probmu.utils.config import (
    ConfigManager, Settings, config_manager, get_cache_config, get_performance_config, get_sampling_config,
    get_solver_config,
)


@pytest.fixture
def manager(temp_directory):
    return ConfigManager(temp_directory / "config.json")


class TestConfigManager:
    """Test loading, saving and updating settings."""

    def test_defaults(self, manager):
        """Test the values used without a configuration file."""
        settings = manager.load_config()
        assert settings.solver.max_iterations == 10000
        assert settings.solver.max_goals == 20000
        assert settings.solver.mu_unfold_depth == 32
        assert settings.solver.max_universe == 2000
        assert settings.sampling.samples == 20
        assert settings.sampling.seed == 0
        assert settings.sampling.denominator_bound == 6
        assert settings.cache.enabled is True
        assert settings.cache.max_tables == 64
        assert settings.performance.parallel_xval is False
        assert settings.performance.max_workers >= 1

    def test_loaded_once(self, manager):
        """Test that the settings object is reused until reset."""
        first = manager.load_config()
        assert manager.load_config() is first
        manager.reset()
        assert manager.load_config() is not first

    def test_save_and_reload(self, manager):
        """Test that saved values survive a reload."""
        settings = Settings()
        settings.solver.max_goals = 99
        settings.sampling.seed = 7
        manager.save_config(settings)
        data = json.loads(manager.config_file.read_text())
        assert data["solver"]["max_goals"] == 99
        manager.reset()
        reloaded = manager.load_config()
        assert reloaded.solver.max_goals == 99
        assert reloaded.sampling.seed == 7

    def test_partial_file(self, manager):
        """Test that missing sections keep their defaults."""
        manager.config_file.write_text(json.dumps({"sampling": {"samples": 3}}))
        settings = manager.load_config()
        assert settings.sampling.samples == 3
        assert settings.solver.max_iterations == 10000

    def test_unreadable_file(self, manager):
        """Test the fallback to defaults for broken files."""
        manager.config_file.write_text("{not json")
        assert manager.load_config().solver.max_iterations == 10000
        manager.reset()
        manager.config_file.write_text(json.dumps({"solver": {"no_such_cap": 1}}))
        assert manager.load_config().solver.max_iterations == 10000

    def test_update_setting(self, manager):
        """Test typed parsing of updated values."""
        assert manager.update_setting("solver", "max_iterations", "12") == 12
        assert manager.update_setting("cache", "enabled", "no") is False
        assert manager.update_setting("performance", "parallel_xval", "yes") is True
        manager.reset()
        settings = manager.load_config()
        assert settings.solver.max_iterations == 12
        assert settings.cache.enabled is False

    def test_update_unknown(self, manager):
        """Test that unknown sections and keys are refused."""
        with pytest.raises(KeyError):
            manager.update_setting("network", "timeout", "1")
        with pytest.raises(KeyError):
            manager.update_setting("solver", "timeout", "1")
        with pytest.raises(ValueError):
            manager.update_setting("solver", "max_goals", "many")

    def test_update_out_of_range(self, manager):
        """Test that stored caps must be positive."""
        with pytest.raises(ValueError, match="at least 1"):
            manager.update_setting("solver", "max_iterations", "0")
        assert manager.update_setting("sampling", "samples", "0") == 0

    def test_out_of_range_file_falls_back(self, manager):
        """Test that a file holding a negative cap is treated as stale."""
        manager.config_file.write_text(json.dumps({"solver": {"max_goals": -3}}))
        assert manager.load_config().solver.max_goals == 20000

    def test_as_dict(self, manager):
        """Test the plain view used by the settings command."""
        data = manager.as_dict()
        assert set(data) == {"solver", "sampling", "cache", "performance"}
        assert data["solver"]["mu_unfold_depth"] == 32


class TestEnvironmentOverrides:
    """Test PROBMU_* variables."""

    def test_integer_overrides(self, manager, monkeypatch):
        """Test the integer caps."""
        monkeypatch.setenv("PROBMU_MAX_ITERATIONS", "5")
        monkeypatch.setenv("PROBMU_MAX_GOALS", "6")
        monkeypatch.setenv("PROBMU_MU_DEPTH", "7")
        monkeypatch.setenv("PROBMU_MAX_UNIVERSE", "8")
        monkeypatch.setenv("PROBMU_MAX_WORKERS", "2")
        monkeypatch.setenv("PROBMU_SEED", "11")
        settings = manager.load_config()
        assert settings.solver.max_iterations == 5
        assert settings.solver.max_goals == 6
        assert settings.solver.mu_unfold_depth == 7
        assert settings.solver.max_universe == 8
        assert settings.performance.max_workers == 2
        assert settings.sampling.seed == 11

    def test_invalid_override_ignored(self, manager, monkeypatch):
        """Test that unparsable values leave the setting alone."""
        monkeypatch.setenv("PROBMU_MAX_GOALS", "lots")
        assert manager.load_config().solver.max_goals == 20000

    def test_non_positive_override_ignored(self, manager, monkeypatch):
        """Test that caps below one and negative seeds are rejected."""
        monkeypatch.setenv("PROBMU_MAX_ITERATIONS", "-5")
        monkeypatch.setenv("PROBMU_MAX_WORKERS", "0")
        monkeypatch.setenv("PROBMU_SEED", "-1")
        settings = manager.load_config()
        assert settings.solver.max_iterations == 10000
        assert settings.performance.max_workers >= 1
        assert settings.sampling.seed == 0

    def test_zero_seed_accepted(self, manager, monkeypatch):
        """Test that zero is a valid seed."""
        monkeypatch.setenv("PROBMU_SEED", "0")
        assert manager.load_config().sampling.seed == 0

    def test_cache_switch(self, manager, monkeypatch):
        """Test the cache toggle."""
        monkeypatch.setenv("PROBMU_CACHE_ENABLED", "false")
        assert manager.load_config().cache.enabled is False

    def test_override_beats_file(self, manager, monkeypatch):
        """Test that the environment wins over the file."""
        manager.config_file.write_text(json.dumps({"solver": {"max_iterations": 40}}))
        monkeypatch.setenv("PROBMU_MAX_ITERATIONS", "4")
        assert manager.load_config().solver.max_iterations == 4


class TestGlobalGetters:
    """Test the module-level accessors."""

    def test_getters_follow_global_manager(self, monkeypatch):
        """Test that the getters read the shared manager."""
        monkeypatch.setenv("PROBMU_MU_DEPTH", "3")
        config_manager.reset()
        assert get_solver_config().mu_unfold_depth == 3
        assert get_sampling_config() is config_manager.load_config().sampling
        assert get_cache_config().enabled is True
        assert get_performance_config().parallel_xval is False
