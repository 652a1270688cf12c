"""Shared test fixtures and configuration."""

import tempfile
from pathlib import Path

import pytest

from src.probmu.core.transitions import clear_weak_tables
from src.probmu.processors.plts_parser import parse_plts
from src.probmu.utils.config import config_manager
from src.probmu.utils.error_handling import default_error_handler


# s answers a with an even split; t chooses v or w. Together they are the
# smallest pair that combined transitions relate one way but not the other.
CONVEX_MODEL = """
# convexity example
states: s t v w x
actions: a b c
s a -> 1/2 v, 1/2 w
t a -> v
t a -> w
v b -> x
w c -> x
"""

LIFTING_MODEL = """
states: s1 s2 s3 t1 t2 t3
"""

TAU_MODEL = """
states: s t u v
s tau -> u
u a -> v
t a -> v
"""

REFUSAL_MODEL = """
states: s t
actions: a
t a -> s
"""

DIVERGENT_MODEL = """
states: s t
actions: a
s tau -> s
t a -> t
"""

LOOP_MODEL = """
states: s u d
actions: a b
s a -> s
u a -> d
d b -> d
"""


@pytest.fixture(autouse=True)
def isolated_state(tmp_path, monkeypatch):
    """Keep configuration, caches and error statistics per test."""
    monkeypatch.setattr(config_manager, "config_file", tmp_path / "config" / "config.json")
    for variable in ("PROBMU_MAX_ITERATIONS", "PROBMU_MAX_GOALS", "PROBMU_MU_DEPTH", "PROBMU_MAX_UNIVERSE",
                     "PROBMU_MAX_WORKERS", "PROBMU_SEED", "PROBMU_CACHE_ENABLED"):
        monkeypatch.delenv(variable, raising=False)
    config_manager.reset()
    clear_weak_tables()
    default_error_handler.reset()
    yield
    config_manager.reset()
    clear_weak_tables()


@pytest.fixture
def convex_plts():
    return parse_plts(CONVEX_MODEL)


@pytest.fixture
def lifting_plts():
    return parse_plts(LIFTING_MODEL)


@pytest.fixture
def tau_plts():
    return parse_plts(TAU_MODEL)


@pytest.fixture
def refusal_plts():
    return parse_plts(REFUSAL_MODEL)


@pytest.fixture
def divergent_plts():
    return parse_plts(DIVERGENT_MODEL)


@pytest.fixture
def loop_plts():
    return parse_plts(LOOP_MODEL)


@pytest.fixture
def temp_directory():
    """Create a temporary directory for testing."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir)


@pytest.fixture
def model_files(temp_directory):
    """Every example system written to a .plts file."""
    files = {}
    for name, text in (("convex", CONVEX_MODEL), ("tau", TAU_MODEL), ("refusal", REFUSAL_MODEL),
                       ("divergent", DIVERGENT_MODEL), ("loop", LOOP_MODEL)):
        path = temp_directory / f"{name}.plts"
        path.write_text(text, encoding="utf-8")
        files[name] = path
    return files
