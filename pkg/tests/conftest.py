"""Shared fixtures. The heavy simulation batches are session-scoped so the
unit suites and the acceptance gate reuse the same traces."""

import pytest

from gossip_learning import example1
from gossip_learning.config import ExperimentConfig
from gossip_learning.graph import stationary_distribution
from gossip_learning.simulator import SimulationConfig, run, run_replications


@pytest.fixture(scope="session")
def ex1_cfg() -> ExperimentConfig:
    return example1.config()


@pytest.fixture(scope="session")
def ex1_pi(ex1_cfg):
    return stationary_distribution(ex1_cfg.selection)


@pytest.fixture(scope="session")
def traces20_t5000(ex1_cfg):
    """The benchmark at its documented scale: T=5000, seed 42, 20 replications."""
    return run_replications(ex1_cfg.network, ex1_cfg.selection, ex1_cfg.world, ex1_cfg.simulation)


@pytest.fixture(scope="session")
def trace_t2000(ex1_cfg):
    cfg = SimulationConfig(horizon=2000, seed=1234, record_beliefs_every=1)
    return run(ex1_cfg.network, ex1_cfg.selection, ex1_cfg.world, cfg)


@pytest.fixture(scope="session")
def trace_t100k(ex1_cfg):
    cfg = SimulationConfig(horizon=100_000, seed=99, record_beliefs_every=10_000)
    return run(ex1_cfg.network, ex1_cfg.selection, ex1_cfg.world, cfg)
