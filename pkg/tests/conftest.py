"""Shared fixtures for the simulator tests."""

import math

import pytest

from simultaneity.experiment import ChoicePlacement, single_particle_setup, two_particle_setup
from simultaneity.theories import JointDistribution, TheoryModel, predict

CHSH_GRID = ((0.0, -math.pi / 4), (0.0, math.pi / 4), (math.pi / 2, -math.pi / 4), (math.pi / 2, math.pi / 4))


@pytest.fixture
def photon_rest():
    return single_particle_setup()


@pytest.fixture
def photon_moving():
    return single_particle_setup(beta_plus=0.1)


@pytest.fixture
def photon_boundary():
    return single_particle_setup(beta_plus=0.05)


@pytest.fixture
def pair_standard():
    return two_particle_setup()


@pytest.fixture
def pair_before_before():
    return two_particle_setup(beta_j=0.1)


@pytest.fixture
def single_at_splitter():
    return single_particle_setup(placement=ChoicePlacement.AT_BEAM_SPLITTER)


@pytest.fixture
def quiet_env(monkeypatch):
    """Keep CLI runs from writing simultaneity.log into the working tree."""
    monkeypatch.setenv("SIMULTANEITY_LOG_FILE", "")
    monkeypatch.setenv("SIMULTANEITY_LOG_LEVEL", "WARNING")
    monkeypatch.delenv("SIMULTANEITY_WORKERS", raising=False)
    monkeypatch.delenv("SIMULTANEITY_TOLERANCE_K", raising=False)


def flatten_multisimultaneity(model, cfg, alpha, beta):
    """Engine that replaces every Multisimultaneity answer with a flat distribution."""
    dist = predict(model, cfg, alpha, beta)
    if model is not TheoryModel.MULTISIMULTANEITY:
        return dist
    return JointDistribution(mode=dist.mode, probabilities=(0.25, 0.25, 0.25, 0.25),
                             settings=dist.settings, theory=model, timing=dist.timing)


@pytest.fixture
def tampered_predictor():
    return flatten_multisimultaneity
