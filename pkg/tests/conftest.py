"""Shared fixtures: datasets, schedules, and session-scoped trained teachers.

Teacher training is the expensive part of the suite, so each stack gets one
well-trained teacher per session, reused by the distillation, metric, and
acceptance tests.
"""

import numpy as np
import pytest

import bdense as bd
from bdense.data import gmm_ring


@pytest.fixture(scope="session")
def ring_data():
    return gmm_ring(8192, modes=8, radius=4.0, noise=0.1, seed=0)


@pytest.fixture(scope="session")
def ring_holdout():
    return gmm_ring(2048, modes=8, radius=4.0, noise=0.1, seed=1)


@pytest.fixture(scope="session")
def ring_holdout_big():
    return gmm_ring(8192, modes=8, radius=4.0, noise=0.1, seed=1)


@pytest.fixture(scope="session")
def vp_schedule():
    return bd.build_schedule("vp_linear", 1024)


@pytest.fixture(scope="session")
def edm_schedule():
    return bd.build_schedule("edm_sigma", 64, sigma_min=0.02, sigma_max=20.0)


@pytest.fixture(scope="session")
def vp_teacher(ring_data, vp_schedule):
    net = bd.ScoreNet(channels=2, hidden=(128, 128, 128), time_dim=32, seed=7)
    losses = bd.train_teacher(net, vp_schedule, ring_data, updates=8000,
                              batch_size=256, lr=2e-3, seed=7)
    net.training_losses = losses
    return net


@pytest.fixture(scope="session")
def edm_teacher(ring_data, edm_schedule):
    net = bd.ScoreNet(channels=2, hidden=(128, 128, 128), time_dim=32, seed=8)
    losses = bd.train_teacher(net, edm_schedule, ring_data, updates=8000,
                              batch_size=256, lr=2e-3, seed=8)
    net.training_losses = losses
    return net


@pytest.fixture(scope="session")
def tiny_data():
    rng = np.random.default_rng(3)
    return (rng.standard_normal((512, 2)) * 2.0).astype(np.float32)
