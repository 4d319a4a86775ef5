"""Shared fixtures. The trained models are expensive, so they are built once
per session and reused by the module tests and the acceptance suite."""

from __future__ import annotations

import numpy as np
import pytest

from wkgm import augment6, build_weight, geometric_schedule, make_phantom
from wkgm.phantoms import PhantomSpec
from wkgm.weighting import apply_weight

TOY_SIGMA_D = 0.03
TOY_SHAPE = (8, 8)


@pytest.fixture(scope="session")
def toy_schedule():
    return geometric_schedule(0.01, 1.0, 1000)


@pytest.fixture(scope="session")
def toy_dataset():
    rng = np.random.default_rng(42)
    return TOY_SIGMA_D * rng.standard_normal((384, 6, *TOY_SHAPE))


@pytest.fixture(scope="session")
def toy_model(toy_dataset, toy_schedule):
    """Conv estimator trained on the zero-mean Gaussian toy set."""
    from wkgm.scorenet import TrainingConfig, train_score

    cfg = TrainingConfig(epochs=50, batch_size=32, lr=2e-3, seed=0, hidden=32, depth=4)
    return train_score(toy_dataset, toy_schedule, cfg)


def phantom_training_set(wmap, count=48, size=(32, 32)):
    """Weighted, augmented k-space of ellipse phantoms (k max-normalized)."""
    tensors = []
    for i in range(count):
        _, k = make_phantom(PhantomSpec("ellipses", size, 1, 50000 + i))
        k_norm = k[0] / np.abs(k[0]).max()
        tensors.append(augment6(apply_weight(k_norm, wmap)))
    return np.stack(tensors)


@pytest.fixture(scope="session")
def phantom32_models(toy_schedule):
    """(weighted model + map, unweighted model + map) pair trained identically."""
    from wkgm.scorenet import TrainingConfig, train_score

    cfg = TrainingConfig(epochs=30, batch_size=8, lr=1e-3, seed=0)
    w_on = build_weight((32, 32), 0.02, 0.5)
    w_off = build_weight((32, 32), 0.02, 0.0)
    m_on = train_score(phantom_training_set(w_on), toy_schedule, cfg, 0.02, 0.5)
    m_off = train_score(phantom_training_set(w_off), toy_schedule, cfg, 0.02, 0.0)
    return (m_on, w_on), (m_off, w_off)
