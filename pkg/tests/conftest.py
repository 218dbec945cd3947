import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cursor import (
    CvConfig,
    EstimatorSpec,
    LatentPoint,
    ScoreConfig,
    generate_dataset,
    make_response_model,
)
from cursor._util import derive_rng, derive_seed

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def tiny_dataset(seed=0, n_traj=8, n_pts=10, dz=6, de=10, noise=0.5):
    """Small single-target dataset for fast module tests."""
    model = make_response_model(de, k_signal=2, noise_sigma=noise, nuisance_rank=2,
                                seed=derive_seed(seed, "model"))
    target = LatentPoint(derive_rng(seed, "target").standard_normal(dz))
    ds = generate_dataset([target], n_traj, n_pts, model,
                          master_seed=derive_seed(seed, "acq"), d_max=20.0)
    return ds, target


def fast_config(seed=0, kind="ols", **kw):
    return ScoreConfig(
        estimator=EstimatorSpec(kind=kind),
        cv=CvConfig(n_folds=5, seed=derive_seed(seed, "cv")),
        perm_seed=derive_seed(seed, "perm"),
        **kw,
    )


@pytest.fixture(scope="session")
def small_ds():
    return tiny_dataset(seed=3)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
