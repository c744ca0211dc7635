import numpy as np
import pytest

import survrank as sr


@pytest.fixture(scope="session")
def unit_beta_d4():
    rng = np.random.default_rng(7)
    raw = rng.standard_normal(4)
    return raw / np.linalg.norm(raw)


@pytest.fixture(scope="session")
def model_zoo(unit_beta_d4):
    """One instance per family, shared across read-only tests."""
    beta = unit_beta_d4
    return {
        "cox": sr.CoxPH(beta=beta, baseline_rate=1.3),
        "aft": sr.LogNormalAFT(beta=beta, noise_sd=0.8),
        "afth": sr.HeteroscedasticAFT(beta=beta),
        "weibull": sr.WeibullShape(beta=beta),
        "exp_rate": sr.exp_rate_family(beta),
        "dice": sr.DiscreteJitterCycle(),
    }


def random_x(model, rng, d=4):
    if model.kind == "dice_cycle":
        return sr.one_hot([rng.integers(0, 3)])[0]
    return rng.standard_normal(d)


def simulate_dataset(model, n, rng, d=4, censor_target=0.0):
    if model.kind == "dice_cycle":
        X = sr.one_hot(rng.integers(0, 3, size=n))
    else:
        X = rng.standard_normal((n, d))
    t = model.sample_times(X, rng)
    if censor_target > 0:
        rate = sr.calibrate_exponential_rate(t, censor_target)
        u, delta = sr.apply_censoring(t, sr.ExponentialCensoring(rate), rng)
    else:
        u, delta = t, np.ones(n, dtype=np.uint8)
    return sr.Dataset(x=X, u=u, delta=delta), t
