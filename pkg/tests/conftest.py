import numpy as np
import pytest

from ldbuffer import load_model, model_from_dict


def make_model(transitions, a, C, K=None):
    """Model from a compact list of ``(e, c, m)`` triples."""
    K = len(a) if K is None else K
    return model_from_dict({
        "K": K,
        "transitions": [{"e": list(e), "rate": {"c": c, "m": list(m)}} for e, c, m in transitions],
        "a": list(a), "C": C})


def birth_death(lam=1.0, mu=1.0, a=1.0, C=1.0):
    return make_model([((1,), lam, (0,)), ((-1,), mu, (1,))], [a], C)


@pytest.fixture(scope="session")
def phone():
    return load_model("phone_data")


@pytest.fixture(scope="session")
def toy():
    return load_model("toy_birth_death")


@pytest.fixture(scope="session")
def closed():
    return load_model("closed_phone_data")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
