import json

import numpy as np
import pytest

from ldbuffer import ModelError, bundled_models, drift, load_model, model_to_dict, rate, validate
from conftest import birth_death, make_model


def test_phone_model_is_valid(phone):
    rep = validate(phone)
    assert rep.valid and rep.failures == []
    assert phone.K == 2 and phone.J == 6
    np.testing.assert_array_equal(phone.a, [1.0, 5.0])
    assert phone.C == 100.0


def test_single_direction_does_not_span():
    m = make_model([((1, 0), 1.0, (0, 0))], [1.0, 1.0], 1.0)
    rep = validate(m)
    assert not rep.valid
    assert any("span" in f for f in rep.failures)


def test_nonpositive_buffer_weight_rejected():
    m = make_model([((1, 0), 1.0, (0, 0)), ((-1, 0), 1.0, (1, 0)),
                    ((0, 1), 1.0, (0, 0)), ((0, -1), 1.0, (0, 1))], [1.0, 0.0], 1.0)
    rep = validate(m)
    assert not rep.valid
    assert any("strictly positive" in f for f in rep.failures)


def test_departure_rate_is_linear(phone):
    # departure of a phone call: mu * x1 with mu = 1
    assert rate(phone, 1, [50.0, 10.0]) == pytest.approx(50.0)


def test_constant_and_vanishing_rates(phone):
    assert rate(phone, 0, [123.0, 7.0]) == 40.0
    assert rate(phone, 4, [0.0, 10.0]) == 0.0
    with pytest.raises(IndexError):
        rate(phone, 6, [1.0, 1.0])


def test_phone_drift_table(phone, rng):
    lam, mu, th, psi, gam, dlt = 40.0, 1.0, 6.0, 1.0, 0.2, 0.5
    for x in rng.uniform(0, 80, size=(20, 2)):
        x1, x2 = x
        expect = [lam - mu * x1 - gam * x1 + dlt * x2, th - psi * x2 + gam * x1 - dlt * x2]
        np.testing.assert_allclose(drift(phone, x), expect, rtol=1e-13, atol=1e-12)


def test_zero_rates_give_zero_drift():
    m = make_model([((1,), 0.0, (0,)), ((-1,), 0.0, (1,))], [1.0], 1.0)
    np.testing.assert_array_equal(drift(m, [3.0]), [0.0])


def test_birth_death_root_by_bisection():
    from scipy.optimize import bisect
    m = birth_death(lam=3.0, mu=2.0)
    root = bisect(lambda x: drift(m, [x])[0], 0.0, 10.0, xtol=1e-14)
    assert root == pytest.approx(1.5, abs=1e-12)
    assert drift(m, [1.5])[0] == pytest.approx(0.0, abs=1e-14)


def test_negative_state_rejected(phone):
    with pytest.raises(Exception):
        phone.rates([-1.0, 2.0])


def test_round_trip_and_loading(tmp_path, phone):
    p = tmp_path / "m.json"
    p.write_text(json.dumps(model_to_dict(phone)))
    m2 = load_model(p)
    assert model_to_dict(m2) == model_to_dict(phone)
    assert set(bundled_models()) >= {"phone_data", "toy_birth_death", "closed_phone_data"}
    # a path whose file is absent falls back to the bundled model of that stem
    assert model_to_dict(load_model("nowhere/phone_data.json")) == model_to_dict(phone)
    with pytest.raises(ModelError):
        load_model("no_such_model")


def test_malformed_description():
    from ldbuffer import model_from_dict
    with pytest.raises(ModelError):
        model_from_dict({"K": 2, "transitions": [{"e": [1, 0]}], "a": [1, 1], "C": 1})
