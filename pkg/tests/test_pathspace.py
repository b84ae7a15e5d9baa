import numpy as np
import pytest

from ldbuffer import (FrozenModel, PiecewiseLinearPath, buffer_value, buffer_value_ode,
                      concavity_gap, fluid_trajectory, local_cost, path_cost, sup_distance)
from ldbuffer.pathspace import buffer_at, positivize, scale_path, shift_anchor


def random_path(rng, K=2, N=30, T=None):
    T = rng.uniform(0.5, 3.0) if T is None else T
    times = np.concatenate([[0.0], np.sort(rng.uniform(0, T, N - 1)), [T]])
    nodes = np.abs(rng.normal(2.0, 1.5, size=(N + 1, K)))
    return PiecewiseLinearPath(times, nodes)


def sup_oracle(path, a, C, M=200_000):
    """Brute force ``sup_s int_s^T g`` on a dense s-grid that contains the breakpoints."""
    fine = np.unique(np.concatenate([np.linspace(0, path.T, M), path.times]))
    g = path(fine) @ np.asarray(a) - C
    F = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(fine) * (g[1:] + g[:-1]))])
    return float(max(F[-1] - F.min(), 0.0))


def test_constant_path_above_drain():
    p = PiecewiseLinearPath.uniform(2.0, np.full((11, 2), [1.0, 1.0]))
    tr = buffer_value(p, [1.0, 2.0], C=2.0)
    np.testing.assert_allclose(tr.values, p.times, atol=1e-14)


def test_path_below_drain_has_no_buffer(rng):
    p = random_path(rng)
    C = float((p.nodes @ [1.0, 1.0]).max()) + 0.1
    assert np.all(buffer_value(p, [1.0, 1.0], C).values == 0.0)


def test_triangle_against_sup_oracle():
    times = np.array([0.0, 1.0, 2.5, 3.0, 4.0])
    nodes = np.array([[0.2], [2.0], [0.1], [1.7], [0.4]])
    p = PiecewiseLinearPath(times, nodes)
    for C in (0.5, 1.0, 1.3):
        trace = buffer_value(p, [1.0], C)
        assert trace.terminal == pytest.approx(sup_oracle(p, [1.0], C), abs=1e-9)


def test_random_paths_against_sup_oracle(rng):
    for _ in range(5):
        p = random_path(rng, K=2, N=12)
        a, C = np.array([1.0, 0.5]), 3.0
        assert buffer_value(p, a, C).terminal == pytest.approx(sup_oracle(p, a, C), abs=1e-8)


def test_reflected_ode_matches_running_minimum(rng):
    for _ in range(20):
        p = random_path(rng)
        a, C = np.array([1.0, 2.0]), rng.uniform(3, 8)
        np.testing.assert_allclose(buffer_value_ode(p, a, C).values,
                                   buffer_value(p, a, C).values, atol=1e-11)


def test_buffer_at_interior_time():
    p = PiecewiseLinearPath(np.array([0.0, 2.0]), np.array([[2.0], [2.0]]))
    assert buffer_at(p, [1.0], 1.0, [0.5, 1.5]) == pytest.approx([0.5, 1.5])


def test_fluid_path_is_free(phone):
    traj = fluid_trajectory(phone, [30.0, 5.0], 1.0, step=1e-3)
    p = PiecewiseLinearPath(traj.times, traj.states)
    assert path_cost(phone, p) <= 1e-6


def test_frozen_straight_line(phone):
    fz = FrozenModel(phone, [40.0, 10.0])
    s = np.array([12.0, -3.0])
    T = 0.7
    nodes = np.array([40.0, 10.0]) + np.linspace(0, T, 21)[:, None] * s
    p = PiecewiseLinearPath.uniform(T, nodes)
    assert path_cost(fz, p) == pytest.approx(T * local_cost(fz, [40.0, 10.0], s).value, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 2.0, 3.0])
def test_scaling_multiplies_frozen_cost(phone, rng, alpha):
    fz = FrozenModel(phone, [40.0, 10.0])
    p = random_path(rng, N=20)
    p = PiecewiseLinearPath(p.times, p.nodes + [40.0, 10.0])
    assert path_cost(fz, scale_path(p, alpha)) == pytest.approx(alpha * path_cost(fz, p), rel=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 2.0, 3.0])
def test_scaling_squares_the_buffer(rng, alpha):
    for _ in range(10):
        p = random_path(rng)
        a = np.array([1.0, 3.0])
        lhs = buffer_value(scale_path(p, alpha), a, 0.0).values
        rhs = alpha ** 2 * buffer_value(p, a, 0.0).values
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)


def test_unit_scale_is_identity(rng):
    p = random_path(rng)
    q = scale_path(p, 1.0)
    np.testing.assert_array_equal(q.nodes, p.nodes)
    np.testing.assert_array_equal(q.times, p.times)


def test_shift_keeps_cost_and_buffer(phone, rng):
    fz = FrozenModel(phone, [40.0, 10.0])
    a = phone.a
    p = random_path(rng)
    p = PiecewiseLinearPath(p.times, p.nodes + [40.0, 10.0])
    delta = np.array([5.0, -1.0])
    q = shift_anchor(p, delta, a)
    assert abs(path_cost(fz, q) - path_cost(fz, p)) <= 1e-12 * max(1.0, path_cost(fz, p))
    np.testing.assert_allclose(buffer_value(q, a, 100.0).values,
                               buffer_value(p, a, 100.0).values, atol=1e-12)
    assert shift_anchor(p, np.zeros(2), a).nodes.tolist() == p.nodes.tolist()
    with pytest.raises(ValueError):
        shift_anchor(p, [1.0, 0.0], a)


def test_positivize_keeps_nonnegative_path():
    p = PiecewiseLinearPath.uniform(1.0, np.array([[1.0], [2.0], [3.0]]))
    q, rep = positivize(p, [1.0], 1.0)
    assert q is p and rep.removed_measure == 0.0


def test_positivize_removes_dip(phone):
    fz = FrozenModel(phone, [40.0, 10.0])
    times = np.array([0.0, 1.0, 2.0, 3.0])
    x = np.array([[20.0, 16.0], [20.0, 15.0], [22.0, 17.0], [25.0, 20.0]])
    p = PiecewiseLinearPath(times, x)
    a, C = phone.a, 100.0
    g = x @ a - C
    assert g[1] < 0 <= g[0] and g[2] > 0
    q, rep = positivize(p, a, C)
    # g falls 100 -> 95 over [0, 1] then rises 95 -> 107 over [1, 2]
    dip = 1.0 + 5.0 / 12.0
    assert rep.removed_measure == pytest.approx(dip, rel=1e-12)
    assert q.T == pytest.approx(3.0 - dip, rel=1e-12)
    assert buffer_value(q, a, C).terminal >= buffer_value(p, a, C).terminal - 1e-12
    assert path_cost(fz, q) <= path_cost(fz, p) + 1e-12


def test_concavity_gap():
    t = np.linspace(0, 1, 51)
    lin = PiecewiseLinearPath(t, np.stack([t, 2 * t], axis=1))
    assert concavity_gap(lin, [1.0, 1.0]) == pytest.approx(0.0, abs=1e-14)
    sq = PiecewiseLinearPath(t, (t ** 2)[:, None])
    assert concavity_gap(sq, [1.0]) > 0


def test_sup_distance():
    t = np.linspace(0, 1, 5)
    p = PiecewiseLinearPath(t, t[:, None])
    q = PiecewiseLinearPath(t, t[:, None] + 0.25)
    assert sup_distance(p, q) == pytest.approx(0.25)
