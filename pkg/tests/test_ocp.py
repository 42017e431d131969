import numpy as np
import pytest

from vhsip_landing.config import VhsipParams
from vhsip_landing.ocp import (
    IllPosedCost, build_cost, build_rollout, cost_value, optimal_virtual_foot,
    plan_landing)


def explicit_rollout(x0, u, omega_sq, Ts):
    """Oracle: iterate the forward-Euler dynamics state by state."""
    xs = [np.asarray(x0, dtype=float)]
    for k in range(len(omega_sq) - 1):
        A = np.array([[1.0, Ts], [Ts * omega_sq[k], 1.0]])
        B = np.array([0.0, -Ts * omega_sq[k]])
        xs.append(A @ xs[-1] + B * u)
    return np.array(xs)


def test_condensing_matches_explicit_rollout():
    rng = np.random.default_rng(3)
    for N in (5, 60, 300):
        omega_sq = rng.uniform(0.0, 60.0, N + 1)
        roll = build_rollout(omega_sq, 0.004, N)
        x0 = rng.normal(size=2)
        u = float(rng.normal())
        ref = explicit_rollout(x0, u, omega_sq, 0.004)
        pred = roll.Px @ x0 + roll.Pxu * u
        scale = max(1.0, np.max(np.abs(ref)))
        assert np.max(np.abs(pred - ref)) < 1e-12 * scale


def test_rollout_shape_validation():
    with pytest.raises(ValueError):
        build_rollout(np.zeros(5), 0.004, 10)


def test_cost_value_matches_terminal_cost():
    rng = np.random.default_rng(1)
    omega_sq = rng.uniform(0.0, 40.0, 101)
    roll = build_rollout(omega_sq, 0.004, 100)
    wp, wv, wu = 1.3, 0.7, 1e-5
    cost = build_cost(roll, wp, wv, wu)
    for _ in range(10):
        x0 = rng.normal(size=2)
        u = float(rng.normal())
        xN = explicit_rollout(x0, u, omega_sq, 0.004)[-1]
        direct = wp * (xN[0] - u) ** 2 + wv * xN[1] ** 2 + wu * u ** 2
        assert np.isclose(cost_value(cost, x0, u), direct, rtol=1e-10, atol=1e-12)


def test_optimal_virtual_foot_zero_gradient():
    rng = np.random.default_rng(2)
    omega_sq = rng.uniform(0.0, 50.0, 201)
    roll = build_rollout(omega_sq, 0.004, 200)
    cost = build_cost(roll, 1.0, 1.0, 1e-6)
    for _ in range(20):
        x0 = rng.normal(size=2)
        u = optimal_virtual_foot(cost, x0)
        eps = 1e-5
        j0 = cost_value(cost, x0, u)
        assert cost_value(cost, x0, u + eps) >= j0 - 1e-12
        assert cost_value(cost, x0, u - eps) >= j0 - 1e-12


def test_ill_posed_weights_rejected():
    roll = build_rollout(np.full(11, 30.0), 0.004, 10)
    with pytest.raises(IllPosedCost):
        build_cost(roll, -1.0, 1.0, 1e-6)
    with pytest.raises(IllPosedCost):
        build_cost(roll, 0.0, 1.0, 0.0)


def test_plan_landing_terminal_state():
    p = VhsipParams()
    plan = plan_landing(p, np.array([1.2, -0.4, -2.0]))
    # horizontal motion dies out by the end of the horizon
    assert np.max(np.abs(plan.com_vel[-1, :2])) < 1e-3
    # CoM starts at the terrain origin moving with the touch-down velocity
    assert np.allclose(plan.com_pos[0, :2], 0.0)
    assert np.allclose(plan.com_vel[0], [1.2, -0.4, -2.0])
    assert np.isclose(plan.com_pos[0, 2], p.l0)
    # the pivot sits ahead of the motion
    assert plan.u_o[0] > 0 and plan.u_o[1] < 0


def test_plan_landing_rejects_upward_velocity():
    with pytest.raises(ValueError):
        plan_landing(VhsipParams(), np.array([0.0, 0.0, 0.5]))


def test_euler_profile_decays():
    p = VhsipParams()
    plan = plan_landing(p, np.array([0.0, 0.0, -2.0]),
                        euler_td=np.array([0.3, -0.2, 0.0]),
                        euler_rate_td=np.array([1.0, 0.0, 0.0]))
    assert np.allclose(plan.euler[0], [0.3, -0.2, 0.0])
    assert np.max(np.abs(plan.euler[-1])) < 5e-3
    assert np.max(np.abs(plan.euler_rate[-1])) < 5e-2


def test_zero_velocity_plan_is_trivial():
    plan = plan_landing(VhsipParams(), np.array([0.0, 0.0, -1.0]))
    assert np.allclose(plan.u_o, 0.0, atol=1e-12)
    assert np.max(np.abs(plan.com_pos[:, :2])) < 1e-12
