"""
SVEIHR 动力学与前向仿真
"""
from dataclasses import replace

import numpy as np
import pytest

from src.core.params import COMPARTMENTS, CompartmentState
from src.core.plan import AllocationPlan
from src.epidemics.demand import extract_demand_streams, observables
from src.epidemics.model import (
    DynamicsParams,
    admissions,
    force_of_infection,
    force_of_infection_vector,
    step,
)
from src.epidemics.simulator import simulate, ventilator_path
from src.utils.errors import (
    DynamicsViolationError,
    PlanInfeasibleError,
    ShapeError,
    ValidationError,
)

from reference_model import reference_step


def _params(config):
    return DynamicsParams.from_params(config.global_params, config.regions)


def test_force_of_infection(tiny_config):
    """测试感染力 λ = β(I_m + I_s)/n"""
    region = tiny_config.regions[0]
    assert force_of_infection(region.initial_state, region) == pytest.approx(1.8 * 50 / 1000)
    params = _params(tiny_config)
    lam = force_of_infection_vector(params.initial_state, params)
    assert lam == pytest.approx([1.8 * 50 / 1000, 2.1 * 50 / 800])


def test_admissions_respect_resources(tiny_config):
    """测试收治不超过需求、呼吸机余量与空床"""
    params = _params(tiny_config)
    state = params.initial_state.copy()
    result = admissions(state, params.initial_ventilators, params)
    crit = params.alpha * params.p_c * state[:, 2]
    assert np.all(result.A_c <= crit + 1e-12)
    assert np.all(result.A_c <= params.initial_ventilators + 1e-12)
    assert result.A_c + result.K_c == pytest.approx(crit)
    assert result.A_c[1] == 0.0  # R2 没有呼吸机


def test_simulation_matches_reference(tiny_instance, tiny_config):
    """测试仿真轨迹与逐区域标量实现一致"""
    plan = AllocationPlan.broadcast([[1, 1], [2, 0]], tiny_instance.tree.n_scenarios,
                                    tiny_instance.stage_boundaries, tiny_instance.region_ids)
    traj = tiny_instance.simulate_plan(plan)
    g = tiny_config.global_params
    for w in range(traj.n_scenarios):
        for t in range(traj.horizon - 1):
            for r, region in enumerate(tiny_config.regions):
                state = dict(zip(COMPARTMENTS, traj.states[w, t, r]))
                ref = reference_step(state, traj.vh[w, t, r], traj.X[w, t, r], region, g)
                for k, name in enumerate(COMPARTMENTS):
                    assert traj.states[w, t + 1, r, k] == pytest.approx(ref[name], rel=1e-12, abs=1e-9)
                assert traj.A_c[w, t, r] == pytest.approx(ref["A_c"], abs=1e-9)
                assert traj.K_s[w, t, r] == pytest.approx(ref["K_s"], abs=1e-9)


def test_mass_changes_only_by_unadmitted_severe_outflow(tiny_instance, tiny_config):
    """测试总人数只因未收治重症的离开比例不为 1 而变化"""
    traj = tiny_instance.simulate_plan(tiny_instance.zero_plan())
    outflow = tiny_config.global_params.k_ks_outflow
    totals = traj.states.sum(axis=3)
    expected = totals[:, :-1, :] - (1.0 - outflow) * traj.K_s[:, :-1, :]
    assert totals[:, 1:, :] == pytest.approx(expected, rel=1e-10)


def test_negative_compartment_raises(tiny_config):
    """测试比率不合理时报错而不是截断"""
    params = _params(tiny_config)
    aggressive = replace(params, beta=np.array([40.0, 40.0]))
    with pytest.raises(DynamicsViolationError):
        step(params.initial_state, np.array([0.4, 0.5]), params.initial_ventilators, aggressive)


def test_step_shape_check(tiny_config):
    """测试状态维度校验"""
    params = _params(tiny_config)
    with pytest.raises(ShapeError):
        step(np.zeros((3, 10)), np.zeros(3), np.zeros(3), params)


def test_step_batches_over_scenarios(tiny_config):
    """测试批维度与逐个情景计算结果相同"""
    params = _params(tiny_config)
    states = np.stack([params.initial_state] * 3)
    vh = np.array([[0.3, 0.4], [0.4, 0.5], [0.5, 0.6]])
    X = np.stack([params.initial_ventilators] * 3)
    batch = step(states, vh, X, params)
    for w in range(3):
        single = step(states[w], vh[w], X[w], params)
        assert batch.state[w] == pytest.approx(single.state)


def test_exogenous_compartments_independent_of_plan(tiny_instance):
    """测试 S, V, E, EV, I_m, I_s 与分配无关，只有医院相关仓室变化"""
    zero = tiny_instance.simulate_plan(tiny_instance.zero_plan())
    plan = AllocationPlan.broadcast([[2, 0], [0, 2]], tiny_instance.tree.n_scenarios,
                                    tiny_instance.stage_boundaries, tiny_instance.region_ids)
    other = tiny_instance.simulate_plan(plan)
    for name in ("S", "V", "E", "EV", "I_m", "I_s"):
        assert np.array_equal(zero.compartment(name), other.compartment(name))


def test_more_ventilators_never_increase_deaths(tiny_instance):
    """测试增加呼吸机不会增加死亡"""
    probs = tiny_instance.tree.probabilities
    base = tiny_instance.simulate_plan(tiny_instance.zero_plan()).expected_deaths(probs)
    for allocation in ([[1, 0], [0, 0]], [[1, 1], [1, 1]], [[0, 2], [2, 0]]):
        plan = AllocationPlan.broadcast(allocation, tiny_instance.tree.n_scenarios,
                                        tiny_instance.stage_boundaries, tiny_instance.region_ids)
        assert tiny_instance.simulate_plan(plan).expected_deaths(probs) <= base + 1e-9


def test_simulate_rejects_oversupply(tiny_instance):
    """测试超额分配在仿真前被拒绝"""
    plan = AllocationPlan.broadcast([[2, 1], [0, 0]], tiny_instance.tree.n_scenarios,
                                    tiny_instance.stage_boundaries, tiny_instance.region_ids)
    with pytest.raises(PlanInfeasibleError):
        tiny_instance.simulate_plan(plan)
    tiny_instance.simulate_plan(plan, check_supply=False)


def test_simulate_shape_mismatch(tiny_instance):
    """测试方案情景数与 VH 路径不一致"""
    plan = AllocationPlan.zeros(1, tiny_instance.stage_boundaries, tiny_instance.region_ids)
    with pytest.raises(ShapeError):
        simulate(tiny_instance.vh, plan, tiny_instance.params)


def test_ventilator_path():
    """测试累计呼吸机只在决策期增加"""
    plan = AllocationPlan.broadcast([[1, 0], [2, 1]], 1, (1, 3), ("R1", "R2"))
    X = ventilator_path(plan, np.array([5.0, 0.0]), 4)
    assert X[0, :, 0].tolist() == [6, 6, 8, 8]
    assert X[0, :, 1].tolist() == [0, 0, 1, 1]


def test_trajectory_outputs(tiny_instance):
    """测试轨迹导出与区域死亡表"""
    traj = tiny_instance.simulate_plan(tiny_instance.zero_plan())
    frame = traj.to_frame()
    n_w = tiny_instance.tree.n_scenarios
    assert len(frame) == n_w * tiny_instance.horizon * 2
    assert {"scenario", "period", "region", "S", "D", "A_c", "X"} <= set(frame.columns)
    regional = traj.regional_deaths(tiny_instance.tree.probabilities)
    assert regional["expected_deaths"].sum() == pytest.approx(
        traj.expected_deaths(tiny_instance.tree.probabilities))


def test_demand_streams(tiny_instance):
    """测试需求流与轨迹中的收治加拒收一致"""
    traj = tiny_instance.simulate_plan(tiny_instance.zero_plan())
    demand = extract_demand_streams(traj, tiny_instance.params)
    assert demand.shape == traj.A_c.shape
    assert demand.critical == pytest.approx(traj.A_c + traj.K_c)
    assert demand.severe == pytest.approx(traj.A_s + traj.K_s)
    assert np.all(demand.peak() > 0)


def test_observables(tiny_instance):
    """测试累计接种单调不减"""
    traj = tiny_instance.simulate_plan(tiny_instance.zero_plan())
    obs = observables(traj, tiny_instance.params)
    assert np.all(np.diff(obs.cumulative_vaccinations, axis=1) >= 0)
    assert np.all(obs.new_infections >= 0)


def test_initial_state_helper():
    """测试仓室状态拒绝负值"""
    with pytest.raises(ValidationError):
        CompartmentState(S=-1)


def _random_run(params, rng, horizon=6, stages=(1, 3, 5)):
    """随机床位、初始呼吸机、接触率、VH 路径与分配，单情景仿真"""
    beds = rng.integers(1, 40, size=params.n_regions).astype(float)
    X0 = np.floor(rng.uniform(0, 1, size=params.n_regions) * (beds + 1)).clip(max=beds)
    randomized = replace(
        params.with_capacity(beds, X0),
        beta=rng.uniform(0.5, 2.0, size=params.n_regions),
    )
    x = rng.integers(0, 4, size=(1, len(stages), params.n_regions))
    plan = AllocationPlan(x, stages, params.region_ids)
    h = rng.uniform(0.0, 1.0, size=(1, horizon, params.n_regions))
    return randomized, simulate(h, plan, randomized, None, horizon)


def test_random_runs_respect_ventilators_and_beds(tiny_config):
    """测试随机仿真的每一期都满足 H_c <= X 与 H_s + H_c <= b"""
    rng = np.random.default_rng(11)
    base = _params(tiny_config)
    for _ in range(100):
        params, traj = _random_run(base, rng)
        H_s, H_c = traj.compartment("H_s"), traj.compartment("H_c")
        assert np.all(H_c <= traj.X + 1e-9)
        assert np.all(H_s + H_c <= params.beds[None, None, :] + 1e-9)
        assert np.all(traj.states >= -1e-9)


def test_random_runs_conserve_mass_when_outflow_is_complete(tiny_config):
    """测试未收治重症全部离开（ς·γ + (1-ς)·μ = 1）且无迁移时，总人数逐期不变"""
    g = replace(tiny_config.global_params, gamma_ks=1.0, mu_ks=1.0)
    assert g.k_ks_outflow == pytest.approx(1.0)
    base = DynamicsParams.from_params(g, tiny_config.regions)
    rng = np.random.default_rng(12)
    for _ in range(100):
        _, traj = _random_run(base, rng)
        totals = traj.states.sum(axis=(2, 3))
        assert np.abs(np.diff(totals, axis=1)).max() <= 1e-9
        assert totals[0, 0] == pytest.approx(base.initial_state.sum())
