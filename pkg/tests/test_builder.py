"""
MILP 构建：规模、约束与仿真的一致性、公平性行与固定阶段
"""
import numpy as np
import pytest

from src.core.plan import AllocationPlan
from src.optimizer.builder import (
    complete_solution_from_plan,
    expected_model_size,
    ventilator_bounds,
)
from src.optimizer.fairness import (
    Equal,
    EquityK,
    ProportionalZeta,
    Utilitarian,
    parse_fairness,
)
from src.optimizer.instance import build_instance_milp
from src.optimizer.milp import INTEGER, MilpModel
from src.utils.errors import BuildError, ValidationError

PLANS = ([[0, 0], [0, 0]], [[1, 1], [2, 0]], [[0, 2], [1, 1]], [[2, 0], [0, 2]])


def _plan(instance, allocation):
    return AllocationPlan.broadcast(allocation, instance.tree.n_scenarios,
                                    instance.stage_boundaries, instance.region_ids)


def test_model_size(tiny_instance):
    """测试列数与行数和下标范围一致，x 列排在最前"""
    model = build_instance_milp(tiny_instance)
    tree = tiny_instance.tree
    expected = expected_model_size(tree.n_scenarios, tree.n_stages, tiny_instance.horizon, 2,
                                   tree.nac_count() * 2)
    summary = model.summary()
    assert summary["columns"] == expected["columns"]
    assert summary["rows"] == expected["rows"]
    n_x = tree.n_scenarios * tree.n_stages * 2
    assert all(name.startswith("x_") for name in model.col_names[:n_x])
    assert summary["integer"] == n_x
    assert summary["binary"] == 3 * tree.n_scenarios * tiny_instance.horizon * 2


@pytest.mark.parametrize("allocation", PLANS)
def test_simulated_plan_is_feasible_with_same_objective(tiny_instance, allocation):
    """测试任一可行分配按仿真填出的解满足全部约束，且目标等于仿真的期望死亡数"""
    model = build_instance_milp(tiny_instance)
    plan = _plan(tiny_instance, allocation)
    traj = tiny_instance.simulate_plan(plan)
    values = complete_solution_from_plan(model, plan, traj, tiny_instance.params)
    assert model.check_solution(values) == []
    assert model.objective_value(values) == pytest.approx(
        traj.expected_deaths(tiny_instance.tree.probabilities), rel=1e-9)


def _random_nac_plan(instance, rng):
    """每个阶段每个不可区分块抽一组分配，总量不超过 Δ_j，块内各情景相同"""
    tree = instance.tree
    deltas = instance.supply.deltas
    n_regions = len(instance.region_ids)
    x = np.zeros((tree.n_scenarios, tree.n_stages, n_regions), dtype=np.int64)
    for j in range(tree.n_stages):
        for block in tree.blocks(j):
            total = int(rng.integers(0, deltas[j] + 1))
            x[list(block), j, :] = rng.multinomial(total, np.full(n_regions, 1.0 / n_regions))
    return AllocationPlan(x, instance.stage_boundaries, instance.region_ids)


def test_random_scenario_plans_match_simulation(tiny_instance):
    """测试随机的分情景方案：填出的解满足全部约束，目标等于仿真期望死亡数"""
    rng = np.random.default_rng(20240613)
    model = build_instance_milp(tiny_instance)
    blocks = tiny_instance.tree.blocks_per_stage()
    probs = tiny_instance.tree.probabilities
    varies = 0
    for _ in range(10):
        plan = _random_nac_plan(tiny_instance, rng)
        assert plan.nac_spread(blocks) == 0
        plan.check_supply(tiny_instance.supply)
        varies += int(np.any(plan.x != plan.x[:1]))

        traj = tiny_instance.simulate_plan(plan)
        values = complete_solution_from_plan(model, plan, traj, tiny_instance.params)
        assert model.check_solution(values) == []
        assert model.objective_value(values) == pytest.approx(traj.expected_deaths(probs), rel=1e-9)
        for w in range(tiny_instance.tree.n_scenarios):
            for j in range(tiny_instance.tree.n_stages):
                for r in range(len(tiny_instance.region_ids)):
                    assert values[model.col(("x", w, j, r))] == plan.x[w, j, r]
    assert varies > 0


def test_nac_violation_detected(tiny_instance):
    """测试第一阶段各情景分配不同会违反非预期性约束"""
    model = build_instance_milp(tiny_instance)
    x = np.zeros((tiny_instance.tree.n_scenarios, 2, 2), dtype=int)
    x[0, 0, 0] = 1
    plan = AllocationPlan(x, tiny_instance.stage_boundaries, tiny_instance.region_ids)
    traj = tiny_instance.simulate_plan(plan)
    values = complete_solution_from_plan(model, plan, traj, tiny_instance.params)
    rows = {v.row for v in model.check_solution(values)}
    assert any(row.startswith("nac_") for row in rows)


def test_supply_cap_violation_detected(tiny_instance):
    """测试超过 Δ 的分配违反供给约束"""
    model = build_instance_milp(tiny_instance)
    plan = _plan(tiny_instance, [[2, 1], [0, 0]])
    traj = tiny_instance.simulate_plan(plan, check_supply=False)
    values = complete_solution_from_plan(model, plan, traj, tiny_instance.params)
    rows = {v.row for v in model.check_solution(values)}
    assert any(row.startswith("cap_") for row in rows)


def test_ventilator_bounds(tiny_instance):
    """测试 X 上界为 X0 加已投放的累计供给"""
    bounds = ventilator_bounds(tiny_instance.params, tiny_instance.supply, tiny_instance.horizon)
    assert bounds[:, 0].tolist() == [3, 3, 5, 5]
    assert bounds[:, 1].tolist() == [2, 2, 4, 4]


def test_fairness_rows(tiny_instance):
    """测试各公平性模式的行数"""
    base = build_instance_milp(tiny_instance).n_rows
    assert build_instance_milp(tiny_instance, EquityK(0.2)).n_rows == base + 4
    assert build_instance_milp(tiny_instance, ProportionalZeta(0.5)).n_rows == base + 4
    assert build_instance_milp(tiny_instance, Equal()).n_rows == base + 4
    assert build_instance_milp(tiny_instance, EquityK(0.2, 99)).n_rows == base


def test_proportional_rows_use_population_share(tiny_instance):
    """测试按人口比例的下界"""
    model = build_instance_milp(tiny_instance, ProportionalZeta(0.5))
    row = model.row("prop_1_R1")
    assert model.row_sense[row] == "G"
    assert model.row_rhs[row] == pytest.approx(1000 / 1800 * 0.5 * 2)


def test_equal_rows(tiny_instance):
    """测试平均分配下界为 floor(Δ/|R|)"""
    model = build_instance_milp(tiny_instance, Equal())
    assert model.row_rhs[model.row("equal_3_R2")] == 1.0


def test_fair_plan_feasibility(tiny_instance):
    """测试平均分配方案满足 Equal 约束，集中分配则不满足"""
    model = build_instance_milp(tiny_instance, Equal())
    for allocation, feasible in (([[1, 1], [1, 1]], True), ([[2, 0], [2, 0]], False)):
        plan = _plan(tiny_instance, allocation)
        traj = tiny_instance.simulate_plan(plan)
        values = complete_solution_from_plan(model, plan, traj, tiny_instance.params)
        assert (model.check_solution(values) == []) == feasible


def test_pinned_stages(tiny_instance):
    """测试固定阶段把对应 x 列的上下界设为给定值"""
    model = build_instance_milp(tiny_instance, pinned={0: [2, 0]})
    for w in range(tiny_instance.tree.n_scenarios):
        col = model.col(("x", w, 0, 0))
        assert model.col_lb[col] == model.col_ub[col] == 2.0
        col = model.col(("x", w, 1, 0))
        assert model.col_lb[col] == 0.0 and model.col_ub[col] == 2.0


def test_parse_fairness():
    """测试公平性模式解析"""
    assert parse_fairness("utilitarian") == Utilitarian()
    assert parse_fairness("equal") == Equal()
    assert parse_fairness("k=0.1") == EquityK(0.1, 1)
    assert parse_fairness("k=0.1,t=9") == EquityK(0.1, 9)
    assert parse_fairness("zeta=0.8") == ProportionalZeta(0.8)
    for bad in ("k=0", "zeta=1.5", "gini=0.3", "k=abc"):
        with pytest.raises(ValidationError):
            parse_fairness(bad)


def test_milp_model_guards():
    """测试模型构建的名称与界检查"""
    model = MilpModel()
    a = model.add_var("a", 0, 5, INTEGER)
    with pytest.raises(BuildError):
        model.add_var("a")
    with pytest.raises(BuildError):
        model.add_var("b", 3, 1)
    model.add_constraint("r1", {a: 1.0}, "L", 4)
    with pytest.raises(BuildError):
        model.add_constraint("r1", {a: 1.0}, "L", 4)
    with pytest.raises(BuildError):
        model.add_constraint("r2", {a: 1.0}, "X", 4)
    violations = model.check_solution([4.5])
    assert {v.row for v in violations} == {"r1", "integrality:a"}
    assert model.check_solution([4.0]) == []
