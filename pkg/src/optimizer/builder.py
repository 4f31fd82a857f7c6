"""
多阶段随机规划的确定性等价 MILP

外生仓室 (S, V, E, EV, I_m, I_s) 与分配无关，由仿真预先算出需求流后作为常数进入模型，
模型只保留与决策相关的 H_s, H_c, R, D 与 X。

列顺序：先是全部 x[ω, j, r]，然后每个 (ω, t, r) 依次为
X, H_s, H_c, R, D, A_s, A_c, K_s, K_c, z1, z2, y。

A_c = min(a1, a2, a3) 用两个二元变量选择生效的下界：
    (z1, z2) = (1, ·) -> a1 = 重症需求
    (z1, z2) = (0, 1) -> a2 = X - H_c
    (z1, z2) = (0, 0) -> a3 = b - H_c - H_s
A_s = min(a1, a2) 中 y = 1 选择 a1 = σ I_s，y = 0 选择 a2 = b - H_c - H_s - A_c。
每条下界的 M 取其参数的上界：需求值本身、X0 + 截至该期的累计供给、床位数 b。
"""
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from ..core.params import COMPARTMENT_INDEX
from ..core.plan import AllocationPlan
from ..core.supply import SupplySchedule
from ..epidemics.demand import DemandStream
from ..epidemics.model import DynamicsParams
from ..epidemics.simulator import Trajectory
from ..scenarios.tree import ScenarioTree, VhPaths
from ..utils.errors import BuildError
from ..utils.logger import setup_logger
from .fairness import Equal, EquityK, FairnessMode, ProportionalZeta, Utilitarian
from .milp import BINARY, INTEGER, MilpModel

logger = setup_logger(__name__)

STATE_SYMBOLS = ("X", "H_s", "H_c", "R", "D", "A_s", "A_c", "K_s", "K_c")
BINARY_SYMBOLS = ("z1", "z2", "y")

_SHORT = {"H_s": "Hs", "H_c": "Hc", "A_s": "As", "A_c": "Ac", "K_s": "Ks", "K_c": "Kc"}


def _tag(symbol: str) -> str:
    return _SHORT.get(symbol, symbol)


def ventilator_bounds(params: DynamicsParams, supply: SupplySchedule, horizon: int) -> np.ndarray:
    """(T, R) 的 X 上界：X0 + 截至第 t 期已投放阶段的 Δ 之和"""
    cumulative = np.zeros(horizon)
    for period, delta in zip(supply.stages, supply.deltas):
        cumulative[period - 1:] += delta
    return params.initial_ventilators[None, :] + cumulative[:, None]


def build_milp(
    params: DynamicsParams,
    tree: ScenarioTree,
    vh: VhPaths,
    demand: DemandStream,
    supply: SupplySchedule,
    fairness: FairnessMode = Utilitarian(),
    pinned: Optional[Mapping[int, Sequence[int]]] = None,
) -> MilpModel:
    """
    构建 MILP

    Args:
        params: 动力学参数
        tree: 情景树
        vh: 与情景树对应的 VH 路径
        demand: 外生需求流 (情景数, T, 区域数)
        supply: 每阶段供给 Δ_j
        fairness: 公平性模式
        pinned: 阶段下标 -> 各区域分配，固定这些阶段的 x

    Returns:
        MilpModel: 目标为 Σ_ω p_ω Σ_r D[ω, T, r]

    Raises:
        BuildError: 各输入维度不一致
    """
    n_w, horizon, n_r = demand.shape
    stages = tuple(supply.stages)
    if tree.n_scenarios != n_w or vh.h.shape[0] != n_w:
        raise BuildError(f"情景数不一致: 树 {tree.n_scenarios}, VH {vh.h.shape[0]}, 需求 {n_w}")
    if tree.n_stages != len(stages):
        raise BuildError(f"情景树阶段数 {tree.n_stages} 与供给阶段数 {len(stages)} 不一致")
    if n_r != params.n_regions or vh.h.shape[2] != n_r:
        raise BuildError(f"区域数不一致: 参数 {params.n_regions}, 需求 {n_r}")
    if vh.h.shape[1] < horizon or stages[-1] > horizon:
        raise BuildError(f"规划期 {horizon} 与 VH 路径 {vh.h.shape} 或阶段 {stages} 不一致")

    p = params
    prob = tree.probabilities
    regions = p.region_ids
    model = MilpModel(name="VENTALLC")
    model.dims.update({
        "n_scenarios": n_w, "horizon": horizon, "stages": stages, "region_ids": regions,
        "probabilities": tuple(float(v) for v in prob),
    })

    for w in range(n_w):
        for j, period in enumerate(stages):
            for r, rid in enumerate(regions):
                model.add_var(f"x_{w + 1}_{period}_{rid}", 0, supply.deltas[j], INTEGER, key=("x", w, j, r))
    for w in range(n_w):
        for t in range(horizon):
            for r, rid in enumerate(regions):
                for symbol in STATE_SYMBOLS:
                    obj = prob[w] if symbol == "D" and t == horizon - 1 else 0.0
                    model.add_var(f"{_tag(symbol)}_{w + 1}_{t + 1}_{rid}", obj=obj, key=(symbol, w, t, r))
                for symbol in BINARY_SYMBOLS:
                    model.add_var(f"{symbol}_{w + 1}_{t + 1}_{rid}", kind=BINARY, key=(symbol, w, t, r))

    col = model.var_index
    stage_at_period = {period: j for j, period in enumerate(stages)}
    x_cap = ventilator_bounds(p, supply, horizon)
    init = p.initial_state

    for w in range(n_w):
        for r, rid in enumerate(regions):
            suffix = f"{w + 1}_1_{rid}"
            model.add_constraint(f"init_X_{suffix}", {col["X", w, 0, r]: 1.0, col["x", w, 0, r]: -1.0},
                                 "E", p.initial_ventilators[r])
            for symbol in ("H_s", "H_c", "R", "D"):
                model.add_constraint(f"init_{_tag(symbol)}_{suffix}", {col[symbol, w, 0, r]: 1.0},
                                     "E", init[r, COMPARTMENT_INDEX[symbol]])

    for w in range(n_w):
        for t in range(horizon - 1):
            for r, rid in enumerate(regions):
                suffix = f"{w + 1}_{t + 2}_{rid}"

                def now(symbol: str) -> int:
                    return col[symbol, w, t, r]

                def nxt(symbol: str) -> int:
                    return col[symbol, w, t + 1, r]

                model.add_constraint(f"dyn_Hs_{suffix}", {
                    nxt("H_s"): 1.0, now("H_s"): -(1.0 - p.gamma_s), now("A_s"): -1.0,
                }, "E", 0.0)
                model.add_constraint(f"dyn_Hc_{suffix}", {
                    nxt("H_c"): 1.0, now("H_c"): -p.h_c_retention, now("A_c"): -1.0,
                }, "E", 0.0)
                model.add_constraint(f"dyn_R_{suffix}", {
                    nxt("R"): 1.0, now("R"): -1.0, now("H_s"): -p.gamma_s,
                    now("K_s"): -p.varsigma_ks * p.gamma_ks, now("H_c"): -p.varsigma_c * p.gamma_c,
                }, "E", float(demand.exogenous_recovery[w, t, r]))
                model.add_constraint(f"dyn_D_{suffix}", {
                    nxt("D"): 1.0, now("D"): -1.0, now("K_s"): -(1.0 - p.varsigma_ks) * p.mu_ks,
                    now("H_c"): -(1.0 - p.varsigma_c) * p.mu_c, now("K_c"): -1.0,
                }, "E", 0.0)

                coeffs: Dict[int, float] = {nxt("X"): 1.0, now("X"): -1.0}
                if t + 2 in stage_at_period:
                    coeffs[col["x", w, stage_at_period[t + 2], r]] = -1.0
                model.add_constraint(f"carry_X_{suffix}", coeffs, "E", 0.0)

    for w in range(n_w):
        for j, period in enumerate(stages):
            model.add_constraint(f"cap_{w + 1}_{period}",
                                 {col["x", w, j, r]: 1.0 for r in range(n_r)}, "L", supply.deltas[j])

    for w in range(n_w):
        for t in range(horizon):
            for r, rid in enumerate(regions):
                _add_admission_rows(model, w, t, r, rid, demand, p.beds[r], x_cap[t, r])

    nac_rows = 0
    for j, blocks in enumerate(tree.blocks_per_stage()):
        for block in blocks:
            anchor = block[0]
            for w in block[1:]:
                for r, rid in enumerate(regions):
                    model.add_constraint(f"nac_{w + 1}_{stages[j]}_{rid}",
                                         {col["x", w, j, r]: 1.0, col["x", anchor, j, r]: -1.0}, "E", 0.0)
                    nac_rows += 1

    fairness_rows = _add_fairness_rows(model, fairness, p, prob, supply, horizon)

    if pinned:
        for j, allocation in pinned.items():
            for r in range(n_r):
                for w in range(n_w):
                    model.fix(col["x", w, j, r], float(allocation[r]))
        logger.info(f"已固定阶段 {sorted(stages[j] for j in pinned)} 的分配")

    model.dims.update({"nac_rows": nac_rows, "fairness_rows": fairness_rows, "fairness": fairness.label()})
    logger.info(f"MILP 构建完成: {model.summary()}，公平性模式 {fairness.label()}")
    return model


def _add_admission_rows(
    model: MilpModel, w: int, t: int, r: int, rid: str,
    demand: DemandStream, beds: float, ventilator_cap: float,
) -> None:
    col = model.var_index
    suffix = f"{w + 1}_{t + 1}_{rid}"
    X, h_s, h_c = col["X", w, t, r], col["H_s", w, t, r], col["H_c", w, t, r]
    a_s, a_c = col["A_s", w, t, r], col["A_c", w, t, r]
    k_s, k_c = col["K_s", w, t, r], col["K_c", w, t, r]
    z1, z2, y = col["z1", w, t, r], col["z2", w, t, r], col["y", w, t, r]
    crit = float(demand.critical[w, t, r])
    sev = float(demand.severe[w, t, r])

    model.add_constraint(f"Ac_bal_{suffix}", {a_c: 1.0, k_c: 1.0}, "E", crit)
    model.add_constraint(f"Ac_le1_{suffix}", {a_c: 1.0}, "L", crit)
    model.add_constraint(f"Ac_le2_{suffix}", {a_c: 1.0, X: -1.0, h_c: 1.0}, "L", 0.0)
    model.add_constraint(f"Ac_le3_{suffix}", {a_c: 1.0, h_c: 1.0, h_s: 1.0}, "L", beds)
    # A_c >= a1 - M1 (1 - z1), M1 = a1
    model.add_constraint(f"Ac_ge1_{suffix}", {a_c: 1.0, z1: -crit}, "G", 0.0)
    # A_c >= a2 - M2 (z1 + 1 - z2)
    model.add_constraint(f"Ac_ge2_{suffix}", {
        a_c: 1.0, X: -1.0, h_c: 1.0, z1: ventilator_cap, z2: -ventilator_cap,
    }, "G", -ventilator_cap)
    # A_c >= a3 - M3 (z1 + z2)
    model.add_constraint(f"Ac_ge3_{suffix}", {a_c: 1.0, h_c: 1.0, h_s: 1.0, z1: beds, z2: beds}, "G", beds)

    model.add_constraint(f"As_bal_{suffix}", {a_s: 1.0, k_s: 1.0}, "E", sev)
    model.add_constraint(f"As_le1_{suffix}", {a_s: 1.0}, "L", sev)
    model.add_constraint(f"As_le2_{suffix}", {a_s: 1.0, h_c: 1.0, h_s: 1.0, a_c: 1.0}, "L", beds)
    model.add_constraint(f"As_ge1_{suffix}", {a_s: 1.0, y: -sev}, "G", 0.0)
    model.add_constraint(f"As_ge2_{suffix}", {a_s: 1.0, h_c: 1.0, h_s: 1.0, a_c: 1.0, y: beds}, "G", beds)


def _add_fairness_rows(
    model: MilpModel,
    fairness: FairnessMode,
    p: DynamicsParams,
    prob: np.ndarray,
    supply: SupplySchedule,
    horizon: int,
) -> int:
    col = model.var_index
    n_w = len(prob)
    n_r = p.n_regions
    share = p.population / p.population.sum()
    before = model.n_rows

    if isinstance(fairness, EquityK):
        start = fairness.active_from_t_prime - 1
        if start >= horizon:
            logger.warning(f"t'={fairness.active_from_t_prime} 超出规划期 {horizon}，公平约束不生效")
            return 0
        for r, rid in enumerate(p.region_ids):
            for name, bound, sense in (("eqk_hi", share[r] + fairness.k, "L"),
                                       ("eqk_lo", share[r] - fairness.k, "G")):
                # a1 - bound * a2, a1 = Σ p H_c[·, t>=t', r], a2 = 同样求和覆盖全部区域
                coeffs: Dict[int, float] = {}
                for w in range(n_w):
                    for t in range(start, horizon):
                        for q in range(n_r):
                            weight = (1.0 if q == r else 0.0) - bound
                            coeffs[col["H_c", w, t, q]] = prob[w] * weight
                model.add_constraint(f"{name}_{rid}", coeffs, sense, 0.0)
    elif isinstance(fairness, ProportionalZeta):
        for j, period in enumerate(supply.stages):
            for r, rid in enumerate(p.region_ids):
                coeffs = {col["x", w, j, r]: prob[w] for w in range(n_w)}
                model.add_constraint(f"prop_{period}_{rid}", coeffs, "G",
                                     share[r] * fairness.zeta * supply.deltas[j])
    elif isinstance(fairness, Equal):
        for j, period in enumerate(supply.stages):
            floor_share = supply.deltas[j] // n_r
            for r, rid in enumerate(p.region_ids):
                coeffs = {col["x", w, j, r]: prob[w] for w in range(n_w)}
                model.add_constraint(f"equal_{period}_{rid}", coeffs, "G", float(floor_share))
    return model.n_rows - before


def expected_model_size(
    n_scenarios: int,
    n_stages: int,
    horizon: int,
    n_regions: int,
    nac_rows: int,
    fairness_rows: int = 0,
) -> Dict[str, int]:
    """按下标范围给出的列数与行数"""
    cells = n_scenarios * horizon * n_regions
    columns = n_scenarios * n_stages * n_regions + (len(STATE_SYMBOLS) + len(BINARY_SYMBOLS)) * cells
    rows = (
        5 * n_scenarios * n_regions
        + 5 * n_scenarios * (horizon - 1) * n_regions
        + n_scenarios * n_stages
        + 12 * cells
        + nac_rows
        + fairness_rows
    )
    return {"columns": columns, "rows": rows}


def complete_solution_from_plan(
    model: MilpModel, plan: AllocationPlan, trajectory: Trajectory, params: DynamicsParams
) -> np.ndarray:
    """
    由整数分配与对应的仿真轨迹填出全部列的取值

    二元变量按最小值所在参数选择，并列时依次优先需求、呼吸机、床位。

    Returns:
        np.ndarray: 长度为列数的解向量
    """
    col = model.var_index
    n_w = int(model.dims["n_scenarios"])
    horizon = int(model.dims["horizon"])
    n_r = len(model.dims["region_ids"])
    values = np.zeros(model.n_cols)

    series = {symbol: trajectory.compartment(symbol) for symbol in ("H_s", "H_c", "R", "D")}
    series.update({symbol: getattr(trajectory, symbol) for symbol in ("X", "A_s", "A_c", "K_s", "K_c")})

    crit = trajectory.A_c + trajectory.K_c
    by_vents = trajectory.X - series["H_c"]
    by_beds = params.beds[None, None, :] - series["H_c"] - series["H_s"]
    pick_demand = (crit <= by_vents) & (crit <= by_beds)
    pick_vents = ~pick_demand & (by_vents <= by_beds)
    sev = trajectory.A_s + trajectory.K_s
    pick_severe = sev <= by_beds - trajectory.A_c
    series["z1"] = pick_demand.astype(float)
    series["z2"] = pick_vents.astype(float)
    series["y"] = pick_severe.astype(float)

    for w in range(n_w):
        for j in range(len(model.dims["stages"])):
            for r in range(n_r):
                values[col["x", w, j, r]] = plan.x[w, j, r]
    for symbol, data in series.items():
        for w in range(n_w):
            for t in range(horizon):
                for r in range(n_r):
                    values[col[symbol, w, t, r]] = data[w, t, r]
    return values
