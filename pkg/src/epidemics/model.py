"""
SVEIHR 离散时间动力学（一步 = 一周）

所有右端项都使用第 t 期的存量（同步更新）；收治数先于仓室更新计算。
感染力 λ = β(I_m + I_s)/n，新暴露人数为 λ·S。
非负性不做截断，负值超过容差直接报错。

数组约定：状态最后两维为 (区域, 仓室)，前面可以有任意批维度（例如情景）。
"""
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from ..config import Config
from ..core.params import COMPARTMENT_INDEX, CompartmentState, GlobalParams, MigrationMatrix, RegionParams
from ..utils.errors import DynamicsViolationError, ShapeError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

S, V, E, EV, I_M, I_S, H_S, H_C, R, D = (COMPARTMENT_INDEX[k] for k in
                                          ("S", "V", "E", "EV", "I_m", "I_s", "H_s", "H_c", "R", "D"))

_deviation_logged = False


def _log_force_of_infection_deviation() -> None:
    global _deviation_logged
    if not _deviation_logged:
        logger.info("感染力按 λ = β(I_m+I_s)/n 计算，新暴露为 λ·S（不再对 S 重复相乘）")
        _deviation_logged = True


@dataclass(frozen=True)
class DynamicsParams:
    """按区域展开的参数向量，供批量仿真使用"""

    region_ids: tuple
    population: np.ndarray
    beds: np.ndarray
    initial_ventilators: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    rho: np.ndarray
    gamma_m: np.ndarray
    sigma: np.ndarray
    eps: float
    p_m: float
    p_s: float
    p_c: float
    p_rv: float
    p_mv: float
    p_sv: float
    gamma_v: float
    gamma_s: float
    gamma_ks: float
    gamma_c: float
    mu_ks: float
    mu_c: float
    varsigma_ks: float
    varsigma_c: float
    initial_state: np.ndarray  # (区域数, 10)

    @classmethod
    def from_params(cls, global_params: GlobalParams, regions: Sequence[RegionParams]) -> "DynamicsParams":
        """
        由全局参数与区域参数构造

        Args:
            global_params: 全局参数
            regions: 区域参数列表
        """
        g = global_params
        p_m, p_s, p_c = g.severity_split
        p_rv, p_mv, p_sv = g.vaccinated_split

        def vec(values: Sequence[float]) -> np.ndarray:
            return np.asarray(values, dtype=float)

        return cls(
            region_ids=tuple(r.region_id for r in regions),
            population=vec([r.population_n for r in regions]),
            beds=vec([r.beds_b for r in regions]),
            initial_ventilators=vec([r.initial_ventilators_X0 for r in regions]),
            alpha=vec([r.alpha(g) for r in regions]),
            beta=vec([r.contact_beta for r in regions]),
            rho=vec([r.max_vax_rho for r in regions]),
            gamma_m=vec([r.gamma_m for r in regions]),
            sigma=vec([r.hosp_rate_sigma for r in regions]),
            eps=g.vaccine_efficacy_eps,
            p_m=p_m, p_s=p_s, p_c=p_c,
            p_rv=p_rv, p_mv=p_mv, p_sv=p_sv,
            gamma_v=g.gamma_v, gamma_s=g.gamma_s, gamma_ks=g.gamma_ks, gamma_c=g.gamma_c,
            mu_ks=g.mu_ks, mu_c=g.mu_c,
            varsigma_ks=g.varsigma_ks, varsigma_c=g.varsigma_c,
            initial_state=np.stack([r.initial_state.as_array() for r in regions]),
        )

    @property
    def n_regions(self) -> int:
        return len(self.region_ids)

    def with_capacity(self, beds: Sequence[float], initial_ventilators: Sequence[float]) -> "DynamicsParams":
        return replace(
            self,
            beds=np.asarray(beds, dtype=float),
            initial_ventilators=np.asarray(initial_ventilators, dtype=float),
        )

    def with_initial_state(self, initial_state: np.ndarray) -> "DynamicsParams":
        return replace(self, initial_state=np.asarray(initial_state, dtype=float))

    @property
    def h_c_retention(self) -> float:
        """H_c 留存比例 1 - (1-ς_c)μ_c - ς_c γ_c"""
        return 1.0 - (1.0 - self.varsigma_c) * self.mu_c - self.varsigma_c * self.gamma_c


class StepResult(NamedTuple):
    """一步仿真的结果：下一期状态与本期收治/拒收人数"""

    state: np.ndarray
    A_s: np.ndarray
    A_c: np.ndarray
    K_s: np.ndarray
    K_c: np.ndarray


def force_of_infection(state: CompartmentState, region: RegionParams) -> float:
    """
    单个区域的感染力 λ = β(I_m + I_s)/n

    Args:
        state: 区域当期状态
        region: 区域参数（population_n > 0）

    Returns:
        float: 每个易感者本期被暴露的比例
    """
    _log_force_of_infection_deviation()
    return region.contact_beta * (state.I_m + state.I_s) / region.population_n


def force_of_infection_vector(states: np.ndarray, params: DynamicsParams) -> np.ndarray:
    """批量版本，输入 (..., R, 10)，输出 (..., R)"""
    _log_force_of_infection_deviation()
    return params.beta * (states[..., I_M] + states[..., I_S]) / params.population


def critical_demand(states: np.ndarray, params: DynamicsParams) -> np.ndarray:
    """重症（需呼吸机）需求 α p_c E"""
    return params.alpha * params.p_c * states[..., E]


def severe_demand(states: np.ndarray, params: DynamicsParams) -> np.ndarray:
    """重度住院需求 σ I_s"""
    return params.sigma * states[..., I_S]


def admissions(states: np.ndarray, ventilators: np.ndarray, params: DynamicsParams) -> StepResult:
    """
    按资源约束计算本期收治与拒收

    A_c = min(α p_c E, X - H_c, b - H_c - H_s)
    A_s = min(σ I_s, b - H_c - H_s - A_c)

    Returns:
        StepResult: state 字段为输入状态本身
    """
    h_s = states[..., H_S]
    h_c = states[..., H_C]
    crit = critical_demand(states, params)
    sev = severe_demand(states, params)
    free_beds = params.beds - h_c - h_s
    a_c = np.minimum(np.minimum(crit, ventilators - h_c), free_beds)
    a_s = np.minimum(sev, free_beds - a_c)
    return StepResult(states, a_s, a_c, sev - a_s, crit - a_c)


def step(
    states: np.ndarray,
    vh: np.ndarray,
    ventilators: np.ndarray,
    params: DynamicsParams,
    migration: Optional[MigrationMatrix] = None,
) -> StepResult:
    """
    推进一期

    Args:
        states: 当期状态 (..., R, 10)
        vh: 当期疫苗犹豫比例 (..., R)，取值 [0, 1]
        ventilators: 当期累计呼吸机 X (..., R)
        params: 动力学参数
        migration: 迁移矩阵，None 表示封闭

    Returns:
        StepResult: 下一期状态以及本期 A_s, A_c, K_s, K_c

    Raises:
        DynamicsViolationError: 任一输出低于 -1e-9
    """
    states = np.asarray(states, dtype=float)
    if states.shape[-2:] != (params.n_regions, 10):
        raise ShapeError(f"状态形状 {states.shape} 与区域数 {params.n_regions} 不符")
    p = params
    adm = admissions(states, ventilators, p)

    s, v, e, ev = states[..., S], states[..., V], states[..., E], states[..., EV]
    i_m, i_s = states[..., I_M], states[..., I_S]
    h_s, h_c = states[..., H_S], states[..., H_C]

    lam = force_of_infection_vector(states, p)
    vaccinated = p.rho * (1.0 - vh) * s
    exposed_v = (1.0 - p.eps) * lam * v

    nxt = np.empty_like(states)
    nxt[..., S] = s - lam * s - vaccinated
    if migration is not None and not migration.is_closed:
        nxt[..., S] += migration.net_flow(s)
    nxt[..., V] = v + vaccinated - exposed_v
    nxt[..., E] = e + lam * s - p.alpha * e
    nxt[..., EV] = ev + exposed_v - (p.alpha * (p.p_mv + p.p_sv) + p.gamma_v * p.p_rv) * ev
    nxt[..., I_M] = i_m + p.alpha * p.p_m * e + p.alpha * p.p_mv * ev - p.gamma_m * i_m
    nxt[..., I_S] = i_s + p.alpha * p.p_s * e + p.alpha * p.p_sv * ev - p.sigma * i_s
    nxt[..., H_S] = h_s + adm.A_s - p.gamma_s * h_s
    nxt[..., H_C] = h_c + adm.A_c - (1.0 - p.varsigma_c) * p.mu_c * h_c - p.varsigma_c * p.gamma_c * h_c
    nxt[..., R] = (
        states[..., R]
        + p.gamma_v * p.p_rv * ev
        + p.gamma_m * i_m
        + p.gamma_s * h_s
        + p.varsigma_ks * p.gamma_ks * adm.K_s
        + p.varsigma_c * p.gamma_c * h_c
    )
    nxt[..., D] = (
        states[..., D]
        + (1.0 - p.varsigma_ks) * p.mu_ks * adm.K_s
        + (1.0 - p.varsigma_c) * p.mu_c * h_c
        + adm.K_c
    )

    _assert_non_negative(nxt, "状态")
    for name, values in (("A_s", adm.A_s), ("A_c", adm.A_c), ("K_s", adm.K_s), ("K_c", adm.K_c)):
        _assert_non_negative(values, name)
    return StepResult(nxt, adm.A_s, adm.A_c, adm.K_s, adm.K_c)


def _assert_non_negative(values: np.ndarray, what: str) -> None:
    bad = values < -Config.DYNAMICS_TOL
    if np.any(bad):
        where = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DynamicsViolationError(
            f"{what} 出现负值 {values[where]:.6g}，位置 {where}；请检查每周比率之和是否超过 1"
        )
