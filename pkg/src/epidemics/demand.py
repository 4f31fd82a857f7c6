"""
外生需求流与可观测量

S, V, E, EV, I_m, I_s 与分配无关，因此重症需求、重度需求和外生康复流
只由 VH 路径决定，可以预先算好交给优化模型。
"""
from dataclasses import dataclass

import numpy as np

from .model import DynamicsParams, critical_demand, severe_demand
from .simulator import Trajectory


@dataclass(frozen=True)
class DemandStream:
    """(情景数, T, 区域数) 的需求序列"""

    critical: np.ndarray
    severe: np.ndarray
    exogenous_recovery: np.ndarray

    @property
    def shape(self) -> tuple:
        return self.critical.shape

    def peak(self) -> np.ndarray:
        """各区域在所有情景、所有期的最大重症与重度需求之和"""
        return (self.critical + self.severe).max(axis=(0, 1))


def extract_demand_streams(trajectory: Trajectory, params: DynamicsParams) -> DemandStream:
    """
    提取需求流

    Args:
        trajectory: 使用同一套外生动力学得到的轨迹（分配任意）
        params: 动力学参数

    Returns:
        DemandStream: 重症需求 α p_c E、重度需求 σ I_s 与外生康复 γ_v p_rv EV + γ_m I_m
    """
    states = trajectory.states
    recovery = (
        params.gamma_v * params.p_rv * trajectory.compartment("EV")
        + params.gamma_m * trajectory.compartment("I_m")
    )
    return DemandStream(
        critical=critical_demand(states, params),
        severe=severe_demand(states, params),
        exogenous_recovery=recovery,
    )


@dataclass(frozen=True)
class Observables:
    new_infections: np.ndarray
    cumulative_vaccinations: np.ndarray


def observables(trajectory: Trajectory, params: DynamicsParams) -> Observables:
    """
    校准用观测量

    新增感染 α(p_m+p_s)E + α(p_mv+p_sv)EV；
    截至第 t 周的累计接种 Σ_{τ≤t} (1-h)ρS。
    """
    e = trajectory.compartment("E")
    ev = trajectory.compartment("EV")
    infections = params.alpha * (params.p_m + params.p_s) * e + params.alpha * (params.p_mv + params.p_sv) * ev
    weekly_vax = (1.0 - trajectory.vh) * params.rho * trajectory.compartment("S")
    return Observables(infections, np.cumsum(weekly_vax, axis=1))
