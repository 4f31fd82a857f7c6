"""
参数与领域类型
包含：
- GlobalParams: 全局流行病学参数与规划期设置
- RegionParams: 区域参数、医疗容量与初始仓室
- CompartmentState: 十个仓室的人数向量
- MigrationMatrix: 区域间每周迁移率（仅作用于易感者）

所有类型加载后不可变，可以在并行进程之间只读共享。
"""
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import ValidationError

# 仓室顺序在整个项目中固定
COMPARTMENTS: Tuple[str, ...] = ("S", "V", "E", "EV", "I_m", "I_s", "H_s", "H_c", "R", "D")
COMPARTMENT_INDEX: Dict[str, int] = {name: i for i, name in enumerate(COMPARTMENTS)}

_UNIT_FIELDS = (
    "vaccine_efficacy_eps",
    "incubation_alpha",
    "gamma_v",
    "gamma_s",
    "gamma_ks",
    "gamma_c",
    "mu_ks",
    "mu_c",
    "varsigma_ks",
    "varsigma_c",
)


def _check_unit(name: str, value: float) -> None:
    if not np.isfinite(value) or value < 0 or value > 1:
        raise ValidationError(name, "必须在 [0, 1] 内", value)


def _check_split(name: str, values: Sequence[float]) -> None:
    if len(values) != 3:
        raise ValidationError(name, "必须包含三个分量", tuple(values))
    for i, v in enumerate(values):
        _check_unit(f"{name}[{i}]", v)
    if abs(sum(values) - 1.0) > 1e-9:
        raise ValidationError(name, "三个分量之和必须为 1", round(sum(values), 12))


@dataclass(frozen=True)
class GlobalParams:
    """全局参数，默认值取自参数表"""

    horizon_T: int = 20
    decision_stages_J: Tuple[int, ...] = (1, 5, 9, 13, 17)
    vaccine_efficacy_eps: float = 0.95
    incubation_alpha: float = 0.9
    severity_split: Tuple[float, float, float] = (0.80, 0.15, 0.05)  # p_m, p_s, p_c
    vaccinated_split: Tuple[float, float, float] = (0.85, 0.10, 0.05)  # p_rv, p_mv, p_sv
    gamma_v: float = 1.0
    gamma_s: float = 0.637
    gamma_ks: float = 0.233
    gamma_c: float = 0.333
    mu_ks: float = 1.0
    mu_c: float = 0.333
    varsigma_ks: float = 0.4
    varsigma_c: float = 0.51

    def __post_init__(self) -> None:
        object.__setattr__(self, "decision_stages_J", tuple(int(j) for j in self.decision_stages_J))
        object.__setattr__(self, "severity_split", tuple(float(v) for v in self.severity_split))
        object.__setattr__(self, "vaccinated_split", tuple(float(v) for v in self.vaccinated_split))
        self.validate()

    def validate(self) -> None:
        """
        校验全局参数

        Raises:
            ValidationError: 任一字段违反约束
        """
        if int(self.horizon_T) < 1:
            raise ValidationError("horizon_T", "必须 >= 1", self.horizon_T)
        stages = self.decision_stages_J
        if not stages:
            raise ValidationError("decision_stages_J", "不能为空")
        if stages[0] != 1:
            raise ValidationError("decision_stages_J", "必须从第 1 期开始", stages)
        if any(b <= a for a, b in zip(stages, stages[1:])):
            raise ValidationError("decision_stages_J", "必须严格递增", stages)
        if stages[-1] > self.horizon_T:
            raise ValidationError("decision_stages_J", "最大值不能超过 horizon_T", stages)
        for name in _UNIT_FIELDS:
            _check_unit(name, getattr(self, name))
        _check_split("severity_split", self.severity_split)
        _check_split("vaccinated_split", self.vaccinated_split)

    @property
    def n_stages(self) -> int:
        return len(self.decision_stages_J)

    def stage_windows(self) -> Tuple[Tuple[int, int], ...]:
        """
        各阶段覆盖的期间区间 [start, end)，最后一个阶段延伸到 horizon_T + 1

        Returns:
            Tuple[Tuple[int, int], ...]: 每个阶段的 (起始期, 结束期)
        """
        bounds = list(self.decision_stages_J) + [self.horizon_T + 1]
        return tuple((bounds[i], bounds[i + 1]) for i in range(len(self.decision_stages_J)))

    def stage_of_period(self) -> np.ndarray:
        """返回长度为 horizon_T 的数组，第 t-1 项为期间 t 所属阶段的下标"""
        out = np.zeros(self.horizon_T, dtype=int)
        for s, (start, end) in enumerate(self.stage_windows()):
            out[start - 1:end - 1] = s
        return out

    @property
    def k_ks_outflow(self) -> float:
        """未收治重症的离开比例；取 1 时质量守恒"""
        return self.varsigma_ks * self.gamma_ks + (1 - self.varsigma_ks) * self.mu_ks


@dataclass(frozen=True)
class CompartmentState:
    """单个区域某一期的十个仓室人数（允许非整数）"""

    S: float = 0.0
    V: float = 0.0
    E: float = 0.0
    EV: float = 0.0
    I_m: float = 0.0
    I_s: float = 0.0
    H_s: float = 0.0
    H_c: float = 0.0
    R: float = 0.0
    D: float = 0.0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = float(getattr(self, f.name))
            if not np.isfinite(value) or value < 0:
                raise ValidationError(f"initial_state.{f.name}", "必须为非负有限数", value)
            object.__setattr__(self, f.name, value)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in COMPARTMENTS], dtype=float)

    @classmethod
    def from_array(cls, values: Iterable[float]) -> "CompartmentState":
        values = list(values)
        if len(values) != len(COMPARTMENTS):
            raise ValidationError("initial_state", f"需要 {len(COMPARTMENTS)} 个仓室", len(values))
        return cls(**dict(zip(COMPARTMENTS, values)))

    @property
    def total(self) -> float:
        return float(self.as_array().sum())


@dataclass(frozen=True)
class RegionParams:
    """区域参数"""

    region_id: str
    population_n: float
    beds_b: float
    initial_ventilators_X0: float
    contact_beta: float
    max_vax_rho: float
    gamma_m: float
    hosp_rate_sigma: float
    initial_state: CompartmentState = field(default_factory=CompartmentState)
    incubation_alpha: Optional[float] = None  # 为空时使用全局 α

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """
        校验区域参数

        Raises:
            ValidationError: 任一字段违反约束
        """
        rid = self.region_id
        if not str(rid):
            raise ValidationError("region_id", "不能为空")
        if not self.population_n > 0:
            raise ValidationError(f"{rid}.population_n", "必须 > 0", self.population_n)
        if self.beds_b < 0:
            raise ValidationError(f"{rid}.beds_b", "必须 >= 0", self.beds_b)
        if self.initial_ventilators_X0 < 0:
            raise ValidationError(f"{rid}.initial_ventilators_X0", "必须 >= 0", self.initial_ventilators_X0)
        if self.initial_ventilators_X0 > self.beds_b:
            raise ValidationError(
                f"{rid}.initial_ventilators_X0", "不能超过 beds_b", self.initial_ventilators_X0
            )
        if self.contact_beta < 0 or not np.isfinite(self.contact_beta):
            raise ValidationError(f"{rid}.contact_beta", "必须为非负有限数", self.contact_beta)
        for name in ("max_vax_rho", "gamma_m", "hosp_rate_sigma"):
            _check_unit(f"{rid}.{name}", getattr(self, name))
        if self.incubation_alpha is not None:
            _check_unit(f"{rid}.incubation_alpha", self.incubation_alpha)
        if self.initial_state.total > self.population_n + 1e-9:
            raise ValidationError(
                f"{rid}.initial_state", "仓室总和不能超过 population_n", self.initial_state.total
            )
        h_s, h_c = self.initial_state.H_s, self.initial_state.H_c
        if h_c > self.initial_ventilators_X0 + 1e-9:
            raise ValidationError(f"{rid}.initial_state.H_c", "不能超过 initial_ventilators_X0", h_c)
        if h_s + h_c > self.beds_b + 1e-9:
            raise ValidationError(f"{rid}.initial_state.H_s", "H_s + H_c 不能超过 beds_b", h_s + h_c)

    def alpha(self, global_params: GlobalParams) -> float:
        """区域 α，未覆盖时回落到全局值"""
        if self.incubation_alpha is None:
            return global_params.incubation_alpha
        return self.incubation_alpha

    def with_capacity(self, beds_b: float, initial_ventilators_X0: float) -> "RegionParams":
        return replace(self, beds_b=beds_b, initial_ventilators_X0=initial_ventilators_X0)


@dataclass(frozen=True)
class MigrationMatrix:
    """区域间迁移率 nu[r -> r']，对角线为 0"""

    region_ids: Tuple[str, ...]
    rates: np.ndarray

    def __post_init__(self) -> None:
        rates = np.array(self.rates, dtype=float)
        rates.setflags(write=False)
        object.__setattr__(self, "region_ids", tuple(str(r) for r in self.region_ids))
        object.__setattr__(self, "rates", rates)
        self.validate()

    def validate(self) -> None:
        n = len(self.region_ids)
        if self.rates.shape != (n, n):
            raise ValidationError("migration", f"矩阵形状必须为 ({n}, {n})", self.rates.shape)
        if not np.all(np.isfinite(self.rates)):
            raise ValidationError("migration", "包含非有限值")
        if np.any(self.rates < 0) or np.any(self.rates >= 1):
            raise ValidationError("migration", "每个迁移率必须在 [0, 1) 内")
        if np.any(np.diag(self.rates) != 0):
            raise ValidationError("migration", "对角线必须为 0")
        if np.any(self.rates.sum(axis=1) >= 1):
            raise ValidationError("migration", "每行之和必须 < 1")

    @classmethod
    def closed(cls, region_ids: Sequence[str]) -> "MigrationMatrix":
        """无迁移"""
        n = len(region_ids)
        return cls(tuple(region_ids), np.zeros((n, n)))

    @property
    def is_closed(self) -> bool:
        return not bool(np.any(self.rates))

    def net_flow(self, susceptible: np.ndarray) -> np.ndarray:
        """
        易感者的净迁入量，最后一维为区域

        Args:
            susceptible: 形状 (..., R) 的易感人数

        Returns:
            np.ndarray: 与输入同形状的净流量，沿区域求和为 0
        """
        inflow = susceptible @ self.rates
        outflow = susceptible * self.rates.sum(axis=1)
        return inflow - outflow

    def to_records(self) -> list:
        return [
            {"from_region": a, "to_region": b, "rate": float(self.rates[i, j])}
            for i, a in enumerate(self.region_ids)
            for j, b in enumerate(self.region_ids)
            if i != j
        ]
