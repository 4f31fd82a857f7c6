"""
SVEIHR 参数校准

在给定的参数盒内做带种子的均匀随机搜索，最小化各区域新增感染与累计接种
两条观测序列的 RMSE 之和。候选点一次性全部抽样，并行度不影响结果。
"""
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ..core.params import COMPARTMENT_INDEX, MigrationMatrix
from ..core.plan import AllocationPlan
from ..epidemics.demand import observables
from ..epidemics.model import DynamicsParams
from ..epidemics.simulator import simulate
from ..utils.errors import ShapeError, ValidationError, VentallocError
from ..utils.logger import setup_logger
from .metrics import ErrorMetrics, metrics_table, safe_error_metrics

logger = setup_logger(__name__)

RATE_PARAMETERS = ("beta", "rho", "gamma_m", "sigma")
INITIAL_PREFIX = "init:"
OBSERVED_COLUMNS = ("region", "week", "infections", "vaccinations")

Bound = Tuple[float, float]
BoundsSpec = Mapping[str, Union[Bound, Sequence[Bound], Mapping[str, Bound]]]


@dataclass(frozen=True)
class ObservedSeries:
    """各区域的观测序列，形状 (周数, 区域数)；vh 缺省时使用常数 h0"""

    region_ids: Tuple[str, ...]
    infections: np.ndarray
    vaccinations: np.ndarray
    vh: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.infections.shape != self.vaccinations.shape:
            raise ShapeError(f"感染 {self.infections.shape} 与接种 {self.vaccinations.shape} 形状不一致")
        if self.infections.ndim != 2 or self.infections.shape[1] != len(self.region_ids):
            raise ShapeError(f"观测序列形状 {self.infections.shape} 与区域数 {len(self.region_ids)} 不符")
        if self.vh is not None and self.vh.shape != self.infections.shape:
            raise ShapeError(f"VH 序列形状 {self.vh.shape} 与观测序列不一致")

    @property
    def horizon(self) -> int:
        return int(self.infections.shape[0])

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, region_ids: Sequence[str]) -> "ObservedSeries":
        """由长表 (region, week, infections, vaccinations[, vh]) 构造，按 region_ids 排列"""
        missing = [c for c in OBSERVED_COLUMNS if c not in frame.columns]
        if missing:
            raise ValidationError("observed", f"缺少列 {missing}")
        region_ids = tuple(str(r) for r in region_ids)
        frame = frame.assign(region=frame["region"].astype(str)).sort_values(["region", "week"])

        def pivot(column: str) -> np.ndarray:
            table = frame.pivot(index="week", columns="region", values=column)
            absent = [r for r in region_ids if r not in table.columns]
            if absent:
                raise ValidationError("observed.region", f"缺少区域 {absent}")
            return table[list(region_ids)].to_numpy(dtype=float)

        vh = pivot("vh") if "vh" in frame.columns else None
        return cls(region_ids, pivot("infections"), pivot("vaccinations"), vh)

    @classmethod
    def from_trajectory(cls, params: DynamicsParams, vh: np.ndarray) -> "ObservedSeries":
        """用模型生成观测序列（vh 形状 (周数, 区域数)）"""
        traj = _simulate_single(params, vh, None)
        obs = observables(traj, params)
        return cls(tuple(params.region_ids), obs.new_infections[0], obs.cumulative_vaccinations[0], vh)


@dataclass
class FitReport:
    """校准结果"""

    params: DynamicsParams
    tuned: pd.DataFrame
    metrics: Dict[str, Dict[str, ErrorMetrics]]
    best_loss: float
    budget: int
    seed: int
    evaluated: int
    discarded: int
    separable: bool
    history: List[float] = field(default_factory=list)

    def metrics_frame(self) -> pd.DataFrame:
        return metrics_table(self.metrics)

    def summary(self) -> Dict[str, object]:
        return {
            "best_loss": self.best_loss,
            "budget": self.budget,
            "seed": self.seed,
            "evaluated": self.evaluated,
            "discarded": self.discarded,
            "separable": self.separable,
        }


def _normalize_bounds(bounds: BoundsSpec, region_ids: Sequence[str]) -> Tuple[List[str], np.ndarray, np.ndarray]:
    names: List[str] = []
    lows: List[List[float]] = []
    highs: List[List[float]] = []
    for name, spec in bounds.items():
        if name not in RATE_PARAMETERS and not (
            name.startswith(INITIAL_PREFIX) and name[len(INITIAL_PREFIX):] in COMPARTMENT_INDEX
        ):
            raise ValidationError(f"bounds.{name}", f"可校准参数为 {RATE_PARAMETERS} 或 init:<仓室>")
        if isinstance(spec, Mapping):
            per_region = [tuple(spec[r]) for r in region_ids]
        elif len(spec) == 2 and np.isscalar(spec[0]):
            per_region = [tuple(spec)] * len(region_ids)  # type: ignore[list-item]
        else:
            per_region = [tuple(b) for b in spec]  # type: ignore[union-attr]
        if len(per_region) != len(region_ids):
            raise ValidationError(f"bounds.{name}", f"长度必须为区域数 {len(region_ids)}")
        lo = [float(b[0]) for b in per_region]
        hi = [float(b[1]) for b in per_region]
        if not np.all(np.isfinite(lo + hi)) or any(a > b for a, b in zip(lo, hi)):
            raise ValidationError(f"bounds.{name}", "上下界必须有限且 lower <= upper")
        names.append(name)
        lows.append(lo)
        highs.append(hi)
    if not names:
        raise ValidationError("bounds", "至少需要一个待校准参数")
    return names, np.array(lows), np.array(highs)


def apply_candidate(params: DynamicsParams, names: Sequence[str], values: np.ndarray) -> DynamicsParams:
    """
    把一组候选值写入参数；初始仓室的变化由 S 吸收

    Args:
        params: 基准参数
        names: 参数名（与 values 的行对应）
        values: (参数数, 区域数)

    Raises:
        ValidationError: S 被调成负数
    """
    updates: Dict[str, np.ndarray] = {}
    initial = params.initial_state.copy()
    s_idx = COMPARTMENT_INDEX["S"]
    for name, row in zip(names, values):
        if name in RATE_PARAMETERS:
            updates[name] = np.asarray(row, dtype=float)
        else:
            k = COMPARTMENT_INDEX[name[len(INITIAL_PREFIX):]]
            if k != s_idx:
                initial[:, s_idx] -= row - initial[:, k]
            initial[:, k] = row
    if np.any(initial < 0):
        raise ValidationError("initial_state", "候选初始仓室为负")
    return replace(params, initial_state=initial, **updates)


def _simulate_single(params: DynamicsParams, vh: np.ndarray, migration: Optional[MigrationMatrix]):
    horizon = vh.shape[0]
    plan = AllocationPlan.zeros(1, (1,), params.region_ids)
    return simulate(vh[None, :, :], plan, params, migration, horizon)


def _region_losses(
    params: DynamicsParams, vh: np.ndarray, observed: ObservedSeries, migration: Optional[MigrationMatrix]
) -> np.ndarray:
    traj = _simulate_single(params, vh, migration)
    obs = observables(traj, params)
    inf_err = obs.new_infections[0] - observed.infections
    vax_err = obs.cumulative_vaccinations[0] - observed.vaccinations
    return np.sqrt(np.mean(inf_err ** 2, axis=0)) + np.sqrt(np.mean(vax_err ** 2, axis=0))


def _evaluate_chunk(
    params: DynamicsParams,
    names: Sequence[str],
    candidates: np.ndarray,
    vh: np.ndarray,
    observed: ObservedSeries,
    migration: Optional[MigrationMatrix],
) -> np.ndarray:
    """返回 (候选数, 区域数) 的损失；失败的候选整行为 nan"""
    out = np.full((candidates.shape[0], len(params.region_ids)), np.nan)
    for i, values in enumerate(candidates):
        try:
            out[i] = _region_losses(apply_candidate(params, names, values), vh, observed, migration)
        except VentallocError as e:
            logger.debug(f"候选 {i} 被丢弃: {e}")
    return out


def calibrate(
    params: DynamicsParams,
    observed: ObservedSeries,
    bounds: BoundsSpec,
    budget: int,
    seed: int = 0,
    h0: Optional[Sequence[float]] = None,
    migration: Optional[MigrationMatrix] = None,
    n_jobs: int = 1,
) -> FitReport:
    """
    随机搜索校准

    Args:
        params: 基准参数（未校准字段保持不变）
        observed: 观测序列
        bounds: 参数名 -> (下界, 上界)，也可按区域给出
        budget: 候选点数
        seed: 随机种子
        h0: 观测中没有 VH 序列时使用的常数 VH
        migration: 迁移矩阵；为空或封闭时各区域独立取最优
        n_jobs: joblib 并行度

    Returns:
        FitReport: 最优参数与各区域误差指标
    """
    if budget < 1:
        raise ValidationError("budget", "必须 >= 1", budget)
    if tuple(observed.region_ids) != tuple(params.region_ids):
        raise ShapeError(f"观测区域 {observed.region_ids} 与参数区域 {params.region_ids} 不一致")
    if observed.vh is not None:
        vh = observed.vh
    elif h0 is not None:
        vh = np.broadcast_to(np.asarray(h0, dtype=float), observed.infections.shape).copy()
    else:
        raise ValidationError("vh", "观测中没有 VH 序列时必须给出 h0")

    names, lo, hi = _normalize_bounds(bounds, params.region_ids)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    candidates = rng.uniform(lo, hi, size=(budget,) + lo.shape)
    separable = migration is None or migration.is_closed
    logger.info(f"开始校准: {len(names)} 个参数 x {len(params.region_ids)} 个区域, 预算 {budget}, 种子 {seed}")

    chunks = np.array_split(np.arange(budget), max(1, min(budget, abs(n_jobs) * 4)))
    results = Parallel(n_jobs=n_jobs)(
        delayed(_evaluate_chunk)(params, names, candidates[idx], vh, observed, migration)
        for idx in chunks if idx.size
    )
    losses = np.vstack(results)
    failed = np.isnan(losses).any(axis=1)
    discarded = int(failed.sum())
    if discarded:
        logger.warning(f"{discarded} 个候选点仿真失败，已丢弃")
    if discarded == budget:
        raise ValidationError("calibration", "所有候选点都仿真失败")

    masked = np.where(np.isnan(losses), np.inf, losses)
    if separable:
        winners = masked.argmin(axis=0)  # 每个区域各自的最优候选
        best_values = np.stack([candidates[w, :, r] for r, w in enumerate(winners)], axis=1)
    else:
        best = int(masked.sum(axis=1).argmin())
        best_values = candidates[best]
    totals = masked.sum(axis=1)
    history = np.minimum.accumulate(np.where(np.isfinite(totals), totals, np.inf)).tolist()

    fitted = apply_candidate(params, names, best_values)
    traj = _simulate_single(fitted, vh, migration)
    obs = observables(traj, fitted)
    metrics = {
        rid: {
            "infections": safe_error_metrics(obs.new_infections[0][:, r], observed.infections[:, r]),
            "vaccinations": safe_error_metrics(obs.cumulative_vaccinations[0][:, r], observed.vaccinations[:, r]),
        }
        for r, rid in enumerate(params.region_ids)
    }
    best_loss = float(_region_losses(fitted, vh, observed, migration).sum())
    tuned = pd.DataFrame([
        {"region": rid, "parameter": name, "value": float(best_values[p, r])}
        for p, name in enumerate(names)
        for r, rid in enumerate(params.region_ids)
    ])
    logger.info(f"校准完成: 最优损失 {best_loss:.6g}")
    return FitReport(
        params=fitted,
        tuned=tuned,
        metrics=metrics,
        best_loss=best_loss,
        budget=budget,
        seed=seed,
        evaluated=budget - discarded,
        discarded=discarded,
        separable=separable,
        history=history,
    )
