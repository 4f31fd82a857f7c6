"""
疫苗犹豫（VH）变化率过程

每个决策阶段的变化率 r_t = h_t / h_{t-1} - 1 视为正态分布，
按阶段窗口 [J_s, J_{s+1}) 估计均值与样本标准差（n-1 分母）。
窗口内第一个观测的变化率使用上一窗口最后一个观测作为分母。
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..utils.errors import FitError, ShapeError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class VhProcess:
    """每个阶段、每个区域的变化率均值与标准差，形状 (阶段数, 区域数)"""

    region_ids: Tuple[str, ...]
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        mu = np.atleast_2d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        if mu.shape != sigma.shape or mu.shape[1] != len(self.region_ids):
            raise ShapeError(f"mu {mu.shape} 与 sigma {sigma.shape} 形状不一致或区域数不符")
        if np.any(sigma < 0):
            raise FitError("sigma 必须 >= 0")
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "region_ids", tuple(str(r) for r in self.region_ids))

    @property
    def n_stages(self) -> int:
        return int(self.mu.shape[0])

    @classmethod
    def standard(cls, n_stages: int) -> "VhProcess":
        """单位尺度过程（μ=0, σ=1），仅用于导出树结构"""
        return cls(("Z",), np.zeros((n_stages, 1)), np.ones((n_stages, 1)))

    def degenerate(self) -> "VhProcess":
        """σ 全为 0 的同均值过程"""
        return VhProcess(self.region_ids, self.mu, np.zeros_like(self.sigma))

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"stage": s + 1, "region": r, "mu": float(self.mu[s, k]), "sigma": float(self.sigma[s, k])}
            for s in range(self.n_stages)
            for k, r in enumerate(self.region_ids)
        ]
        return pd.DataFrame(rows, columns=["stage", "region", "mu", "sigma"])


def fit_vh_process(
    series: Mapping[str, Sequence[float]],
    stage_boundaries: Sequence[int],
    region_ids: Sequence[str] = (),
) -> VhProcess:
    """
    从历史 VH 序列拟合分阶段变化率分布

    Args:
        series: 区域编号 -> 按期排列的 VH 序列（第 1 个元素对应第 1 期）
        stage_boundaries: 决策阶段起始期，例如 (1, 5, 9, 13, 17)
        region_ids: 区域顺序，缺省按 series 的键顺序

    Returns:
        VhProcess: 拟合结果

    Raises:
        FitError: 序列非正或某阶段变化率样本少于 2 个
        ShapeError: 序列长度不一致
    """
    region_ids = tuple(region_ids) or tuple(series)
    bounds = [int(j) for j in stage_boundaries]
    lengths = {len(series[r]) for r in region_ids}
    if len(lengths) != 1:
        raise ShapeError(f"各区域序列长度不一致: {sorted(lengths)}")
    length = lengths.pop()
    if bounds[-1] > length:
        raise FitError(f"序列长度 {length} 不足以覆盖阶段起点 {bounds[-1]}")

    windows = list(zip(bounds, bounds[1:] + [length + 1]))
    mu = np.zeros((len(bounds), len(region_ids)))
    sigma = np.zeros_like(mu)
    for k, rid in enumerate(region_ids):
        h = np.asarray(series[rid], dtype=float)
        if np.any(h <= 0):
            raise FitError(f"区域 {rid} 的 VH 序列必须严格为正")
        rates = h[1:] / h[:-1] - 1.0  # rates[i] 对应第 i+2 期
        for s, (start, end) in enumerate(windows):
            lo = max(start, 2)
            window = rates[lo - 2:end - 2]
            if window.size < 2:
                raise FitError(
                    f"区域 {rid} 阶段 {s + 1}（第 {start}-{end - 1} 期）只有 {window.size} 个变化率样本"
                )
            mu[s, k] = window.mean()
            sigma[s, k] = window.std(ddof=1)
    logger.info(f"已拟合 VH 过程: {len(region_ids)} 个区域, {len(bounds)} 个阶段")
    return VhProcess(region_ids, mu, sigma)


def fit_vh_process_from_csv(
    path: Union[str, Path], stage_boundaries: Sequence[int], region_ids: Sequence[str]
) -> VhProcess:
    """
    从区域级 CSV (region, week, vh) 拟合

    Args:
        path: CSV 路径
        stage_boundaries: 决策阶段起始期
        region_ids: 区域顺序
    """
    from ..data.loader import load_region_series

    series = load_region_series(path, region_ids)
    return fit_vh_process(series, stage_boundaries, region_ids)
