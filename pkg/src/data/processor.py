"""
县级数据汇总到区域
"""
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from ..clustering.hierarchy import CountySeries
from ..utils.errors import IngestError, ShapeError
from ..utils.logger import setup_logger
from .loader import region_series_frame

logger = setup_logger(__name__)

COUNT_COLUMNS = ("population", "licensed_beds", "icu_beds")


@dataclass(frozen=True)
class RegionalData:
    """汇总后的区域总量与 VH 序列"""

    totals: pd.DataFrame  # 以 region 为索引：population, licensed_beds, icu_beds
    vh: Dict[str, np.ndarray]

    @property
    def region_ids(self) -> tuple:
        return tuple(self.totals.index)

    def capacity_frame(self) -> pd.DataFrame:
        """与容量 CSV 同列：region, licensed_beds, icu_beds, population"""
        return self.totals.reset_index()[["region", "licensed_beds", "icu_beds", "population"]]

    def vh_frame(self) -> pd.DataFrame:
        return region_series_frame(self.vh)


def _region_order(assignment: Mapping[str, str]) -> list:
    def key(region: str):
        tail = region[1:]
        return (0, int(tail), region) if region[:1] == "R" and tail.isdigit() else (1, 0, region)

    return sorted(set(assignment.values()), key=key)


def aggregate_to_regions(
    counties: pd.DataFrame,
    assignment: Mapping[str, str],
    series: Optional[Sequence[CountySeries]] = None,
    weighted: bool = True,
) -> RegionalData:
    """
    把县级数据汇总到区域

    人口与容量直接求和；VH 按周取平均，默认按人口加权，weighted=False 时取简单平均。

    Args:
        counties: 县级表 (county_id, population, licensed_beds, icu_beds)
        assignment: county_id -> region_id
        series: 县级 VH 序列，只需要总量时可省略
        weighted: VH 是否按人口加权

    Raises:
        IngestError: 县未分配区域或区域没有任何县
        ShapeError: 各县序列长度不一致
    """
    table = counties.copy()
    table["county_id"] = table["county_id"].astype(str)
    unassigned = [c for c in table["county_id"] if c not in assignment]
    if unassigned:
        raise IngestError(f"县 {unassigned[:5]} 未分配区域", column="county_id")
    table["region"] = table["county_id"].map(assignment)
    regions = _region_order(assignment)
    totals = table.groupby("region")[list(COUNT_COLUMNS)].sum().reindex(regions)
    if totals.isna().any().any():
        missing = totals.index[totals.isna().any(axis=1)].tolist()
        raise IngestError(f"区域 {missing} 在县级表中没有任何县", column="county_id")

    vh: Dict[str, np.ndarray] = {}
    if series:
        by_id = {s.county_id: s for s in series}
        lengths = {len(s) for s in series}
        if len(lengths) != 1:
            raise ShapeError(f"各县序列长度不一致: {sorted(lengths)}")
        population = table.set_index("county_id")["population"]
        for region in regions:
            members = sorted(c for c, r in assignment.items() if r == region)
            absent = [c for c in members if c not in by_id]
            if absent:
                raise IngestError(f"县 {absent[:5]} 缺少 VH 序列", column="county_id")
            stack = np.vstack([by_id[c].values for c in members])
            if weighted:
                missing_pop = [c for c in members if c not in population.index]
                if missing_pop:
                    raise IngestError(f"县 {missing_pop[:5]} 缺少人口", column="population")
                weights = population.loc[members].to_numpy(dtype=float)
                vh[region] = np.average(stack, axis=0, weights=weights)
            else:
                vh[region] = stack.mean(axis=0)

    logger.info(f"已汇总 {len(table)} 个县到 {len(regions)} 个区域, 总人口 {totals['population'].sum():,.0f}")
    return RegionalData(totals=totals.rename_axis("region"), vh=vh)
