"""
县级 VH 序列的层次聚类

对各县 VH 时间序列按欧氏距离做平均链接的凝聚聚类，在距离阈值处切出区域。
输入先按 county_id 排序，标签按各簇最小 county_id 排序，因此结果与输入顺序无关。
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.cluster import AgglomerativeClustering

from ..config import Config
from ..utils.errors import ShapeError, ValidationError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class CountySeries:
    """单个县的周度 VH 序列"""

    county_id: str
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if np.any(values < 0) or np.any(values > 1):
            raise ValidationError(f"vh.{self.county_id}", "必须在 [0, 1] 内")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "county_id", str(self.county_id))

    def __len__(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class ClusterResult:
    """
    聚类结果

    Attributes:
        assignment: county_id -> region_id（R1, R2, ...）
        merges: 合并记录 (node_a, node_b, distance, size)，叶子编号为排序后的县下标
        county_order: 叶子编号对应的 county_id
    """

    assignment: Dict[str, str]
    merges: pd.DataFrame
    county_order: Tuple[str, ...]
    threshold: float
    linkage: str

    @property
    def n_regions(self) -> int:
        return len(set(self.assignment.values()))

    @property
    def region_ids(self) -> Tuple[str, ...]:
        return tuple(sorted(set(self.assignment.values()), key=lambda r: int(r[1:])))

    def members(self, region_id: str) -> List[str]:
        return sorted(c for c, r in self.assignment.items() if r == region_id)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            sorted(self.assignment.items()), columns=["county_id", "region_id"]
        )

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False)

    def dendrogram_to_csv(self, path: Union[str, Path]) -> None:
        self.merges.to_csv(path, index=False)


def _merge_table(model: AgglomerativeClustering, n_leaves: int) -> pd.DataFrame:
    sizes = np.ones(n_leaves + len(model.children_), dtype=int)
    rows = []
    for i, (a, b) in enumerate(model.children_):
        sizes[n_leaves + i] = sizes[a] + sizes[b]
        rows.append({
            "node_a": int(min(a, b)),
            "node_b": int(max(a, b)),
            "distance": float(model.distances_[i]),
            "size": int(sizes[n_leaves + i]),
        })
    return pd.DataFrame(rows, columns=["node_a", "node_b", "distance", "size"])


def _canonical_labels(order: Sequence[str], raw_labels: np.ndarray) -> Dict[str, str]:
    """簇按最小成员 county_id 排序后依次编号 R1, R2, ..."""
    first_member: Dict[int, str] = {}
    for county, label in zip(order, raw_labels):
        label = int(label)
        if label not in first_member or county < first_member[label]:
            first_member[label] = county
    ranking = {label: i + 1 for i, (label, _) in enumerate(sorted(first_member.items(), key=lambda kv: kv[1]))}
    return {county: f"R{ranking[int(label)]}" for county, label in zip(order, raw_labels)}


def cluster_counties(
    series: Sequence[CountySeries],
    distance_threshold: float = Config.CLUSTER_THRESHOLD,
    linkage: str = Config.CLUSTER_LINKAGE,
) -> ClusterResult:
    """
    凝聚聚类并在阈值处切分

    合并距离小于阈值的簇会被合并（与 sklearn 的 distance_threshold 语义一致）。

    Args:
        series: 各县序列，长度必须相同
        distance_threshold: 截断距离（> 0）
        linkage: 链接方式，默认平均链接

    Returns:
        ClusterResult: 区域划分与合并记录

    Raises:
        ShapeError: 序列长度不一致
        ValidationError: 没有县、阈值非正或县编号重复
    """
    if not series:
        raise ValidationError("series", "至少需要一个县")
    if not distance_threshold > 0:
        raise ValidationError("distance_threshold", "必须 > 0", distance_threshold)
    lengths = {len(s) for s in series}
    if len(lengths) != 1:
        raise ShapeError(f"各县序列长度不一致: {sorted(lengths)}")
    ordered = sorted(series, key=lambda s: s.county_id)
    order = tuple(s.county_id for s in ordered)
    if len(set(order)) != len(order):
        raise ValidationError("county_id", "县编号重复")

    if len(ordered) == 1:
        empty = pd.DataFrame(columns=["node_a", "node_b", "distance", "size"])
        return ClusterResult({order[0]: "R1"}, empty, order, float(distance_threshold), linkage)

    X = np.vstack([s.values for s in ordered])
    model = AgglomerativeClustering(
        n_clusters=None,
        distance_threshold=float(distance_threshold),
        metric="euclidean",
        linkage=linkage,
        compute_full_tree=True,
    ).fit(X)
    assignment = _canonical_labels(order, model.labels_)
    result = ClusterResult(assignment, _merge_table(model, len(order)), order, float(distance_threshold), linkage)
    logger.info(f"聚类完成: {len(order)} 个县 -> {result.n_regions} 个区域 (阈值 {distance_threshold}, {linkage})")
    return result
