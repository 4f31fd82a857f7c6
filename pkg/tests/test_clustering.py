"""
县级 VH 序列聚类
"""
import numpy as np
import pytest

from src.clustering.hierarchy import CountySeries, cluster_counties
from src.data.loader import load_vh_series
from src.utils.errors import ShapeError, ValidationError


def _series(county_id, base, weeks=6):
    return CountySeries(county_id, np.full(weeks, base))


def test_sample_counties_form_four_regions(data_dir):
    """测试自带县级数据在阈值 0.4 下切成四个区域"""
    result = cluster_counties(load_vh_series(data_dir / "county_vh.csv"))
    assert result.n_regions == 4
    assert result.region_ids == ("R1", "R2", "R3", "R4")
    sizes = [len(result.members(r)) for r in result.region_ids]
    assert sizes == [18, 14, 13, 30]
    assert result.assignment["AR001"] == "R1"
    assert result.assignment["AR019"] == "R2"
    assert result.assignment["AR075"] == "R4"
    assert len(result.merges) == 74


def test_labels_do_not_depend_on_input_order():
    """测试打乱输入顺序不改变区域标签"""
    series = [_series("c3", 0.8), _series("c1", 0.2), _series("c2", 0.21), _series("c4", 0.81)]
    first = cluster_counties(series, 0.5)
    second = cluster_counties(list(reversed(series)), 0.5)
    assert first.assignment == second.assignment
    assert first.assignment == {"c1": "R1", "c2": "R1", "c3": "R2", "c4": "R2"}


def test_threshold_controls_granularity():
    """测试阈值越小区域越多"""
    series = [_series("a", 0.1), _series("b", 0.2), _series("c", 0.6)]
    assert cluster_counties(series, 10.0).n_regions == 1
    assert cluster_counties(series, 0.5).n_regions == 2
    assert cluster_counties(series, 0.01).n_regions == 3


def test_merge_table_and_exports(tmp_path):
    """测试合并记录的距离单调，导出的分配表按县排序"""
    series = [_series("a", 0.1), _series("b", 0.2), _series("c", 0.6)]
    result = cluster_counties(series, 0.5)
    assert result.merges["distance"].is_monotonic_increasing
    assert result.merges["size"].iloc[-1] == 3
    result.to_csv(tmp_path / "assignment.csv")
    result.dendrogram_to_csv(tmp_path / "dendrogram.csv")
    lines = (tmp_path / "assignment.csv").read_text().splitlines()
    assert lines == ["county_id,region_id", "a,R1", "b,R1", "c,R2"]


def test_single_county():
    """测试只有一个县时直接成为 R1"""
    result = cluster_counties([_series("only", 0.3)])
    assert result.assignment == {"only": "R1"}
    assert result.merges.empty


def test_invalid_input():
    """测试空输入、非正阈值、长度不一致与重复编号"""
    with pytest.raises(ValidationError):
        cluster_counties([])
    with pytest.raises(ValidationError):
        cluster_counties([_series("a", 0.1), _series("b", 0.2)], 0.0)
    with pytest.raises(ShapeError):
        cluster_counties([_series("a", 0.1, 4), _series("b", 0.2, 5)])
    with pytest.raises(ValidationError):
        cluster_counties([_series("a", 0.1), _series("a", 0.2)])
    with pytest.raises(ValidationError):
        CountySeries("bad", np.array([0.5, 1.2]))
