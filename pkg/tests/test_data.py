"""
输入表格的读取、校验与县级汇总
"""
import numpy as np
import pandas as pd
import pytest

from src.clustering.hierarchy import CountySeries, cluster_counties
from src.core.params import RegionParams
from src.data.loader import (
    apply_capacity,
    load_capacity,
    load_county_table,
    load_migration,
    load_observations,
    load_region_series,
    load_vh_series,
    vh_series_frame,
)
from src.data.processor import aggregate_to_regions
from src.utils.errors import IngestError, ShapeError, ValidationError


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_vh_series(data_dir):
    """测试县级 VH 序列按县排序且每县 20 周"""
    series = load_vh_series(data_dir / "county_vh.csv")
    assert len(series) == 75
    assert series[0].county_id == "AR001"
    assert all(len(s) == 20 for s in series)
    frame = vh_series_frame(series)
    assert list(frame.columns) == ["county_id", "week", "vh"]
    assert frame["week"].min() == 1


def test_vh_errors_carry_row_numbers(tmp_path):
    """测试越界、无法解析、重复与缺周的报错位置"""
    out_of_range = _write(tmp_path, "a.csv", "county_id,week,vh\nc1,1,0.5\nc1,2,1.5\n")
    with pytest.raises(IngestError) as info:
        load_vh_series(out_of_range)
    assert info.value.row == 3
    assert info.value.column == "vh"

    garbage = _write(tmp_path, "b.csv", "county_id,week,vh\nc1,1,0.5\nc1,2,abc\n")
    with pytest.raises(IngestError) as info:
        load_vh_series(garbage)
    assert (info.value.row, info.value.column) == (3, "vh")

    duplicate = _write(tmp_path, "c.csv", "county_id,week,vh\nc1,1,0.5\nc1,1,0.4\n")
    with pytest.raises(IngestError) as info:
        load_vh_series(duplicate)
    assert info.value.row == 3

    gap = _write(tmp_path, "d.csv", "county_id,week,vh\nc1,1,0.5\nc1,2,0.4\nc2,1,0.3\n")
    with pytest.raises(IngestError, match="c2"):
        load_vh_series(gap)

    fractional = _write(tmp_path, "e.csv", "county_id,week,vh\nc1,1.5,0.5\n")
    with pytest.raises(IngestError) as info:
        load_vh_series(fractional)
    assert info.value.column == "week"


def test_missing_file_and_column(tmp_path):
    """测试文件不存在、缺少列与不支持的格式"""
    with pytest.raises(IngestError):
        load_vh_series(tmp_path / "absent.csv")
    with pytest.raises(IngestError) as info:
        load_vh_series(_write(tmp_path, "x.csv", "county_id,week\nc1,1\n"))
    assert info.value.column == "vh"
    with pytest.raises(IngestError):
        load_vh_series(_write(tmp_path, "x.json", "{}"))


def test_load_capacity(data_dir, tmp_path):
    """测试容量表：X0 取 ICU 床位，ICU 多于总床位时报错"""
    capacity = load_capacity(data_dir / "arkansas_capacity.csv")
    assert list(capacity.columns) == ["beds", "ventilators", "population"]
    assert capacity.loc["R1", "ventilators"] == 77
    bad = _write(tmp_path, "cap.csv", "region,licensed_beds,icu_beds,population\nR1,10,5,100\nR2,10,20,100\n")
    with pytest.raises(IngestError) as info:
        load_capacity(bad)
    assert (info.value.row, info.value.column) == (3, "icu_beds")


def test_apply_capacity(data_dir, arkansas_config):
    """测试容量表写入区域参数"""
    capacity = load_capacity(data_dir / "arkansas_capacity.csv")
    regions = apply_capacity(arkansas_config.regions, capacity)
    assert regions[0].initial_ventilators_X0 == 77
    with pytest.raises(ValidationError):
        apply_capacity(arkansas_config.regions, capacity.drop(index="R4"))


def test_load_migration(data_dir, tmp_path):
    """测试迁移矩阵的读取与未知区域、自迁移的报错"""
    regions = ("R1", "R2", "R3", "R4")
    migration = load_migration(data_dir / "arkansas_migration.csv", regions)
    assert migration.rates[0, 1] == pytest.approx(0.000534)
    assert np.all(np.diag(migration.rates) == 0)
    assert not migration.is_closed
    unknown = _write(tmp_path, "m.csv", "from_region,to_region,rate\nR1,R9,0.01\n")
    with pytest.raises(IngestError) as info:
        load_migration(unknown, regions)
    assert (info.value.row, info.value.column) == (2, "to_region")
    diagonal = _write(tmp_path, "n.csv", "from_region,to_region,rate\nR1,R2,0.01\nR2,R2,0.01\n")
    with pytest.raises(IngestError) as info:
        load_migration(diagonal, regions)
    assert info.value.row == 3


def test_load_observations(data_dir):
    """测试观测表按 (region, week) 排序"""
    frame = load_observations(data_dir / "arkansas_observed.csv")
    assert list(frame.columns) == ["region", "week", "infections", "vaccinations", "vh"]
    assert len(frame) == 48
    assert frame.iloc[0]["region"] == "R1" and frame.iloc[0]["week"] == 1


def test_load_region_series(tmp_path):
    """测试区域级序列与缺少区域的报错"""
    path = _write(tmp_path, "r.csv", "region,week,vh\nR1,1,0.4\nR1,2,0.5\nR2,1,0.3\nR2,2,0.2\n")
    series = load_region_series(path, ("R2", "R1"))
    assert list(series) == ["R2", "R1"]
    assert series["R1"].tolist() == [0.4, 0.5]
    with pytest.raises(IngestError):
        load_region_series(path, ("R3",))


def test_county_table_formats(data_dir, tmp_path):
    """测试县级表支持 CSV 与 Parquet，并校验人口"""
    table = load_county_table(data_dir / "counties.csv")
    assert len(table) == 75
    parquet = tmp_path / "counties.parquet"
    pytest.importorskip("pyarrow")
    table.to_parquet(parquet)
    pd.testing.assert_frame_equal(load_county_table(parquet), table)
    bad = _write(tmp_path, "c.csv", "county_id,population,licensed_beds,icu_beds\nc1,0,1,1\n")
    with pytest.raises(IngestError) as info:
        load_county_table(bad)
    assert (info.value.row, info.value.column) == (2, "population")


def test_aggregate_sample_matches_capacity(data_dir):
    """测试自带县级数据汇总后与区域容量表一致"""
    series = load_vh_series(data_dir / "county_vh.csv")
    counties = load_county_table(data_dir / "counties.csv")
    assignment = cluster_counties(series).assignment
    regional = aggregate_to_regions(counties, assignment, series)
    capacity = load_capacity(data_dir / "arkansas_capacity.csv")
    assert regional.region_ids == ("R1", "R2", "R3", "R4")
    assert regional.totals["population"].tolist() == capacity["population"].tolist()
    assert regional.totals["licensed_beds"].tolist() == capacity["beds"].tolist()
    assert regional.totals["icu_beds"].tolist() == capacity["ventilators"].tolist()
    assert regional.vh["R1"].shape == (20,)


def test_weighted_and_unweighted_vh():
    """测试按人口加权与简单平均"""
    counties = pd.DataFrame({"county_id": ["a", "b"], "population": [100.0, 300.0],
                             "licensed_beds": [1.0, 2.0], "icu_beds": [0.0, 1.0]})
    series = [CountySeries("a", np.array([0.2, 0.4])), CountySeries("b", np.array([0.6, 0.8]))]
    weighted = aggregate_to_regions(counties, {"a": "R1", "b": "R1"}, series)
    assert weighted.vh["R1"] == pytest.approx([0.5, 0.7])
    plain = aggregate_to_regions(counties, {"a": "R1", "b": "R1"}, series, weighted=False)
    assert plain.vh["R1"] == pytest.approx([0.4, 0.6])
    assert weighted.totals.loc["R1", "licensed_beds"] == 3.0
    assert list(weighted.capacity_frame().columns) == ["region", "licensed_beds", "icu_beds", "population"]


def test_aggregate_errors():
    """测试未分配的县与长度不一致的序列"""
    counties = pd.DataFrame({"county_id": ["a", "b"], "population": [1.0, 1.0],
                             "licensed_beds": [1.0, 1.0], "icu_beds": [0.0, 0.0]})
    with pytest.raises(IngestError):
        aggregate_to_regions(counties, {"a": "R1"})
    series = [CountySeries("a", np.zeros(2)), CountySeries("b", np.zeros(3))]
    with pytest.raises(ShapeError):
        aggregate_to_regions(counties, {"a": "R1", "b": "R1"}, series)
