"""
实例组装与结果导出
"""
import json

import numpy as np
import pandas as pd
import pytest

from src.core.supply import SupplySchedule
from src.optimizer.instance import BruteForceSolver, export_report
from src.optimizer.solvers import SolveReport, SolveStatus


def test_instance_shapes(tiny_instance):
    """测试实例各部分的维度一致"""
    assert tiny_instance.region_ids == ("R1", "R2")
    assert tiny_instance.stage_boundaries == (1, 3)
    assert tiny_instance.tree.n_scenarios == 3
    assert tiny_instance.vh.h.shape == (3, 4, 2)
    assert tiny_instance.demand.severe.shape == (3, 4, 2)


def test_expected_value_instance(tiny_instance):
    """测试期望值实例只有一条概率为 1 的路径，VH 取各阶段均值"""
    ev = tiny_instance.expected_value_instance()
    assert ev.tree.n_scenarios == 1
    assert ev.tree.probabilities.tolist() == [1.0]
    middle = int(np.argmax(tiny_instance.tree.probabilities))
    assert np.allclose(ev.vh.h[0], tiny_instance.vh.h[middle])
    assert ev.supply == tiny_instance.supply


def test_with_supply(tiny_instance):
    """测试替换供给计划不改变情景与需求"""
    other = tiny_instance.with_supply(SupplySchedule.from_deltas((1, 3), (1, 0)))
    assert other.supply.deltas == (1, 0)
    assert other.demand is tiny_instance.demand
    report = BruteForceSolver().solve_instance(other)
    assert report.plan.x[:, 1, :].sum() == 0


def test_export_report(tmp_path, tiny_instance):
    """测试导出的文件与概要"""
    report = BruteForceSolver().solve_instance(tiny_instance)
    written = export_report(report, tiny_instance, tmp_path / "out")
    assert set(written) == {"allocations.csv", "expected_allocation.csv", "regional_deaths.csv", "report.json"}

    allocations = pd.read_csv(written["allocations.csv"])
    assert list(allocations.columns) == ["scenario", "stage", "region", "x"]
    assert len(allocations) == 3 * 2 * 2
    deaths = pd.read_csv(written["regional_deaths.csv"])
    summary = json.loads(written["report.json"].read_text(encoding="utf-8"))
    assert summary["status"] == "OPTIMAL"
    assert summary["solver"] == "brute-force"
    assert summary["simulated_expected_deaths"] == pytest.approx(report.objective, rel=1e-9)
    assert deaths["expected_deaths"].sum() == pytest.approx(report.objective, rel=1e-9)


def test_export_without_plan(tmp_path, tiny_instance):
    """测试无解时只写出 report.json"""
    report = SolveReport(SolveStatus.INFEASIBLE, solver="generic", message="infeasible")
    written = export_report(report, tiny_instance, tmp_path)
    assert list(written) == ["report.json"]
    summary = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert summary["objective"] is None
    assert summary["message"] == "infeasible"
