"""
命令行：退出码与输出文件
"""
import json

import pandas as pd
import pytest

from conftest import DATA_DIR
from src.cli import EXIT_INVALID, EXIT_NO_SOLUTION, EXIT_OK, EXIT_SOLVER, main

TINY = str(DATA_DIR / "tiny.config")


def _run(*argv):
    return main([str(a) for a in argv])


def test_unknown_flag_exits_with_usage(capsys):
    """测试未知参数打印用法并以 1 退出"""
    with pytest.raises(SystemExit) as info:
        main(["tree", "--no-such-flag"])
    assert info.value.code == EXIT_INVALID
    assert "usage" in capsys.readouterr().err


def test_tree_without_config(tmp_path, capsys):
    """测试无配置时导出单位尺度的树"""
    assert _run("tree", "--stages", 3, "--out", tmp_path) == EXIT_OK
    tree = pd.read_csv(tmp_path / "tree.csv")
    assert tree["scenario_id"].nunique() == 9
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "tree"
    assert "9 个情景" in capsys.readouterr().out


def test_tree_and_simulate_with_config(tmp_path):
    """测试按配置导出树、VH 路径与零分配仿真"""
    assert _run("tree", "--config", TINY, "--out", tmp_path) == EXIT_OK
    assert (tmp_path / "vh_paths.csv").exists()
    assert _run("simulate", "--config", TINY, "--out", tmp_path) == EXIT_OK
    deaths = pd.read_csv(tmp_path / "regional_deaths.csv")
    assert deaths["region"].tolist() == ["R1", "R2"]
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "simulate"
    assert TINY in manifest["inputs"]


def test_build_writes_mps(tmp_path):
    """测试构建命令写出 MPS、名称对照与规模概要"""
    assert _run("build", "--config", TINY, "--fairness", "equal", "--out", tmp_path) == EXIT_OK
    assert (tmp_path / "model.mps").read_text(encoding="ascii").startswith("NAME")
    assert (tmp_path / "model.names.csv").exists()
    summary = json.loads((tmp_path / "model_summary.json").read_text(encoding="utf-8"))
    assert summary["integer"] == 12


def test_oracle_then_report(tmp_path, capsys):
    """测试穷举求解导出方案，再由方案生成报表"""
    assert _run("oracle", "--config", TINY, "--out", tmp_path / "solve") == EXIT_OK
    assert "OPTIMAL" in capsys.readouterr().out
    report = json.loads((tmp_path / "solve" / "report.json").read_text(encoding="utf-8"))
    plan = tmp_path / "solve" / "allocations.csv"
    assert _run("report", "--config", TINY, "--plan", plan, "--out", tmp_path / "report") == EXIT_OK
    deaths = pd.read_csv(tmp_path / "report" / "regional_deaths.csv")
    assert deaths["expected_deaths"].sum() == pytest.approx(report["objective"], rel=1e-9)
    long = pd.read_csv(tmp_path / "report" / "trajectory_long.csv")
    assert {"scenario", "period", "region", "variable", "value"} <= set(long.columns)


def test_vss_with_oracle(tmp_path):
    """测试 VSS 命令使用穷举求解"""
    assert _run("vss", "--config", TINY, "--oracle", "--out", tmp_path) == EXIT_OK
    vss = pd.read_csv(tmp_path / "vss.csv")
    assert vss["stage"].tolist() == [1, 3]
    assert vss.loc[0, "vss"] == 0.0
    payload = json.loads((tmp_path / "vss.json").read_text(encoding="utf-8"))
    assert payload["failures"] == []


def test_sweep_with_oracle(tmp_path):
    """测试扫描命令写出结果表与回归"""
    code = _run("sweep", "--config", TINY, "--oracle", "--set", 'sweeps.fairness={"equal": true}',
                "--out", tmp_path)
    assert code == EXIT_OK
    assert len(pd.read_csv(tmp_path / "timing.csv")) == 8
    assert (tmp_path / "timing_regression.json").exists()
    assert len(pd.read_csv(tmp_path / "fairness.csv")) == 2


def test_sweep_without_block(tmp_path):
    """测试配置中没有扫描时以 1 退出"""
    assert _run("sweep", "--config", TINY, "--oracle", "--set", "sweeps={}", "--out", tmp_path) == EXIT_INVALID


def test_calibrate(tmp_path):
    """测试校准命令"""
    rows = [{"region": r, "week": w, "infections": 10.0 * w, "vaccinations": 20.0 * w}
            for r in ("R1", "R2") for w in range(1, 5)]
    observed = tmp_path / "observed.csv"
    pd.DataFrame(rows).to_csv(observed, index=False)
    code = _run("calibrate", "--config", TINY, "--observed", observed, "--bound", "beta=1.0:3.0",
                "--budget", 8, "--seed", 4, "--out", tmp_path / "fit")
    assert code == EXIT_OK
    tuned = pd.read_csv(tmp_path / "fit" / "tuned.csv")
    assert tuned["parameter"].tolist() == ["beta", "beta"]
    fit = json.loads((tmp_path / "fit" / "fit.json").read_text(encoding="utf-8"))
    assert fit["seed"] == 4 and fit["budget"] == 8


def test_cluster(tmp_path, capsys):
    """测试聚类命令并汇总区域容量"""
    code = _run("cluster", "--series", DATA_DIR / "county_vh.csv", "--counties", DATA_DIR / "counties.csv",
                "--out", tmp_path)
    assert code == EXIT_OK
    assert "4 个区域" in capsys.readouterr().out
    capacity = pd.read_csv(tmp_path / "regional_capacity.csv")
    assert capacity["region"].tolist() == ["R1", "R2", "R3", "R4"]
    assert (tmp_path / "regional_vh.csv").exists()


def test_invalid_inputs_exit_1(tmp_path):
    """测试坏配置、坏覆盖与坏参数区间以 1 退出"""
    bad = tmp_path / "bad.config"
    bad.write_text("{ not json", encoding="utf-8")
    assert _run("simulate", "--config", bad, "--out", tmp_path) == EXIT_INVALID
    assert _run("simulate", "--config", tmp_path / "absent.config", "--out", tmp_path) == EXIT_INVALID
    assert _run("simulate", "--config", TINY, "--set", "global.no_such_field=1", "--out", tmp_path) == EXIT_INVALID
    assert _run("calibrate", "--config", TINY, "--observed", DATA_DIR / "arkansas_observed.csv",
                "--bound", "beta", "--out", tmp_path) == EXIT_INVALID


def test_missing_solver_exits_2(tmp_path):
    """测试求解器不存在时以 2 退出"""
    code = _run("solve", "--config", TINY, "--solver", tmp_path / "no-such-solver", "--solver-format", "generic",
                "--out", tmp_path)
    assert code == EXIT_SOLVER


def test_infeasible_model_exits_3_with_report(tmp_path, capsys):
    """测试模型不可行时写出报告与清单，并以 3 退出"""
    code = _run("oracle", "--config", TINY, "--fairness", "zeta=1.0", "--out", tmp_path)
    assert code == EXIT_NO_SOLUTION
    report = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert report["status"] == "INFEASIBLE"
    assert report["objective"] is None
    assert not (tmp_path / "allocations.csv").exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "oracle"
    assert "INFEASIBLE" in capsys.readouterr().err
