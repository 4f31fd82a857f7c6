"""
参数校准：带种子的随机搜索
"""
import numpy as np
import pandas as pd
import pytest

from src.analysis.calibration import ObservedSeries, apply_candidate, calibrate
from src.core.params import MigrationMatrix
from src.utils.errors import ShapeError, ValidationError

WEEKS = 8


@pytest.fixture(scope="module")
def truth(tiny_instance):
    params = tiny_instance.params
    vh = np.tile([0.4, 0.5], (WEEKS, 1))
    return params, ObservedSeries.from_trajectory(params, vh)


def test_observed_from_trajectory(truth):
    """测试由模型生成的观测序列形状与取值"""
    _, observed = truth
    assert observed.infections.shape == (WEEKS, 2)
    assert observed.horizon == WEEKS
    assert np.all(np.diff(observed.vaccinations, axis=0) >= 0)


def test_exact_box_gives_zero_loss(truth):
    """测试参数盒退化为真值时损失为 0"""
    params, observed = truth
    bounds = {"beta": {"R1": (1.8, 1.8), "R2": (2.1, 2.1)}}
    report = calibrate(params, observed, bounds, budget=3, seed=1)
    assert report.best_loss == pytest.approx(0.0, abs=1e-9)
    assert report.separable
    assert report.discarded == 0
    assert report.metrics["R1"]["infections"].rmse == pytest.approx(0.0, abs=1e-9)
    assert report.tuned["value"].tolist() == [1.8, 2.1]


def test_search_is_deterministic_across_jobs(truth):
    """测试同一种子在不同并行度下结果一致"""
    params, observed = truth
    bounds = {"beta": (1.0, 3.0), "rho": (0.01, 0.1)}
    serial = calibrate(params, observed, bounds, budget=40, seed=11, n_jobs=1)
    parallel = calibrate(params, observed, bounds, budget=40, seed=11, n_jobs=2)
    pd.testing.assert_frame_equal(serial.tuned, parallel.tuned)
    assert serial.best_loss == parallel.best_loss
    assert serial.history == parallel.history


def test_search_improves_and_stays_in_box(truth):
    """测试最优损失单调记录，调优值落在参数盒内"""
    params, observed = truth
    report = calibrate(params, observed, {"beta": (1.0, 3.0)}, budget=60, seed=5)
    assert all(b <= a for a, b in zip(report.history, report.history[1:]))
    assert report.best_loss >= 0.0
    assert report.tuned["value"].between(1.0, 3.0).all()
    assert report.summary()["evaluated"] == 60


def test_joint_search_with_open_migration(truth):
    """测试存在迁移时按总损失整体取最优"""
    params, observed = truth
    migration = MigrationMatrix(("R1", "R2"), np.array([[0.0, 0.01], [0.01, 0.0]]))
    report = calibrate(params, observed, {"beta": (1.5, 2.5)}, budget=20, seed=2, migration=migration)
    assert not report.separable
    assert report.best_loss < np.inf


def test_apply_candidate_moves_initial_mass_from_s(tiny_instance):
    """测试调整初始仓室时差额由 S 吸收"""
    params = tiny_instance.params
    updated = apply_candidate(params, ["init:E"], np.array([[50.0, 30.0]]))
    assert updated.initial_state[0, 2] == 50.0
    assert updated.initial_state[0, 0] == pytest.approx(params.initial_state[0, 0] - 10.0)
    assert updated.initial_state.sum() == pytest.approx(params.initial_state.sum())
    with pytest.raises(ValidationError):
        apply_candidate(params, ["init:E"], np.array([[5000.0, 30.0]]))


def test_calibrate_rejects_bad_input(truth):
    """测试参数名、参数盒、预算与 VH 的校验"""
    params, observed = truth
    with pytest.raises(ValidationError):
        calibrate(params, observed, {"alpha": (0.1, 0.2)}, budget=5)
    with pytest.raises(ValidationError):
        calibrate(params, observed, {"beta": (3.0, 1.0)}, budget=5)
    with pytest.raises(ValidationError):
        calibrate(params, observed, {"beta": (1.0, 3.0)}, budget=0)
    bare = ObservedSeries(observed.region_ids, observed.infections, observed.vaccinations)
    with pytest.raises(ValidationError):
        calibrate(params, bare, {"beta": (1.0, 3.0)}, budget=5)
    report = calibrate(params, bare, {"beta": (1.0, 3.0)}, budget=5, h0=[0.4, 0.5])
    assert report.evaluated == 5


def test_observed_from_frame(data_dir):
    """测试从观测长表读取，区域按给定顺序排列"""
    frame = pd.read_csv(data_dir / "arkansas_observed.csv")
    observed = ObservedSeries.from_frame(frame, ["R4", "R3", "R2", "R1"])
    assert observed.infections.shape == (12, 4)
    assert observed.vh is not None
    r1 = frame[frame["region"] == "R1"].sort_values("week")["infections"].to_numpy()
    assert np.allclose(observed.infections[:, 3], r1)
    with pytest.raises(ValidationError):
        ObservedSeries.from_frame(frame, ["R1", "R9"])
    with pytest.raises(ShapeError):
        ObservedSeries(("R1",), np.zeros((3, 1)), np.zeros((4, 1)))
