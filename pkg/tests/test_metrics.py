"""
误差指标
"""
import math

import pytest

from src.analysis.metrics import ErrorMetrics, error_metrics, metrics_table, safe_error_metrics
from src.utils.errors import MapeUndefinedError, ShapeError


def test_error_metrics():
    """测试 RMSE、MAE 与百分数形式的 MAPE"""
    m = error_metrics([110, 90, 100], [100, 100, 100])
    assert m.rmse == pytest.approx(math.sqrt(200 / 3))
    assert m.mae == pytest.approx(20 / 3)
    assert m.mape == pytest.approx(20 / 3)


def test_perfect_prediction():
    """测试完全一致时各指标为 0"""
    assert error_metrics([1.5, 2.5], [1.5, 2.5]) == ErrorMetrics(0.0, 0.0, 0.0)


def test_zero_observation():
    """测试观测值含 0 时 MAPE 无定义，但仍给出 RMSE 与 MAE"""
    with pytest.raises(MapeUndefinedError) as info:
        error_metrics([1, 2], [0, 2])
    assert info.value.mae == pytest.approx(0.5)
    safe = safe_error_metrics([1, 2], [0, 2])
    assert safe.mape is None
    assert safe.rmse == pytest.approx(math.sqrt(0.5))


def test_shape_errors():
    """测试长度不一致或空序列"""
    with pytest.raises(ShapeError):
        error_metrics([1, 2, 3], [1, 2])
    with pytest.raises(ShapeError):
        error_metrics([], [])


def test_metrics_table():
    """测试宽表列名"""
    table = metrics_table({"R1": {"infections": ErrorMetrics(1.0, 0.5, 2.0),
                                  "vaccinations": ErrorMetrics(2.0, 1.0, None)}})
    assert list(table.columns) == ["region", "infections_rmse", "infections_mae", "infections_mape",
                                   "vaccinations_rmse", "vaccinations_mae", "vaccinations_mape"]
    assert table.loc[0, "vaccinations_rmse"] == 2.0
