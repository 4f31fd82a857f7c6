"""
校准轨迹的预测误差指标
"""
from dataclasses import asdict, dataclass
from typing import Dict, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.metrics import mean_absolute_error, mean_squared_error

from ..utils.errors import MapeUndefinedError, ShapeError


@dataclass(frozen=True)
class ErrorMetrics:
    """单条序列的 RMSE / MAE / MAPE，MAPE 为百分数"""

    rmse: float
    mae: float
    mape: Optional[float]

    def as_dict(self) -> Dict[str, Optional[float]]:
        return asdict(self)


def error_metrics(predicted: Sequence[float], observed: Sequence[float]) -> ErrorMetrics:
    """
    计算两条等长序列的 RMSE、MAE 与 MAPE

    Raises:
        ShapeError: 长度不一致或序列为空
        MapeUndefinedError: 观测值含 0（异常中带有 rmse 与 mae）
    """
    pred = np.asarray(predicted, dtype=float).ravel()
    obs = np.asarray(observed, dtype=float).ravel()
    if pred.shape != obs.shape or pred.size == 0:
        raise ShapeError(f"序列长度不一致或为空: {pred.shape} vs {obs.shape}")
    rmse = float(np.sqrt(mean_squared_error(obs, pred)))
    mae = float(mean_absolute_error(obs, pred))
    if np.any(obs == 0):
        raise MapeUndefinedError(rmse, mae)
    # sklearn 的 MAPE 返回比例且会把 |obs| 截断到 eps
    mape = float(np.mean(np.abs(pred - obs) / np.abs(obs)) * 100.0)
    return ErrorMetrics(rmse, mae, mape)


def safe_error_metrics(predicted: Sequence[float], observed: Sequence[float]) -> ErrorMetrics:
    """同 error_metrics，MAPE 无定义时记为 None 而不抛异常"""
    try:
        return error_metrics(predicted, observed)
    except MapeUndefinedError as e:
        return ErrorMetrics(e.rmse, e.mae, None)


def metrics_table(rows: Mapping[str, Mapping[str, ErrorMetrics]]) -> pd.DataFrame:
    """
    按 区域 x (序列, 指标) 排成宽表

    Args:
        rows: 区域 -> {"infections": ErrorMetrics, "vaccinations": ErrorMetrics}
    """
    records = []
    for region, per_series in rows.items():
        record: Dict[str, object] = {"region": region}
        for series, m in per_series.items():
            record[f"{series}_rmse"] = m.rmse
            record[f"{series}_mae"] = m.mae
            record[f"{series}_mape"] = m.mape
        records.append(record)
    return pd.DataFrame.from_records(records)
