"""
普通最小二乘回归

用于时机/库存扫描：把期望死亡数对 (s, p_lower, p) 做线性回归，报告系数与调整 R²。
"""
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score

from ..utils.errors import RankDeficiencyError, ShapeError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

MIN_ROWS = 5
DEFAULT_FEATURES = ("s", "p_lower", "p")


@dataclass(frozen=True)
class OlsResult:
    """回归结果"""

    features: tuple
    intercept: float
    coefficients: tuple
    r2: float
    adjusted_r2: float
    n_rows: int

    def predict(self, rows: Sequence[Sequence[float]]) -> np.ndarray:
        X = np.atleast_2d(np.asarray(rows, dtype=float))
        return self.intercept + X @ np.asarray(self.coefficients)

    def as_dict(self) -> Dict[str, float]:
        out = {"intercept": self.intercept}
        out.update({name: c for name, c in zip(self.features, self.coefficients)})
        out.update({"r2": self.r2, "adjusted_r2": self.adjusted_r2, "n_rows": self.n_rows})
        return out

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"term": "intercept", "coefficient": self.intercept}]
            + [{"term": f, "coefficient": c} for f, c in zip(self.features, self.coefficients)]
        )


def collinear_columns(design: np.ndarray, names: Sequence[str]) -> List[str]:
    """逐列加入截距扩展后的设计矩阵，秩不增加的列视为共线"""
    augmented = np.column_stack([np.ones(design.shape[0]), design])
    labels = ["intercept"] + list(names)
    bad: List[str] = []
    rank = 0
    kept = []
    for j, label in enumerate(labels):
        trial = augmented[:, kept + [j]]
        new_rank = int(np.linalg.matrix_rank(trial))
        if new_rank > rank:
            kept.append(j)
            rank = new_rank
        else:
            bad.append(label)
    return bad


def adjusted_r2(r2: float, n_rows: int, n_features: int) -> float:
    dof = n_rows - n_features - 1
    if dof <= 0:
        return float("nan")
    return 1.0 - (1.0 - r2) * (n_rows - 1) / dof


def ols_fit(
    design: Sequence[Sequence[float]],
    response: Sequence[float],
    features: Sequence[str] = DEFAULT_FEATURES,
) -> OlsResult:
    """
    带截距的普通最小二乘

    Args:
        design: 设计矩阵，每行 (s, p_lower, p)
        response: 响应（期望死亡数）
        features: 列名

    Returns:
        OlsResult: 系数与调整 R²

    Raises:
        ShapeError: 行数不足或维度不一致
        RankDeficiencyError: 设计矩阵不满秩，列出共线列
    """
    X = np.atleast_2d(np.asarray(design, dtype=float))
    y = np.asarray(response, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"设计矩阵 {X.shape[0]} 行，响应 {y.shape[0]} 个")
    if X.shape[1] != len(features):
        raise ShapeError(f"设计矩阵 {X.shape[1]} 列，列名 {len(features)} 个")
    if X.shape[0] < MIN_ROWS:
        raise ShapeError(f"至少需要 {MIN_ROWS} 行数据，实际 {X.shape[0]}")

    if np.linalg.matrix_rank(np.column_stack([np.ones(X.shape[0]), X])) < X.shape[1] + 1:
        raise RankDeficiencyError(collinear_columns(X, features))

    model = LinearRegression(fit_intercept=True).fit(X, y)
    fitted = model.predict(X)
    if np.allclose(y, y[0]):
        r2 = 1.0 if np.allclose(fitted, y) else 0.0
    else:
        r2 = float(r2_score(y, fitted))
    result = OlsResult(
        features=tuple(features),
        intercept=float(model.intercept_),
        coefficients=tuple(float(c) for c in model.coef_),
        r2=r2,
        adjusted_r2=adjusted_r2(r2, X.shape[0], X.shape[1]),
        n_rows=int(X.shape[0]),
    )
    logger.info(f"OLS: {result.as_dict()}")
    return result
