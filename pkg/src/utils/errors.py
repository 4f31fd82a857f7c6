"""
异常类型定义

输入类错误同时继承 ValueError，命令行把它们映射为退出码 1；
求解器与运行环境类错误映射为退出码 2。
"""
from typing import Optional, Sequence


class VentallocError(Exception):
    """本项目所有异常的基类"""


class ConfigError(VentallocError, ValueError):
    """配置内容不合法（例如起始阶段不在决策阶段中）"""


class ValidationError(ConfigError):
    """字段违反约束，携带字段名与规则"""

    def __init__(self, field: str, rule: str, value: object = None) -> None:
        self.field = field
        self.rule = rule
        self.value = value
        message = f"{field}: {rule}"
        if value is not None:
            message += f" (当前值: {value!r})"
        super().__init__(message)


class FormatError(VentallocError, ValueError):
    """文件无法解析"""


class IngestError(VentallocError, ValueError):
    """数据文件校验失败，携带行号与列名"""

    def __init__(
        self,
        message: str,
        row: Optional[int] = None,
        column: Optional[str] = None,
        path: Optional[str] = None,
    ) -> None:
        self.row = row
        self.column = column
        self.path = path
        where = []
        if path:
            where.append(path)
        if row is not None:
            where.append(f"行 {row}")
        if column:
            where.append(f"列 {column}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ShapeError(VentallocError, ValueError):
    """数组或序列维度不一致"""


class FitError(VentallocError, ValueError):
    """样本不足以拟合分布"""


class DynamicsViolationError(VentallocError, ValueError):
    """仓室出现超出容差的负值，通常意味着参数不合理"""


class PlanInfeasibleError(VentallocError, ValueError):
    """分配方案违反供给上限"""


class BuildError(VentallocError, ValueError):
    """建模输入维度不一致"""


class RankDeficiencyError(VentallocError, ValueError):
    """回归设计矩阵不满秩"""

    def __init__(self, columns: Sequence[str]) -> None:
        self.columns = list(columns)
        super().__init__(f"设计矩阵不满秩，共线列: {', '.join(self.columns)}")


class MapeUndefinedError(VentallocError, ValueError):
    """观测值含 0，MAPE 无定义；RMSE 与 MAE 仍然可用"""

    def __init__(self, rmse: float, mae: float) -> None:
        self.rmse = rmse
        self.mae = mae
        super().__init__(f"观测序列含 0，MAPE 无定义 (RMSE={rmse:.6g}, MAE={mae:.6g})")


class SearchSpaceTooLargeError(VentallocError, ValueError):
    """枚举空间超过上限"""

    def __init__(self, estimate: int, limit: int) -> None:
        self.estimate = estimate
        self.limit = limit
        super().__init__(f"枚举空间过大: 约 {estimate} 个方案，上限 {limit}")


class SolverEnvironmentError(VentallocError):
    """找不到或无法运行外部求解器"""


class AdapterFaultError(VentallocError):
    """求解器返回的解未通过约束校验"""
