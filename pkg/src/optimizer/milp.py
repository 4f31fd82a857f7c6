"""
与求解器无关的 MILP 容器

变量与约束按加入顺序编号，MPS 输出和解的回填都依赖这个顺序。
变量可以附带 (符号, 情景, 期间, 区域) 形式的索引键，用于把解映射回模型量。
"""
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from ..utils.errors import BuildError

CONTINUOUS = "C"
INTEGER = "I"
BINARY = "B"

SENSES = ("L", "G", "E")


@dataclass(frozen=True)
class Violation:
    """单条约束违背"""

    row: str
    activity: float
    sense: str
    rhs: float
    excess: float


@dataclass
class MilpModel:
    """
    最小化问题

    Attributes:
        col_names, col_lb, col_ub, col_kind, objective: 每列一项
        row_names, row_sense, row_rhs: 每行一项
        var_index: 索引键 -> 列号
    """

    name: str = "VENTALLOC"
    col_names: List[str] = field(default_factory=list)
    col_lb: List[float] = field(default_factory=list)
    col_ub: List[float] = field(default_factory=list)
    col_kind: List[str] = field(default_factory=list)
    objective: List[float] = field(default_factory=list)
    row_names: List[str] = field(default_factory=list)
    row_sense: List[str] = field(default_factory=list)
    row_rhs: List[float] = field(default_factory=list)
    var_index: Dict[Hashable, int] = field(default_factory=dict)
    dims: Dict[str, object] = field(default_factory=dict)
    _entries_row: List[int] = field(default_factory=list, repr=False)
    _entries_col: List[int] = field(default_factory=list, repr=False)
    _entries_val: List[float] = field(default_factory=list, repr=False)
    _col_lookup: Dict[str, int] = field(default_factory=dict, repr=False)
    _row_lookup: Dict[str, int] = field(default_factory=dict, repr=False)

    @property
    def n_cols(self) -> int:
        return len(self.col_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    @property
    def n_nonzeros(self) -> int:
        return len(self._entries_val)

    def add_var(
        self,
        name: str,
        lb: float = 0.0,
        ub: float = np.inf,
        kind: str = CONTINUOUS,
        obj: float = 0.0,
        key: Optional[Hashable] = None,
    ) -> int:
        """
        新增一列

        Returns:
            int: 列号

        Raises:
            BuildError: 名称重复、界不合法或系数非有限
        """
        if name in self._col_lookup:
            raise BuildError(f"变量名重复: {name}")
        if kind not in (CONTINUOUS, INTEGER, BINARY):
            raise BuildError(f"未知变量类型 {kind!r}: {name}")
        if kind == BINARY:
            lb, ub = 0.0, 1.0
        if np.isnan(lb) or np.isnan(ub) or lb > ub:
            raise BuildError(f"变量 {name} 的界不合法: [{lb}, {ub}]")
        if not np.isfinite(obj):
            raise BuildError(f"变量 {name} 的目标系数非有限: {obj}")
        index = len(self.col_names)
        self.col_names.append(name)
        self.col_lb.append(float(lb))
        self.col_ub.append(float(ub))
        self.col_kind.append(kind)
        self.objective.append(float(obj))
        self._col_lookup[name] = index
        if key is not None:
            self.var_index[key] = index
        return index

    def add_constraint(self, name: str, coeffs: Mapping[int, float], sense: str, rhs: float) -> int:
        """
        新增一行 Σ a_i v_i (sense) rhs，零系数会被丢弃

        Args:
            name: 行名（唯一）
            coeffs: 列号 -> 系数；同一列重复出现时系数相加
            sense: "L" / "G" / "E"
            rhs: 右端项
        """
        if name in self._row_lookup:
            raise BuildError(f"约束名重复: {name}")
        if sense not in SENSES:
            raise BuildError(f"约束 {name} 的方向未知: {sense!r}")
        if not np.isfinite(rhs):
            raise BuildError(f"约束 {name} 的右端项非有限: {rhs}")
        index = len(self.row_names)
        for col, value in coeffs.items():
            if not 0 <= col < len(self.col_names):
                raise BuildError(f"约束 {name} 引用了未声明的列 {col}")
            if not np.isfinite(value):
                raise BuildError(f"约束 {name} 的系数非有限: {self.col_names[col]} -> {value}")
            if value != 0.0:
                self._entries_row.append(index)
                self._entries_col.append(col)
                self._entries_val.append(float(value))
        self.row_names.append(name)
        self.row_sense.append(sense)
        self.row_rhs.append(float(rhs))
        self._row_lookup[name] = index
        return index

    def column(self, name: str) -> int:
        return self._col_lookup[name]

    def row(self, name: str) -> int:
        return self._row_lookup[name]

    def col(self, key: Hashable) -> int:
        """按索引键取列号"""
        return self.var_index[key]

    def fix(self, col: int, value: float) -> None:
        self.col_lb[col] = float(value)
        self.col_ub[col] = float(value)

    def entries(self) -> Iterable[Tuple[int, int, float]]:
        return zip(self._entries_row, self._entries_col, self._entries_val)

    def to_sparse(self) -> sparse.csr_matrix:
        """约束矩阵 (行数, 列数)，重复项相加"""
        return sparse.coo_matrix(
            (self._entries_val, (self._entries_row, self._entries_col)),
            shape=(self.n_rows, self.n_cols),
        ).tocsr()

    def integer_columns(self) -> np.ndarray:
        return np.array([k != CONTINUOUS for k in self.col_kind], dtype=bool)

    def objective_value(self, values: Sequence[float]) -> float:
        return float(np.dot(self.objective, values))

    def check_solution(self, values: Sequence[float], tol: float = 1e-6) -> List[Violation]:
        """
        逐行检查可行性，容差按 tol·(1 + |rhs| + Σ|a·v|) 缩放

        同时检查列的上下界与整数性。

        Returns:
            List[Violation]: 违背列表，为空表示可行
        """
        v = np.asarray(values, dtype=float)
        if v.shape != (self.n_cols,):
            raise BuildError(f"解的长度 {v.shape} 与列数 {self.n_cols} 不一致")
        matrix = self.to_sparse()
        activity = matrix @ v
        magnitude = abs(matrix) @ np.abs(v)
        rhs = np.asarray(self.row_rhs)
        scale = tol * (1.0 + np.abs(rhs) + magnitude)
        out: List[Violation] = []
        for i, sense in enumerate(self.row_sense):
            if sense == "L":
                excess = activity[i] - rhs[i]
            elif sense == "G":
                excess = rhs[i] - activity[i]
            else:
                excess = abs(activity[i] - rhs[i])
            if excess > scale[i]:
                out.append(Violation(self.row_names[i], float(activity[i]), sense, float(rhs[i]), float(excess)))

        lb = np.asarray(self.col_lb)
        ub = np.asarray(self.col_ub)
        lb_slack = tol * (1 + np.where(np.isfinite(lb), np.abs(lb), 0.0))
        ub_slack = tol * (1 + np.where(np.isfinite(ub), np.abs(ub), 0.0))
        for j in np.flatnonzero((v < lb - lb_slack) | (v > ub + ub_slack)):
            out.append(Violation(f"bound:{self.col_names[j]}", float(v[j]), "B", float(lb[j]), float(v[j])))
        integral = self.integer_columns()
        for j in np.flatnonzero(integral & (np.abs(v - np.round(v)) > tol)):
            out.append(Violation(f"integrality:{self.col_names[j]}", float(v[j]), "I", float(np.round(v[j])), float(v[j])))
        return out

    def summary(self) -> Dict[str, int]:
        kinds = np.asarray(self.col_kind)
        return {
            "columns": self.n_cols,
            "rows": self.n_rows,
            "nonzeros": self.n_nonzeros,
            "integer": int((kinds == INTEGER).sum()),
            "binary": int((kinds == BINARY).sum()),
        }
