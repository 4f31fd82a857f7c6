"""
定长格式 MPS 读写

字段位置（从 1 开始计列）：2-3, 5-12, 15-22, 25-36, 40-47, 50-61。
数值字段名义宽度 12，数值按最短无损形式写出，超宽时后续字段顺延。
超过 8 个字符的名称统一替换为 "C"/"R" + 7 位 36 进制序号，并把对照表写到同目录的 CSV。
目标行固定命名为 OBJ，方向为最小化。

输出顺序完全由模型中的行列顺序决定，emit -> parse -> emit 得到相同的字节。
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..utils.errors import FormatError
from ..utils.logger import setup_logger
from .milp import BINARY, CONTINUOUS, INTEGER, MilpModel

logger = setup_logger(__name__)

OBJECTIVE_ROW = "OBJ"
NAME_WIDTH = 8
NUMBER_WIDTH = 12
_DIGITS = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def format_number(value: float) -> str:
    """
    数值的最短无损表示

    整数写成不带小数点的形式，其余用 repr，读回后与原值逐位相同。
    多数系数不超过 12 个字符，落在定长字段内；更长的数值会把同一行后续字段右移，
    字段之间仍以空白分隔。
    """
    v = float(value)
    if not np.isfinite(v):
        raise FormatError(f"MPS 不支持非有限数值: {v}")
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _base36(n: int, width: int) -> str:
    out = ""
    while True:
        n, rem = divmod(n, 36)
        out = _DIGITS[rem] + out
        if n == 0:
            break
    return out.rjust(width, "0")


def _needs_shortening(name: str) -> bool:
    return len(name) > NAME_WIDTH or not name or any(ch.isspace() for ch in name)


@dataclass
class NameMap:
    """原始名称 -> MPS 名称"""

    columns: Dict[str, str] = field(default_factory=dict)
    rows: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def build(cls, col_names: Sequence[str], row_names: Sequence[str]) -> "NameMap":
        """
        生成确定性的短名称

        保留合法的短名称；其余按出现顺序编号，跳过与已占用名称冲突的编号。
        """
        used = {n for n in list(col_names) + list(row_names) if not _needs_shortening(n)}
        used.add(OBJECTIVE_ROW)
        mapping = cls()
        for target, names, prefix in ((mapping.columns, col_names, "C"), (mapping.rows, row_names, "R")):
            counter = 0
            for name in names:
                if not _needs_shortening(name) and not (prefix == "R" and name == OBJECTIVE_ROW):
                    target[name] = name
                    continue
                candidate = prefix + _base36(counter, NAME_WIDTH - 1)
                while candidate in used:
                    counter += 1
                    candidate = prefix + _base36(counter, NAME_WIDTH - 1)
                used.add(candidate)
                target[name] = candidate
                counter += 1
        return mapping

    def inverse(self) -> Tuple[Dict[str, str], Dict[str, str]]:
        return ({v: k for k, v in self.columns.items()}, {v: k for k, v in self.rows.items()})

    def to_frame(self) -> pd.DataFrame:
        records = [("column", k, v) for k, v in self.columns.items()]
        records += [("row", k, v) for k, v in self.rows.items()]
        return pd.DataFrame(records, columns=["kind", "original", "mps"])

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "NameMap":
        mapping = cls()
        for kind, original, short in frame[["kind", "original", "mps"]].itertuples(index=False):
            (mapping.columns if kind == "column" else mapping.rows)[str(original)] = str(short)
        return mapping


def _line(f1: str = "", f2: str = "", f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    text = (" " + f1.ljust(2) + " " + f2.ljust(8) + "  " + f3.ljust(8) + "  "
            + f4.ljust(NUMBER_WIDTH) + "   " + f5.ljust(8) + "  " + f6)
    return text.rstrip()


def _pairs(items: List[Tuple[str, str]]) -> Iterable[Tuple[Tuple[str, str], Optional[Tuple[str, str]]]]:
    for i in range(0, len(items), 2):
        yield items[i], (items[i + 1] if i + 1 < len(items) else None)


def mps_lines(model: MilpModel, names: NameMap) -> List[str]:
    """按行生成 MPS 文本"""
    cols = [names.columns[n] for n in model.col_names]
    rows = [names.rows[n] for n in model.row_names]
    lines = ["NAME" + " " * 10 + model.name, "ROWS", _line("N", OBJECTIVE_ROW)]
    lines += [_line(sense, rows[i]) for i, sense in enumerate(model.row_sense)]

    lines.append("COLUMNS")
    matrix = model.to_sparse().tocsc()
    matrix.sort_indices()
    in_marker = False
    for j, name in enumerate(cols):
        integral = model.col_kind[j] != CONTINUOUS
        if integral and not in_marker:
            lines.append(_line("", "MARKER", "'MARKER'", "", "'INTORG'"))
            in_marker = True
        elif not integral and in_marker:
            lines.append(_line("", "MARKER", "'MARKER'", "", "'INTEND'"))
            in_marker = False
        start, end = matrix.indptr[j], matrix.indptr[j + 1]
        entries: List[Tuple[str, str]] = []
        if model.objective[j] != 0.0:
            entries.append((OBJECTIVE_ROW, format_number(model.objective[j])))
        entries += [(rows[i], format_number(v)) for i, v in zip(matrix.indices[start:end], matrix.data[start:end])
                    if v != 0.0]
        if not entries:
            entries.append((OBJECTIVE_ROW, "0"))
        for first, second in _pairs(entries):
            if second is None:
                lines.append(_line("", name, first[0], first[1]))
            else:
                lines.append(_line("", name, first[0], first[1], second[0], second[1]))
    if in_marker:
        lines.append(_line("", "MARKER", "'MARKER'", "", "'INTEND'"))

    lines.append("RHS")
    rhs = [(rows[i], format_number(v)) for i, v in enumerate(model.row_rhs) if v != 0.0]
    for first, second in _pairs(rhs):
        if second is None:
            lines.append(_line("", "RHS", first[0], first[1]))
        else:
            lines.append(_line("", "RHS", first[0], first[1], second[0], second[1]))

    lines.append("BOUNDS")
    for j, name in enumerate(cols):
        lb, ub, kind = model.col_lb[j], model.col_ub[j], model.col_kind[j]
        if kind == BINARY:
            lines.append(_line("BV", "BND", name))
        elif lb == ub:
            lines.append(_line("FX", "BND", name, format_number(lb)))
        elif lb == -np.inf and ub == np.inf:
            lines.append(_line("FR", "BND", name))
        else:
            if lb == -np.inf:
                lines.append(_line("MI", "BND", name))
            elif lb != 0.0:
                lines.append(_line("LO", "BND", name, format_number(lb)))
            if ub != np.inf:
                lines.append(_line("UP", "BND", name, format_number(ub)))
            elif kind == INTEGER:
                lines.append(_line("PL", "BND", name))
    lines.append("ENDATA")
    return lines


def emit_mps(model: MilpModel, path: Union[str, Path], write_names: bool = True) -> NameMap:
    """
    写出定长 MPS 文件

    Args:
        model: MILP 模型
        path: 输出路径
        write_names: 是否在同目录写出名称对照表 <stem>.names.csv

    Returns:
        NameMap: 名称对照
    """
    path = Path(path)
    names = NameMap.build(model.col_names, model.row_names)
    try:
        path.write_text("\n".join(mps_lines(model, names)) + "\n", encoding="ascii")
        if write_names:
            names.to_frame().to_csv(path.with_suffix(".names.csv"), index=False)
    except Exception as e:
        logger.error(f"写出 MPS 失败 {path}: {str(e)}")
        raise
    logger.info(f"已写出 MPS: {path} ({model.n_rows} 行, {model.n_cols} 列)")
    return names


def parse_mps(path: Union[str, Path], names: Optional[NameMap] = None) -> MilpModel:
    """
    读取本模块写出的定长 MPS

    Args:
        path: MPS 文件
        names: 名称对照，给定时恢复原始名称

    Returns:
        MilpModel: 解析得到的模型

    Raises:
        FormatError: 文件结构无法识别
    """
    path = Path(path)
    col_back, row_back = names.inverse() if names else ({}, {})
    model = MilpModel()
    row_kind: Dict[str, str] = {}
    row_index: Dict[str, int] = {}
    column_entries: Dict[str, Dict[int, float]] = {}
    section = ""
    integral = False
    objective: Dict[str, float] = {}
    rhs: Dict[str, float] = {}
    bounds: List[Tuple[str, str, Optional[float]]] = []
    col_order: List[Tuple[str, bool]] = []

    for number, raw in enumerate(path.read_text(encoding="ascii").splitlines(), start=1):
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw.startswith(" "):
            head = raw.split()
            section = head[0]
            if section == "NAME":
                model.name = raw[14:].strip() if len(raw) > 14 else (head[1] if len(head) > 1 else "")
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "RANGES"):
                raise FormatError(f"{path}:{number} 未知段 {section}")
            continue
        tokens = raw.split()
        try:
            if section == "ROWS":
                sense, name = tokens[0], tokens[1]
                if sense == "N":
                    continue
                row_kind[name] = sense
                row_index[name] = len(row_index)
            elif section == "COLUMNS":
                if len(tokens) >= 3 and tokens[1] == "'MARKER'":
                    integral = tokens[2] == "'INTORG'"
                    continue
                name = tokens[0]
                if name not in column_entries:
                    column_entries[name] = {}
                    col_order.append((name, integral))
                for row, value in zip(tokens[1::2], tokens[2::2]):
                    if row == OBJECTIVE_ROW:
                        objective[name] = float(value)
                    else:
                        column_entries[name][row_index[row]] = float(value)
            elif section == "RHS":
                for row, value in zip(tokens[1::2], tokens[2::2]):
                    rhs[row] = float(value)
            elif section == "BOUNDS":
                value = float(tokens[3]) if len(tokens) > 3 else None
                bounds.append((tokens[0], tokens[2], value))
            elif section == "RANGES":
                raise FormatError(f"{path}:{number} 不支持 RANGES 段")
        except (IndexError, KeyError, ValueError) as e:
            raise FormatError(f"{path}:{number} 无法解析: {raw.strip()} ({e})") from e

    lb: Dict[str, float] = {}
    ub: Dict[str, float] = {}
    kinds = {name: (INTEGER if flag else CONTINUOUS) for name, flag in col_order}
    for kind, name, value in bounds:
        if name not in kinds:
            raise FormatError(f"{path}: BOUNDS 引用了未声明的列 {name}")
        if kind == "BV":
            kinds[name] = BINARY
        elif kind == "FX":
            lb[name] = ub[name] = value
        elif kind == "FR":
            lb[name], ub[name] = -np.inf, np.inf
        elif kind == "MI":
            lb[name] = -np.inf
        elif kind == "PL":
            ub[name] = np.inf
        elif kind == "LO":
            lb[name] = value
        elif kind == "UP":
            ub[name] = value
        else:
            raise FormatError(f"{path}: 不支持的界类型 {kind}")

    for name, _ in col_order:
        model.add_var(col_back.get(name, name), lb.get(name, 0.0), ub.get(name, np.inf),
                      kinds[name], objective.get(name, 0.0))
    per_row: List[Dict[int, float]] = [dict() for _ in row_index]
    for j, (name, _) in enumerate(col_order):
        for i, value in column_entries[name].items():
            per_row[i][j] = value
    for name, i in row_index.items():
        model.add_constraint(row_back.get(name, name), per_row[i], row_kind[name], rhs.get(name, 0.0))
    logger.info(f"已读取 MPS: {path} ({model.n_rows} 行, {model.n_cols} 列)")
    return model


def load_name_map(path: Union[str, Path]) -> NameMap:
    return NameMap.from_frame(pd.read_csv(path, dtype=str))
