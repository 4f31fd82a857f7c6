"""
定长 MPS 的写出与读回
"""
import numpy as np
import pytest

from src.optimizer.instance import build_instance_milp
from src.optimizer.milp import BINARY, INTEGER, MilpModel
from src.optimizer.mps import (
    NameMap,
    emit_mps,
    format_number,
    load_name_map,
    parse_mps,
)
from src.utils.errors import FormatError


def _small_model() -> MilpModel:
    model = MilpModel("small")
    a = model.add_var("a", 0, 7, INTEGER, obj=1.5)
    b = model.add_var("b", -np.inf, np.inf)
    c = model.add_var("a_very_long_column_name", kind=BINARY, obj=-2.0)
    d = model.add_var("d", 3, 3)
    model.add_constraint("r1", {a: 1.0, b: -0.25}, "L", 4.0)
    model.add_constraint("balance row with spaces", {b: 1.0, c: 2.0, d: 1.0}, "E", 0.0)
    model.add_constraint("r3", {a: 1.0, c: 1e-7}, "G", -1.5)
    return model


def test_format_number():
    """测试数值读回后逐位不变，短数值不超过字段宽度"""
    assert format_number(3.0) == "3"
    assert format_number(-0.25) == "-0.25"
    assert format_number(1e-7) == "1e-07"
    for value in (1 / 3, 123456.7891234, -2.5e-11, 0.1 + 0.2, 9.083207018123456, 1 / 2705590):
        text = format_number(value)
        assert float(text) == value
        assert format_number(float(text)) == text
    assert len(format_number(0.5555)) <= 12
    with pytest.raises(FormatError):
        format_number(float("inf"))


def test_name_map_shortens_long_names():
    """测试超长或含空白的名称被替换为定长短名，其余保持不变"""
    names = NameMap.build(["x", "a_very_long_column_name"], ["ok", "row with spaces", "OBJ"])
    assert names.columns["x"] == "x"
    assert names.columns["a_very_long_column_name"] == "C0000000"
    assert names.rows["row with spaces"] == "R0000000"
    assert names.rows["OBJ"] != "OBJ"
    assert all(len(v) <= 8 for v in list(names.columns.values()) + list(names.rows.values()))


def test_roundtrip_small(tmp_path):
    """测试写出再读回保持矩阵、目标、右端项、界与整数性"""
    model = _small_model()
    path = tmp_path / "small.mps"
    names = emit_mps(model, path)
    assert path.with_suffix(".names.csv").exists()
    parsed = parse_mps(path, load_name_map(path.with_suffix(".names.csv")))

    assert parsed.name == "small"
    assert parsed.col_names == model.col_names
    assert parsed.row_names == model.row_names
    assert parsed.row_sense == model.row_sense
    assert parsed.row_rhs == model.row_rhs
    assert parsed.objective == model.objective
    assert parsed.col_lb == model.col_lb
    assert parsed.col_ub == model.col_ub
    assert parsed.col_kind == model.col_kind
    assert (parsed.to_sparse() != model.to_sparse()).nnz == 0
    assert names.columns["a_very_long_column_name"] == "C0000000"


def test_fixed_width_fields(tmp_path):
    """测试数据行的字段落在固定列位置"""
    path = tmp_path / "small.mps"
    emit_mps(_small_model(), path, write_names=False)
    lines = path.read_text(encoding="ascii").splitlines()
    assert lines[0].startswith("NAME")
    assert lines[-1] == "ENDATA"
    row_line = next(line for line in lines if line.startswith(" L "))
    assert row_line[4:12].rstrip() == "r1"
    entry = next(line for line in lines if line.startswith("    a ") and "r1" in line)
    assert entry[4:12].rstrip() == "a"
    assert entry[14:22].rstrip() in ("OBJ", "r1")
    assert float(entry[24:36]) in (1.5, 1.0)
    assert not path.with_suffix(".names.csv").exists()


def test_emit_is_stable(tmp_path):
    """测试 emit -> parse -> emit 得到相同字节"""
    first = tmp_path / "first.mps"
    second = tmp_path / "second.mps"
    names = emit_mps(_small_model(), first)
    emit_mps(parse_mps(first, names), second)
    assert first.read_bytes() == second.read_bytes()


def test_wide_coefficients_roundtrip(tmp_path):
    """测试超出字段宽度的系数无损读回，且输出仍逐字节稳定"""
    model = MilpModel("wide")
    a = model.add_var("a", 0, 5, INTEGER, obj=1 / 3)
    b = model.add_var("b", 0, 2.718281828459045)
    model.add_constraint("r1", {a: 1 / 2705590, b: 9.083207018123456}, "L", 1000 / 1800 * 0.5 * 2)
    model.add_constraint("r2", {a: -1 / 7, b: 1.0}, "G", -0.1)
    first = tmp_path / "wide.mps"
    second = tmp_path / "wide2.mps"
    names = emit_mps(model, first)
    parsed = parse_mps(first, names)
    assert parsed.objective == model.objective
    assert parsed.row_rhs == model.row_rhs
    assert parsed.col_ub == model.col_ub
    assert (parsed.to_sparse() != model.to_sparse()).nnz == 0
    emit_mps(parsed, second, write_names=False)
    assert first.read_bytes() == second.read_bytes()


def test_roundtrip_instance_model(tmp_path, tiny_instance):
    """测试完整的分配模型可以无损读回"""
    model = build_instance_milp(tiny_instance)
    path = tmp_path / "tiny.mps"
    names = emit_mps(model, path)
    parsed = parse_mps(path, names)
    assert parsed.summary() == model.summary()
    assert np.array_equal(parsed.integer_columns(), model.integer_columns())
    assert parsed.row_rhs == model.row_rhs
    assert parsed.objective == model.objective
    assert (parsed.to_sparse() != model.to_sparse()).nnz == 0


def test_parse_errors(tmp_path):
    """测试未知段与坏数值报出行号"""
    path = tmp_path / "bad.mps"
    path.write_text("NAME          bad\nROWS\n N  OBJ\nWEIRD\nENDATA\n", encoding="ascii")
    with pytest.raises(FormatError, match="bad.mps:4"):
        parse_mps(path)
    path.write_text("NAME          bad\nROWS\n N  OBJ\n L  r1\nCOLUMNS\n    a         r1        abc\nENDATA\n",
                    encoding="ascii")
    with pytest.raises(FormatError, match="bad.mps:6"):
        parse_mps(path)
