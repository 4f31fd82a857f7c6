"""
运行清单
"""
import json
from pathlib import Path

from src.utils.manifest import MANIFEST_NAME, build_manifest, sha256_file, write_manifest


def test_manifest_is_deterministic(tmp_path):
    """测试相同输入得到相同的清单文件"""
    data = tmp_path / "input.csv"
    data.write_text("a,b\n1,2\n")
    args = {"out": tmp_path / "out", "seed": 3}
    first = write_manifest(tmp_path / "one", build_manifest("simulate", args, {"name": "x"}, 3, [data]))
    second = write_manifest(tmp_path / "two", build_manifest("simulate", args, {"name": "x"}, 3, [data]))
    assert first.name == MANIFEST_NAME
    assert first.read_bytes() == second.read_bytes()


def test_manifest_contents(tmp_path):
    """测试清单记录参数、种子、版本与输入哈希，不存在的输入被跳过"""
    data = tmp_path / "input.csv"
    data.write_text("x\n")
    manifest = build_manifest("tree", {"out": Path("out")}, None, None, [data, tmp_path / "missing.csv"])
    assert manifest["arguments"] == {"out": "out"}
    assert manifest["inputs"] == {str(data): sha256_file(data)}
    assert "numpy" in manifest["versions"]
    path = write_manifest(tmp_path, manifest)
    assert json.loads(path.read_text(encoding="utf-8"))["command"] == "tree"


def test_sha256_file(tmp_path):
    """测试文件哈希"""
    path = tmp_path / "empty"
    path.write_bytes(b"")
    assert sha256_file(path) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
