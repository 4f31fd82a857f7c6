"""
运行清单

每次命令行运行都写出 manifest.json：解析后的配置、随机种子、依赖版本与输入文件的 SHA-256。
清单不含时间戳，相同输入的两次运行得到相同的文件。
"""
import hashlib
import json
import platform
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Union

from .logger import setup_logger

logger = setup_logger(__name__)

TRACKED_PACKAGES = ("numpy", "pandas", "scikit-learn", "scipy", "joblib", "pulp", "python-dotenv")
MANIFEST_NAME = "manifest.json"


def sha256_file(path: Union[str, Path], chunk_size: int = 1 << 16) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()


def package_versions(packages: Iterable[str] = TRACKED_PACKAGES) -> Dict[str, Optional[str]]:
    versions: Dict[str, Optional[str]] = {"python": platform.python_version()}
    for name in packages:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


def build_manifest(
    command: str,
    arguments: Mapping[str, Any],
    config: Optional[Mapping[str, Any]] = None,
    seed: Optional[int] = None,
    inputs: Iterable[Union[str, Path]] = (),
) -> Dict[str, Any]:
    """
    组装清单内容

    Args:
        command: 子命令名
        arguments: 命令行参数（路径会转成字符串）
        config: 应用覆盖后的配置文档
        seed: 随机种子
        inputs: 需要记录哈希的输入文件
    """
    hashes = {}
    for path in inputs:
        path = Path(path)
        if path.is_file():
            hashes[str(path)] = sha256_file(path)
        else:
            logger.debug(f"跳过不存在的输入 {path}")
    return {
        "command": command,
        "arguments": {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(arguments.items())},
        "seed": seed,
        "config": config,
        "inputs": dict(sorted(hashes.items())),
        "versions": package_versions(),
    }


def write_manifest(out_dir: Union[str, Path], manifest: Mapping[str, Any]) -> Path:
    path = Path(out_dir) / MANIFEST_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False, sort_keys=True, default=str),
                    encoding="utf-8")
    logger.info(f"运行清单已写入 {path}")
    return path
