"""
实验配置加载器
负责读取 JSON 格式的 *.config 文件，主要功能：
- global / regions / migration / supply / vh / sweeps 六个区块
- 缺省字段按默认参数表补齐
- 命令行 --set key.path=value 覆盖
- 全部类型约束在这里校验
"""
import copy
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import Config
from ..utils.errors import FormatError, ValidationError
from ..utils.logger import setup_logger
from .defaults import ARKANSAS_REGIONS
from .params import COMPARTMENTS, CompartmentState, GlobalParams, MigrationMatrix, RegionParams
from .supply import SupplySchedule, resolve_supply_schedule

logger = setup_logger(__name__)

_GLOBAL_FIELDS = {f.name for f in fields(GlobalParams)}
_REGION_FIELDS = {f.name for f in fields(RegionParams)} - {"region_id", "initial_state"}
_TOP_LEVEL = {"name", "global", "regions", "migration", "supply", "vh", "sweeps"}


@dataclass(frozen=True)
class VhSettings:
    """疫苗犹豫设置：初始值、分阶段变化率分布或用于拟合的序列文件"""

    h0: Tuple[float, ...]
    mu: Optional[np.ndarray] = None  # (阶段数, 区域数)
    sigma: Optional[np.ndarray] = None
    branch_probabilities: Tuple[float, float, float] = Config.BRANCH_PROBABILITIES
    series_csv: Optional[Path] = None


@dataclass(frozen=True)
class ModelConfig:
    """一次实验的完整参数"""

    global_params: GlobalParams
    regions: Tuple[RegionParams, ...]
    migration: MigrationMatrix
    supply: SupplySchedule
    vh: VhSettings
    sweeps: Dict[str, Any] = field(default_factory=dict)
    name: str = "experiment"
    source: Optional[Path] = None
    document: Dict[str, Any] = field(default_factory=dict)

    @property
    def region_ids(self) -> Tuple[str, ...]:
        return tuple(r.region_id for r in self.regions)

    def as_tuple(self) -> Tuple[GlobalParams, List[RegionParams], MigrationMatrix, SupplySchedule]:
        return self.global_params, list(self.regions), self.migration, self.supply


def apply_overrides(document: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """
    应用 key.path=value 覆盖

    值优先按 JSON 解析（数字、列表、布尔），失败则作为字符串。
    regions 列表可以用区域编号寻址，例如 regions.R2.contact_beta=2.0。

    Args:
        document: 原始配置文档
        overrides: 覆盖表达式列表

    Returns:
        Dict[str, Any]: 覆盖后的新文档
    """
    doc = copy.deepcopy(document)
    for item in overrides:
        if "=" not in item:
            raise ValidationError("--set", "格式必须为 key.path=value", item)
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise ValidationError("--set", "键不能为空", item)
        node: Any = doc
        for i, part in enumerate(parts):
            last = i == len(parts) - 1
            if isinstance(node, list):
                index = _list_index(node, part, item)
                if last:
                    node[index] = value
                else:
                    node = node[index]
            elif isinstance(node, dict):
                if last:
                    node[part] = value
                else:
                    node = node.setdefault(part, {})
            else:
                raise ValidationError("--set", f"无法在 {'.'.join(parts[:i])} 下设置键", item)
        logger.info(f"配置覆盖: {key} = {value!r}")
    return doc


def _list_index(node: List[Any], part: str, item: str) -> int:
    if part.isdigit():
        index = int(part)
        if index >= len(node):
            raise ValidationError("--set", f"下标 {index} 越界", item)
        return index
    for i, entry in enumerate(node):
        if isinstance(entry, dict) and str(entry.get("region_id")) == part:
            return i
    raise ValidationError("--set", f"找不到区域 {part}", item)


def read_document(path: Union[str, Path]) -> Dict[str, Any]:
    """
    读取配置文档

    Raises:
        FileNotFoundError: 文件不存在
        FormatError: 不是合法的 JSON 对象
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"配置文件不存在: {path}")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"配置文件无法解析 {path}: 第 {e.lineno} 行 {e.msg}") from e
    if not isinstance(document, dict):
        raise FormatError(f"配置文件顶层必须是对象: {path}")
    return document


def load_config(
    path: Union[str, Path],
    overrides: Sequence[str] = (),
) -> ModelConfig:
    """
    加载并校验实验配置

    Args:
        path: 配置文件路径
        overrides: --set 覆盖表达式

    Returns:
        ModelConfig: 校验后的配置（可用 as_tuple() 取出四元组）
    """
    path = Path(path)
    document = apply_overrides(read_document(path), overrides)
    config = parse_config(document, base_dir=path.parent)
    config = replace(config, source=path)
    logger.info(
        f"已加载配置 {path.name}: {len(config.regions)} 个区域, "
        f"T={config.global_params.horizon_T}, J={config.global_params.decision_stages_J}, "
        f"Δ={config.supply.deltas}"
    )
    return config


def parse_config(document: Mapping[str, Any], base_dir: Optional[Path] = None) -> ModelConfig:
    """
    从已解析的文档构造 ModelConfig

    Args:
        document: 配置文档
        base_dir: 相对路径的基准目录
    """
    base_dir = base_dir or Path(".")
    unknown = set(document) - _TOP_LEVEL
    if unknown:
        raise ValidationError(",".join(sorted(unknown)), "未知的顶层区块")

    global_params = _parse_global(document.get("global", {}))
    regions = _parse_regions(document.get("regions"))
    region_ids = tuple(r.region_id for r in regions)
    migration = _parse_migration(document.get("migration"), region_ids, base_dir)
    supply = _parse_supply(document.get("supply", {}), global_params)
    vh = _parse_vh(document.get("vh"), region_ids, global_params, base_dir)
    sweeps = dict(document.get("sweeps", {}) or {})
    return ModelConfig(
        global_params=global_params,
        regions=regions,
        migration=migration,
        supply=supply,
        vh=vh,
        sweeps=sweeps,
        name=str(document.get("name", "experiment")),
        document=copy.deepcopy(dict(document)),
    )


def _parse_global(block: Any) -> GlobalParams:
    if not isinstance(block, dict):
        raise ValidationError("global", "必须是对象")
    unknown = set(block) - _GLOBAL_FIELDS
    if unknown:
        raise ValidationError(f"global.{sorted(unknown)[0]}", "未知字段")
    values = dict(block)
    for key in ("decision_stages_J", "severity_split", "vaccinated_split"):
        if key in values:
            values[key] = tuple(values[key])
    try:
        return GlobalParams(**values)
    except TypeError as e:
        raise ValidationError("global", f"字段类型错误: {e}") from e


def _parse_regions(block: Any) -> Tuple[RegionParams, ...]:
    if not block:
        raise ValidationError("regions", "不能为空")
    if not isinstance(block, list):
        raise ValidationError("regions", "必须是列表")
    regions = []
    seen = set()
    for i, entry in enumerate(block):
        if not isinstance(entry, dict) or "region_id" not in entry:
            raise ValidationError(f"regions[{i}]", "必须是包含 region_id 的对象")
        rid = str(entry["region_id"])
        if rid in seen:
            raise ValidationError(f"regions[{i}].region_id", "重复的区域编号", rid)
        seen.add(rid)
        unknown = set(entry) - _REGION_FIELDS - {"region_id", "initial_state"}
        if unknown:
            raise ValidationError(f"{rid}.{sorted(unknown)[0]}", "未知字段")

        table = ARKANSAS_REGIONS.get(rid, {})
        values: Dict[str, Any] = {}
        for name in _REGION_FIELDS:
            if name in entry:
                values[name] = entry[name]
            elif name in table:
                values[name] = table[name]
            elif name != "incubation_alpha":
                raise ValidationError(f"{rid}.{name}", "缺少字段且没有默认值")

        state_block = entry.get("initial_state")
        if state_block is None:
            state_block = {k: table[k] for k in COMPARTMENTS if k in table}
        if not isinstance(state_block, dict):
            raise ValidationError(f"{rid}.initial_state", "必须是对象")
        bad = set(state_block) - set(COMPARTMENTS)
        if bad:
            raise ValidationError(f"{rid}.initial_state.{sorted(bad)[0]}", "未知仓室")
        values["initial_state"] = CompartmentState(**{k: float(v) for k, v in state_block.items()})
        regions.append(RegionParams(region_id=rid, **values))
    return tuple(regions)


def _parse_migration(block: Any, region_ids: Tuple[str, ...], base_dir: Path) -> MigrationMatrix:
    if block is None:
        return MigrationMatrix.closed(region_ids)
    if isinstance(block, dict) and "csv" in block:
        from ..data.loader import load_migration

        return load_migration(base_dir / block["csv"], region_ids)
    if not isinstance(block, dict):
        raise ValidationError("migration", "必须是 {from: {to: rate}} 对象")
    index = {rid: i for i, rid in enumerate(region_ids)}
    rates = np.zeros((len(region_ids), len(region_ids)))
    for src, row in block.items():
        if src not in index:
            raise ValidationError(f"migration.{src}", "未知区域")
        if not isinstance(row, dict):
            raise ValidationError(f"migration.{src}", "必须是 {to: rate} 对象")
        for dst, rate in row.items():
            if dst not in index:
                raise ValidationError(f"migration.{src}.{dst}", "未知区域")
            rates[index[src], index[dst]] = float(rate)
    return MigrationMatrix(region_ids, rates)


def _parse_supply(block: Any, global_params: GlobalParams) -> SupplySchedule:
    if not isinstance(block, dict):
        raise ValidationError("supply", "必须是对象")
    stages = global_params.decision_stages_J
    if "deltas" in block:
        deltas = list(block["deltas"])
        if len(deltas) != len(stages):
            raise ValidationError("supply.deltas", f"长度必须为 {len(stages)}", len(deltas))
        return SupplySchedule.from_deltas(stages, deltas)
    p_lower = int(block.get("p_lower", 100))
    p = int(block.get("p", 50))
    p_upper = int(block.get("p_upper", 10000))
    start = int(block.get("start_stage", stages[0]))
    return resolve_supply_schedule(p_lower, p, p_upper, stages, start)


def _per_region(value: Any, region_ids: Tuple[str, ...], name: str) -> List[float]:
    if isinstance(value, dict):
        missing = [r for r in region_ids if r not in value]
        if missing:
            raise ValidationError(name, f"缺少区域 {missing[0]}")
        return [float(value[r]) for r in region_ids]
    if isinstance(value, (list, tuple)):
        if len(value) != len(region_ids):
            raise ValidationError(name, f"长度必须为区域数 {len(region_ids)}", len(value))
        return [float(v) for v in value]
    return [float(value)] * len(region_ids)


def _stage_table(
    value: Any, region_ids: Tuple[str, ...], n_stages: int, name: str
) -> np.ndarray:
    """按阶段给出的表；长度为阶段数减一时视为从第二阶段开始"""
    if isinstance(value, dict):
        per_region = {r: value[r] for r in region_ids if r in value}
        if len(per_region) != len(region_ids):
            raise ValidationError(name, "必须为每个区域给出序列")
        rows = list(zip(*[list(per_region[r]) for r in region_ids]))
    else:
        rows = list(value)
    if len(rows) == n_stages - 1:
        rows = [0.0] + rows
    if len(rows) != n_stages:
        raise ValidationError(name, f"长度必须为阶段数 {n_stages}", len(rows))
    return np.array([_per_region(row, region_ids, f"{name}[{i}]") for i, row in enumerate(rows)])


def _stage_values(
    value: Any, region_ids: Tuple[str, ...], n_stages: int, name: str
) -> np.ndarray:
    if isinstance(value, (list, tuple, dict)):
        return _stage_table(value, region_ids, n_stages, name)
    return np.full((n_stages, len(region_ids)), float(value))


def _parse_vh(
    block: Any, region_ids: Tuple[str, ...], global_params: GlobalParams, base_dir: Path
) -> VhSettings:
    if not isinstance(block, dict):
        raise ValidationError("vh", "必须是包含 h0 的对象")
    if "h0" not in block:
        raise ValidationError("vh.h0", "缺少初始疫苗犹豫比例")
    h0 = tuple(_per_region(block["h0"], region_ids, "vh.h0"))
    for rid, h in zip(region_ids, h0):
        if not 0 <= h <= 1:
            raise ValidationError(f"vh.h0.{rid}", "必须在 [0, 1] 内", h)

    probs = tuple(float(p) for p in block.get("branch_probabilities", Config.BRANCH_PROBABILITIES))
    if len(probs) != 3 or any(p < 0 for p in probs) or abs(sum(probs) - 1) > 1e-12:
        raise ValidationError("vh.branch_probabilities", "必须是三个和为 1 的非负数", probs)

    n_stages = global_params.n_stages
    series_csv = block.get("series_csv")
    if series_csv is not None:
        return VhSettings(h0=h0, branch_probabilities=probs, series_csv=base_dir / series_csv)

    mu = _stage_values(block.get("mu", 0.0), region_ids, n_stages, "vh.mu")
    sigma = _stage_values(block.get("sigma", 0.0), region_ids, n_stages, "vh.sigma")
    if np.any(sigma < 0):
        raise ValidationError("vh.sigma", "必须 >= 0")
    return VhSettings(h0=h0, mu=mu, sigma=sigma, branch_probabilities=probs)
