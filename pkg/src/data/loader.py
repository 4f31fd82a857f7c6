"""
数据加载器模块
负责读取并校验各类输入表格，主要功能：
- 支持多种表格格式（csv, xlsx, xls, parquet）
- 县级 VH 序列、区域级 VH 序列、医疗容量、县级基础表、迁移矩阵的读取与校验
- 所有校验错误都携带文件、行号与列名

行号按文件中的行计数：表头为第 1 行，第一条数据为第 2 行。
"""
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..clustering.hierarchy import CountySeries
from ..core.params import MigrationMatrix, RegionParams
from ..utils.errors import IngestError, ValidationError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

PathLike = Union[str, Path]

VH_COLUMNS = ("county_id", "week", "vh")
REGION_VH_COLUMNS = ("region", "week", "vh")
CAPACITY_COLUMNS = ("region", "licensed_beds", "icu_beds", "population")
COUNTY_COLUMNS = ("county_id", "population", "licensed_beds", "icu_beds")
MIGRATION_COLUMNS = ("from_region", "to_region", "rate")
OBSERVED_COLUMNS = ("region", "week", "infections", "vaccinations")


def _file_row(index: int) -> int:
    return int(index) + 2


class DataLoader:
    """
    表格加载器

    功能：
    1. 按扩展名选择 pandas 读取函数
    2. 检查必需列
    3. 数值列转换，无法解析的单元格报出行列位置
    """

    # 支持的文件格式及其对应的读取函数
    SUPPORTED_FORMATS: Dict[str, Callable[..., pd.DataFrame]] = {
        "csv": lambda path, **kwargs: pd.read_csv(path, encoding="utf-8", **kwargs),
        "xlsx": pd.read_excel,
        "xls": pd.read_excel,
        "parquet": pd.read_parquet,
    }

    def load(self, file_path: PathLike, file_type: Optional[str] = None, **kwargs) -> pd.DataFrame:
        """
        读取表格

        Args:
            file_path: 文件路径
            file_type: 文件类型（为 None 时按扩展名判断）
            **kwargs: 传给读取函数的参数

        Returns:
            pd.DataFrame: 原始表格

        Raises:
            IngestError: 文件不存在、格式不支持或无法解析
        """
        file_path = Path(file_path)
        if not file_path.exists():
            raise IngestError("文件不存在", path=str(file_path))
        file_type = (file_type or file_path.suffix.lower().lstrip(".")) or "csv"
        if file_type not in self.SUPPORTED_FORMATS:
            raise IngestError(f"不支持的文件类型: {file_type}. 支持的类型: {list(self.SUPPORTED_FORMATS)}",
                              path=str(file_path))
        try:
            frame = self.SUPPORTED_FORMATS[file_type](file_path, **kwargs)
        except Exception as e:
            logger.error(f"读取文件时出错 {file_path}: {e}")
            raise IngestError(f"无法解析: {e}", path=str(file_path)) from e
        frame.columns = [str(c).strip() for c in frame.columns]
        logger.debug(f"已读取 {file_path}: {len(frame)} 行")
        return frame

    def require(self, frame: pd.DataFrame, columns: Sequence[str], path: PathLike) -> pd.DataFrame:
        """检查必需列，返回只含这些列的副本"""
        for column in columns:
            if column not in frame.columns:
                raise IngestError("缺少必需列", column=column, path=str(path))
        return frame[list(columns)].copy()

    def numeric(self, frame: pd.DataFrame, column: str, path: PathLike) -> pd.Series:
        """把一列转换成浮点数，空值或非数字报错"""
        values = pd.to_numeric(frame[column], errors="coerce")
        bad = values.isna()
        if bad.any():
            idx = bad.idxmax()
            raise IngestError(f"无法解析的数值 {frame.at[idx, column]!r}", row=_file_row(idx), column=column,
                              path=str(path))
        return values.astype(float)

    def identifiers(self, frame: pd.DataFrame, column: str, path: PathLike) -> pd.Series:
        values = frame[column]
        bad = values.isna() | (values.astype(str).str.strip() == "")
        if bad.any():
            raise IngestError("标识为空", row=_file_row(bad.idxmax()), column=column, path=str(path))
        return values.astype(str).str.strip()

    def weeks(self, frame: pd.DataFrame, column: str, path: PathLike) -> pd.Series:
        values = self.numeric(frame, column, path)
        fractional = values != np.round(values)
        if fractional.any():
            raise IngestError("周序号必须是整数", row=_file_row(fractional.idxmax()), column=column, path=str(path))
        return values.astype(int)


_default_loader = DataLoader()


def _check_range(values: pd.Series, column: str, path: PathLike, low: float, high: Optional[float] = None) -> None:
    bad = values < low
    if high is not None:
        bad |= values > high
    if bad.any():
        idx = bad.idxmax()
        bound = f"[{low}, {high}]" if high is not None else f">= {low}"
        raise IngestError(f"取值 {values[idx]!r} 超出 {bound}", row=_file_row(idx), column=column, path=str(path))


def _dense_series(
    frame: pd.DataFrame, key: str, value: str, path: PathLike
) -> Dict[str, np.ndarray]:
    """按 key 分组得到按周排列的完整序列；重复或缺周报错"""
    duplicated = frame.duplicated(subset=[key, "week"], keep="first")
    if duplicated.any():
        idx = duplicated.idxmax()
        raise IngestError(f"重复的 ({frame.at[idx, key]}, 第 {frame.at[idx, 'week']} 周)", row=_file_row(idx),
                          column="week", path=str(path))
    all_weeks = np.arange(frame["week"].min(), frame["week"].max() + 1)
    out: Dict[str, np.ndarray] = {}
    for name, group in frame.sort_values([key, "week"]).groupby(key, sort=True):
        present = set(group["week"].tolist())
        gaps = [int(w) for w in all_weeks if w not in present]
        if gaps:
            raise IngestError(f"{name} 缺少第 {gaps} 周", column="week", path=str(path))
        out[str(name)] = group[value].to_numpy(dtype=float)
    return out


def load_vh_series(path: PathLike, loader: DataLoader = _default_loader) -> List[CountySeries]:
    """
    读取县级 VH 序列 (county_id, week, vh)

    Returns:
        List[CountySeries]: 按 county_id 排序

    Raises:
        IngestError: vh 越界、重复的 (county, week) 或缺周
    """
    raw = loader.load(path)
    frame = loader.require(raw, VH_COLUMNS, path)
    frame["county_id"] = loader.identifiers(frame, "county_id", path)
    frame["week"] = loader.weeks(frame, "week", path)
    frame["vh"] = loader.numeric(frame, "vh", path)
    _check_range(frame["vh"], "vh", path, 0.0, 1.0)
    dense = _dense_series(frame, "county_id", "vh", path)
    series = [CountySeries(cid, values) for cid, values in dense.items()]
    logger.info(f"已读取 {len(series)} 个县的 VH 序列，每个 {len(series[0]) if series else 0} 周")
    return series


def load_region_series(
    path: PathLike, region_ids: Sequence[str] = (), loader: DataLoader = _default_loader
) -> Dict[str, np.ndarray]:
    """
    读取区域级 VH 序列 (region, week, vh)

    Args:
        path: 文件路径
        region_ids: 需要的区域；为空时返回文件中的全部区域

    Raises:
        IngestError: 缺少区域或校验失败
    """
    raw = loader.load(path)
    frame = loader.require(raw, REGION_VH_COLUMNS, path)
    frame["region"] = loader.identifiers(frame, "region", path)
    frame["week"] = loader.weeks(frame, "week", path)
    frame["vh"] = loader.numeric(frame, "vh", path)
    _check_range(frame["vh"], "vh", path, 0.0, 1.0)
    dense = _dense_series(frame, "region", "vh", path)
    if not region_ids:
        return dense
    missing = [r for r in region_ids if r not in dense]
    if missing:
        raise IngestError(f"缺少区域 {missing}", column="region", path=str(path))
    return {r: dense[r] for r in region_ids}


def load_capacity(path: PathLike, loader: DataLoader = _default_loader) -> pd.DataFrame:
    """
    读取区域医疗容量 (region, licensed_beds, icu_beds, population)

    每张 ICU 床位视为配有一台呼吸机，即 X0 = icu_beds。

    Returns:
        pd.DataFrame: 以 region 为索引，列 beds, ventilators, population

    Raises:
        IngestError: 负数、ICU 床位多于总床位或区域重复
    """
    raw = loader.load(path)
    frame = loader.require(raw, CAPACITY_COLUMNS, path)
    frame["region"] = loader.identifiers(frame, "region", path)
    for column in CAPACITY_COLUMNS[1:]:
        frame[column] = loader.numeric(frame, column, path)
        _check_range(frame[column], column, path, 0.0)
    over = frame["icu_beds"] > frame["licensed_beds"]
    if over.any():
        idx = over.idxmax()
        raise IngestError("icu_beds 不能超过 licensed_beds", row=_file_row(idx), column="icu_beds", path=str(path))
    duplicated = frame["region"].duplicated()
    if duplicated.any():
        raise IngestError("区域重复", row=_file_row(duplicated.idxmax()), column="region", path=str(path))
    for region in frame.loc[frame["licensed_beds"] == 0, "region"]:
        logger.warning(f"区域 {region} 的床位数为 0")
    return pd.DataFrame({
        "beds": frame["licensed_beds"].to_numpy(),
        "ventilators": frame["icu_beds"].to_numpy(),
        "population": frame["population"].to_numpy(),
    }, index=pd.Index(frame["region"], name="region"))


def apply_capacity(regions: Sequence[RegionParams], capacity: pd.DataFrame) -> Tuple[RegionParams, ...]:
    """
    把容量表写入区域参数（b = licensed_beds, X0 = icu_beds）

    Raises:
        ValidationError: 容量表缺少某个区域
    """
    out = []
    for region in regions:
        if region.region_id not in capacity.index:
            raise ValidationError(f"capacity.{region.region_id}", "容量表缺少该区域")
        row = capacity.loc[region.region_id]
        out.append(region.with_capacity(float(row["beds"]), float(row["ventilators"])))
    return tuple(out)


def load_county_table(path: PathLike, loader: DataLoader = _default_loader) -> pd.DataFrame:
    """
    读取县级基础表 (county_id, population, licensed_beds, icu_beds)，支持 CSV / Excel / Parquet

    Raises:
        IngestError: 人口非正、计数为负或县重复
    """
    raw = loader.load(path)
    frame = loader.require(raw, COUNTY_COLUMNS, path)
    frame["county_id"] = loader.identifiers(frame, "county_id", path)
    for column in COUNTY_COLUMNS[1:]:
        frame[column] = loader.numeric(frame, column, path)
        _check_range(frame[column], column, path, 0.0)
    nonpositive = frame["population"] <= 0
    if nonpositive.any():
        raise IngestError("人口必须 > 0", row=_file_row(nonpositive.idxmax()), column="population", path=str(path))
    duplicated = frame["county_id"].duplicated()
    if duplicated.any():
        raise IngestError("县重复", row=_file_row(duplicated.idxmax()), column="county_id", path=str(path))
    return frame.sort_values("county_id").reset_index(drop=True)


def load_migration(
    path: PathLike, region_ids: Sequence[str], loader: DataLoader = _default_loader
) -> MigrationMatrix:
    """
    读取迁移率 (from_region, to_region, rate)，未列出的区域对视为 0

    Raises:
        IngestError: 未知区域、自迁移或负迁移率
        ValidationError: 某一行的迁出率之和 >= 1
    """
    raw = loader.load(path)
    frame = loader.require(raw, MIGRATION_COLUMNS, path)
    frame["from_region"] = loader.identifiers(frame, "from_region", path)
    frame["to_region"] = loader.identifiers(frame, "to_region", path)
    frame["rate"] = loader.numeric(frame, "rate", path)
    _check_range(frame["rate"], "rate", path, 0.0, 1.0)
    index = {rid: i for i, rid in enumerate(region_ids)}
    rates = np.zeros((len(region_ids), len(region_ids)))
    for idx, row in frame.iterrows():
        for column in ("from_region", "to_region"):
            if row[column] not in index:
                raise IngestError(f"未知区域 {row[column]}", row=_file_row(idx), column=column, path=str(path))
        if row["from_region"] == row["to_region"]:
            raise IngestError("对角线迁移率必须为 0", row=_file_row(idx), column="to_region", path=str(path))
        rates[index[row["from_region"]], index[row["to_region"]]] = row["rate"]
    logger.info(f"已读取迁移矩阵 {path}: {len(frame)} 条")
    return MigrationMatrix(tuple(region_ids), rates)


def load_observations(path: PathLike, loader: DataLoader = _default_loader) -> pd.DataFrame:
    """
    读取校准观测 (region, week, infections, vaccinations[, vh])

    Returns:
        pd.DataFrame: 校验后的长表，按 (region, week) 排序
    """
    raw = loader.load(path)
    columns = list(OBSERVED_COLUMNS) + (["vh"] if "vh" in raw.columns else [])
    frame = loader.require(raw, columns, path)
    frame["region"] = loader.identifiers(frame, "region", path)
    frame["week"] = loader.weeks(frame, "week", path)
    for column in columns[2:]:
        frame[column] = loader.numeric(frame, column, path)
        _check_range(frame[column], column, path, 0.0, 1.0 if column == "vh" else None)
    _dense_series(frame, "region", "infections", path)
    return frame.sort_values(["region", "week"]).reset_index(drop=True)


def vh_series_frame(series: Sequence[CountySeries], first_week: int = 1) -> pd.DataFrame:
    """县级序列导出为规范排序的长表 (county_id, week, vh)"""
    rows = [
        {"county_id": s.county_id, "week": first_week + i, "vh": float(v)}
        for s in sorted(series, key=lambda s: s.county_id)
        for i, v in enumerate(s.values)
    ]
    return pd.DataFrame(rows, columns=list(VH_COLUMNS))


def region_series_frame(series: Dict[str, np.ndarray], first_week: int = 1) -> pd.DataFrame:
    """区域序列导出为长表 (region, week, vh)"""
    rows = [
        {"region": region, "week": first_week + i, "vh": float(v)}
        for region, values in series.items()
        for i, v in enumerate(values)
    ]
    return pd.DataFrame(rows, columns=list(REGION_VH_COLUMNS))
