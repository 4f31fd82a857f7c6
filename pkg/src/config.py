"""
配置管理模块
负责管理项目的所有运行期配置项，包括：
- 环境变量配置（求解器路径、时间上限、并行度）
- 数值容差配置
- 情景树与聚类默认值
- 日志配置

实验本身的参数（流行病学参数、区域、供给计划）不在这里，
而是由 src.core.loader.load_config 从 *.config 文件读取。
"""
from typing import Dict, Any, Optional, Tuple
from pathlib import Path
import os
import shutil
from dotenv import load_dotenv

# 加载环境变量文件
load_dotenv()


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name, "")
    return float(raw) if raw.strip() else default


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name, "")
    return int(raw) if raw.strip() else default


class Config:
    """项目配置类，集中管理所有配置项"""

    # 基础配置
    BASE_DIR: Path = Path(__file__).parent.parent  # 项目根目录
    DATA_DIR: Path = BASE_DIR / "data"  # 自带数据目录

    # 求解器配置
    SOLVER_PATH: str = os.getenv("VENTALLOC_SOLVER", "")  # 外部 MILP 可执行文件
    SOLVER_FORMAT: str = os.getenv("VENTALLOC_SOLVER_FORMAT", "cbc")  # 解文件格式
    TIME_LIMIT: float = _env_float("VENTALLOC_TIME_LIMIT", 3600.0)  # 秒
    MIP_GAP: float = _env_float("VENTALLOC_MIP_GAP", 1e-6)  # 相对 gap

    # 数值容差
    FEASIBILITY_TOL: float = 1e-6  # 解校验容差（按行缩放）
    OBJECTIVE_TOL: float = 1e-6  # 求解器目标与仿真目标的相对容差
    DYNAMICS_TOL: float = 1e-9  # 仓室负值容差
    PROBABILITY_TOL: float = 1e-12  # 情景概率和容差

    # 枚举求解配置
    BRUTE_FORCE_LIMIT: int = 10_000_000  # 最大可枚举分配方案数
    DEFAULT_JOBS: int = _env_int("VENTALLOC_JOBS", 1)  # 默认并行进程数

    # 情景树配置
    BRANCH_PROBABILITIES: Tuple[float, float, float] = (0.158, 0.684, 0.158)

    # 聚类配置
    CLUSTER_THRESHOLD: float = 0.4  # 平均链接的截断距离
    CLUSTER_LINKAGE: str = "average"

    # 日志配置
    LOG_LEVEL: str = os.getenv("VENTALLOC_LOG_LEVEL", "INFO")  # 日志级别
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"  # 日志格式

    SOLVER_FORMATS: Tuple[str, ...] = ("cbc", "generic")

    @classmethod
    def get_solver_config(cls) -> Dict[str, Any]:
        """
        获取求解器配置

        Returns:
            Dict[str, Any]: 包含求解器参数的字典
        """
        return {
            "path": cls.SOLVER_PATH,
            "format": cls.SOLVER_FORMAT,
            "time_limit": cls.TIME_LIMIT,
            "mip_gap": cls.MIP_GAP,
            "feasibility_tol": cls.FEASIBILITY_TOL,
            "objective_tol": cls.OBJECTIVE_TOL,
        }

    @classmethod
    def resolve_solver_path(cls, explicit: Optional[str] = None) -> Optional[str]:
        """
        按优先级查找求解器可执行文件：
        命令行参数 > VENTALLOC_SOLVER > pulp 自带 CBC > PATH 中的 cbc

        Args:
            explicit: 命令行显式指定的路径

        Returns:
            Optional[str]: 可执行文件路径，找不到时返回 None
        """
        if explicit:
            return explicit
        if cls.SOLVER_PATH:
            return cls.SOLVER_PATH
        try:
            import pulp

            bundled = pulp.PULP_CBC_CMD(msg=False)
            if bundled.available():
                return str(bundled.path)
        except Exception:  # pulp 不可用或自带 CBC 无法运行
            pass
        return shutil.which("cbc")

    @classmethod
    def validate_config(cls) -> None:
        """
        验证配置是否有效

        Raises:
            ValueError: 当配置无效时抛出异常
        """
        if cls.SOLVER_FORMAT not in cls.SOLVER_FORMATS:
            raise ValueError(
                f"VENTALLOC_SOLVER_FORMAT 必须是 {cls.SOLVER_FORMATS} 之一: {cls.SOLVER_FORMAT}"
            )
        if cls.TIME_LIMIT <= 0:
            raise ValueError(f"VENTALLOC_TIME_LIMIT 必须为正数: {cls.TIME_LIMIT}")
        if not 0 <= cls.MIP_GAP < 1:
            raise ValueError(f"VENTALLOC_MIP_GAP 必须在 [0, 1) 内: {cls.MIP_GAP}")
        if cls.DEFAULT_JOBS == 0:
            raise ValueError("VENTALLOC_JOBS 不能为 0")
