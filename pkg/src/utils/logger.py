import logging
from typing import Optional, Union
from ..config import Config

_ROOT = "src"


def setup_logger(name: Optional[str] = None) -> logging.Logger:
    """
    设置日志记录器

    所有模块的记录器都挂在 "src" 之下，处理器只加在根记录器上，
    这样 set_log_level 可以一次调整整个包的级别。

    Args:
        name: 日志记录器名称（通常传 __name__）

    Returns:
        logging.Logger: 配置好的日志记录器
    """
    root = logging.getLogger(_ROOT)

    if not root.handlers:
        root.setLevel(Config.LOG_LEVEL)

        # 创建控制台处理器
        console_handler = logging.StreamHandler()
        console_handler.setLevel(logging.DEBUG)

        # 创建格式化器
        formatter = logging.Formatter(Config.LOG_FORMAT)
        console_handler.setFormatter(formatter)

        # 添加处理器到日志记录器
        root.addHandler(console_handler)

    return logging.getLogger(name or _ROOT)


def set_log_level(level: Union[str, int]) -> None:
    """
    调整整个包的日志级别

    Args:
        level: 日志级别名称或数值
    """
    setup_logger().setLevel(level.upper() if isinstance(level, str) else level)
