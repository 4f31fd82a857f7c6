"""
分配公平性模式

- Utilitarian: 不加公平约束
- EquityK: 各区域期望重症占用份额与人口份额之差不超过 k，只累计 t >= t' 的期间
- ProportionalZeta: 每阶段期望分配至少为人口份额 × ζ × Δ_j
- Equal: 每阶段期望分配至少为 ⌊Δ_j / |R|⌋
"""
from dataclasses import dataclass
from typing import Union

from ..utils.errors import ValidationError


@dataclass(frozen=True)
class Utilitarian:
    def label(self) -> str:
        return "utilitarian"


@dataclass(frozen=True)
class EquityK:
    k: float
    active_from_t_prime: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.k <= 1.0:
            raise ValidationError("fairness.k", "必须在 (0, 1] 内", self.k)
        if int(self.active_from_t_prime) < 1:
            raise ValidationError("fairness.t_prime", "必须 >= 1", self.active_from_t_prime)

    def label(self) -> str:
        if self.active_from_t_prime == 1:
            return f"k={self.k:g}"
        return f"k={self.k:g},t={self.active_from_t_prime}"


@dataclass(frozen=True)
class ProportionalZeta:
    zeta: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.zeta <= 1.0:
            raise ValidationError("fairness.zeta", "必须在 [0, 1] 内", self.zeta)

    def label(self) -> str:
        return f"zeta={self.zeta:g}"


@dataclass(frozen=True)
class Equal:
    def label(self) -> str:
        return "equal"


FairnessMode = Union[Utilitarian, EquityK, ProportionalZeta, Equal]


def parse_fairness(text: str) -> FairnessMode:
    """
    解析命令行形式的公平性模式

    支持 "utilitarian"、"equal"、"k=0.1"、"k=0.1,t=9"、"zeta=0.8"。

    Raises:
        ValidationError: 无法识别或取值越界
    """
    raw = (text or "utilitarian").strip().lower()
    if raw in ("utilitarian", "none"):
        return Utilitarian()
    if raw == "equal":
        return Equal()
    try:
        parts = dict(item.split("=", 1) for item in raw.split(","))
    except ValueError:
        raise ValidationError("fairness", "格式应为 utilitarian | equal | k=..[,t=..] | zeta=..", text)
    try:
        if set(parts) <= {"k", "t"} and "k" in parts:
            return EquityK(float(parts["k"]), int(parts.get("t", 1)))
        if set(parts) == {"zeta"}:
            return ProportionalZeta(float(parts["zeta"]))
    except ValueError as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError("fairness", f"数值无法解析: {e}", text)
    raise ValidationError("fairness", "格式应为 utilitarian | equal | k=..[,t=..] | zeta=..", text)
