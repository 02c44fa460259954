"""
周期分解模块
按相位均值依次移除周期分量, 并可在任意时间下标重建周期值
"""
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from errors import ValidationError
from logger import get_logger
from stats_core import ResidualSeries


@dataclass(frozen=True, eq=False)
class CycleProfile:
    """
    单个周期分量

    phase_means[k] 为相位 k 的均值, 时间下标 t 的相位为 (t - 1) mod period
    """
    period: int
    phase_means: np.ndarray

    def __post_init__(self):
        if self.period < 2:
            raise ValidationError(f"周期必须 >= 2, 实际为 {self.period}")
        means = np.array(self.phase_means, dtype=float)
        if means.shape != (self.period,):
            raise ValidationError(
                f"相位均值长度 ({means.size}) 与周期 ({self.period}) 不一致")
        means.setflags(write=False)
        object.__setattr__(self, 'phase_means', means)

    def value_at(self, t) -> np.ndarray:
        """时间下标 t 处的周期值"""
        index = np.asarray(t)
        return self.phase_means[(index - 1) % self.period]

    @property
    def amplitude(self) -> float:
        return float(self.phase_means.max() - self.phase_means.min())


@dataclass
class CycleSet:
    """按周期严格递增排列的周期分量集合"""
    profiles: List[CycleProfile] = field(default_factory=list)

    def __post_init__(self):
        periods = self.periods
        if any(b <= a for a, b in zip(periods, periods[1:])):
            raise ValidationError(f"周期必须严格递增: {periods}")

    def __len__(self) -> int:
        return len(self.profiles)

    def __iter__(self) -> Iterator[CycleProfile]:
        return iter(self.profiles)

    @property
    def periods(self) -> List[int]:
        return [c.period for c in self.profiles]

    @property
    def lcm(self) -> int:
        """合成周期信号的基本周期"""
        return math.lcm(*self.periods) if self.profiles else 1

    def value_at(self, t):
        return cycle_value_at(self, t)


def _check_times(t) -> np.ndarray:
    index = np.asarray(t)
    if index.size and not np.issubdtype(index.dtype, np.integer):
        if not np.all(np.equal(np.mod(index, 1), 0)):
            raise ValidationError("时间下标必须是整数")
        index = index.astype(np.int64)
    if index.size and index.min() < 1:
        raise ValidationError(f"时间下标必须 >= 1, 实际最小值为 {int(index.min())}")
    return index


def extract_cycle(x: ResidualSeries, period: int) -> CycleProfile:
    """
    计算各相位的均值

    Args:
        x: 残差序列 (相位由 origin_index 对齐到 t = 1)
        period: 周期长度, 2 <= period <= len(x)

    Returns:
        CycleProfile
    """
    n = len(x)
    if period < 2 or period > n:
        raise ValidationError(f"周期必须在 [2, {n}] 之间, 实际为 {period}")

    phases = (x.index - 1) % period
    sums = np.bincount(phases, weights=x.values, minlength=period)
    counts = np.bincount(phases, minlength=period)
    return CycleProfile(period, sums / counts)


def remove_cycle(x: ResidualSeries, c: CycleProfile) -> ResidualSeries:
    """减去周期分量"""
    return x.with_values(x.values - c.value_at(x.index))


def _sorted_periods(periods: Sequence[int]) -> List[int]:
    if len(periods) == 0:
        raise ValidationError("周期列表不能为空")
    ordered = sorted(int(p) for p in periods)
    duplicates = sorted({p for p in ordered if ordered.count(p) > 1})
    if duplicates:
        raise ValidationError(f"周期列表存在重复: {duplicates}")
    return ordered


def iter_cycle_removal(x: ResidualSeries,
                       periods: Sequence[int]) -> Iterator[Tuple[CycleProfile, ResidualSeries]]:
    """按周期升序逐个移除, 每一步产出 (周期分量, 移除后的残差)"""
    logger = get_logger()
    current = x
    for period in _sorted_periods(periods):
        profile = extract_cycle(current, period)
        before = float(np.var(current.values))
        current = remove_cycle(current, profile)
        logger.debug(f"移除周期 {period}: 方差 {before:.4g} -> {float(np.var(current.values)):.4g}")
        yield profile, current


def remove_cycles_sequential(x: ResidualSeries,
                             periods: Sequence[int]) -> Tuple[ResidualSeries, CycleSet]:
    """
    依次移除多个周期

    Returns:
        (最终残差, CycleSet)
    """
    profiles: List[CycleProfile] = []
    current = x
    for profile, current in iter_cycle_removal(x, periods):
        profiles.append(profile)
    return current, CycleSet(profiles)


def cycle_value_at(cs: CycleSet, t):
    """
    各周期分量在时间下标 t 处的和

    t 可以是标量或数组 (t >= 1); 空集合返回 0
    """
    index = _check_times(t)
    total = np.zeros(index.shape, dtype=float)
    for profile in cs:
        total = total + profile.value_at(index)
    if total.ndim == 0:
        return float(total)
    return total
