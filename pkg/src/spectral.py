"""
谱分析模块
去趋势残差的功率谱估计 (平滑周期图与 AR 谱) 以及主导周期检测
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional

import numpy as np
from scipy.ndimage import uniform_filter1d

from errors import ValidationError
from logger import get_logger
from stats_core import SeriesLike, as_array, autocovariance, durbin_levinson

MIN_PERIODOGRAM_OBS = 8


class EstimatorKind(Enum):
    """谱估计方法"""
    RAW = "raw"
    DANIELL = "daniell"
    AR = "ar"


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """频率网格 (cycles/day) 上的功率谱, 带有估计方法标签"""
    frequencies: np.ndarray
    power: np.ndarray
    kind: EstimatorKind
    parameter: Optional[int]
    n_obs: int

    def __post_init__(self):
        frequencies = np.array(self.frequencies, dtype=float)
        power = np.array(self.power, dtype=float)
        if frequencies.shape != power.shape or frequencies.ndim != 1:
            raise ValidationError("频率与功率的长度必须一致")
        if frequencies.size > 1 and np.any(np.diff(frequencies) <= 0):
            raise ValidationError("频率必须严格递增")
        if np.any(power < 0):
            raise ValidationError("功率必须非负")
        frequencies.setflags(write=False)
        power.setflags(write=False)
        object.__setattr__(self, 'frequencies', frequencies)
        object.__setattr__(self, 'power', power)

    def __len__(self) -> int:
        return int(self.power.size)

    @property
    def label(self) -> str:
        if self.kind is EstimatorKind.RAW:
            return "raw"
        return f"{self.kind.value}({self.parameter})"

    @property
    def periods(self) -> np.ndarray:
        return 1.0 / self.frequencies

    def to_rows(self) -> List[Dict[str, float]]:
        return [{'frequency': float(f), 'period': float(1.0 / f), 'power': float(p)}
                for f, p in zip(self.frequencies, self.power)]


def fourier_frequencies(n: int) -> np.ndarray:
    """傅里叶频率 j/n, j = 1..floor(n/2)"""
    return np.arange(1, n // 2 + 1) / n


def periodogram(x: SeriesLike) -> SpectralDensity:
    """
    原始周期图 I(f_j) = |sum_t x_t exp(-2 pi i f_j t)|^2 / n

    序列先去均值。Parseval 恒等式:
        (1/n) * sum_j w_j I(f_j) = (1/n) * sum_t (x_t - mean)^2
    其中 w_j = 2, 但 n 为偶数时 Nyquist 频率 (j = n/2) 处 w_j = 1。
    """
    values = as_array(x)
    n = values.size
    if n < MIN_PERIODOGRAM_OBS:
        raise ValidationError(f"周期图至少需要 {MIN_PERIODOGRAM_OBS} 个点, 实际为 {n}")

    transform = np.fft.rfft(values - values.mean())
    power = np.abs(transform[1:n // 2 + 1]) ** 2 / n
    return SpectralDensity(fourier_frequencies(n), power, EstimatorKind.RAW, None, n)


def parseval_weights(n: int) -> np.ndarray:
    """单边周期图的 Parseval 权重"""
    weights = np.full(n // 2, 2.0)
    if n % 2 == 0:
        weights[-1] = 1.0
    return weights


def variance_from_periodogram(s: SpectralDensity) -> float:
    """由原始周期图还原样本方差 (除以 n)"""
    if s.kind is not EstimatorKind.RAW:
        raise ValidationError("只有原始周期图满足 Parseval 恒等式")
    return float(parseval_weights(s.n_obs) @ s.power / s.n_obs)


def daniell_smooth(s: SpectralDensity, span: int) -> SpectralDensity:
    """
    Daniell 窗平滑: 每个纵坐标替换为相邻 span 个纵坐标的均值

    边界采用镜像反射 (边界点重复), 常数谱保持不变
    """
    if s.kind is not EstimatorKind.RAW:
        raise ValidationError(f"Daniell 平滑只作用于原始周期图, 实际为 {s.label}")
    if span < 1 or span % 2 == 0:
        raise ValidationError(f"span 必须为正奇数, 实际为 {span}")
    if span > len(s):
        raise ValidationError(f"span ({span}) 超过周期图长度 ({len(s)})")

    smoothed = uniform_filter1d(s.power, size=span, mode='reflect')
    return SpectralDensity(s.frequencies, np.maximum(smoothed, 0.0),
                           EstimatorKind.DANIELL, span, s.n_obs)


def ar_spectrum(x: SeriesLike, max_order: int) -> SpectralDensity:
    """
    AR 谱估计

    对 k = 0..max_order 用 Yule-Walker 拟合 AR(k), 选 AIC = n ln(sigma2_k) + 2k 最小者,
    在周期图的同一频率网格上计算 f(v) = sigma2 / |1 - sum_j phi_j exp(-2 pi i v j)|^2
    """
    values = as_array(x)
    n = values.size
    if max_order < 1:
        raise ValidationError(f"max_order 必须为正整数, 实际为 {max_order}")
    if n <= max_order or n < MIN_PERIODOGRAM_OBS:
        raise ValidationError(f"样本量 ({n}) 必须大于 max_order ({max_order}) 且至少为 {MIN_PERIODOGRAM_OBS}")

    gamma = autocovariance(values, max_order)
    if not gamma[0] > 0:
        raise ValidationError("序列方差为零, 无法估计 AR 谱")
    fits = durbin_levinson(gamma, max_order)

    orders = np.arange(max_order + 1)
    aic = n * np.log(fits.sigma2) + 2 * orders
    order = int(np.argmin(aic))
    phi = fits.phi[order]
    sigma2 = float(fits.sigma2[order])
    get_logger().debug(f"AR 谱选定阶数 {order} (AIC = {aic[order]:.2f})")

    frequencies = fourier_frequencies(n)
    lags = np.arange(1, order + 1)
    response = 1.0 - np.exp(-2j * np.pi * np.outer(frequencies, lags)) @ phi
    power = sigma2 / np.abs(response) ** 2
    return SpectralDensity(frequencies, power, EstimatorKind.AR, order, n)


@dataclass(frozen=True)
class SpectralPeak:
    """谱峰"""
    period: int
    frequency: float
    power: float

    @property
    def exact_period(self) -> float:
        return 1.0 / self.frequency


@dataclass
class PeakSet:
    """按功率降序排列的谱峰集合 (周期唯一)"""
    peaks: List[SpectralPeak] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.peaks)

    def __iter__(self) -> Iterator[SpectralPeak]:
        return iter(self.peaks)

    @property
    def periods(self) -> List[int]:
        return [p.period for p in self.peaks]

    def to_dict(self) -> List[Dict[str, Any]]:
        return [{'period': p.period, 'exact_period': p.exact_period,
                 'frequency': p.frequency, 'power': p.power} for p in self.peaks]


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def _refine_peak(s: SpectralDensity, i: int) -> float:
    """
    用相邻三点估计网格点之间的峰值频率

    原始周期图按矩形窗核用幅值比插值, 平滑谱和 AR 谱用抛物线插值
    """
    a, b, c = s.power[i - 1], s.power[i], s.power[i + 1]
    if s.kind is EstimatorKind.RAW:
        ratio = math.sqrt(max(a, c) / b)
        delta = ratio / (1.0 + ratio) * (-1.0 if a > c else 1.0)
    else:
        delta = 0.5 * (a - c) / (a - 2.0 * b + c)
    step = 0.5 * (s.frequencies[i + 1] - s.frequencies[i - 1])
    return float(s.frequencies[i] + delta * step)


def dominant_periods(s: SpectralDensity, k: int, min_separation: Optional[float] = None,
                     refine: bool = True) -> PeakSet:
    """
    检测功率最大的 k 个局部极大值

    Args:
        s: 谱密度
        k: 需要的峰数
        min_separation: 峰之间的最小频率间隔, 默认 2/n
        refine: 是否在网格点之间插值定位峰值频率

    Returns:
        PeakSet; 局部极大值不足 k 个时返回全部
    """
    if len(s) == 0:
        raise ValidationError("谱密度为空")
    if k < 1:
        raise ValidationError(f"k 必须为正整数, 实际为 {k}")
    if min_separation is None:
        min_separation = 2.0 / s.n_obs

    power = s.power
    interior = np.nonzero((power[1:-1] > power[:-2]) & (power[1:-1] > power[2:]))[0] + 1
    candidates = sorted(interior.tolist(), key=lambda i: (-power[i], i))

    peaks: List[SpectralPeak] = []
    for i in candidates:
        frequency = _refine_peak(s, i) if refine else float(s.frequencies[i])
        if any(abs(frequency - p.frequency) < min_separation for p in peaks):
            continue
        period = _round_half_up(1.0 / frequency)
        if any(p.period == period for p in peaks):
            continue
        peaks.append(SpectralPeak(period=period, frequency=frequency, power=float(power[i])))
        if len(peaks) == k:
            break

    return PeakSet(peaks)
