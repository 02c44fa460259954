"""
核心统计模块
线性趋势 (OLS)、去趋势、ACF/PACF (Durbin-Levinson) 与 ADF 单位根检验
"""
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Union

import numpy as np
from scipy import stats

from errors import ComputationError, ValidationError
from ingest import DailySeries
from logger import get_logger

# Dickey-Fuller 临界值表 (含趋势项), 行: 样本量, 列: 分位点
DF_TABLE_SIZES = np.array([25.0, 50.0, 100.0, 250.0, 500.0, 100000.0])
DF_TABLE_PROBS = np.array([0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99])
DF_TABLE = -np.array([
    [4.38, 3.95, 3.60, 3.24, 1.14, 0.80, 0.50, 0.15],
    [4.15, 3.80, 3.50, 3.18, 1.19, 0.87, 0.58, 0.24],
    [4.04, 3.73, 3.45, 3.15, 1.22, 0.90, 0.62, 0.28],
    [3.99, 3.69, 3.43, 3.13, 1.23, 0.92, 0.64, 0.31],
    [3.98, 3.68, 3.42, 3.13, 1.24, 0.93, 0.65, 0.32],
    [3.96, 3.66, 3.41, 3.12, 1.25, 0.94, 0.66, 0.33],
])

ADF_MIN_OBS = 25


@dataclass(frozen=True, eq=False)
class ResidualSeries:
    """
    残差序列

    origin_index 是第一个元素对应的时间下标 t, 划分之后相位计算依然对齐
    """
    values: np.ndarray
    origin_index: int = 1

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise ValidationError("残差序列必须是一维的")
        if self.origin_index < 1:
            raise ValidationError(f"origin_index 必须 >= 1, 实际为 {self.origin_index}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def index(self) -> np.ndarray:
        """每个元素对应的时间下标 t"""
        return np.arange(self.origin_index, self.origin_index + len(self))

    @property
    def end_index(self) -> int:
        return self.origin_index + len(self) - 1

    def with_values(self, values: np.ndarray) -> 'ResidualSeries':
        """保持时间下标, 替换取值"""
        return ResidualSeries(values, self.origin_index)


SeriesLike = Union[ResidualSeries, np.ndarray, List[float]]


def as_array(x: SeriesLike) -> np.ndarray:
    """取出浮点数组"""
    if isinstance(x, ResidualSeries):
        return x.values
    if isinstance(x, DailySeries):
        return x.values
    return np.asarray(x, dtype=float)


def _ratio(estimate: float, se: float) -> float:
    if se > 0:
        return estimate / se
    if estimate == 0:
        return 0.0
    return math.copysign(math.inf, estimate)


def _finite_or_none(value: float):
    return float(value) if math.isfinite(value) else None


@dataclass(frozen=True)
class TrendModel:
    """线性趋势 count = intercept + slope * t 的 OLS 结果"""
    intercept: float
    slope: float
    intercept_se: float
    slope_se: float
    intercept_t: float
    slope_t: float
    intercept_p: float
    slope_p: float
    residual_se: float
    n: int

    def predict(self, t) -> np.ndarray:
        """趋势值, t 可以是标量或数组"""
        return self.intercept + self.slope * np.asarray(t, dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'intercept': self.intercept,
            'slope': self.slope,
            'intercept_se': self.intercept_se,
            'slope_se': self.slope_se,
            'intercept_t': _finite_or_none(self.intercept_t),
            'slope_t': _finite_or_none(self.slope_t),
            'intercept_p': _finite_or_none(self.intercept_p),
            'slope_p': _finite_or_none(self.slope_p),
            'residual_se': self.residual_se,
            'n': self.n,
        }


def fit_linear_trend(series: DailySeries) -> TrendModel:
    """
    以 t = 1..n 为自变量做带截距的 OLS

    Args:
        series: 每日序列 (至少 3 个点)

    Returns:
        TrendModel (经典 OLS 标准误)
    """
    n = len(series)
    if n < 3:
        raise ValidationError(f"拟合线性趋势至少需要 3 个点, 实际为 {n}")

    t = series.time_index().astype(float)
    y = series.values
    fit = stats.linregress(t, y)

    df = n - 2
    residuals = y - (fit.intercept + fit.slope * t)
    residual_se = float(np.sqrt(np.sum(residuals ** 2) / df))

    intercept_t = _ratio(fit.intercept, fit.intercept_stderr)
    slope_t = _ratio(fit.slope, fit.stderr)

    return TrendModel(
        intercept=float(fit.intercept),
        slope=float(fit.slope),
        intercept_se=float(fit.intercept_stderr),
        slope_se=float(fit.stderr),
        intercept_t=intercept_t,
        slope_t=slope_t,
        intercept_p=float(2 * stats.t.sf(abs(intercept_t), df)),
        slope_p=float(2 * stats.t.sf(abs(slope_t), df)),
        residual_se=residual_se,
        n=n,
    )


def detrend(series: DailySeries, trend: TrendModel, origin_index: int = 1) -> ResidualSeries:
    """residual[t] = count[t] - (intercept + slope * t)"""
    t = series.time_index(origin_index)
    return ResidualSeries(series.values - trend.predict(t), origin_index)


@dataclass(frozen=True, eq=False)
class CorrelogramResult:
    """自相关/偏自相关函数"""
    lags: np.ndarray
    values: np.ndarray
    kind: str
    n_obs: int

    @property
    def band(self) -> float:
        """白噪声的 95% 置信带半宽"""
        return 1.96 / math.sqrt(self.n_obs)

    def to_rows(self) -> List[Dict[str, float]]:
        return [{'lag': int(h), self.kind: float(v)} for h, v in zip(self.lags, self.values)]

    def to_dict(self) -> Dict[str, Any]:
        return {'lags': self.lags.tolist(), 'values': self.values.tolist(), 'band': self.band}


def autocovariance(x: SeriesLike, max_lag: int) -> np.ndarray:
    """有偏 (除以 n) 的样本自协方差, 滞后 0..max_lag"""
    values = as_array(x)
    n = values.size
    if max_lag < 0 or max_lag >= n:
        raise ValidationError(f"max_lag 必须在 [0, {n - 1}] 之间, 实际为 {max_lag}")
    centered = values - values.mean()
    full = np.correlate(centered, centered, mode='full')
    return full[n - 1:n + max_lag] / n


def _checked_autocovariance(x: SeriesLike, max_lag: int) -> np.ndarray:
    values = as_array(x)
    if max_lag < 1:
        raise ValidationError(f"max_lag 必须为正整数, 实际为 {max_lag}")
    gamma = autocovariance(values, max_lag)
    scale = np.finfo(float).eps * max(1.0, float(np.max(np.abs(values))))
    if not np.isfinite(gamma[0]) or gamma[0] <= scale ** 2:
        raise ValidationError("序列方差为零, 无法计算相关函数")
    return gamma


def acf(x: SeriesLike, max_lag: int) -> CorrelogramResult:
    """样本自相关函数 (除以 n 的有偏估计)"""
    gamma = _checked_autocovariance(x, max_lag)
    values = np.clip(gamma / gamma[0], -1.0, 1.0)
    values[0] = 1.0
    return CorrelogramResult(np.arange(max_lag + 1), values, 'acf', len(as_array(x)))


@dataclass(frozen=True, eq=False)
class DurbinLevinsonResult:
    """各阶 AR 的 Yule-Walker 解"""
    phi: List[np.ndarray]
    partial: np.ndarray
    sigma2: np.ndarray


def durbin_levinson(autocov: np.ndarray, order: int) -> DurbinLevinsonResult:
    """
    Durbin-Levinson 递推

    Args:
        autocov: 滞后 0..order 的自协方差 (或自相关)
        order: 最高阶数

    Returns:
        phi[k] 为 AR(k) 系数 (长度 k), partial[k] 为 k 阶偏自相关, sigma2[k] 为预测方差
    """
    r = np.asarray(autocov, dtype=float)
    if r.size < order + 1:
        raise ValidationError(f"自协方差长度不足: 需要 {order + 1}, 实际为 {r.size}")

    sigma2 = np.zeros(order + 1)
    partial = np.zeros(order + 1)
    partial[0] = 1.0
    sigma2[0] = r[0]
    phi: List[np.ndarray] = [np.zeros(0)]

    for k in range(1, order + 1):
        if not sigma2[k - 1] > 0:
            raise ComputationError(f"Durbin-Levinson 递推在第 {k} 阶失效: 预测方差 <= 0")
        previous = phi[-1]
        a = (r[k] - previous @ r[k - 1:0:-1]) / sigma2[k - 1]
        current = np.empty(k)
        current[:k - 1] = previous - a * previous[::-1]
        current[k - 1] = a
        phi.append(current)
        partial[k] = a
        sigma2[k] = sigma2[k - 1] * (1.0 - a * a)

    return DurbinLevinsonResult(phi=phi, partial=partial, sigma2=sigma2)


def pacf(x: SeriesLike, max_lag: int) -> CorrelogramResult:
    """样本偏自相关函数 (基于 ACF 的 Durbin-Levinson 递推), pacf(1) = acf(1)"""
    gamma = _checked_autocovariance(x, max_lag)
    result = durbin_levinson(gamma / gamma[0], max_lag)
    return CorrelogramResult(np.arange(max_lag + 1), result.partial, 'pacf', len(as_array(x)))


@dataclass(frozen=True)
class AdfResult:
    """ADF 检验结果"""
    statistic: float
    lag_order: int
    p_value: float
    clamped: bool
    n_obs: int
    critical_values: Dict[str, float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'statistic': self.statistic,
            'lag_order': self.lag_order,
            'p_value': self.p_value,
            'clamped': self.clamped,
            'p_value_display': f"<= {self.p_value:.2f} (clamped)" if self.clamped and self.p_value < 0.5
            else (f">= {self.p_value:.2f} (clamped)" if self.clamped else f"{self.p_value:.4f}"),
            'n_obs': self.n_obs,
            'critical_values': dict(self.critical_values),
        }


def adf_test(x: SeriesLike, lag_order: int = None) -> AdfResult:
    """
    含趋势项的增广 Dickey-Fuller 检验

    回归 Δx_t ~ 1 + t + x_{t-1} + Δx_{t-1} + ... + Δx_{t-k},
    默认 k = trunc((n-1)^(1/3)); p 值在临界值表中按 (样本量, 统计量) 插值并截断到 [0.01, 0.99]
    """
    values = as_array(x)
    nx = values.size
    if nx < ADF_MIN_OBS:
        raise ValidationError(f"ADF 检验至少需要 {ADF_MIN_OBS} 个点, 实际为 {nx}")
    k = int(math.trunc((nx - 1) ** (1.0 / 3.0))) if lag_order is None else int(lag_order)
    if k < 0:
        raise ValidationError(f"lag_order 不能为负: {k}")

    diffs = np.diff(values)
    n = diffs.size
    kk = k + 1
    rows = n - kk + 1
    n_columns = 3 + k
    if rows <= n_columns + 1:
        raise ValidationError(f"滞后 {k} 阶后剩余样本不足 ({rows} 行, {n_columns} 个回归量)")

    columns = [np.ones(rows), values[kk - 1:n], np.arange(kk, n + 1, dtype=float)]
    columns += [diffs[kk - 1 - j:n - j] for j in range(1, k + 1)]
    design = np.column_stack(columns)
    target = diffs[kk - 1:]

    beta, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < n_columns:
        raise ComputationError("ADF 回归的设计矩阵奇异")
    residuals = target - design @ beta
    sigma2 = residuals @ residuals / (rows - n_columns)
    covariance = sigma2 * np.linalg.inv(design.T @ design)
    se = math.sqrt(covariance[1, 1])
    if not se > 0:
        raise ComputationError("ADF 统计量的标准误为零 (序列可能是确定性的)")
    statistic = float(beta[1] / se)

    interpolated = np.array([np.interp(n, DF_TABLE_SIZES, DF_TABLE[:, j])
                             for j in range(DF_TABLE_PROBS.size)])
    p_value = float(np.interp(statistic, interpolated, DF_TABLE_PROBS))
    clamped = statistic <= interpolated[0] or statistic >= interpolated[-1]
    if clamped:
        get_logger().warning(f"ADF p 值超出临界值表范围, 已截断为 {p_value:.2f}")

    return AdfResult(
        statistic=statistic,
        lag_order=k,
        p_value=p_value,
        clamped=bool(clamped),
        n_obs=int(rows),
        critical_values={'1%': float(interpolated[0]), '5%': float(interpolated[2]),
                         '10%': float(interpolated[3])},
    )


def rmse(pred, actual) -> float:
    """均方根误差; 长度不一致或为空时报错"""
    predicted = np.asarray(pred, dtype=float)
    observed = np.asarray(actual, dtype=float)
    if predicted.shape != observed.shape:
        raise ValidationError(f"预测与实际长度不一致: {predicted.size} vs {observed.size}")
    if predicted.size == 0:
        raise ValidationError("无法对空序列计算 RMSE")
    return float(np.sqrt(np.mean((predicted - observed) ** 2)))
