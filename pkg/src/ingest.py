"""
数据接入模块
将 TLC 行程记录聚合为连续的每日乘客数序列, 并提供训练/测试划分与日历汇总
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from errors import ValidationError
from logger import get_logger

PICKUP_COLUMN = "tpep_pickup_datetime"
COUNT_COLUMN = "passenger_count"
DAILY_COLUMNS = ["date", "passengers"]
WEEKDAYS = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"]


def _as_date(value: Any) -> date:
    """将 date / datetime / 字符串 统一转换为 date"""
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    try:
        return pd.Timestamp(value).date()
    except (ValueError, TypeError) as e:
        raise ValidationError(f"无法解析日期: {value!r}") from e


@dataclass(frozen=True)
class TripRecord:
    """单条行程记录 (只保留建模需要的两列)"""
    pickup_timestamp: datetime
    passenger_count: int

    def __post_init__(self):
        if self.passenger_count < 0:
            raise ValidationError(f"乘客数不能为负: {self.passenger_count}")


@dataclass(frozen=True)
class DateWindow:
    """闭区间日期窗口 [start, end]"""
    start: date
    end: date

    def __post_init__(self):
        object.__setattr__(self, 'start', _as_date(self.start))
        object.__setattr__(self, 'end', _as_date(self.end))
        if self.end < self.start:
            raise ValidationError(f"日期窗口为空: {self.start} > {self.end}")

    @property
    def days(self) -> int:
        return (self.end - self.start).days + 1

    def contains(self, day: date) -> bool:
        return self.start <= day <= self.end


@dataclass(frozen=True, eq=False)
class DailySeries:
    """
    连续的每日乘客数序列

    counts[i] 对应 start_date + i 天, 时间下标约定 t = i + 1
    """
    start_date: date
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'start_date', _as_date(self.start_date))
        counts = np.asarray(self.counts)
        if counts.ndim != 1:
            raise ValidationError("counts 必须是一维序列")
        if counts.size and not np.issubdtype(counts.dtype, np.integer):
            if not np.all(np.isfinite(counts)) or np.any(counts != np.round(counts)):
                raise ValidationError("乘客数必须为整数")
        counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise ValidationError("乘客数必须非负")
        counts.setflags(write=False)
        object.__setattr__(self, 'counts', counts)

    def __len__(self) -> int:
        return int(self.counts.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DailySeries):
            return NotImplemented
        return self.start_date == other.start_date and np.array_equal(self.counts, other.counts)

    __hash__ = None

    @property
    def end_date(self) -> date:
        return self.start_date + timedelta(days=len(self) - 1)

    @property
    def dates(self) -> pd.DatetimeIndex:
        return pd.date_range(self.start_date, periods=len(self), freq="D")

    @property
    def values(self) -> np.ndarray:
        """浮点形式的计数 (用于数值计算)"""
        return self.counts.astype(float)

    def time_index(self, origin: int = 1) -> np.ndarray:
        """时间下标 t = origin, origin + 1, ..."""
        return np.arange(origin, origin + len(self))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "date": [d.strftime("%Y-%m-%d") for d in self.dates],
            "passengers": self.counts,
        })

    def slice(self, start: int, stop: Optional[int] = None) -> 'DailySeries':
        """按位置切片, 保持日期对齐"""
        stop = len(self) if stop is None else stop
        return DailySeries(self.start_date + timedelta(days=start), self.counts[start:stop])

    def concat(self, other: 'DailySeries') -> 'DailySeries':
        """拼接紧随其后的序列"""
        if other.start_date != self.end_date + timedelta(days=1):
            raise ValidationError(
                f"序列不连续: {self.end_date} 之后应为 {self.end_date + timedelta(days=1)}, "
                f"实际为 {other.start_date}")
        return DailySeries(self.start_date, np.concatenate([self.counts, other.counts]))


@dataclass(frozen=True)
class SplitSeries:
    """训练/测试划分, 测试集紧跟训练集"""
    train: DailySeries
    test: DailySeries

    def __post_init__(self):
        if self.test.start_date != self.train.end_date + timedelta(days=1):
            raise ValidationError("测试集必须紧跟训练集, 不允许间隔或重叠")

    @property
    def full(self) -> DailySeries:
        return self.train.concat(self.test)


@dataclass
class IngestStats:
    """接入过程的计数器"""
    accepted: int = 0
    skipped_out_of_window: int = 0
    skipped_invalid: int = 0
    filtered_over_max: int = 0
    accepted_passengers: int = 0

    def merge(self, other: 'IngestStats') -> 'IngestStats':
        return IngestStats(
            accepted=self.accepted + other.accepted,
            skipped_out_of_window=self.skipped_out_of_window + other.skipped_out_of_window,
            skipped_invalid=self.skipped_invalid + other.skipped_invalid,
            filtered_over_max=self.filtered_over_max + other.filtered_over_max,
            accepted_passengers=self.accepted_passengers + other.accepted_passengers,
        )

    def to_dict(self) -> Dict[str, int]:
        return {
            'accepted': self.accepted,
            'skipped_out_of_window': self.skipped_out_of_window,
            'skipped_invalid': self.skipped_invalid,
            'filtered_over_max': self.filtered_over_max,
            'accepted_passengers': self.accepted_passengers,
        }


class TripAggregator:
    """按上车日期累加乘客数的聚合器 (合并满足结合律与交换律)"""

    def __init__(self, window: DateWindow, strict: bool = False,
                 max_count: Optional[int] = None):
        """
        Args:
            window: 日期窗口, 窗口外的记录被丢弃并计数
            strict: 严格模式下遇到无法解析的行直接报错
            max_count: 单条记录乘客数上限 (超过则过滤), None 表示不过滤
        """
        self.window = window
        self.strict = strict
        self.max_count = max_count
        self.totals = np.zeros(window.days, dtype=np.int64)
        self.stats = IngestStats()

    def _reject_invalid(self, description: str):
        if self.strict:
            raise ValidationError(f"无法解析的记录: {description}")
        self.stats.skipped_invalid += 1

    def add(self, record: Union[TripRecord, Tuple[Any, Any]]):
        """加入一条记录; 也接受未解析的 (时间戳, 乘客数) 二元组"""
        if isinstance(record, TripRecord):
            timestamp, count = record.pickup_timestamp, record.passenger_count
        else:
            try:
                raw_ts, raw_count = record
                timestamp = pd.Timestamp(raw_ts)
                count_value = float(raw_count)
            except (ValueError, TypeError):
                self._reject_invalid(repr(record))
                return
            if pd.isna(timestamp) or not np.isfinite(count_value) \
                    or count_value < 0 or count_value != int(count_value):
                self._reject_invalid(repr(record))
                return
            count = int(count_value)

        day = _as_date(timestamp)
        if not self.window.contains(day):
            self.stats.skipped_out_of_window += 1
            return
        if self.max_count is not None and count > self.max_count:
            self.stats.filtered_over_max += 1
            return

        self.totals[(day - self.window.start).days] += count
        self.stats.accepted += 1
        self.stats.accepted_passengers += count

    def add_frame(self, frame: pd.DataFrame, pickup_column: str = PICKUP_COLUMN,
                  count_column: str = COUNT_COLUMN):
        """向量化地加入一个 DataFrame 分块"""
        timestamps = pd.to_datetime(frame[pickup_column], errors='coerce')
        counts = pd.to_numeric(frame[count_column], errors='coerce')

        invalid = timestamps.isna() | counts.isna() | (counts < 0) | (counts % 1 != 0)
        n_invalid = int(invalid.sum())
        if n_invalid and self.strict:
            first = invalid.to_numpy().nonzero()[0][0]
            raise ValidationError(f"无法解析的记录 (分块内第 {first} 行): {frame.iloc[first].to_dict()}")
        self.stats.skipped_invalid += n_invalid

        timestamps = timestamps[~invalid]
        counts = counts[~invalid].astype(np.int64)

        offsets = (timestamps.dt.floor('D') - pd.Timestamp(self.window.start)).dt.days.to_numpy()
        in_window = (offsets >= 0) & (offsets < self.window.days)
        self.stats.skipped_out_of_window += int((~in_window).sum())

        offsets = offsets[in_window]
        counts = counts.to_numpy()[in_window]
        if self.max_count is not None:
            keep = counts <= self.max_count
            self.stats.filtered_over_max += int((~keep).sum())
            offsets, counts = offsets[keep], counts[keep]

        np.add.at(self.totals, offsets, counts)
        self.stats.accepted += int(counts.size)
        self.stats.accepted_passengers += int(counts.sum())

    def merge(self, other: 'TripAggregator') -> 'TripAggregator':
        """合并另一个同窗口聚合器的结果"""
        if other.window != self.window:
            raise ValidationError("只能合并相同日期窗口的聚合器")
        self.totals = self.totals + other.totals
        self.stats = self.stats.merge(other.stats)
        return self

    def to_series(self) -> DailySeries:
        if self.stats.accepted == 0:
            raise ValidationError(
                f"窗口 {self.window.start} ~ {self.window.end} 内没有任何有效记录")
        return DailySeries(self.window.start, self.totals.copy())


def aggregate_trips(records: Iterable[Union[TripRecord, Tuple[Any, Any]]],
                    window: DateWindow, strict: bool = False,
                    max_count: Optional[int] = None) -> DailySeries:
    """
    将行程记录聚合为每日乘客数

    Args:
        records: 行程记录流
        window: 日期窗口
        strict: 严格模式 (无法解析的行直接报错)
        max_count: 单条记录乘客数上限

    Returns:
        连续的 DailySeries, 无记录的日期计为 0
    """
    aggregator = TripAggregator(window, strict=strict, max_count=max_count)
    for record in records:
        aggregator.add(record)
    _log_stats(aggregator.stats)
    return aggregator.to_series()


def _log_stats(stats: IngestStats):
    logger = get_logger()
    logger.info(f"接受记录 {stats.accepted} 条, 乘客 {stats.accepted_passengers} 人")
    if stats.skipped_out_of_window:
        logger.warning(f"窗口外记录 {stats.skipped_out_of_window} 条已丢弃")
    if stats.skipped_invalid:
        logger.warning(f"无法解析的记录 {stats.skipped_invalid} 条已跳过")
    if stats.filtered_over_max:
        logger.warning(f"超过乘客数上限的记录 {stats.filtered_over_max} 条已过滤")


def _aggregate_file(path: str, window: DateWindow, strict: bool,
                    max_count: Optional[int], chunksize: int) -> TripAggregator:
    """聚合单个 TLC 月度文件"""
    aggregator = TripAggregator(window, strict=strict, max_count=max_count)
    reader = pd.read_csv(path, usecols=[PICKUP_COLUMN, COUNT_COLUMN], dtype=str,
                         chunksize=chunksize)
    for chunk in reader:
        aggregator.add_frame(chunk)
    return aggregator


def aggregate_trip_files(paths: Sequence[Union[str, Path]], window: DateWindow,
                         strict: bool = False, max_count: Optional[int] = None,
                         workers: int = 1, chunksize: int = 1_000_000) -> Tuple[DailySeries, IngestStats]:
    """
    聚合多个 TLC 行程文件 (可按文件并行)

    Returns:
        (每日序列, 合并后的计数器)
    """
    if not paths:
        raise ValidationError("没有找到任何输入文件")
    logger = get_logger()
    paths = sorted(str(p) for p in paths)
    missing = [p for p in paths if not Path(p).exists()]
    if missing:
        raise ValidationError(f"输入文件不存在: {missing[0]}")

    total = TripAggregator(window, strict=strict, max_count=max_count)
    if workers > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_aggregate_file, p, window, strict, max_count, chunksize)
                       for p in paths]
            for i, future in enumerate(futures, 1):
                total.merge(future.result())
                logger.progress(i, len(paths), "文件")
    else:
        for i, path in enumerate(paths, 1):
            total.merge(_aggregate_file(path, window, strict, max_count, chunksize))
            logger.progress(i, len(paths), "文件")

    _log_stats(total.stats)
    return total.to_series(), total.stats


def split_train_test(series: DailySeries, holdout_days: int) -> SplitSeries:
    """保留最后 holdout_days 天作为测试集"""
    n = len(series)
    if holdout_days < 1 or holdout_days >= n:
        raise ValidationError(f"holdout_days 必须在 [1, {n - 1}] 之间, 实际为 {holdout_days}")
    cut = n - holdout_days
    return SplitSeries(train=series.slice(0, cut), test=series.slice(cut))


def read_daily_csv(source) -> DailySeries:
    """
    读取 `date,passengers` 格式的每日汇总 CSV

    Raises:
        ValidationError: 表头不符、日期缺失 (指出缺失日期)、日期重复或未排序
    """
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, encoding='utf-8')
    except FileNotFoundError as e:
        raise ValidationError(f"输入文件不存在: {source}") from e
    except pd.errors.EmptyDataError as e:
        raise ValidationError(f"输入文件为空: {source}") from e

    if list(frame.columns) != DAILY_COLUMNS:
        raise ValidationError(f"CSV 表头必须为 {','.join(DAILY_COLUMNS)}, 实际为 {','.join(frame.columns)}")
    if frame.empty:
        raise ValidationError("CSV 不包含任何数据行")

    dates = pd.to_datetime(frame["date"].str.strip(), format="%Y-%m-%d", errors='coerce')
    if dates.isna().any():
        bad = frame["date"][dates.isna()].iloc[0]
        raise ValidationError(f"无法解析的日期: {bad!r}")
    passengers = pd.to_numeric(frame["passengers"].str.strip(), errors='coerce')
    if passengers.isna().any() or (passengers % 1 != 0).any():
        bad = frame["passengers"][passengers.isna() | (passengers % 1 != 0)].iloc[0]
        raise ValidationError(f"乘客数必须为整数: {bad!r}")

    steps = dates.diff().dt.days.to_numpy()[1:]
    for i, step in enumerate(steps, 1):
        if step == 1:
            continue
        previous = dates.iloc[i - 1].date()
        if step == 0:
            raise ValidationError(f"日期重复: {previous.isoformat()}")
        if step < 0:
            raise ValidationError(f"日期未按升序排列: {dates.iloc[i].date()} 位于 {previous} 之后")
        raise ValidationError(f"日期缺失: {(previous + timedelta(days=1)).isoformat()}")

    return DailySeries(dates.iloc[0].date(), passengers.to_numpy().astype(np.int64))


def write_daily_csv(series: DailySeries, sink):
    """写出 `date,passengers` 格式的每日汇总 CSV"""
    series.to_frame().to_csv(sink, index=False, lineterminator="\n", encoding='utf-8')


@dataclass
class CalendarReport:
    """日历维度的汇总 (年/月/星期/极值日期)"""
    grand_total: int
    yearly: Dict[int, int]
    monthly: Dict[int, int]
    year_month: Dict[str, int]
    weekday: Dict[str, int]
    top: List[Tuple[date, int]] = field(default_factory=list)
    bottom: List[Tuple[date, int]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'grand_total': self.grand_total,
            'yearly': {str(k): v for k, v in self.yearly.items()},
            'monthly': {str(k): v for k, v in self.monthly.items()},
            'year_month': dict(self.year_month),
            'weekday': dict(self.weekday),
            'top': [{'date': d.isoformat(), 'passengers': c} for d, c in self.top],
            'bottom': [{'date': d.isoformat(), 'passengers': c} for d, c in self.bottom],
        }


def calendar_aggregates(series: DailySeries, k: int = 10) -> CalendarReport:
    """
    按年、月、星期汇总乘客数, 并列出乘客最多/最少的 k 天

    各维度的汇总都精确划分总数
    """
    if len(series) == 0:
        raise ValidationError("序列为空")
    dates = series.dates
    counts = pd.Series(series.counts, index=dates)

    def _totals(keys) -> Dict[Any, int]:
        grouped = counts.groupby(keys).sum()
        return {(int(key) if isinstance(key, np.integer) else key): int(value)
                for key, value in grouped.items()}

    weekday_totals = _totals(dates.dayofweek)
    order = np.argsort(-series.counts, kind='stable')
    ascending = np.argsort(series.counts, kind='stable')
    day_list = [d.date() for d in dates]

    return CalendarReport(
        grand_total=int(series.counts.sum()),
        yearly=_totals(dates.year),
        monthly=_totals(dates.month),
        year_month=_totals(dates.strftime("%Y-%m")),
        weekday={name: weekday_totals.get(i, 0) for i, name in enumerate(WEEKDAYS)},
        top=[(day_list[i], int(series.counts[i])) for i in order[:k]],
        bottom=[(day_list[i], int(series.counts[i])) for i in ascending[:k]],
    )
