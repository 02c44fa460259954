"""cyclecast 命令行入口"""
import argparse
import glob
import io
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

# Windows 编码修复
if sys.platform == 'win32':
    sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding='utf-8', errors='replace', line_buffering=True)
    sys.stderr = io.TextIOWrapper(sys.stderr.buffer, encoding='utf-8', errors='replace', line_buffering=True)

import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from arma import ArmaSpec, FitOptions, GridResult, fit_arma, grid_search  # noqa: E402
from config import PipelineConfig  # noqa: E402
from cycles import iter_cycle_removal  # noqa: E402
from errors import CycleCastError, ValidationError  # noqa: E402
from ingest import (DateWindow, aggregate_trip_files, calendar_aggregates,  # noqa: E402
                    read_daily_csv, split_train_test, write_daily_csv)
from logger import get_logger, set_color, set_verbose  # noqa: E402
from pipeline import EvaluationReport, run_pipeline  # noqa: E402
from spectral import (SpectralDensity, ar_spectrum, daniell_smooth,  # noqa: E402
                      dominant_periods, periodogram)
from stats_core import (CorrelogramResult, ResidualSeries, acf, adf_test, detrend,  # noqa: E402
                        fit_linear_trend, pacf)
from visualizer import HeatmapData, ReportPrinter, VisualizationOptions, emit_plot, to_csv, to_json  # noqa: E402

__version__ = "1.0.0"

RESIDUAL_COLUMNS = ["t", "value"]


# ---------------------------------------------------------------------------
# 文件读写
# ---------------------------------------------------------------------------

def write_atomic(path: Union[str, Path], payload: Union[str, bytes]):
    """写入同目录下的临时文件, 成功后重命名为目标文件"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    data = payload.encode('utf-8') if isinstance(payload, str) else payload
    fd, temp_name = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(temp_name, target)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise


def read_residual_csv(path: Union[str, Path]) -> ResidualSeries:
    """读取 `t,value` 格式的残差 CSV, t 必须连续递增"""
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError as e:
        raise ValidationError(f"输入文件不存在: {path}") from e
    except pd.errors.EmptyDataError as e:
        raise ValidationError(f"输入文件为空: {path}") from e
    if list(frame.columns) != RESIDUAL_COLUMNS:
        raise ValidationError(f"残差 CSV 表头必须为 t,value, 实际为 {','.join(map(str, frame.columns))}")
    if frame.empty:
        raise ValidationError("残差 CSV 不包含任何数据行")
    t = pd.to_numeric(frame['t'], errors='coerce').to_numpy()
    values = pd.to_numeric(frame['value'], errors='coerce').to_numpy(dtype=float)
    if np.isnan(t).any() or np.isnan(values).any():
        raise ValidationError("残差 CSV 含有无法解析的数值")
    if np.any(np.diff(t) != 1) or t[0] < 1 or t[0] % 1:
        raise ValidationError("时间下标 t 必须是从正整数开始连续递增的整数")
    return ResidualSeries(values, int(t[0]))


def residual_csv(x: ResidualSeries) -> str:
    return to_csv([{'t': int(t), 'value': float(v)} for t, v in zip(x.index, x.values)],
                  RESIDUAL_COLUMNS)


def spectrum_csv(s: SpectralDensity) -> str:
    return to_csv(s.to_rows(), ['frequency', 'period', 'power'])


class PendingOutputs:
    """
    子命令的输出集合

    文件内容先在内存中生成, 全部计算成功后才由 commit() 统一写入磁盘;
    中途失败时目标目录保持不变
    """

    def __init__(self):
        self._files: List[Tuple[Path, Union[str, bytes]]] = []

    def add(self, path: Union[str, Path], payload: Union[str, bytes]):
        self._files.append((Path(path), payload))

    def plot(self, out_dir: Path, name: str, data, kind: str, **kwargs):
        self.add(out_dir / name, emit_plot(data, kind, **kwargs))

    def correlogram(self, out_dir: Path, name: str, result: CorrelogramResult, title: str):
        lags, band = result.lags, result.band
        self.plot(out_dir, name,
                  {result.kind.upper(): (lags, result.values),
                   '+band': (lags, np.full(lags.size, band)),
                   '-band': (lags, np.full(lags.size, -band))},
                  "line", title=title, xlabel="lag (days)", ylabel=result.kind.upper(),
                  options=VisualizationOptions(markers=True, styles={'+band': ':', '-band': ':'}))

    def commit(self) -> List[str]:
        for path, payload in self._files:
            write_atomic(path, payload)
        return [str(path) for path, _ in self._files]


class CliArgumentParser(argparse.ArgumentParser):
    """用法错误抛出 ValidationError (退出码 1), 而不是直接退出进程"""

    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _parse_int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError as e:
        raise ValidationError(f"无法解析整数列表: {text!r}") from e


def _parse_pair(text: str, separator: str) -> List[int]:
    parts = text.lower().split(separator)
    if len(parts) != 2:
        raise ValidationError(f"格式应为 a{separator}b, 实际为 {text!r}")
    try:
        return [int(parts[0]), int(parts[1])]
    except ValueError as e:
        raise ValidationError(f"格式应为 a{separator}b, 实际为 {text!r}") from e


# ---------------------------------------------------------------------------
# 子命令
# ---------------------------------------------------------------------------

def cmd_aggregate(args) -> Dict[str, Any]:
    """行程记录 → 每日乘客数 CSV"""
    paths = sorted({p for pattern in args.input for p in glob.glob(pattern)})
    if not paths:
        raise ValidationError(f"没有匹配的输入文件: {', '.join(args.input)}")
    window = DateWindow(args.date_from, args.date_to)
    series, stats = aggregate_trip_files(paths, window, strict=args.strict,
                                         max_count=args.max_count, workers=args.workers)
    buffer = io.StringIO()
    write_daily_csv(series, buffer)
    write_atomic(args.out, buffer.getvalue())
    return {'files': paths, 'days': len(series), 'stats': stats.to_dict(), 'outputs': [args.out]}


def cmd_analyze(args) -> Dict[str, Any]:
    """趋势、ACF/PACF、ADF 与日历汇总"""
    series = read_daily_csv(args.input)
    if args.holdout:
        series = split_train_test(series, args.holdout).train
    out_dir = Path(args.out)
    pending = PendingOutputs()

    trend = fit_linear_trend(series)
    residuals = detrend(series, trend)
    max_lag = min(args.max_lag, len(series) - 1)
    acf_result = acf(residuals, max_lag)
    pacf_result = pacf(residuals, max_lag)
    adf = {'series': adf_test(series.values).to_dict(), 'detrended': adf_test(residuals).to_dict()}
    calendar = calendar_aggregates(series)

    pending.add(out_dir / "trend.json", to_json(trend.to_dict()))
    pending.add(out_dir / "acf.csv", to_csv(acf_result.to_rows(), ['lag', 'acf']))
    pending.add(out_dir / "pacf.csv", to_csv(pacf_result.to_rows(), ['lag', 'pacf']))
    pending.add(out_dir / "adf.json", to_json(adf))
    pending.add(out_dir / "calendar.json", to_json(calendar.to_dict()))
    pending.add(out_dir / "residuals.csv", residual_csv(residuals))

    t = series.time_index()
    pending.plot(out_dir, "series_trend.svg",
                 {'passengers': (t, series.values), 'trend': (t, trend.predict(t))}, "overlay",
                 title="Daily passengers and linear trend", xlabel="t (days)", ylabel="passengers")
    pending.correlogram(out_dir, "acf.svg", acf_result, "ACF")
    pending.correlogram(out_dir, "pacf.svg", pacf_result, "PACF")

    return {'trend': trend.to_dict(), 'adf': adf, 'outputs': pending.commit()}


def cmd_spectrum(args) -> Dict[str, Any]:
    """原始/平滑周期图、AR 谱与主导周期"""
    residuals = read_residual_csv(args.input)
    out_dir = Path(args.out)
    pending = PendingOutputs()

    raw = periodogram(residuals)
    spectra = {'raw': raw, 'daniell': daniell_smooth(raw, args.span),
               'ar': ar_spectrum(residuals, args.ar_max)}
    peaks = {name: dominant_periods(s, args.peaks).to_dict() for name, s in spectra.items()}

    for name, s in spectra.items():
        pending.add(out_dir / f"spectrum_{name}.csv", spectrum_csv(s))
    pending.add(out_dir / "peaks.json", to_json(peaks))

    plot_data = {s.label: (s.frequencies, s.power) for s in spectra.values()}
    pending.plot(out_dir, "spectrum.svg", plot_data, "line",
                 title="Power spectrum", xlabel="frequency (cycles/day)", ylabel="power")
    pending.plot(out_dir, "spectrum_log.svg", plot_data, "line",
                 title="Power spectrum (log)", xlabel="frequency (cycles/day)", ylabel="power",
                 options=VisualizationOptions(log_scale=True))
    return {'peaks': peaks, 'ar_order': spectra['ar'].parameter, 'outputs': pending.commit()}


def cmd_cycles(args) -> Dict[str, Any]:
    """顺序移除周期分量, 并给出最终残差的 ACF/PACF"""
    residuals = read_residual_csv(args.input)
    periods = _parse_int_list(args.periods)
    out_dir = Path(args.out)
    pending = PendingOutputs()

    summary = []
    final = residuals
    for profile, final in iter_cycle_removal(residuals, periods):
        summary.append({'period': profile.period, 'amplitude': profile.amplitude,
                        'variance_after': float(np.var(final.values)),
                        'phase_means': profile.phase_means.tolist()})
        pending.plot(out_dir, f"cycle_{profile.period}.svg",
                     {f"{profile.period}-day cycle": (np.arange(profile.period), profile.phase_means)},
                     "profile", title=f"Phase means, {profile.period}-day cycle",
                     xlabel="phase", ylabel="passengers")

    max_lag = min(args.max_lag, len(final) - 1)
    final_acf = acf(final, max_lag)
    final_pacf = pacf(final, max_lag)

    pending.add(out_dir / "cycles.json", to_json({'cycles': summary}))
    pending.add(out_dir / "final_residuals.csv", residual_csv(final))
    pending.add(out_dir / "final_acf.csv", to_csv(final_acf.to_rows(), ['lag', 'acf']))
    pending.add(out_dir / "final_pacf.csv", to_csv(final_pacf.to_rows(), ['lag', 'pacf']))
    pending.correlogram(out_dir, "final_acf.svg", final_acf, "ACF of final residuals")
    pending.correlogram(out_dir, "final_pacf.svg", final_pacf, "PACF of final residuals")

    after = daniell_smooth(periodogram(final), 3)
    before = daniell_smooth(periodogram(residuals), 3)
    pending.plot(out_dir, "spectrum_after.svg",
                 {'before': (before.frequencies, before.power), 'after': (after.frequencies, after.power)},
                 "overlay", title="Smoothed periodogram before and after cycle removal",
                 xlabel="frequency (cycles/day)", ylabel="power")
    return {'cycles': [{k: c[k] for k in ('period', 'amplitude', 'variance_after')} for c in summary],
            'outputs': pending.commit()}


def _grid_heatmaps(pending: PendingOutputs, out_dir: Path, grid: GridResult):
    for metric, name in (('aic_n', 'aic.svg'), ('hmean_n', 'hmean.svg')):
        data = HeatmapData(grid.score(metric), list(range(1, grid.p_max + 1)),
                           list(range(1, grid.q_max + 1)), metric)
        pending.plot(out_dir, name, data, "heatmap", title=metric, xlabel="q", ylabel="p")


def cmd_fit(args, seed: int) -> Dict[str, Any]:
    """单个 ARMA 模型或 (p, q) 网格"""
    residuals = read_residual_csv(args.input)
    options = FitOptions(seed=seed, compute_standard_errors=args.order is not None)
    out = Path(args.out)
    pending = PendingOutputs()

    if args.order:
        p, q = _parse_pair(args.order, ',')
        model = fit_arma(residuals, ArmaSpec(p, q), options)
        pending.add(out, to_json(model.to_dict()))
        return {'model': model.to_dict(), 'outputs': pending.commit()}

    p_max, q_max = _parse_pair(args.grid, 'x')
    grid = grid_search(residuals, p_max, q_max, options, args.workers)
    summary = grid.to_dict()
    pending.add(out, to_json(summary))
    _grid_heatmaps(pending, out.parent, grid)
    result = {key: summary[key] for key in ('best_by_aic', 'best_by_bic', 'best_by_hmean', 'failures')}
    result['outputs'] = pending.commit()
    return result


def _report_figures(report: EvaluationReport, out_dir: Path, pending: PendingOutputs):
    train, test = report.split.train, report.split.test
    t_train = train.time_index()
    t_test = test.time_index(len(train) + 1)
    residuals = report.final_residuals

    for c in report.candidates:
        if not c.ok:
            continue
        tag = f"arma_{c.spec.p}_{c.spec.q}"
        pending.plot(out_dir, f"train_fit_{tag}.svg",
                     {'actual': (t_train, train.values), 'predicted': (t_train, c.train_predictions)},
                     "overlay", title=f"{c.spec} training fit", xlabel="t (days)", ylabel="passengers")
        pending.plot(out_dir, f"residual_fit_{tag}.svg",
                     {'residual': (residuals.index, residuals.values),
                      'predicted': (residuals.index, c.residual_predictions + c.adjustment)},
                     "overlay", title=f"{c.spec} residual fit", xlabel="t (days)", ylabel="passengers")
        pending.plot(out_dir, f"test_forecast_{tag}.svg",
                     {'actual': (t_test, test.values), 'predicted': (t_test, c.test_predictions)},
                     "overlay", title=f"{c.spec} test forecast", xlabel="t (days)", ylabel="passengers")

    if 'daniell' in report.spectra:
        s = report.spectra['daniell']
        pending.plot(out_dir, "spectrum.svg", {s.label: (s.frequencies, s.power)}, "line",
                     title="Smoothed periodogram of detrended residuals",
                     xlabel="frequency (cycles/day)", ylabel="power")
    for profile in report.cycles:
        pending.plot(out_dir, f"cycle_{profile.period}.svg",
                     {f"{profile.period}-day cycle": (np.arange(profile.period), profile.phase_means)},
                     "profile", title=f"Phase means, {profile.period}-day cycle",
                     xlabel="phase", ylabel="passengers")
    for key, title in (('acf', "ACF"), ('pacf', "PACF"),
                       ('final_acf', "ACF of final residuals"), ('final_pacf', "PACF of final residuals")):
        if key in report.correlograms:
            pending.correlogram(out_dir, f"{key}.svg", report.correlograms[key], title)
    if report.grid is not None:
        _grid_heatmaps(pending, out_dir, report.grid)


def cmd_run(args, seed: Optional[int], verbose: bool, use_color: bool) -> Dict[str, Any]:
    """完整流水线"""
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    config = config.with_overrides(holdout_days=args.holdout, seed=seed, workers=args.workers,
                                   verbose=verbose or None, use_color=None if use_color else False)
    set_verbose(config.verbose)
    series = read_daily_csv(args.input)
    report = run_pipeline(config, series)
    payload = report.to_dict()

    out_dir = Path(args.out)
    pending = PendingOutputs()
    pending.add(out_dir / "report.json", to_json(payload))
    pending.add(out_dir / "table2.csv",
                to_csv(report.candidate_rows(), ['model', 'adjustment', 'train_rmse', 'test_rmse']))
    pending.add(out_dir / "table3.csv", to_csv(report.baseline_rows(), ['model', 'test_rmse']))
    _report_figures(report, out_dir, pending)
    outputs = pending.commit()

    if not args.json:
        ReportPrinter().print_report_summary(payload)
    return {'candidates': payload['candidates'], 'baselines': payload['baselines'],
            'errors': payload['errors'], 'outputs': outputs}


# ---------------------------------------------------------------------------
# 参数解析
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = CliArgumentParser(
        prog='cyclecast',
        description='每日出租车乘客数的趋势/周期分解与 ARMA 预测',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  # 把行程记录汇总为每日乘客数
  cyclecast aggregate --input 'trips/*.csv' --from 2016-01-01 --to 2018-12-31 --out daily.csv

  # 趋势、相关函数与单位根检验
  cyclecast analyze --in daily.csv --out eda/ --holdout 61

  # 谱分析与周期移除
  cyclecast spectrum --in eda/residuals.csv --span 3 --ar-max 30 --peaks 6 --out spectrum/
  cyclecast cycles --in eda/residuals.csv --periods 7,30,45,182,365 --out cycles/

  # 网格搜索或单个模型
  cyclecast fit --in cycles/final_residuals.csv --grid 10x10 --out grid/grid.json
  cyclecast fit --in cycles/final_residuals.csv --order 1,0 --out model.json

  # 完整流水线
  cyclecast run --in daily.csv --config pipeline.toml --out report/
        """
    )
    parser.add_argument('--seed', type=int, default=None, help='随机种子 (优化器重启与模拟)')
    parser.add_argument('--json', action='store_true', help='在标准输出打印 JSON 摘要')
    parser.add_argument('-v', '--verbose', action='store_true', help='详细输出模式')
    parser.add_argument('--no-color', action='store_true', help='禁用彩色输出')
    parser.add_argument('--version', action='version', version=f'cyclecast v{__version__}')

    sub = parser.add_subparsers(dest='command', required=True, metavar='COMMAND')

    aggregate = sub.add_parser('aggregate', help='汇总行程记录为每日乘客数')
    aggregate.add_argument('--input', action='append', required=True, metavar='GLOB',
                           help='行程 CSV 文件 (glob, 可重复)')
    aggregate.add_argument('--from', dest='date_from', required=True, help='起始日期 YYYY-MM-DD')
    aggregate.add_argument('--to', dest='date_to', required=True, help='结束日期 YYYY-MM-DD')
    aggregate.add_argument('--out', required=True, help='输出 CSV')
    aggregate.add_argument('--strict', action='store_true', help='遇到非法记录时报错')
    aggregate.add_argument('--max-count', type=int, default=None, help='单条记录乘客数上限')
    aggregate.add_argument('--workers', type=int, default=1, help='并行进程数')

    analyze = sub.add_parser('analyze', help='趋势、ACF/PACF、ADF 与日历汇总')
    analyze.add_argument('--in', dest='input', required=True, help='每日乘客数 CSV')
    analyze.add_argument('--out', required=True, help='输出目录')
    analyze.add_argument('--max-lag', type=int, default=40, help='ACF/PACF 最大滞后')
    analyze.add_argument('--holdout', type=int, default=None, help='只分析去掉最后 H 天的训练集')

    spectrum = sub.add_parser('spectrum', help='功率谱估计与主导周期')
    spectrum.add_argument('--in', dest='input', required=True, help='残差 CSV (t,value)')
    spectrum.add_argument('--span', type=int, default=3, help='Daniell 窗宽 (奇数)')
    spectrum.add_argument('--ar-max', type=int, default=30, help='AR 谱最高阶数')
    spectrum.add_argument('--peaks', type=int, default=6, help='报告的峰数')
    spectrum.add_argument('--out', required=True, help='输出目录')

    cycles = sub.add_parser('cycles', help='顺序移除周期分量')
    cycles.add_argument('--in', dest='input', required=True, help='残差 CSV (t,value)')
    cycles.add_argument('--periods', default='7,30,45,182,365', help='逗号分隔的周期')
    cycles.add_argument('--max-lag', type=int, default=40, help='最终残差 ACF/PACF 的最大滞后')
    cycles.add_argument('--out', required=True, help='输出目录')

    fit = sub.add_parser('fit', help='ARMA 拟合或 (p, q) 网格搜索')
    fit.add_argument('--in', dest='input', required=True, help='残差 CSV (t,value)')
    group = fit.add_mutually_exclusive_group(required=True)
    group.add_argument('--grid', metavar='PxQ', help='网格大小, 例如 10x10')
    group.add_argument('--order', metavar='p,q', help='单个模型的阶数, 例如 1,0')
    fit.add_argument('--workers', type=int, default=1, help='网格搜索并行进程数')
    fit.add_argument('--out', required=True, help='输出 JSON 文件')

    run = sub.add_parser('run', help='运行完整流水线')
    run.add_argument('--in', dest='input', required=True, help='每日乘客数 CSV')
    run.add_argument('--config', default=None, help='配置文件 (.toml 或 .json)')
    run.add_argument('--holdout', type=int, default=None, help='测试集天数')
    run.add_argument('--workers', type=int, default=None, help='网格搜索并行进程数')
    run.add_argument('--out', required=True, help='输出目录')

    return parser


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    解析参数并执行子命令

    Returns:
        退出码: 0 成功, 1 输入不合法, 2 计算失败
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ValidationError as e:
        parser.print_usage(sys.stderr)
        get_logger().error(f"参数错误: {e}")
        return e.exit_code
    logger = get_logger(verbose=args.verbose, use_color=not args.no_color)
    set_verbose(args.verbose)
    set_color(not args.no_color)
    seed = 0 if args.seed is None else args.seed

    try:
        if args.command == 'aggregate':
            summary = cmd_aggregate(args)
        elif args.command == 'analyze':
            summary = cmd_analyze(args)
        elif args.command == 'spectrum':
            summary = cmd_spectrum(args)
        elif args.command == 'cycles':
            summary = cmd_cycles(args)
        elif args.command == 'fit':
            summary = cmd_fit(args, seed)
        else:
            summary = cmd_run(args, args.seed, args.verbose, not args.no_color)
    except CycleCastError as e:
        logger.exception(f"{args.command} 失败", e)
        return e.exit_code
    except Exception as e:  # noqa: BLE001
        logger.exception(f"{args.command} 发生未预期的错误", e)
        return 2

    if args.json:
        sys.stdout.write(to_json(summary))
    logger.success(f"{args.command} 完成, 输出 {len(summary.get('outputs', []))} 个文件")
    return 0


def main():
    """主函数"""
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
