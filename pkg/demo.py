"""
cyclecast 快速演示
用合成的每日乘客数展示分解、谱分析、ARMA 建模和完整流水线
"""
import sys
from datetime import date
from pathlib import Path

# 设置控制台编码为 UTF-8 (Windows 兼容)
if sys.platform == 'win32':
    import codecs
    sys.stdout = codecs.getwriter('utf-8')(sys.stdout.buffer, 'strict')
    sys.stderr = codecs.getwriter('utf-8')(sys.stderr.buffer, 'strict')

# 添加 src 目录到路径
sys.path.insert(0, str(Path(__file__).parent / 'src'))

import numpy as np  # noqa: E402

from arma import ArmaSpec, fit_arma, grid_search, simulate_arma  # noqa: E402
from config import PipelineConfig  # noqa: E402
from cycles import remove_cycles_sequential  # noqa: E402
from ingest import DailySeries  # noqa: E402
from logger import get_logger  # noqa: E402
from main import write_atomic  # noqa: E402
from pipeline import run_pipeline  # noqa: E402
from spectral import daniell_smooth, dominant_periods, periodogram  # noqa: E402
from stats_core import adf_test, detrend, fit_linear_trend  # noqa: E402
from visualizer import HeatmapData, ReportPrinter, emit_plot, to_json  # noqa: E402

OUTPUT_DIR = Path(__file__).parent / 'example' / 'demo_output'


def make_series(n: int = 1095, seed: int = 42) -> DailySeries:
    """线性下降趋势 + 周/月/年周期 + AR(1) 噪声"""
    t = np.arange(1, n + 1)
    weekly = np.array([30000, 8000, -6000, -12000, -15000, -3000, -2000])[(t - 1) % 7]
    monthly = 4000 * np.sin(2 * np.pi * t / 30)
    yearly = 20000 * np.cos(2 * np.pi * t / 365)
    noise = simulate_arma([0.5], [], 15000.0 ** 2, n, seed=seed)
    values = 420000 - 50 * t + weekly + monthly + yearly + noise
    return DailySeries(date(2016, 1, 1), np.round(values).astype(np.int64))


def demo_decomposition(series: DailySeries):
    """演示趋势与周期分解"""
    print("=" * 70)
    print("演示 1: 趋势与周期分解")
    print("=" * 70)

    trend = fit_linear_trend(series)
    residuals = detrend(series, trend)
    print(f"\n✓ 线性趋势: {trend.intercept:,.1f} + ({trend.slope:.2f}) t")
    print(f"  - 斜率 t 值: {trend.slope_t:.2f}")

    adf = adf_test(residuals)
    print(f"✓ 去趋势残差的 ADF 统计量: {adf.statistic:.3f} (p = {adf.p_value:.3f})")

    smoothed = daniell_smooth(periodogram(residuals), 3)
    peaks = dominant_periods(smoothed, 6)
    print("\n【平滑周期图的主导周期】")
    for peak in peaks:
        print(f"  • {peak.period:>4} 天  (精确 {peak.exact_period:7.2f}, 功率 {peak.power:.3g})")

    final, cycles = remove_cycles_sequential(residuals, [7, 30, 365])
    print("\n【顺序移除周期】")
    for profile in cycles:
        print(f"  • {profile.period:>4} 天  振幅 {profile.amplitude:,.0f}")
    print(f"  残差方差: {np.var(residuals.values):.4g} -> {np.var(final.values):.4g}")
    return final


def demo_modeling(final):
    """演示 ARMA 网格搜索与拟合"""
    print("\n\n" + "=" * 70)
    print("演示 2: ARMA 建模")
    print("=" * 70)

    grid = grid_search(final, 3, 3)
    print(f"\n✓ 3 x 3 网格: AIC 最优 {grid.best_by_aic}, 调和平均最优 {grid.best_by_hmean}")

    model = fit_arma(final, ArmaSpec(1, 0))
    print(f"✓ AR(1): phi = {model.phi[0]:.3f}, sigma2 = {model.sigma2:.4g}")

    OUTPUT_DIR.mkdir(parents=True, exist_ok=True)
    data = HeatmapData(grid.aic_n, [1, 2, 3], [1, 2, 3], "AIC/n")
    emit_plot(data, "heatmap", sink=OUTPUT_DIR / "aic.svg", title="AIC/n", xlabel="q", ylabel="p")
    print(f"✓ AIC 热力图已保存到: {OUTPUT_DIR / 'aic.svg'}")


def demo_pipeline(series: DailySeries):
    """演示完整流水线"""
    print("\n\n" + "=" * 70)
    print("演示 3: 完整流水线")
    print("=" * 70)

    logger = get_logger(verbose=False, use_color=True)
    config = PipelineConfig(cycle_periods=[7, 30, 365], p_max=3, q_max=3,
                            candidate_specs=[[2, 2], [1, 0]], level_adjust=[True, False])
    report = run_pipeline(config, series)
    payload = report.to_dict()

    ReportPrinter().print_report_summary(payload)
    write_atomic(OUTPUT_DIR / "report.json", to_json(payload))
    logger.success(f"报告已保存到: {OUTPUT_DIR / 'report.json'}")


if __name__ == "__main__":
    try:
        daily = make_series()
        residuals = demo_decomposition(daily)
        demo_modeling(residuals)
        demo_pipeline(daily)

        print("\n\n" + "=" * 70)
        print("所有演示完成!")
        print("=" * 70)
        print(f"\n输出文件位于: {OUTPUT_DIR}")
    except KeyboardInterrupt:
        print("\n\n演示已中断")
    except Exception as e:  # noqa: BLE001
        print(f"\n\n演示出错: {e}")
        import traceback
        traceback.print_exc()
