"""
可视化与报告导出模块
确定性的 SVG 图形、控制台摘要以及报告的 JSON/CSV 导出
"""
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, BinaryIO, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from matplotlib import cm, colors  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from errors import ValidationError  # noqa: E402

PLOT_KINDS = ("line", "overlay", "heatmap", "profile")

# 固定 SVG 内部 id 的随机盐, 不嵌入字体和日期, 保证相同输入得到相同字节
SVG_RC = {
    'svg.hashsalt': 'cyclecast',
    'svg.fonttype': 'none',
    'path.simplify': False,
    # DejaVu Sans 没有中文字形, 图中的标题与标签只用 ASCII
    'font.family': 'DejaVu Sans',
}

Series = Tuple[Sequence[float], Sequence[float]]


@dataclass
class HeatmapData:
    """(p, q) 网格上的分数, values[i, j] 对应 (rows[i], cols[j])"""
    values: np.ndarray
    rows: List[int]
    cols: List[int]
    colorbar_label: str = ""


@dataclass
class VisualizationOptions:
    """可视化选项"""
    width: float = 8.0
    height: float = 4.5
    log_scale: bool = False
    markers: bool = False
    styles: Dict[str, str] = field(default_factory=dict)


def _check_data(data: Any, kind: str):
    if kind not in PLOT_KINDS:
        raise ValidationError(f"不支持的图形类型: {kind} (支持 {', '.join(PLOT_KINDS)})")
    if kind == "heatmap":
        if not isinstance(data, HeatmapData) or np.asarray(data.values).size == 0:
            raise ValidationError("热力图数据为空")
        return
    if not data:
        raise ValidationError("绘图数据为空")
    for name, (x, y) in data.items():
        if len(x) == 0 or len(x) != len(y):
            raise ValidationError(f"序列 '{name}' 为空或 x/y 长度不一致")


def _draw_series(ax, data: Mapping[str, Series], kind: str, options: VisualizationOptions):
    for i, (name, (x, y)) in enumerate(data.items()):
        style = options.styles.get(name)
        if kind == "overlay" and style is None:
            style = '-' if i == 0 else '--'
        if kind == "profile":
            (line,) = ax.step(x, y, where='mid', label=name, linewidth=1.2)
        else:
            (line,) = ax.plot(x, y, style or '-', label=name, linewidth=1.0,
                              marker='o' if options.markers else None, markersize=2)
        line.set_gid(f"series-{i}")
    if options.log_scale:
        ax.set_yscale('log')
    if len(data) > 1:
        ax.legend(loc='best', fontsize=8)


def _draw_heatmap(fig, ax, data: HeatmapData):
    values = np.asarray(data.values, dtype=float)
    finite = values[np.isfinite(values)]
    low, high = (finite.min(), finite.max()) if finite.size else (0.0, 1.0)
    if low == high:
        high = low + 1.0
    norm = colors.Normalize(vmin=low, vmax=high)
    cmap = matplotlib.colormaps['viridis']

    for i, row in enumerate(data.rows):
        for j, col in enumerate(data.cols):
            value = values[i, j]
            face = cmap(norm(value)) if math.isfinite(value) else (0.85, 0.85, 0.85, 1.0)
            cell = Rectangle((j - 0.5, i - 0.5), 1.0, 1.0, facecolor=face, edgecolor='white')
            cell.set_gid(f"cell-{row}-{col}")
            ax.add_patch(cell)
            if math.isfinite(value):
                ax.text(j, i, f"{value:.2f}", ha='center', va='center', fontsize=6,
                        color='white' if norm(value) < 0.5 else 'black')

    ax.set_xlim(-0.5, len(data.cols) - 0.5)
    ax.set_ylim(len(data.rows) - 0.5, -0.5)
    ax.set_xticks(range(len(data.cols)), [str(c) for c in data.cols])
    ax.set_yticks(range(len(data.rows)), [str(r) for r in data.rows])
    mappable = cm.ScalarMappable(norm=norm, cmap=cmap)
    mappable.set_array([])
    colorbar = fig.colorbar(mappable, ax=ax)
    if data.colorbar_label:
        colorbar.set_label(data.colorbar_label)


def emit_plot(data: Union[Mapping[str, Series], HeatmapData], kind: str,
              sink: Optional[Union[str, Path, BinaryIO]] = None, title: str = "",
              xlabel: str = "", ylabel: str = "",
              options: Optional[VisualizationOptions] = None) -> bytes:
    """
    绘制 SVG 图形

    Args:
        data: line/overlay/profile 为 {名称: (x, y)}, heatmap 为 HeatmapData
        kind: line, overlay, heatmap 或 profile
        sink: 输出路径或二进制文件对象 (None 时只返回字节)
        title, xlabel, ylabel: 标题与坐标轴标签

    Returns:
        SVG 字节 (相同输入得到相同字节)
    """
    _check_data(data, kind)
    options = options or VisualizationOptions()

    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(options.width, options.height))
        ax = fig.add_subplot(1, 1, 1)
        if kind == "heatmap":
            _draw_heatmap(fig, ax, data)
        else:
            _draw_series(ax, data, kind, options)
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        fig.tight_layout()

        buffer = io.BytesIO()
        fig.savefig(buffer, format='svg', metadata={'Date': None})
    payload = buffer.getvalue()

    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(payload)
    elif sink is not None:
        sink.write(payload)
    return payload


# ---------------------------------------------------------------------------
# 控制台输出
# ---------------------------------------------------------------------------

class ReportPrinter:
    """把评估结果打印到标准输出"""

    def print_header(self, title: str):
        """打印标题"""
        separator = "=" * 80
        print(f"\n{separator}")
        print(f"  {title}")
        print(f"{separator}\n")

    def print_section(self, title: str):
        """打印章节"""
        separator = "-" * 80
        print(f"\n{separator}")
        print(f"  {title}")
        print(f"{separator}\n")

    def print_table(self, rows: List[Dict[str, Any]]):
        """打印对齐的表格"""
        if not rows:
            print("  (空)")
            return
        print(pd.DataFrame(rows).to_string(index=False, float_format=lambda v: f"{v:,.2f}"))

    def print_report_summary(self, report: Dict[str, Any]):
        """打印评估报告摘要"""
        self.print_header("cyclecast 评估报告")

        data = report['data']
        trend = report['trend']
        print("【数据】")
        print(f"  • 训练集:   {data['train_start']} ~ {data['train_end']} ({data['n_train']} 天)")
        print(f"  • 测试集:   {data['test_start']} ~ {data['test_end']} ({data['n_test']} 天)")
        print(f"\n【趋势】")
        print(f"  • 截距:     {trend['intercept']:,.2f}")
        print(f"  • 斜率:     {trend['slope']:,.4f} / 天")

        if report.get('cycles'):
            print(f"\n【周期】")
            for cycle in report['cycles']:
                print(f"  • {cycle['period']:>4} 天  振幅 {cycle['amplitude']:,.1f}")

        self.print_section("候选模型评估")
        self.print_table([{k: c[k] for k in ('model', 'adjustment', 'train_rmse', 'test_rmse')}
                          for c in report['candidates']])
        self.print_section("与简单模型对比")
        self.print_table([{k: b[k] for k in ('model', 'test_rmse')} for b in report['baselines']])

        if report.get('errors'):
            print(f"\n错误数: {len(report['errors'])}")
            for error in report['errors']:
                print(f"  • {error}")
        if report.get('warnings'):
            print(f"警告数: {len(report['warnings'])}")


# ---------------------------------------------------------------------------
# 导出
# ---------------------------------------------------------------------------

def _plain(value: Any) -> Any:
    """JSON 不支持 NaN/Inf, 统一替换为 null"""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def to_json(payload: Any) -> str:
    """稳定排序、无 NaN 的 JSON 文本"""
    return json.dumps(_plain(payload), indent=2, ensure_ascii=False, sort_keys=True,
                      allow_nan=False) + "\n"


def to_csv(rows: List[Dict[str, Any]], columns: Optional[List[str]] = None) -> str:
    """行列表转为 CSV 文本"""
    frame = pd.DataFrame(rows, columns=columns)
    return frame.to_csv(index=False, lineterminator="\n", float_format="%.6f")
