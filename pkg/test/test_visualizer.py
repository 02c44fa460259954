"""
可视化与导出模块测试
"""
import json
import math
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from errors import ValidationError
from visualizer import (HeatmapData, ReportPrinter, VisualizationOptions, emit_plot, to_csv,
                        to_json)

SVG = "{http://www.w3.org/2000/svg}"


def _groups(payload: bytes, prefix: str):
    root = ET.fromstring(payload)
    return [g for g in root.iter(f"{SVG}g") if g.get('id', '').startswith(prefix)]


class TestEmitPlot:
    """测试 SVG 输出"""

    def test_deterministic(self):
        """测试相同输入得到相同字节"""
        t = np.arange(1, 101)
        data = {'actual': (t, np.sin(t / 5)), 'predicted': (t, np.cos(t / 5))}
        first = emit_plot(data, "overlay", title="test", xlabel="t (days)", ylabel="passengers")
        second = emit_plot(data, "overlay", title="test", xlabel="t (days)", ylabel="passengers")
        assert first == second

    def test_single_point_marker(self):
        """测试单点序列只有一个标记"""
        payload = emit_plot({'x': ([1], [2.0])}, "line",
                            options=VisualizationOptions(markers=True))
        series = _groups(payload, "series-0")
        assert len(series) == 1
        assert len(list(series[0].iter(f"{SVG}use"))) == 1

    def test_heatmap_cells(self):
        """测试 10x10 网格得到 100 个单元"""
        values = np.arange(100, dtype=float).reshape(10, 10)
        values[3, 4] = np.nan
        data = HeatmapData(values, list(range(1, 11)), list(range(1, 11)), "aic_n")
        payload = emit_plot(data, "heatmap", title="AIC/n", xlabel="q", ylabel="p")

        cells = _groups(payload, "cell-")
        assert len(cells) == 100
        assert {g.get('id') for g in cells} >= {"cell-1-1", "cell-10-10", "cell-4-5"}

    def test_profile_and_log_scale(self):
        payload = emit_plot({'cycle': (np.arange(7), np.arange(1.0, 8.0))}, "profile")
        assert payload.startswith(b"<?xml")
        payload = emit_plot({'spectrum': (np.arange(1, 5), [1.0, 10.0, 100.0, 5.0])}, "line",
                            options=VisualizationOptions(log_scale=True))
        assert len(_groups(payload, "series-")) == 1

    def test_writes_sink(self, tmp_path):
        target = tmp_path / "plot.svg"
        payload = emit_plot({'x': ([1, 2], [3.0, 4.0])}, "line", sink=target)
        assert target.read_bytes() == payload

    def test_empty_data(self):
        with pytest.raises(ValidationError):
            emit_plot({}, "line")
        with pytest.raises(ValidationError):
            emit_plot({'x': ([], [])}, "line")
        with pytest.raises(ValidationError):
            emit_plot(HeatmapData(np.zeros((0, 0)), [], []), "heatmap")

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            emit_plot({'x': ([1], [1.0])}, "pie")

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            emit_plot({'x': ([1, 2], [1.0])}, "line")


class TestExport:
    """测试 JSON/CSV 导出"""

    def test_json_replaces_nan(self):
        text = to_json({'b': math.nan, 'a': [np.float64(1.5), math.inf], 'c': np.int64(3)})
        assert json.loads(text) == {'a': [1.5, None], 'b': None, 'c': 3}
        assert text.index('"a"') < text.index('"b"')

    def test_csv_columns(self):
        text = to_csv([{'lag': 0, 'acf': 1.0}, {'lag': 1, 'acf': 0.25}], ['lag', 'acf'])
        assert text.splitlines() == ['lag,acf', '0,1.000000', '1,0.250000']


class TestReportPrinter:
    def test_summary(self, capsys):
        report = {
            'data': {'train_start': '2016-01-01', 'train_end': '2018-10-31', 'n_train': 1035,
                     'test_start': '2018-11-01', 'test_end': '2018-12-31', 'n_test': 61},
            'trend': {'intercept': 400000.0, 'slope': -50.0},
            'cycles': [{'period': 7, 'amplitude': 50000.0}],
            'candidates': [{'model': 'ARMA(1, 0)', 'adjustment': 0.0, 'train_rmse': 20000.0,
                            'test_rmse': 35000.0}],
            'baselines': [{'model': 'mean', 'test_rmse': 110000.0}],
            'errors': [],
            'warnings': [],
        }
        ReportPrinter().print_report_summary(report)
        out = capsys.readouterr().out
        assert 'ARMA(1, 0)' in out
        assert '2018-11-01' in out


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
