"""
谱分析模块测试
"""
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from arma import simulate_arma
from errors import ValidationError
from spectral import (EstimatorKind, SpectralDensity, ar_spectrum, daniell_smooth,
                      dominant_periods, periodogram, variance_from_periodogram)


def _tone(period: float, n: int, amplitude: float = 1.0) -> np.ndarray:
    t = np.arange(1, n + 1)
    return amplitude * np.cos(2 * np.pi * t / period)


def _raw(power) -> SpectralDensity:
    power = np.asarray(power, dtype=float)
    n = 2 * power.size
    return SpectralDensity(np.arange(1, power.size + 1) / n, power, EstimatorKind.RAW, None, n)


class TestPeriodogram:
    """测试原始周期图"""

    def test_pure_tone_is_single_spike(self):
        """测试傅里叶频率上的纯音只有一个非零纵坐标"""
        s = periodogram(_tone(8, 64))
        peak = int(np.argmax(s.power))

        assert s.frequencies[peak] == pytest.approx(1 / 8)
        others = np.delete(s.power, peak)
        assert np.all(others < 1e-9 * s.power[peak])

    def test_grid_and_labels(self):
        """测试频率网格 j/n, j = 1..floor(n/2)"""
        s = periodogram(np.random.default_rng(0).normal(size=15))
        assert len(s) == 7
        assert s.frequencies[0] == pytest.approx(1 / 15)
        assert s.frequencies[-1] == pytest.approx(7 / 15)
        assert s.label == "raw"

    @pytest.mark.parametrize("n", [64, 65, 101])
    def test_parseval(self, n):
        """测试 Parseval 恒等式 (n 为奇数和偶数)"""
        x = np.random.default_rng(n).normal(size=n) * 3 + 10
        s = periodogram(x)
        assert variance_from_periodogram(s) == pytest.approx(np.var(x), rel=1e-10)

    def test_white_noise_mean_ordinate(self):
        """测试白噪声的平均纵坐标约等于方差"""
        x = np.random.default_rng(42).normal(size=1024)
        s = periodogram(x)
        assert np.mean(s.power) == pytest.approx(np.var(x), rel=0.10)

    def test_two_tones_nearest_fourier_frequencies(self):
        """测试 7 天和 365 天两个纯音"""
        n = 1000
        s = periodogram(_tone(7, n) + _tone(365, n))
        top = sorted(np.argsort(s.power)[-2:].tolist())

        assert [round(s.frequencies[i] * n) for i in top] == [3, 143]

    def test_too_short(self):
        """测试少于 8 个点"""
        with pytest.raises(ValidationError):
            periodogram(np.arange(7.0))

    def test_invalid_density_rejected(self):
        """测试非法的谱密度"""
        with pytest.raises(ValidationError):
            SpectralDensity([0.2, 0.1], [1.0, 1.0], EstimatorKind.RAW, None, 10)
        with pytest.raises(ValidationError):
            SpectralDensity([0.1, 0.2], [1.0, -1.0], EstimatorKind.RAW, None, 10)


class TestDaniell:
    """测试 Daniell 平滑"""

    def test_hand_evaluated_edges(self):
        """测试镜像边界的手算结果"""
        s = daniell_smooth(_raw([0, 3, 0, 0, 0, 0]), 3)
        assert s.power.tolist() == pytest.approx([1, 1, 1, 0, 0, 0])
        assert s.label == "daniell(3)"

    def test_constant_fixed_point(self):
        """测试常数谱不变"""
        s = daniell_smooth(_raw(np.full(20, 4.0)), 5)
        assert np.allclose(s.power, 4.0, rtol=1e-12)

    def test_span_one_is_identity(self):
        """测试 span = 1 为恒等变换"""
        raw = periodogram(np.random.default_rng(1).normal(size=50))
        assert np.allclose(daniell_smooth(raw, 1).power, raw.power)

    def test_power_roughly_preserved(self):
        """测试平滑大致保持总功率"""
        raw = periodogram(np.random.default_rng(9).normal(size=512))
        smoothed = daniell_smooth(raw, 3)
        assert smoothed.power.sum() == pytest.approx(raw.power.sum(), rel=0.01)

    @pytest.mark.parametrize("span", [0, 2, 4, -1])
    def test_span_must_be_odd_positive(self, span):
        with pytest.raises(ValidationError):
            daniell_smooth(_raw(np.ones(10)), span)

    def test_span_longer_than_spectrum(self):
        with pytest.raises(ValidationError):
            daniell_smooth(_raw(np.ones(4)), 5)

    def test_requires_raw_input(self):
        """测试只能平滑原始周期图"""
        smoothed = daniell_smooth(_raw(np.ones(10)), 3)
        with pytest.raises(ValidationError):
            daniell_smooth(smoothed, 3)


class TestArSpectrum:
    """测试 AR 谱"""

    def test_white_noise_is_flat(self):
        """测试白噪声: 低阶且接近平坦"""
        x = np.random.default_rng(17).normal(size=2000)
        s = ar_spectrum(x, 30)

        assert s.power.max() / s.power.min() < 2
        assert s.label == f"ar({s.parameter})"

    def test_ar2_resonance(self):
        """测试复根 AR(2) 的共振频率"""
        phi1, phi2 = 1.0, -0.9
        x = simulate_arma([phi1, phi2], [], 1.0, 2048, seed=5)
        s = ar_spectrum(x, 30)
        resonance = math.acos(phi1 * (1 - phi2) / (4 * -phi2)) / (2 * math.pi)

        assert np.all(s.power > 0)
        assert s.frequencies[int(np.argmax(s.power))] == pytest.approx(resonance, abs=0.01)

    def test_same_grid_as_periodogram(self):
        x = np.random.default_rng(2).normal(size=99)
        assert np.array_equal(ar_spectrum(x, 5).frequencies, periodogram(x).frequencies)

    def test_order_must_be_below_n(self):
        with pytest.raises(ValidationError):
            ar_spectrum(np.random.default_rng(0).normal(size=20), 20)

    def test_zero_variance(self):
        with pytest.raises(ValidationError):
            ar_spectrum(np.zeros(50), 5)


class TestDominantPeriods:
    """测试主导周期检测"""

    def test_two_tones_in_power_order(self):
        """测试两个纯音按功率排序"""
        n = 210
        x = _tone(7, n, amplitude=3.0) + _tone(30, n, amplitude=1.0)
        peaks = dominant_periods(periodogram(x), 2)

        assert peaks.periods == [7, 30]
        assert peaks.peaks[0].power > peaks.peaks[1].power
        assert peaks.peaks[0].exact_period == pytest.approx(7.0, abs=1e-6)

    def test_monotone_spectrum_has_no_peaks(self):
        """测试单调谱没有内部极大值"""
        assert len(dominant_periods(_raw(np.linspace(10, 1, 30)), 3)) == 0

    def test_refinement_between_fourier_frequencies(self):
        """测试插值定位非傅里叶频率的周期"""
        n = 1034
        s = periodogram(_tone(182, n))
        coarse = dominant_periods(s, 1, refine=False).peaks[0]
        refined = dominant_periods(s, 1).peaks[0]

        assert coarse.period == 172
        assert abs(refined.exact_period - 182) < 3
        assert refined.period == round(1 / refined.frequency)

    def test_separation_merges_broad_peak(self):
        """测试最小间隔: 宽峰只占一个位置"""
        power = np.array([1, 5, 4.9, 5.1, 1, 1, 3, 1, 1, 1], dtype=float)
        peaks = dominant_periods(_raw(power), 3, min_separation=0.11)

        assert len(peaks) == 2
        assert peaks.peaks[0].power == pytest.approx(5.1)
        assert peaks.peaks[1].power == pytest.approx(3.0)

    def test_periods_are_unique(self):
        """测试周期唯一且与频率一致"""
        x = np.random.default_rng(4).normal(size=400)
        peaks = dominant_periods(daniell_smooth(periodogram(x), 3), 10)
        periods = peaks.periods

        assert len(set(periods)) == len(periods)
        assert all(p.period == math.floor(1 / p.frequency + 0.5) for p in peaks)
        assert [p.power for p in peaks] == sorted((p.power for p in peaks), reverse=True)

    def test_invalid_k(self):
        with pytest.raises(ValidationError):
            dominant_periods(_raw(np.ones(5)), 0)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=1e-3, max_value=1e6))
    def test_stable_under_scaling(self, factor):
        """测试功率乘以正常数时峰集合不变"""
        x = np.random.default_rng(21).normal(size=300)
        s = daniell_smooth(periodogram(x), 3)
        scaled = SpectralDensity(s.frequencies, s.power * factor, s.kind, s.parameter, s.n_obs)

        assert dominant_periods(s, 6).periods == dominant_periods(scaled, 6).periods


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
