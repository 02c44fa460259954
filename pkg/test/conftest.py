"""
测试公共设施
"""
import sys
from datetime import date
from pathlib import Path

import numpy as np
import pytest

# 添加 src 目录到路径
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from arma import simulate_arma  # noqa: E402
from ingest import DailySeries  # noqa: E402

WEEKLY_PATTERN = np.array([3000.0, 1000.0, -500.0, -1500.0, -2000.0, 0.0, 0.0])


def make_daily(n: int = 420, intercept: float = 300000.0, slope: float = -40.0,
               phi: float = 0.5, sigma: float = 2000.0, seed: int = 7,
               start: date = date(2016, 1, 1)) -> DailySeries:
    """线性趋势 + 7 天周期 + AR(1) 噪声的合成序列"""
    t = np.arange(1, n + 1)
    noise = simulate_arma([phi], [], sigma ** 2, n, seed=seed)
    values = intercept + slope * t + WEEKLY_PATTERN[(t - 1) % 7] + noise
    return DailySeries(start, np.round(values).astype(np.int64))


@pytest.fixture
def synthetic_daily() -> DailySeries:
    return make_daily()
