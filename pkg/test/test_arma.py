"""
ARMA 建模模块测试
"""
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from arma import (ArmaModel, ArmaSpec, FitOptions, GridResult, coefficients_to_params, fit_arma,
                  forecast_multistep, forecast_rolling, grid_search, information_criteria,
                  innovations, optimize_level_shift, params_to_coefficients, predict_in_sample,
                  profile_loglik, simulate_arma)
from errors import ArmaFitError, ValidationError
from stats_core import ResidualSeries, rmse


def _ar1(phi: float = 0.5) -> ArmaModel:
    return ArmaModel(ArmaSpec(1, 0), [phi], [], 1.0)


def _exact_ar1_loglik(y: np.ndarray, phi: float) -> float:
    """AR(1) 精确似然的闭式解 (sigma2 取极大似然估计)"""
    n = y.size
    first = 1.0 / (1.0 - phi ** 2)
    rest = y[1:] - phi * y[:-1]
    sigma2 = (y[0] ** 2 / first + np.sum(rest ** 2)) / n
    return -0.5 * n * (math.log(2 * math.pi) + 1 + math.log(sigma2)) - 0.5 * math.log(first)


class TestParameterTransform:
    """测试无约束参数与系数之间的变换"""

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(min_value=-2, max_value=2), min_size=1, max_size=6),
           st.integers(min_value=0, max_value=3))
    def test_always_stationary_and_invertible(self, u, split):
        """测试任意参数都映射为平稳可逆的系数"""
        p = min(split, len(u))
        phi, theta = params_to_coefficients(np.array(u), p, len(u) - p)
        model = ArmaModel(ArmaSpec(phi.size, theta.size), phi, theta, 1.0)

        assert np.all(np.abs(model.ar_roots()) > 1.0)
        assert np.all(np.abs(model.ma_roots()) > 1.0)

    def test_inverse(self):
        """测试平稳系数可以还原"""
        phi, theta = np.array([0.5, -0.3]), np.array([0.4])
        back_phi, back_theta = params_to_coefficients(coefficients_to_params(phi, theta), 2, 1)
        assert np.allclose(back_phi, phi)
        assert np.allclose(back_theta, theta)


class TestLikelihood:
    """测试精确似然"""

    def test_ar1_closed_form(self):
        """测试 AR(1) 与闭式精确似然一致"""
        y = simulate_arma([0.7], [], 2.0, 300, seed=3)
        loglik, _ = profile_loglik(y, np.array([0.7]), np.zeros(0))
        assert loglik == pytest.approx(_exact_ar1_loglik(y, 0.7), rel=1e-9)

    def test_first_innovation_variance(self):
        """测试第一个新息的方差为平稳方差"""
        y = simulate_arma([0.5], [], 1.0, 50, seed=1)
        v, variances = innovations(y, np.array([0.5]), np.zeros(0))
        assert v[0] == pytest.approx(y[0])
        assert variances[0] == pytest.approx(1 / 0.75)
        assert np.allclose(variances[1:], 1.0)

    def test_matches_statsmodels(self):
        """测试与 statsmodels 的状态空间似然一致"""
        from statsmodels.tsa.arima.model import ARIMA

        y = simulate_arma([0.6], [0.3], 1.0, 500, seed=12)
        result = ARIMA(y, order=(1, 0, 1), trend='n').fit()
        phi, theta = result.params[0], result.params[1]
        loglik, _ = profile_loglik(y, np.array([phi]), np.array([theta]))
        assert loglik == pytest.approx(result.llf, abs=1e-2)

        model = fit_arma(y, ArmaSpec(1, 1))
        assert model.loglik >= result.llf - 1e-2


class TestFitArma:
    """测试 ARMA 拟合"""

    @pytest.mark.slow
    def test_recovers_ar1(self):
        """测试已知参数的 AR(1) 模拟"""
        y = simulate_arma([0.5], [], 1.0, 10000, seed=2024)
        model = fit_arma(y, ArmaSpec(1, 0))

        assert 0.47 <= model.phi[0] <= 0.53
        assert 0.95 <= model.sigma2 <= 1.05
        assert model.converged
        assert model.n == 10000

    def test_white_noise(self):
        """测试白噪声拟合的 AR 系数接近 0"""
        y = np.random.default_rng(99).normal(size=5000)
        assert abs(fit_arma(y, ArmaSpec(1, 0)).phi[0]) < 0.05

    def test_roots_and_coefficients(self):
        y = simulate_arma([0.6, -0.2], [0.4], 1.0, 400, seed=8)
        model = fit_arma(y, ArmaSpec(2, 1))

        assert set(model.coefficients) == {'phi_1', 'phi_2', 'theta_1'}
        assert np.all(np.abs(model.ar_roots()) > 1.0)
        assert np.all(np.abs(model.ma_roots()) > 1.0)

    def test_deterministic(self):
        """测试相同种子得到相同结果"""
        y = simulate_arma([0.3], [0.5], 1.0, 200, seed=4)
        options = FitOptions(seed=7)
        first = fit_arma(y, ArmaSpec(1, 1), options)
        second = fit_arma(y, ArmaSpec(1, 1), options)
        assert np.array_equal(first.phi, second.phi)
        assert first.loglik == second.loglik

    def test_css_warm_start(self):
        """测试 CSS 初值得到相同的极大似然"""
        y = simulate_arma([0.5], [0.2], 1.0, 400, seed=6)
        default = fit_arma(y, ArmaSpec(1, 1))
        css = fit_arma(y, ArmaSpec(1, 1), FitOptions(warm_start="css"))
        assert css.loglik == pytest.approx(default.loglik, abs=1e-3)

    def test_standard_errors(self):
        y = simulate_arma([0.5], [], 1.0, 2000, seed=10)
        model = fit_arma(y, ArmaSpec(1, 0), FitOptions(compute_standard_errors=True))
        expected = math.sqrt((1 - 0.25) / 2000)
        assert model.standard_errors[0] == pytest.approx(expected, rel=0.25)
        assert 'standard_errors' in model.to_dict()

    @pytest.mark.slow
    @pytest.mark.parametrize("phi, theta", [([0.5], []), ([1.0, -0.9], [0.4])])
    def test_recovery_within_three_standard_errors(self, phi, theta):
        """测试 n = 10000 时所有估计都在真值的 3 个标准误之内"""
        truth = np.r_[phi, theta]
        y = simulate_arma(phi, theta, 1.0, 10000, seed=17)
        model = fit_arma(y, ArmaSpec(len(phi), len(theta)), FitOptions(compute_standard_errors=True))

        assert np.all(np.isfinite(model.standard_errors))
        assert np.all(np.abs(np.r_[model.phi, model.theta] - truth) <= 3 * model.standard_errors)

    @pytest.mark.slow
    def test_recovery_repeated_over_seeds(self):
        """测试 20 个种子中至少 18 次 ARMA(2,1) 估计落在 3 个标准误之内"""
        truth = np.array([1.0, -0.9, 0.4])
        passes = 0
        for seed in range(20):
            y = simulate_arma(truth[:2], truth[2:], 1.0, 10000, seed=seed)
            model = fit_arma(y, ArmaSpec(2, 1), FitOptions(compute_standard_errors=True))
            errors = np.abs(np.r_[model.phi, model.theta] - truth)
            passes += bool(np.all(errors <= 3 * model.standard_errors))
        assert passes >= 18

    @pytest.mark.slow
    def test_fitted_models_stationary_and_invertible(self):
        """测试 100 条随机序列的拟合结果都平稳可逆"""
        rng = np.random.default_rng(12)
        for seed in range(100):
            phi, theta = rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)
            y = simulate_arma([phi], [theta], 1.0, 200, seed=seed)
            model = fit_arma(y, ArmaSpec(2, 1), FitOptions(restarts=1))

            assert np.all(np.abs(model.ar_roots()) > 1.0)
            assert np.all(np.abs(model.ma_roots()) > 1.0)

    def test_too_few_observations(self):
        with pytest.raises(ValidationError):
            fit_arma(np.arange(3.0), ArmaSpec(1, 1))

    def test_no_parameters(self):
        with pytest.raises(ValidationError):
            fit_arma(np.arange(30.0), ArmaSpec(0, 0))

    def test_non_finite_likelihood(self):
        """测试似然处处非有限时携带诊断信息"""
        with pytest.raises(ArmaFitError) as info:
            fit_arma(np.zeros(40), ArmaSpec(1, 0), FitOptions(restarts=2))
        assert len(info.value.diagnostics) == 3

    def test_invalid_options(self):
        with pytest.raises(ValidationError):
            FitOptions(restarts=6)
        with pytest.raises(ValidationError):
            FitOptions(warm_start="random")
        with pytest.raises(ValidationError):
            ArmaSpec(-1, 0)


class TestInformationCriteria:
    """测试信息准则"""

    def test_formulas(self):
        model = ArmaModel(ArmaSpec(1, 1), [0.5], [0.2], 1.0, loglik=-1000.0, n=500)
        criteria = information_criteria(model)

        assert criteria.aic_n == pytest.approx((6 + 2000) / 500)
        assert criteria.bic_n == pytest.approx((3 * math.log(500) + 2000) / 500)
        assert criteria.aic_n < criteria.hmean_n < criteria.bic_n

    def test_unconverged_rejected(self):
        model = ArmaModel(ArmaSpec(1, 0), [0.5], [], 1.0, loglik=-10.0, n=20, converged=False)
        with pytest.raises(ValidationError):
            information_criteria(model)
        assert information_criteria(model, allow_unconverged=True).aic_n > 0

    def test_missing_loglik(self):
        with pytest.raises(ValidationError):
            information_criteria(_ar1())


class TestGridSearch:
    """测试 (p, q) 网格搜索"""

    def test_small_grid(self):
        y = simulate_arma([0.5], [], 1.0, 300, seed=21)
        grid = grid_search(y, 2, 2)

        assert grid.aic_n.shape == (2, 2)
        assert np.all(np.isfinite(grid.hmean_n))
        assert len(grid.models) == 4
        best = grid.best_by_hmean
        assert grid.hmean_n[best.p - 1, best.q - 1] == np.nanmin(grid.hmean_n)
        data = grid.to_dict()
        assert data['p_values'] == [1, 2]
        assert len(data['hmean_n']) == 2

    def test_failed_cells_recorded(self):
        """测试单元失败只记录, 不中断网格"""
        grid = grid_search(np.array([1.0, -2.0, 0.5, 1.5, -1.0]), 2, 2)

        assert (2, 2) in [(p, q) for p, q, _ in grid.failures]
        assert math.isnan(grid.aic_n[1, 1])
        assert (1, 1) in grid.models

    def test_invalid_bounds(self):
        with pytest.raises(ValidationError):
            grid_search(np.zeros(50), 0, 2)

    def test_best_skips_unconverged_cells(self):
        """测试最优阶数只在收敛的单元中选择"""
        scores = np.array([[1.0, 2.0], [3.0, 4.0]])
        grid = GridResult(2, 2, scores, scores + 0.5, scores + 0.25, unconverged=[(1, 1)])

        assert grid.best_by_aic == ArmaSpec(1, 2)
        assert grid.best_by_bic == ArmaSpec(1, 2)
        assert grid.best_by_hmean == ArmaSpec(1, 2)
        assert grid.aic_n[0, 0] == 1.0

    def test_no_converged_cell_has_no_best(self):
        """测试没有收敛单元时不给出最优阶数"""
        y = simulate_arma([0.5], [0.3], 1.0, 300, seed=3)
        grid = grid_search(y, 2, 2, FitOptions(maxiter=1, restarts=0))

        assert sorted(grid.unconverged) == sorted(grid.models)
        assert grid.best_by_aic is None
        assert grid.best_by_hmean is None
        assert grid.to_dict()['best_by_bic'] is None

    def test_ar2_selects_order_two(self):
        """测试 AR(2) 数据上调和平均最优单元的 AIC 接近 p >= 2 的拟合"""
        y = simulate_arma([0.6, -0.3], [], 1.0, 1000, seed=23)
        grid = grid_search(y, 3, 3)
        best = grid.best_by_hmean

        assert grid.aic_n[best.p - 1, best.q - 1] <= np.nanmin(grid.aic_n[1:, :]) + 0.01

    def test_white_noise_scores_flat(self):
        """测试白噪声上各单元的 AIC/n 几乎相同"""
        y = np.random.default_rng(41).normal(size=2000)
        grid = grid_search(y, 2, 2)
        assert np.nanmax(grid.aic_n) - np.nanmin(grid.aic_n) < 10.0 / y.size

    @pytest.mark.slow
    def test_nesting_on_five_by_five_grid(self):
        """测试 5x5 网格上似然嵌套异常不超过 10%"""
        y = simulate_arma([0.5, -0.2], [0.3], 1.0, 500, seed=29)
        grid = grid_search(y, 5, 5)
        pairs = 2 * 5 * 5 - 5 - 5
        assert len(grid.nesting_violations) <= 0.1 * pairs

    @pytest.mark.slow
    def test_parallel_matches_serial(self):
        """测试并行结果与串行一致"""
        y = simulate_arma([0.4], [0.3], 1.0, 200, seed=5)
        serial = grid_search(y, 2, 2)
        parallel = grid_search(y, 2, 2, workers=2)
        assert np.array_equal(serial.aic_n, parallel.aic_n)


class TestPrediction:
    """测试预测"""

    def test_in_sample_ar1(self):
        """测试 AR(1) 一步预测递推"""
        assert predict_in_sample(_ar1(), [2, 4, 4]).tolist() == pytest.approx([0, 1, 2])

    def test_zero_model(self):
        model = ArmaModel(ArmaSpec(1, 1), [0.0], [0.0], 1.0)
        assert np.allclose(predict_in_sample(model, [3.0, -1.0, 7.0]), 0.0)

    def test_rolling(self):
        """测试滚动预测使用实际测试值"""
        train = ResidualSeries([4.0, 10.0])
        test = ResidualSeries([6.0, 8.0], origin_index=3)
        assert forecast_rolling(_ar1(), train, test).tolist() == pytest.approx([5, 3])

    def test_rolling_requires_contiguous_test(self):
        with pytest.raises(ValidationError):
            forecast_rolling(_ar1(), ResidualSeries([1.0, 2.0]),
                             ResidualSeries([3.0], origin_index=5))

    def test_multistep(self):
        """测试多步预测几何衰减"""
        assert forecast_multistep(_ar1(), [8.0], 3).tolist() == pytest.approx([4, 2, 1])

    def test_multistep_ma(self):
        model = ArmaModel(ArmaSpec(0, 1), [], [0.5], 1.0)
        assert forecast_multistep(model, [2.0], 3).tolist() == pytest.approx([1, 0, 0])

    def test_multistep_horizon(self):
        with pytest.raises(ValidationError):
            forecast_multistep(_ar1(), [1.0], 0)

    def test_ma1_prediction_variance(self):
        """测试 MA(1) 一步预测的方差约为 theta^2 * sigma2"""
        theta = 0.6
        y = simulate_arma([], [theta], 1.0, 5000, seed=14)
        model = ArmaModel(ArmaSpec(0, 1), [], [theta], 1.0)
        variance = np.var(predict_in_sample(model, y))
        assert 0.9 * theta ** 2 <= variance <= 1.1 * theta ** 2


class TestLevelShift:
    """测试水平调整"""

    def test_exact_shift(self):
        actual = np.array([100000.0, 120000.0, 90000.0])
        adjustment = optimize_level_shift(actual - 9000, actual)

        assert adjustment.constant == pytest.approx(9000)
        assert adjustment.rmse_after == pytest.approx(0, abs=1e-9)
        assert adjustment.rmse_before == pytest.approx(9000)

    def test_no_shift_needed(self):
        actual = [1.0, 2.0, 3.0]
        assert optimize_level_shift(actual, actual).constant == 0.0

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(min_value=-1e5, max_value=1e5), min_size=1, max_size=30),
           st.integers(min_value=0, max_value=1000))
    def test_never_worse(self, actual, seed):
        actual = np.array(actual)
        pred = actual + np.random.default_rng(seed).normal(scale=100.0, size=actual.size)
        adjustment = optimize_level_shift(pred, actual)
        assert adjustment.rmse_after <= adjustment.rmse_before

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            optimize_level_shift([1.0, 2.0], [1.0])

    def test_beats_brute_force_scan(self):
        """测试闭式平移不差于 ±100000、步长 100 的穷举, 且在 ±1 处局部最优"""
        rng = np.random.default_rng(19)
        shifts = np.arange(-100000, 100001, 100, dtype=float)
        for _ in range(50):
            n = int(rng.integers(5, 80))
            actual = rng.normal(400000.0, 50000.0, size=n)
            pred = actual + rng.uniform(-80000, 80000) + rng.normal(scale=20000.0, size=n)
            adjustment = optimize_level_shift(pred, actual)

            errors = actual[None, :] - pred[None, :] - shifts[:, None]
            scan = np.sqrt(np.mean(errors ** 2, axis=1))
            assert adjustment.rmse_after <= scan.min() + 1e-6
            for step in (-1.0, 1.0):
                nudged = rmse(pred + adjustment.constant + step, actual)
                assert adjustment.rmse_after <= nudged


class TestSimulate:
    def test_seeded(self):
        first = simulate_arma([0.5], [0.3], 1.0, 100, seed=1)
        assert np.array_equal(first, simulate_arma([0.5], [0.3], 1.0, 100, seed=1))
        assert first.shape == (100,)

    def test_invalid(self):
        with pytest.raises(ValidationError):
            simulate_arma([0.5], [], -1.0, 10)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
