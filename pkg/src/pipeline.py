"""
端到端流水线
划分 → 趋势 → 去趋势 → 平稳性检验 → 谱分析 → 周期移除 → 网格搜索 → 候选模型 → 基线对比 → 报告

所有拟合统计量 (趋势、相位均值、ARMA 参数、水平调整) 只使用训练集
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from arma import (ArmaModel, ArmaSpec, FitOptions, GridResult, LevelAdjustment, fit_arma,
                  forecast_multistep, forecast_rolling, grid_search, information_criteria,
                  optimize_level_shift, predict_in_sample)
from config import PipelineConfig
from cycles import CycleSet, cycle_value_at, extract_cycle, remove_cycles_sequential
from errors import ArmaFitError, ComputationError, CycleCastError, ValidationError
from ingest import DailySeries, SplitSeries, split_train_test
from logger import get_logger
from spectral import (PeakSet, SpectralDensity, ar_spectrum, daniell_smooth, dominant_periods,
                      periodogram)
from stages import FunctionStage, PipelineOrchestrator
from stats_core import (AdfResult, CorrelogramResult, ResidualSeries, TrendModel, acf, adf_test,
                        detrend, fit_linear_trend, pacf, rmse)

MIN_TRAIN_DAYS = 30

__all__ = ['reconstruct', 'rmse', 'baseline_suite', 'run_pipeline', 'BaselineResult',
           'CandidateEvaluation', 'EvaluationReport']


def reconstruct(trend: TrendModel, cs: CycleSet, residual_pred, t_start: int) -> np.ndarray:
    """
    由趋势、周期和残差预测重建乘客数

    偏移 i 处的预测 = trend(t_start + i) + cycle(t_start + i) + residual_pred[i]
    """
    if t_start < 1:
        raise ValidationError(f"t_start 必须 >= 1, 实际为 {t_start}")
    residual = np.asarray(residual_pred, dtype=float)
    t = np.arange(t_start, t_start + residual.size)
    return trend.predict(t) + cycle_value_at(cs, t) + residual


@dataclass
class BaselineResult:
    """基线模型的测试集 RMSE"""
    name: str
    test_rmse: float
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {'model': self.name,
                'test_rmse': self.test_rmse if math.isfinite(self.test_rmse) else None,
                'error': self.error}


@dataclass(eq=False)
class CandidateEvaluation:
    """候选模型的评估结果"""
    spec: ArmaSpec
    level_adjust: bool
    model: Optional[ArmaModel] = None
    adjustment: float = 0.0
    residual_rmse_before: float = math.nan
    residual_rmse_after: float = math.nan
    train_rmse: float = math.nan
    test_rmse: float = math.nan
    error: Optional[str] = None
    train_predictions: Optional[np.ndarray] = None
    test_predictions: Optional[np.ndarray] = None
    residual_predictions: Optional[np.ndarray] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> Dict[str, Any]:
        def number(value):
            return float(value) if math.isfinite(value) else None

        result = {
            'model': self.spec.label,
            'p': self.spec.p,
            'q': self.spec.q,
            'level_adjust': self.level_adjust,
            'adjustment': self.adjustment,
            'residual_rmse_before': number(self.residual_rmse_before),
            'residual_rmse_after': number(self.residual_rmse_after),
            'train_rmse': number(self.train_rmse),
            'test_rmse': number(self.test_rmse),
            'error': self.error,
        }
        if self.model is not None:
            result['coefficients'] = self.model.coefficients
            result['sigma2'] = self.model.sigma2
            result['loglik'] = self.model.loglik
            result['converged'] = self.model.converged
            if self.model.converged:
                result.update(information_criteria(self.model)._asdict())
        return result


@dataclass(eq=False)
class EvaluationReport:
    """完整的评估报告 (to_dict 的结果自包含, 内嵌配置)"""
    config: PipelineConfig
    split: SplitSeries
    trend: TrendModel
    cycles: CycleSet
    final_residuals: ResidualSeries
    adf: Dict[str, AdfResult] = field(default_factory=dict)
    correlograms: Dict[str, CorrelogramResult] = field(default_factory=dict)
    spectra: Dict[str, SpectralDensity] = field(default_factory=dict)
    peaks: Dict[str, PeakSet] = field(default_factory=dict)
    grid: Optional[GridResult] = None
    candidates: List[CandidateEvaluation] = field(default_factory=list)
    baselines: List[BaselineResult] = field(default_factory=list)
    variance_steps: List[Tuple[int, float]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)

    def candidate_rows(self) -> List[Dict[str, Any]]:
        return [{'model': c.spec.label, 'adjustment': c.adjustment,
                 'train_rmse': c.train_rmse, 'test_rmse': c.test_rmse}
                for c in self.candidates]

    def baseline_rows(self) -> List[Dict[str, Any]]:
        return [{'model': b.name, 'test_rmse': b.test_rmse} for b in self.baselines]

    def to_dict(self) -> Dict[str, Any]:
        train, test = self.split.train, self.split.test
        return {
            'config': self.config.to_dict(),
            'data': {
                'train_start': train.start_date.isoformat(),
                'train_end': train.end_date.isoformat(),
                'test_start': test.start_date.isoformat(),
                'test_end': test.end_date.isoformat(),
                'n_train': len(train),
                'n_test': len(test),
            },
            'trend': self.trend.to_dict(),
            'adf': {name: result.to_dict() for name, result in self.adf.items()},
            'correlograms': {name: c.to_dict() for name, c in self.correlograms.items()},
            'peaks': {name: peaks.to_dict() for name, peaks in self.peaks.items()},
            'cycles': [{'period': c.period, 'amplitude': c.amplitude,
                        'phase_means': c.phase_means.tolist()} for c in self.cycles],
            'variance_after_removal': [{'period': p, 'variance': v} for p, v in self.variance_steps],
            'grid': self.grid.to_dict() if self.grid is not None else None,
            'candidates': [c.to_dict() for c in self.candidates],
            'baselines': [b.to_dict() for b in self.baselines],
            'warnings': list(self.warnings),
            'errors': list(self.errors),
        }


# ---------------------------------------------------------------------------
# 基线
# ---------------------------------------------------------------------------

def _ar1_without_cycles(split: SplitSeries, trend: TrendModel, options: FitOptions) -> float:
    n_train = len(split.train)
    train_residuals = detrend(split.train, trend)
    test_residuals = detrend(split.test, trend, origin_index=n_train + 1)
    model = fit_arma(train_residuals, ArmaSpec(1, 0), options)
    predictions = forecast_rolling(model, train_residuals, test_residuals)
    t = np.arange(n_train + 1, n_train + len(split.test) + 1)
    return rmse(trend.predict(t) + predictions, split.test.values)


def baseline_suite(split: SplitSeries, trend: TrendModel, cs: Optional[CycleSet] = None,
                   options: Optional[FitOptions] = None) -> List[BaselineResult]:
    """
    简单模型的测试集 RMSE

    均值、线性回归、线性回归 + 7 天周期 (由回归残差提取)、前一天持平、无周期移除的 AR(1)。
    cs 不参与计算, 7 天周期独立于流水线的顺序分解
    """
    options = options or FitOptions()
    logger = get_logger()
    train, test = split.train, split.test
    n_train = len(train)
    actual = test.values
    t_test = np.arange(n_train + 1, n_train + len(test) + 1)
    results = [BaselineResult('mean', rmse(np.full(len(test), train.values.mean()), actual))]

    trend_pred = trend.predict(t_test)
    results.append(BaselineResult('linear_regression', rmse(trend_pred, actual)))

    try:
        weekly = extract_cycle(detrend(train, trend), 7)
        results.append(BaselineResult('linear_regression_7day',
                                      rmse(trend_pred + weekly.value_at(t_test), actual)))
    except CycleCastError as e:
        results.append(BaselineResult('linear_regression_7day', math.nan, str(e)))

    persistence = np.r_[train.values[-1], actual[:-1]]
    results.append(BaselineResult('persistence', rmse(persistence, actual)))

    try:
        results.append(BaselineResult('ar1_no_cycles', _ar1_without_cycles(split, trend, options)))
    except CycleCastError as e:
        logger.warning(f"基线 AR(1) 拟合失败: {e}")
        results.append(BaselineResult('ar1_no_cycles', math.nan, str(e)))

    return results


# ---------------------------------------------------------------------------
# 候选模型
# ---------------------------------------------------------------------------

def evaluate_candidate(spec: ArmaSpec, level_adjust: bool, split: SplitSeries, trend: TrendModel,
                       cs: CycleSet, train_residuals: ResidualSeries,
                       test_residuals: ResidualSeries, forecast_mode: str,
                       options: FitOptions) -> CandidateEvaluation:
    """拟合一个候选模型并在训练/测试集上评估; 失败时记录错误而不抛出"""
    evaluation = CandidateEvaluation(spec=spec, level_adjust=level_adjust)
    try:
        model = fit_arma(train_residuals, spec, options)
    except (ArmaFitError, ComputationError, ValidationError) as e:
        evaluation.error = str(e)
        get_logger().warning(f"{spec} 拟合失败: {e}")
        return evaluation

    evaluation.model = model
    residual_pred = predict_in_sample(model, train_residuals)
    shift = optimize_level_shift(residual_pred, train_residuals.values)
    if not level_adjust:
        shift = LevelAdjustment(0.0, shift.rmse_before, shift.rmse_before)
    evaluation.adjustment = shift.constant
    evaluation.residual_rmse_before = shift.rmse_before
    evaluation.residual_rmse_after = shift.rmse_after
    evaluation.residual_predictions = residual_pred

    if forecast_mode == "multistep":
        test_pred = forecast_multistep(model, train_residuals, len(test_residuals))
    else:
        test_pred = forecast_rolling(model, train_residuals, test_residuals)

    train_recon = reconstruct(trend, cs, residual_pred, 1) + shift.constant
    test_recon = reconstruct(trend, cs, test_pred, test_residuals.origin_index) + shift.constant
    evaluation.train_predictions = train_recon
    evaluation.test_predictions = test_recon
    evaluation.train_rmse = rmse(train_recon, split.train.values)
    evaluation.test_rmse = rmse(test_recon, split.test.values)
    return evaluation


# ---------------------------------------------------------------------------
# 阶段
# ---------------------------------------------------------------------------

def _tolerant(stage: FunctionStage, label: str, func, *args):
    """执行可失败的诊断计算, 失败时记录警告并返回 None"""
    try:
        return func(*args)
    except CycleCastError as e:
        stage.log_warning(f"{label} 未完成: {e}")
        return None


def _build_stages(config: PipelineConfig) -> List[FunctionStage]:
    options = FitOptions(maxiter=config.fit_maxiter, restarts=config.fit_restarts, seed=config.seed)

    def split_stage(ctx, stage):
        series: DailySeries = ctx['series']
        if len(series) <= config.holdout_days + MIN_TRAIN_DAYS:
            raise ValidationError(
                f"序列长度 ({len(series)}) 必须大于 holdout_days + {MIN_TRAIN_DAYS} "
                f"({config.holdout_days + MIN_TRAIN_DAYS})")
        split = split_train_test(series, config.holdout_days)
        stage.log_info(f"训练集 {len(split.train)} 天, 测试集 {len(split.test)} 天")
        return split

    def trend_stage(ctx, stage):
        trend = fit_linear_trend(ctx['split'].train)
        stage.log_info(f"趋势: {trend.intercept:.2f} + {trend.slope:.4f} t")
        return trend

    def detrend_stage(ctx, stage):
        split, trend = ctx['split'], ctx['trend']
        train = detrend(split.train, trend)
        test = detrend(split.test, trend, origin_index=len(split.train) + 1)
        return train, test

    def diagnostics_stage(ctx, stage):
        train = ctx['split'].train
        detrended, _ = ctx['detrend']
        adf = {}
        for name, values in (('train', train.values), ('detrended', detrended)):
            result = _tolerant(stage, f"ADF ({name})", adf_test, values)
            if result is not None:
                adf[name] = result
        correlograms = {}
        max_lag = min(config.acf_max_lag, len(detrended) - 1)
        for name, func in (('acf', acf), ('pacf', pacf)):
            result = _tolerant(stage, name.upper(), func, detrended, max_lag)
            if result is not None:
                correlograms[name] = result
        return adf, correlograms

    def spectra_stage(ctx, stage):
        detrended, _ = ctx['detrend']
        raw = periodogram(detrended)
        spectra = {'raw': raw}
        largest_odd = len(raw) if len(raw) % 2 else len(raw) - 1
        span = min(config.spectrum_span, largest_odd)
        smoothed = _tolerant(stage, "Daniell 平滑", daniell_smooth, raw, span)
        if smoothed is not None:
            spectra['daniell'] = smoothed
        ar = _tolerant(stage, "AR 谱", ar_spectrum, detrended,
                       min(config.ar_max_order, len(detrended) - 1))
        if ar is not None:
            spectra['ar'] = ar
        peaks = {name: dominant_periods(s, config.n_peaks) for name, s in spectra.items()}
        if 'daniell' in peaks:
            stage.log_info(f"主导周期 (平滑周期图): {peaks['daniell'].periods}")
        return spectra, peaks

    def cycles_stage(ctx, stage):
        train, test = ctx['detrend']
        periods = [p for p in config.cycle_periods if p <= len(train)]
        dropped = sorted(set(config.cycle_periods) - set(periods))
        if dropped:
            stage.log_warning(f"周期 {dropped} 超过训练集长度, 已忽略")
        if periods:
            final_train, cs = remove_cycles_sequential(train, periods)
        else:
            final_train, cs = train, CycleSet()
        final_test = test.with_values(test.values - cycle_value_at(cs, test.index))

        steps, current = [], train.values
        for profile in cs:
            current = current - profile.value_at(train.index)
            steps.append((profile.period, float(np.var(current))))
        adf_final = _tolerant(stage, "ADF (final)", adf_test, final_train)
        final_correlograms = {}
        max_lag = min(config.acf_max_lag, len(final_train) - 1)
        for name, func in (('acf', acf), ('pacf', pacf)):
            result = _tolerant(stage, f"{name.upper()} (final)", func, final_train, max_lag)
            if result is not None:
                final_correlograms[f"final_{name}"] = result
        stage.log_info(f"已移除周期 {cs.periods}, 残差方差 {float(np.var(final_train.values)):.4g}")
        return final_train, final_test, cs, steps, adf_final, final_correlograms

    def grid_stage(ctx, stage):
        if not config.run_grid:
            return None
        final_train = ctx['cycles'][0]
        try:
            return grid_search(final_train, config.p_max, config.q_max, options, config.workers)
        except CycleCastError as e:
            stage.log_error(f"网格搜索失败: {e}")
            return None

    def candidates_stage(ctx, stage):
        split, trend = ctx['split'], ctx['trend']
        final_train, final_test, cs, _, _, _ = ctx['cycles']
        specs = [(ArmaSpec(*spec), bool(adjust))
                 for spec, adjust in zip(config.candidate_specs, config.level_adjust)]
        grid = ctx['grid']
        if grid is not None and config.auto_append_grid_specs:
            for extra in (grid.best_by_aic, grid.best_by_hmean):
                if extra is not None and all(extra != spec for spec, _ in specs):
                    specs.append((extra, True))
        evaluations = []
        for spec, adjust in specs:
            evaluation = evaluate_candidate(spec, adjust, split, trend, cs, final_train,
                                            final_test, config.forecast_mode, options)
            if evaluation.error:
                stage.log_warning(f"{spec}: {evaluation.error}")
            else:
                stage.log_info(f"{spec}: 训练 RMSE {evaluation.train_rmse:.2f}, "
                               f"测试 RMSE {evaluation.test_rmse:.2f}")
            evaluations.append(evaluation)
        return evaluations

    def baselines_stage(ctx, stage):
        return baseline_suite(ctx['split'], ctx['trend'], ctx['cycles'][2], options)

    return [
        FunctionStage('split', split_stage, ['series'], "划分训练/测试集"),
        FunctionStage('trend', trend_stage, ['split'], "拟合线性趋势"),
        FunctionStage('detrend', detrend_stage, ['split', 'trend'], "去趋势"),
        FunctionStage('diagnostics', diagnostics_stage, ['detrend'], "平稳性与相关函数"),
        FunctionStage('spectra', spectra_stage, ['detrend'], "谱分析"),
        FunctionStage('cycles', cycles_stage, ['detrend'], "顺序移除周期"),
        FunctionStage('grid', grid_stage, ['cycles'], "ARMA 网格搜索"),
        FunctionStage('candidates', candidates_stage, ['cycles', 'grid'], "拟合候选模型"),
        FunctionStage('baselines', baselines_stage, ['split', 'trend', 'cycles'], "基线对比"),
    ]


def run_pipeline(config: PipelineConfig, series: DailySeries) -> EvaluationReport:
    """
    运行完整实验

    Args:
        config: 流水线配置
        series: 完整的每日序列

    Returns:
        EvaluationReport; 候选模型与诊断的失败记录在报告中

    Raises:
        StageError: 必需阶段失败 (携带阶段名)
    """
    config.validate()
    logger = get_logger()
    logger.section("cyclecast 流水线")
    orchestrator = PipelineOrchestrator(_build_stages(config))
    orchestrator.set_logger(logger)
    ctx = orchestrator.run({'series': series})

    adf, correlograms = ctx['diagnostics']
    spectra, peaks = ctx['spectra']
    final_train, _, cs, steps, adf_final, final_correlograms = ctx['cycles']
    if adf_final is not None:
        adf['final'] = adf_final
    correlograms = {**correlograms, **final_correlograms}

    errors = orchestrator.collect_errors()
    errors += [f"{c.spec}: {c.error}" for c in ctx['candidates'] if c.error]
    report = EvaluationReport(
        config=config,
        split=ctx['split'],
        trend=ctx['trend'],
        cycles=cs,
        final_residuals=final_train,
        adf=adf,
        correlograms=correlograms,
        spectra=spectra,
        peaks=peaks,
        grid=ctx['grid'],
        candidates=ctx['candidates'],
        baselines=ctx['baselines'],
        variance_steps=steps,
        warnings=orchestrator.collect_warnings(),
        errors=errors,
    )
    logger.success(f"流水线完成: {len(report.candidates)} 个候选模型, {len(report.baselines)} 个基线")
    return report
