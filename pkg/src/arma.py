"""
ARMA 建模模块
精确高斯似然的 ARMA(p, q) 拟合、信息准则、网格搜索、样本内/滚动预测与水平调整

模型 (不含均值项):
    x_t = phi_1 x_{t-1} + ... + phi_p x_{t-p} + e_t + theta_1 e_{t-1} + ... + theta_q e_{t-q}
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, optimize, signal

from errors import ArmaFitError, ComputationError, ValidationError
from logger import get_logger
from stats_core import ResidualSeries, SeriesLike, as_array, rmse

WARM_STARTS = ("hannan_rissanen", "css")
MAX_RESTARTS = 5
STEADY_STATE_TOL = 1e-9
PENALTY = 1e10
PARAM_BOUND = 5.0
NESTING_TOL = 1e-3


@dataclass(frozen=True)
class ArmaSpec:
    """ARMA 阶数"""
    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise ValidationError(f"阶数不能为负: ({self.p}, {self.q})")

    @property
    def label(self) -> str:
        return f"ARMA({self.p}, {self.q})"

    def __str__(self) -> str:
        return self.label


@dataclass
class FitOptions:
    """优化器选项"""
    maxiter: int = 500
    restarts: int = MAX_RESTARTS
    seed: int = 0
    warm_start: str = "hannan_rissanen"
    compute_standard_errors: bool = False

    def __post_init__(self):
        if self.maxiter < 1:
            raise ValidationError(f"maxiter 必须为正整数, 实际为 {self.maxiter}")
        if not 0 <= self.restarts <= MAX_RESTARTS:
            raise ValidationError(f"restarts 必须在 [0, {MAX_RESTARTS}] 之间, 实际为 {self.restarts}")
        if self.warm_start not in WARM_STARTS:
            raise ValidationError(f"warm_start 必须是 {WARM_STARTS} 之一, 实际为 {self.warm_start}")


@dataclass(eq=False)
class ArmaModel:
    """拟合后的 ARMA 模型"""
    spec: ArmaSpec
    phi: np.ndarray
    theta: np.ndarray
    sigma2: float
    loglik: float = math.nan
    n: int = 0
    converged: bool = True
    standard_errors: Optional[np.ndarray] = None
    iterations: int = 0
    restarts: int = 0
    message: str = ""

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float).reshape(-1)
        self.theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if self.phi.size != self.spec.p or self.theta.size != self.spec.q:
            raise ValidationError(
                f"系数个数与阶数不一致: phi {self.phi.size}, theta {self.theta.size}, {self.spec}")
        if not self.sigma2 > 0:
            raise ValidationError(f"sigma2 必须为正, 实际为 {self.sigma2}")

    @property
    def coefficients(self) -> Dict[str, float]:
        names = {f"phi_{i + 1}": float(v) for i, v in enumerate(self.phi)}
        names.update({f"theta_{j + 1}": float(v) for j, v in enumerate(self.theta)})
        return names

    def ar_roots(self) -> np.ndarray:
        """AR 多项式 1 - sum phi_i z^i 的根"""
        return _polynomial_roots(-self.phi)

    def ma_roots(self) -> np.ndarray:
        """MA 多项式 1 + sum theta_j z^j 的根"""
        return _polynomial_roots(self.theta)

    def to_dict(self) -> Dict[str, Any]:
        result = {
            'p': self.spec.p,
            'q': self.spec.q,
            'phi': self.phi.tolist(),
            'theta': self.theta.tolist(),
            'sigma2': self.sigma2,
            'loglik': self.loglik,
            'n': self.n,
            'converged': self.converged,
            'iterations': self.iterations,
            'restarts': self.restarts,
            'message': self.message,
        }
        if self.standard_errors is not None:
            result['standard_errors'] = [None if not math.isfinite(v) else float(v)
                                         for v in self.standard_errors]
        if self.converged and self.n > 0 and math.isfinite(self.loglik):
            result.update(information_criteria(self)._asdict())
        return result


def _polynomial_roots(coefficients: np.ndarray) -> np.ndarray:
    """多项式 1 + c_1 z + ... + c_k z^k 的根"""
    if coefficients.size == 0:
        return np.zeros(0, dtype=complex)
    return np.roots(np.r_[1.0, coefficients][::-1])


# ---------------------------------------------------------------------------
# 参数变换: 无约束参数 -> 偏自相关 (tanh) -> 系数 (Durbin-Levinson 升阶)
# ---------------------------------------------------------------------------

def _step_up(partials: np.ndarray) -> np.ndarray:
    coefficients = np.zeros(0)
    for a in partials:
        coefficients = np.append(coefficients - a * coefficients[::-1], a)
    return coefficients


def _step_down(coefficients: np.ndarray) -> Optional[np.ndarray]:
    current = np.asarray(coefficients, dtype=float)
    partials = np.zeros(current.size)
    for k in range(current.size, 0, -1):
        a = current[-1]
        if not abs(a) < 1:
            return None
        partials[k - 1] = a
        head = current[:-1]
        current = (head + a * head[::-1]) / (1.0 - a * a)
    return partials


def params_to_coefficients(u: np.ndarray, p: int, q: int) -> Tuple[np.ndarray, np.ndarray]:
    """无约束参数映射为平稳、可逆的 (phi, theta)"""
    u = np.asarray(u, dtype=float)
    phi = _step_up(np.tanh(u[:p]))
    theta = -_step_up(np.tanh(u[p:p + q]))
    return phi, theta


def _to_params(coefficients: np.ndarray) -> np.ndarray:
    """_step_up 的逆变换; 不满足平稳性时逐步收缩系数"""
    shrunk = np.asarray(coefficients, dtype=float)
    for _ in range(50):
        partials = _step_down(shrunk)
        if partials is not None:
            return np.arctanh(np.clip(partials, -0.99, 0.99))
        shrunk = shrunk * 0.9 ** np.arange(1, shrunk.size + 1)
    return np.zeros(shrunk.size)


def coefficients_to_params(phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    return np.r_[_to_params(phi), _to_params(-np.asarray(theta, dtype=float))]


# ---------------------------------------------------------------------------
# 状态空间新息递推
# ---------------------------------------------------------------------------

def _state_space(phi: np.ndarray, theta: np.ndarray):
    p, q = phi.size, theta.size
    r = max(p, q + 1)
    transition = np.zeros((r, r))
    transition[:p, 0] = phi
    if r > 1:
        transition[:-1, 1:] = np.eye(r - 1)
    loading = np.zeros(r)
    loading[0] = 1.0
    loading[1:q + 1] = theta
    return transition, np.outer(loading, loading)


def innovations(y: np.ndarray, phi: np.ndarray, theta: np.ndarray,
                tol: float = STEADY_STATE_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """
    Kalman 滤波计算一步预测新息 v_t 及其相对方差 F_t (sigma2 = 1)

    初始协方差取平稳解; 当 F_t 收敛到 1 后, 剩余新息由等价的逆 ARMA 滤波直接计算

    Returns:
        (v, F)
    """
    p, q = phi.size, theta.size
    n = y.size
    transition, noise = _state_space(phi, theta)
    covariance = linalg.solve_discrete_lyapunov(transition, noise)
    state = np.zeros(transition.shape[0])
    v = np.empty(n)
    variances = np.ones(n)
    warmup = max(p, q)

    for t in range(n):
        f = covariance[0, 0]
        if not (np.isfinite(f) and f > 0):
            raise ComputationError(f"新息方差在 t = {t + 1} 处非正")
        if t >= warmup and abs(f - 1.0) < tol:
            b = np.r_[1.0, -phi]
            a = np.r_[1.0, theta]
            past_v = v[t - warmup:t][::-1]
            past_y = y[t - warmup:t][::-1]
            zi = signal.lfiltic(b, a, past_v, past_y)
            v[t:], _ = signal.lfilter(b, a, y[t:], zi=zi)
            break
        v[t] = y[t] - state[0]
        variances[t] = f
        gain = transition @ covariance[:, 0] / f
        state = transition @ state + gain * v[t]
        covariance = transition @ covariance @ transition.T + noise - f * np.outer(gain, gain)

    return v, variances


def profile_loglik(y: np.ndarray, phi: np.ndarray, theta: np.ndarray) -> Tuple[float, float]:
    """
    集中 (profile) 似然: sigma2 取其极大似然估计

    Returns:
        (loglik, sigma2)
    """
    n = y.size
    v, variances = innovations(y, phi, theta)
    sigma2 = float(np.mean(v * v / variances))
    loglik = -0.5 * n * (math.log(2.0 * math.pi) + 1.0 + math.log(sigma2)) \
        - 0.5 * float(np.sum(np.log(variances)))
    return loglik, sigma2


# ---------------------------------------------------------------------------
# 初值
# ---------------------------------------------------------------------------

def _lag_matrix(x: np.ndarray, lags: int, start: int) -> np.ndarray:
    """第 j 列为 x_{t-j}, t = start..n-1"""
    n = x.size
    return np.column_stack([x[start - j:n - j] for j in range(1, lags + 1)]) \
        if lags else np.zeros((n - start, 0))


def hannan_rissanen(y: np.ndarray, p: int, q: int) -> Tuple[np.ndarray, np.ndarray]:
    """两阶段长 AR 回归初值"""
    n = y.size
    if q == 0:
        if n - p <= p:
            return np.zeros(p), np.zeros(0)
        coef, *_ = np.linalg.lstsq(_lag_matrix(y, p, p), y[p:], rcond=None)
        return coef, np.zeros(0)

    long_order = max(int(math.log(n) ** 2), 2 * max(p, q))
    long_order = min(long_order, n // 3)
    start = long_order + max(p, q)
    if long_order < 1 or n - start <= p + q:
        return np.zeros(p), np.zeros(q)

    ar_coef, *_ = np.linalg.lstsq(_lag_matrix(y, long_order, long_order), y[long_order:], rcond=None)
    residuals = np.zeros(n)
    residuals[long_order:] = y[long_order:] - _lag_matrix(y, long_order, long_order) @ ar_coef

    design = np.column_stack([_lag_matrix(y, p, start), _lag_matrix(residuals, q, start)])
    coef, *_ = np.linalg.lstsq(design, y[start:], rcond=None)
    return coef[:p], coef[p:]


def _css(u: np.ndarray, y: np.ndarray, p: int, q: int) -> float:
    phi, theta = params_to_coefficients(u, p, q)
    v = signal.lfilter(np.r_[1.0, -phi], np.r_[1.0, theta], y)
    value = float(np.mean(v[max(p, q):] ** 2))
    return value if np.isfinite(value) else PENALTY


def initial_params(y: np.ndarray, spec: ArmaSpec, warm_start: str) -> np.ndarray:
    phi, theta = hannan_rissanen(y, spec.p, spec.q)
    u = coefficients_to_params(phi, theta)
    if warm_start == "css":
        bounds = [(-PARAM_BOUND, PARAM_BOUND)] * u.size
        with np.errstate(all='ignore'):
            result = optimize.minimize(_css, u, args=(y, spec.p, spec.q), method='L-BFGS-B',
                                       bounds=bounds, options={'maxiter': 200})
        if np.isfinite(result.fun):
            u = result.x
    return u


# ---------------------------------------------------------------------------
# 拟合
# ---------------------------------------------------------------------------

def _negative_loglik(u: np.ndarray, y: np.ndarray, p: int, q: int) -> float:
    phi, theta = params_to_coefficients(u, p, q)
    try:
        with np.errstate(all='ignore'):
            loglik, _ = profile_loglik(y, phi, theta)
    except (ComputationError, linalg.LinAlgError, ValueError):
        return PENALTY
    return -loglik / y.size if np.isfinite(loglik) else PENALTY


def _numeric_hessian(func, x: np.ndarray) -> np.ndarray:
    k = x.size
    steps = 1e-4 * np.maximum(1.0, np.abs(x))
    hessian = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = steps[i]
            ej[j] = steps[j]
            value = (func(x + ei + ej) - func(x + ei - ej)
                     - func(x - ei + ej) + func(x - ei - ej)) / (4.0 * steps[i] * steps[j])
            hessian[i, j] = hessian[j, i] = value
    return hessian


def _standard_errors(y: np.ndarray, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    p = phi.size

    def negative(c):
        return -profile_loglik(y, c[:p], c[p:])[0]

    try:
        covariance = np.linalg.inv(_numeric_hessian(negative, np.r_[phi, theta]))
    except (np.linalg.LinAlgError, ComputationError):
        return np.full(phi.size + theta.size, np.nan)
    variances = np.diag(covariance)
    return np.where(variances > 0, np.sqrt(np.abs(variances)), np.nan)


def fit_arma(x: SeriesLike, spec: ArmaSpec, options: Optional[FitOptions] = None) -> ArmaModel:
    """
    以精确高斯似然拟合 ARMA(p, q)

    Args:
        x: 近似零均值的残差序列
        spec: 阶数 (p + q >= 1)
        options: 优化器选项

    Returns:
        ArmaModel; 若所有尝试都未收敛, converged 为 False

    Raises:
        ValidationError: 样本量 n <= p + q + 1
        ArmaFitError: 所有尝试的似然均非有限
    """
    options = options or FitOptions()
    logger = get_logger()
    y = np.asarray(as_array(x), dtype=float)
    n = y.size
    if spec.p + spec.q < 1:
        raise ValidationError(f"{spec} 没有可估计的参数")
    if n <= spec.p + spec.q + 1:
        raise ValidationError(f"样本量 ({n}) 不足以拟合 {spec}")

    start = initial_params(y, spec, options.warm_start)
    bounds = [(-PARAM_BOUND, PARAM_BOUND)] * start.size
    diagnostics: List[Dict[str, Any]] = []
    best = None
    attempts = 0

    for attempt in range(options.restarts + 1):
        attempts = attempt
        if attempt == 0:
            u0 = start
        else:
            rng = np.random.default_rng(options.seed + attempt)
            u0 = np.clip(start + rng.normal(scale=0.5, size=start.size), -PARAM_BOUND, PARAM_BOUND)
        result = optimize.minimize(_negative_loglik, u0, args=(y, spec.p, spec.q),
                                   method='L-BFGS-B', bounds=bounds,
                                   options={'maxiter': options.maxiter})
        finite = bool(np.isfinite(result.fun) and result.fun < PENALTY)
        diagnostics.append({'attempt': attempt, 'success': bool(result.success),
                            'objective': float(result.fun), 'message': str(result.message)})
        if finite and (best is None or result.fun < best.fun):
            best = result
        if finite and result.success:
            break
        logger.debug(f"{spec} 第 {attempt + 1} 次尝试未收敛: {result.message}")

    if best is None:
        raise ArmaFitError(f"{spec} 在所有 {len(diagnostics)} 次尝试中似然均非有限", diagnostics)

    phi, theta = params_to_coefficients(best.x, spec.p, spec.q)
    loglik, sigma2 = profile_loglik(y, phi, theta)
    if not best.success:
        logger.warning(f"{spec} 未收敛: {best.message}")

    standard_errors = _standard_errors(y, phi, theta) if options.compute_standard_errors else None
    return ArmaModel(spec=spec, phi=phi, theta=theta, sigma2=sigma2, loglik=loglik, n=n,
                     converged=bool(best.success), standard_errors=standard_errors,
                     iterations=int(best.nit), restarts=attempts, message=str(best.message))


class InformationCriteria(NamedTuple):
    """按观测数归一化的信息准则"""
    aic_n: float
    bic_n: float
    hmean_n: float


def information_criteria(m: ArmaModel, allow_unconverged: bool = False) -> InformationCriteria:
    """
    AIC/n, BIC/n 及二者的调和平均, k = p + q + 1 (含 sigma2)
    """
    if not m.converged and not allow_unconverged:
        raise ValidationError(f"{m.spec} 未收敛, 不能计算信息准则")
    if m.n < 1 or not math.isfinite(m.loglik):
        raise ValidationError(f"{m.spec} 没有有效的似然值")
    k = m.spec.p + m.spec.q + 1
    aic_n = (2.0 * k - 2.0 * m.loglik) / m.n
    bic_n = (k * math.log(m.n) - 2.0 * m.loglik) / m.n
    hmean_n = 2.0 * aic_n * bic_n / (aic_n + bic_n)
    return InformationCriteria(aic_n, bic_n, hmean_n)


# ---------------------------------------------------------------------------
# 网格搜索
# ---------------------------------------------------------------------------

@dataclass
class GridResult:
    """(p, q) 网格上的信息准则 (失败单元为 NaN)"""
    p_max: int
    q_max: int
    aic_n: np.ndarray
    bic_n: np.ndarray
    hmean_n: np.ndarray
    models: Dict[Tuple[int, int], ArmaModel] = field(default_factory=dict)
    failures: List[Tuple[int, int, str]] = field(default_factory=list)
    unconverged: List[Tuple[int, int]] = field(default_factory=list)
    nesting_violations: List[Tuple[Tuple[int, int], Tuple[int, int]]] = field(default_factory=list)

    def _best(self, scores: np.ndarray) -> Optional[ArmaSpec]:
        """只在收敛的单元中取最小值, 没有收敛单元时返回 None"""
        scores = np.array(scores, dtype=float)
        for p, q in self.unconverged:
            scores[p - 1, q - 1] = np.nan
        if np.all(np.isnan(scores)):
            return None
        flat = int(np.nanargmin(scores))
        p_index, q_index = np.unravel_index(flat, scores.shape)
        return ArmaSpec(int(p_index) + 1, int(q_index) + 1)

    @property
    def best_by_aic(self) -> Optional[ArmaSpec]:
        return self._best(self.aic_n)

    @property
    def best_by_bic(self) -> Optional[ArmaSpec]:
        return self._best(self.bic_n)

    @property
    def best_by_hmean(self) -> Optional[ArmaSpec]:
        return self._best(self.hmean_n)

    def score(self, metric: str) -> np.ndarray:
        return {'aic_n': self.aic_n, 'bic_n': self.bic_n, 'hmean_n': self.hmean_n}[metric]

    def to_dict(self) -> Dict[str, Any]:
        def matrix(values):
            return [[None if np.isnan(v) else float(v) for v in row] for row in values]

        return {
            'p_values': list(range(1, self.p_max + 1)),
            'q_values': list(range(1, self.q_max + 1)),
            'aic_n': matrix(self.aic_n),
            'bic_n': matrix(self.bic_n),
            'hmean_n': matrix(self.hmean_n),
            'best_by_aic': _pair(self.best_by_aic),
            'best_by_bic': _pair(self.best_by_bic),
            'best_by_hmean': _pair(self.best_by_hmean),
            'failures': [{'p': p, 'q': q, 'reason': reason} for p, q, reason in self.failures],
            'unconverged': [list(cell) for cell in self.unconverged],
            'nesting_violations': [{'smaller': list(a), 'larger': list(b)}
                                   for a, b in self.nesting_violations],
        }


def _pair(spec: Optional[ArmaSpec]) -> Optional[List[int]]:
    return None if spec is None else [spec.p, spec.q]


def _fit_cell(task: Tuple[np.ndarray, int, int, FitOptions]):
    values, p, q, options = task
    try:
        return p, q, fit_arma(values, ArmaSpec(p, q), options), None
    except (ComputationError, ValidationError, linalg.LinAlgError) as e:
        return p, q, None, str(e)


def _nesting_violations(models: Dict[Tuple[int, int], ArmaModel],
                        n: int) -> List[Tuple[Tuple[int, int], Tuple[int, int]]]:
    violations = []
    for (p, q), model in sorted(models.items()):
        for larger in ((p + 1, q), (p, q + 1)):
            bigger = models.get(larger)
            if bigger is not None and bigger.loglik < model.loglik - NESTING_TOL * n:
                violations.append(((p, q), larger))
    return violations


def grid_search(x: SeriesLike, p_max: int, q_max: int, options: Optional[FitOptions] = None,
                workers: int = 1) -> GridResult:
    """
    拟合 [1, p_max] x [1, q_max] 上的所有 ARMA(p, q)

    结果按 (p, q) 组装, 与执行顺序无关; 单元失败只记录不中断

    Raises:
        ComputationError: 所有单元都失败
    """
    if p_max < 1 or q_max < 1:
        raise ValidationError(f"p_max 和 q_max 必须 >= 1, 实际为 ({p_max}, {q_max})")
    options = options or FitOptions()
    logger = get_logger()
    values = np.asarray(as_array(x), dtype=float)
    tasks = [(values, p, q, options) for p in range(1, p_max + 1) for q in range(1, q_max + 1)]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            outcomes = list(executor.map(_fit_cell, tasks))
    else:
        outcomes = []
        for i, task in enumerate(tasks, 1):
            outcomes.append(_fit_cell(task))
            logger.debug(f"网格进度: {i}/{len(tasks)}")

    shape = (p_max, q_max)
    result = GridResult(p_max, q_max, np.full(shape, np.nan), np.full(shape, np.nan),
                        np.full(shape, np.nan))
    for p, q, model, error in sorted(outcomes, key=lambda o: (o[0], o[1])):
        if model is None:
            result.failures.append((p, q, error))
            logger.warning(f"ARMA({p}, {q}) 拟合失败: {error}")
            continue
        if not model.converged:
            result.unconverged.append((p, q))
        criteria = information_criteria(model, allow_unconverged=True)
        result.aic_n[p - 1, q - 1] = criteria.aic_n
        result.bic_n[p - 1, q - 1] = criteria.bic_n
        result.hmean_n[p - 1, q - 1] = criteria.hmean_n
        result.models[(p, q)] = model

    if not result.models:
        raise ComputationError(f"网格 {p_max} x {q_max} 中所有模型都拟合失败")

    result.nesting_violations = _nesting_violations(result.models, values.size)
    for smaller, larger in result.nesting_violations:
        logger.warning(f"嵌套似然异常: ARMA{larger} 的似然低于 ARMA{smaller}")
    if len(result.unconverged) == len(result.models):
        logger.warning(f"网格 {p_max} x {q_max} 中没有收敛的模型, 不选择最优阶数")
    else:
        logger.info(f"网格搜索完成: AIC 最优 {result.best_by_aic}, 调和平均最优 {result.best_by_hmean}")
    return result


# ---------------------------------------------------------------------------
# 预测
# ---------------------------------------------------------------------------

def predict_in_sample(m: ArmaModel, x: SeriesLike) -> np.ndarray:
    """一步预测 E[x_t | x_1..x_{t-1}]; 第一个预测为 0"""
    y = np.asarray(as_array(x), dtype=float)
    if y.size == 0:
        return np.zeros(0)
    v, _ = innovations(y, m.phi, m.theta)
    return y - v


def _contiguous(train: SeriesLike, test: SeriesLike):
    if isinstance(train, ResidualSeries) and isinstance(test, ResidualSeries):
        if test.origin_index != train.end_index + 1:
            raise ValidationError(
                f"测试集必须紧接训练集: 训练集结束于 t = {train.end_index}, "
                f"测试集开始于 t = {test.origin_index}")


def forecast_rolling(m: ArmaModel, train: SeriesLike, test: SeriesLike) -> np.ndarray:
    """参数固定, 状态随实际测试值推进的滚动一步预测"""
    _contiguous(train, test)
    history = as_array(train)
    full = np.r_[history, as_array(test)]
    return predict_in_sample(m, full)[history.size:]


def forecast_multistep(m: ArmaModel, train: SeriesLike, horizon: int) -> np.ndarray:
    """从训练集末尾出发的多步预测 (未来新息取 0)"""
    if horizon < 1:
        raise ValidationError(f"horizon 必须为正整数, 实际为 {horizon}")
    y = np.asarray(as_array(train), dtype=float)
    v, _ = innovations(y, m.phi, m.theta)
    p, q = m.spec.p, m.spec.q
    history = np.r_[np.zeros(p), y, np.zeros(horizon)]
    shocks = np.r_[np.zeros(q), v, np.zeros(horizon)]
    forecast = np.empty(horizon)
    for h in range(horizon):
        t = p + y.size + h
        s = q + y.size + h
        value = m.phi @ history[t - p:t][::-1] if p else 0.0
        value += m.theta @ shocks[s - q:s][::-1] if q else 0.0
        history[t] = value
        forecast[h] = value
    return forecast


@dataclass(frozen=True)
class LevelAdjustment:
    """加到预测上的常数及调整前后的 RMSE"""
    constant: float
    rmse_before: float
    rmse_after: float

    def apply(self, pred) -> np.ndarray:
        return np.asarray(pred, dtype=float) + self.constant

    def to_dict(self) -> Dict[str, float]:
        return {'constant': self.constant, 'rmse_before': self.rmse_before,
                'rmse_after': self.rmse_after}


def optimize_level_shift(pred: Sequence[float], actual: Sequence[float]) -> LevelAdjustment:
    """使 RMSE 最小的常数平移: 平均误差 mean(actual - pred)"""
    predicted = np.asarray(pred, dtype=float)
    observed = np.asarray(actual, dtype=float)
    before = rmse(predicted, observed)
    constant = float(np.mean(observed - predicted))
    after = rmse(predicted + constant, observed)
    if after > before:
        constant, after = 0.0, before
    return LevelAdjustment(constant=constant, rmse_before=before, rmse_after=after)


def simulate_arma(phi: Sequence[float], theta: Sequence[float], sigma2: float, n: int,
                  seed: int = 0, burn_in: int = 200) -> np.ndarray:
    """以固定种子模拟零均值 ARMA 序列"""
    if n < 1 or burn_in < 0:
        raise ValidationError(f"n 必须为正且 burn_in 非负: n = {n}, burn_in = {burn_in}")
    if not sigma2 > 0:
        raise ValidationError(f"sigma2 必须为正, 实际为 {sigma2}")
    rng = np.random.default_rng(seed)
    shocks = rng.normal(scale=math.sqrt(sigma2), size=n + burn_in)
    series = signal.lfilter(np.r_[1.0, np.asarray(theta, dtype=float)],
                            np.r_[1.0, -np.asarray(phi, dtype=float)], shocks)
    return series[burn_in:]
