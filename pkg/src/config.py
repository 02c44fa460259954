"""
配置文件管理模块
管理分解/建模流水线的配置选项 (默认值对应默认研究配置)
"""
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Optional
import json
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from errors import ValidationError

FORECAST_MODES = ("rolling", "multistep")


@dataclass
class PipelineConfig:
    """流水线配置"""

    # 数据划分
    holdout_days: int = 61

    # 周期移除 (按升序依次移除)
    cycle_periods: List[int] = field(default_factory=lambda: [7, 30, 45, 182, 365])

    # 谱分析
    spectrum_span: int = 3
    ar_max_order: int = 30
    n_peaks: int = 6
    acf_max_lag: int = 40

    # ARMA 网格搜索
    run_grid: bool = True
    p_max: int = 10
    q_max: int = 10
    auto_append_grid_specs: bool = False

    # 候选模型及是否做水平调整
    candidate_specs: List[List[int]] = field(
        default_factory=lambda: [[9, 9], [6, 4], [1, 0]])
    level_adjust: List[bool] = field(default_factory=lambda: [True, True, False])

    # 预测
    forecast_mode: str = "rolling"

    # 优化器
    fit_maxiter: int = 500
    fit_restarts: int = 5
    workers: int = 1
    seed: int = 0

    # 日志配置
    verbose: bool = False
    use_color: bool = True

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> 'PipelineConfig':
        """从字典创建配置 (拒绝未知键)"""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(config_dict) - known)
        if unknown:
            raise ValidationError(f"未知的配置项: {', '.join(unknown)}")
        config = cls(**config_dict)
        config.validate()
        return config

    @classmethod
    def from_file(cls, config_file: str) -> 'PipelineConfig':
        """从 JSON 或 TOML 配置文件加载"""
        path = Path(config_file)
        if not path.exists():
            raise ValidationError(f"配置文件不存在: {config_file}")

        try:
            if path.suffix == '.toml':
                with open(path, 'rb') as f:
                    config_dict = tomllib.load(f)
            elif path.suffix == '.json':
                with open(path, 'r', encoding='utf-8') as f:
                    config_dict = json.load(f)
            else:
                raise ValidationError(f"不支持的配置格式: {path.suffix} (支持 .toml 和 .json)")
        except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
            raise ValidationError(f"配置文件解析失败 {config_file}: {e}") from e

        return cls.from_dict(config_dict)

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        return {
            'holdout_days': self.holdout_days,
            'cycle_periods': list(self.cycle_periods),
            'spectrum_span': self.spectrum_span,
            'ar_max_order': self.ar_max_order,
            'n_peaks': self.n_peaks,
            'acf_max_lag': self.acf_max_lag,
            'run_grid': self.run_grid,
            'p_max': self.p_max,
            'q_max': self.q_max,
            'auto_append_grid_specs': self.auto_append_grid_specs,
            'candidate_specs': [list(s) for s in self.candidate_specs],
            'level_adjust': list(self.level_adjust),
            'forecast_mode': self.forecast_mode,
            'fit_maxiter': self.fit_maxiter,
            'fit_restarts': self.fit_restarts,
            'workers': self.workers,
            'seed': self.seed,
            'verbose': self.verbose,
            'use_color': self.use_color,
        }

    def save_to_file(self, config_file: str):
        """保存配置到 JSON 文件"""
        path = Path(config_file)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2, ensure_ascii=False)

    def merge(self, other: 'PipelineConfig') -> 'PipelineConfig':
        """合并两个配置 (other 中与默认值不同的项优先)"""
        defaults = PipelineConfig().to_dict()
        merged_dict = self.to_dict()
        for key, value in other.to_dict().items():
            if value != defaults[key]:
                merged_dict[key] = value
        return PipelineConfig.from_dict(merged_dict)

    def with_overrides(self, **overrides: Optional[Any]) -> 'PipelineConfig':
        """用命令行参数覆盖配置 (None 表示未指定)"""
        changes = {k: v for k, v in overrides.items() if v is not None}
        config = replace(self, **changes)
        config.validate()
        return config

    def validate(self):
        """检查取值范围"""
        if self.holdout_days < 1:
            raise ValidationError(f"holdout_days 必须为正整数, 实际为 {self.holdout_days}")
        if any(p < 2 for p in self.cycle_periods):
            raise ValidationError(f"周期必须 >= 2: {self.cycle_periods}")
        if len(set(self.cycle_periods)) != len(self.cycle_periods):
            raise ValidationError(f"周期列表存在重复: {self.cycle_periods}")
        if self.p_max < 1 or self.q_max < 1:
            raise ValidationError("p_max 和 q_max 必须 >= 1")
        if self.spectrum_span < 1 or self.spectrum_span % 2 == 0:
            raise ValidationError(f"spectrum_span 必须为正奇数, 实际为 {self.spectrum_span}")
        if self.ar_max_order < 1 or self.n_peaks < 1 or self.acf_max_lag < 1:
            raise ValidationError("ar_max_order, n_peaks, acf_max_lag 必须 >= 1")
        for spec in self.candidate_specs:
            if len(spec) != 2 or min(spec) < 0 or sum(spec) < 1:
                raise ValidationError(f"非法的候选阶数: {spec}")
        if len(self.level_adjust) != len(self.candidate_specs):
            raise ValidationError("level_adjust 的长度必须与 candidate_specs 一致")
        if self.forecast_mode not in FORECAST_MODES:
            raise ValidationError(
                f"forecast_mode 必须是 {FORECAST_MODES} 之一, 实际为 {self.forecast_mode}")
        if self.fit_maxiter < 1 or not 0 <= self.fit_restarts <= 5 or self.workers < 1:
            raise ValidationError("fit_maxiter >= 1, 0 <= fit_restarts <= 5, workers >= 1")


def get_default_config() -> PipelineConfig:
    """获取默认配置 (默认研究配置)"""
    return PipelineConfig()
