"""
配置、日志与阶段编排测试
"""
import logging
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from config import PipelineConfig, get_default_config
from errors import StageError, ValidationError
from logger import get_logger, set_verbose
from stages import FunctionStage, PipelineOrchestrator, StageStatus


class TestPipelineConfig:
    """测试流水线配置"""

    def test_defaults(self):
        """测试默认值"""
        config = get_default_config()
        assert config.holdout_days == 61
        assert config.cycle_periods == [7, 30, 45, 182, 365]
        assert config.candidate_specs == [[9, 9], [6, 4], [1, 0]]
        assert config.level_adjust == [True, True, False]
        assert config.forecast_mode == "rolling"

    def test_from_toml(self, tmp_path):
        path = tmp_path / "pipeline.toml"
        path.write_text('holdout_days = 30\ncycle_periods = [7, 30]\n'
                        'candidate_specs = [[1, 0]]\nlevel_adjust = [false]\n', encoding='utf-8')
        config = PipelineConfig.from_file(str(path))
        assert config.holdout_days == 30
        assert config.candidate_specs == [[1, 0]]
        assert config.p_max == 10

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "pipeline.json"
        config = PipelineConfig(holdout_days=45, seed=3)
        config.save_to_file(str(path))
        assert PipelineConfig.from_file(str(path)).to_dict() == config.to_dict()

    def test_unknown_key(self):
        with pytest.raises(ValidationError):
            PipelineConfig.from_dict({'holdout': 61})

    def test_missing_file_and_bad_format(self, tmp_path):
        with pytest.raises(ValidationError):
            PipelineConfig.from_file(str(tmp_path / "missing.toml"))
        path = tmp_path / "pipeline.yaml"
        path.write_text("holdout_days: 3\n", encoding='utf-8')
        with pytest.raises(ValidationError):
            PipelineConfig.from_file(str(path))

    @pytest.mark.parametrize("changes", [
        {'spectrum_span': 4},
        {'cycle_periods': [7, 7]},
        {'forecast_mode': 'direct'},
        {'level_adjust': [True]},
        {'candidate_specs': [[0, 0], [1, 0], [1, 1]]},
        {'fit_restarts': 6},
    ])
    def test_invalid_values(self, changes):
        with pytest.raises(ValidationError):
            PipelineConfig.from_dict(changes)

    def test_overrides_ignore_none(self):
        """测试命令行覆盖: None 表示未指定"""
        config = PipelineConfig(holdout_days=30).with_overrides(holdout_days=None, seed=5)
        assert config.holdout_days == 30
        assert config.seed == 5

    def test_merge(self):
        merged = PipelineConfig(holdout_days=30).merge(PipelineConfig(seed=9))
        assert merged.holdout_days == 30
        assert merged.seed == 9


class TestLogger:
    """测试日志"""

    def test_singleton(self):
        assert get_logger() is get_logger()

    def test_set_verbose(self):
        logger = get_logger()
        set_verbose(True)
        assert logger.logger.level == logging.DEBUG
        set_verbose(False)
        assert logger.logger.level == logging.INFO


class TestOrchestrator:
    """测试阶段编排"""

    def test_outputs_flow_through_context(self):
        stages = [
            FunctionStage('a', lambda ctx, stage: 2),
            FunctionStage('b', lambda ctx, stage: ctx['a'] * 3, ['a']),
        ]
        orchestrator = PipelineOrchestrator(stages)
        ctx = orchestrator.run()

        assert ctx['b'] == 6
        assert orchestrator.get_stage_statuses() == {'a': 'success', 'b': 'success'}

    def test_failure_carries_stage_name(self):
        """测试阶段异常被包装并携带阶段名"""
        def fail(ctx, stage):
            raise ValidationError("bad input")

        orchestrator = PipelineOrchestrator([FunctionStage('split', fail)])
        with pytest.raises(StageError) as info:
            orchestrator.run()
        assert info.value.stage == 'split'
        assert info.value.exit_code == 1
        assert orchestrator.get_stage_statuses()['split'] == StageStatus.FAILED.value

    def test_unexpected_exception_is_computation_failure(self):
        def crash(ctx, stage):
            raise ZeroDivisionError("boom")

        with pytest.raises(StageError) as info:
            PipelineOrchestrator([FunctionStage('fit', crash)]).run()
        assert info.value.exit_code == 2

    def test_missing_input(self):
        orchestrator = PipelineOrchestrator([FunctionStage('b', lambda ctx, s: 1, ['a'])])
        with pytest.raises(StageError):
            orchestrator.run()
        assert orchestrator.collect_errors()

    def test_warnings_collected(self):
        def warn(ctx, stage):
            stage.log_warning("partial")
            return None

        orchestrator = PipelineOrchestrator([FunctionStage('diag', warn)])
        orchestrator.run()
        assert orchestrator.collect_warnings() == ["diag: partial"]

    def test_duplicate_names(self):
        with pytest.raises(ValueError):
            PipelineOrchestrator([FunctionStage('a', lambda c, s: 1),
                                  FunctionStage('a', lambda c, s: 2)])


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
