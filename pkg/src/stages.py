"""
流水线阶段架构
定义各个分析阶段的接口和编排机制
"""
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional

from errors import CycleCastError, StageError


class StageStatus(Enum):
    """阶段状态"""
    IDLE = "idle"
    RUNNING = "running"
    SUCCESS = "success"
    FAILED = "failed"
    SKIPPED = "skipped"


@dataclass
class StageResult:
    """阶段执行结果"""
    status: StageStatus
    output: Any
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)


class BaseStage(ABC):
    """流水线阶段基类"""

    def __init__(self, name: str):
        self.name = name
        self.status = StageStatus.IDLE
        self.errors: List[str] = []
        self.warnings: List[str] = []
        self.logger = None

    @abstractmethod
    def execute(self, context: Dict[str, Any]) -> StageResult:
        """
        执行阶段任务

        Args:
            context: 之前各阶段的输出 (按阶段名索引)

        Returns:
            阶段执行结果
        """

    def validate_input(self, context: Dict[str, Any]) -> bool:
        """检查上下文中是否具备所需的输入"""
        return True

    def set_logger(self, logger):
        """设置日志器"""
        self.logger = logger

    def log_info(self, message: str):
        """记录信息日志"""
        if self.logger:
            self.logger.info(f"[{self.name}] {message}")

    def log_error(self, message: str):
        """记录错误日志"""
        if self.logger:
            self.logger.error(f"[{self.name}] {message}")
        self.errors.append(message)

    def log_warning(self, message: str):
        """记录警告日志"""
        if self.logger:
            self.logger.warning(f"[{self.name}] {message}")
        self.warnings.append(message)


class FunctionStage(BaseStage):
    """
    由函数实现的阶段

    函数签名为 func(context, stage) -> output, 可以通过 stage.log_warning 记录非致命问题
    """

    def __init__(self, name: str, func: Callable[[Dict[str, Any], 'FunctionStage'], Any],
                 requires: Optional[List[str]] = None, description: str = ""):
        super().__init__(name)
        self.func = func
        self.requires = list(requires or [])
        self.description = description or name

    def validate_input(self, context: Dict[str, Any]) -> bool:
        return all(key in context for key in self.requires)

    def execute(self, context: Dict[str, Any]) -> StageResult:
        self.status = StageStatus.RUNNING
        if not self.validate_input(context):
            missing = [key for key in self.requires if key not in context]
            self.log_error(f"缺少输入: {', '.join(missing)}")
            self.status = StageStatus.FAILED
            return StageResult(StageStatus.FAILED, None, self.errors, self.warnings)

        started = time.perf_counter()
        output = self.func(context, self)
        self.status = StageStatus.SUCCESS
        return StageResult(StageStatus.SUCCESS, output, self.errors, self.warnings,
                           {'seconds': time.perf_counter() - started})


class PipelineOrchestrator:
    """流水线编排器 - 依次执行各阶段, 输出写入共享上下文"""

    def __init__(self, stages: List[BaseStage]):
        names = [stage.name for stage in stages]
        if len(set(names)) != len(names):
            raise ValueError(f"阶段名称重复: {names}")
        self.stages = stages
        self.logger = None
        self.results: Dict[str, StageResult] = {}

    def set_logger(self, logger):
        """设置所有阶段的日志器"""
        self.logger = logger
        for stage in self.stages:
            stage.set_logger(logger)

    def run(self, context: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """
        编排完整流程

        Args:
            context: 初始上下文

        Returns:
            包含所有阶段输出的上下文

        Raises:
            StageError: 某个阶段失败, 携带阶段名和原始异常
        """
        context = dict(context or {})
        total = len(self.stages)
        for i, stage in enumerate(self.stages, 1):
            if self.logger:
                self.logger.step(i, total, getattr(stage, 'description', stage.name))
            try:
                result = stage.execute(context)
            except Exception as e:  # noqa: BLE001
                stage.status = StageStatus.FAILED
                self.results[stage.name] = StageResult(StageStatus.FAILED, None, [str(e)],
                                                       stage.warnings)
                raise StageError(stage.name, e) from e
            self.results[stage.name] = result
            if result.status is StageStatus.FAILED:
                raise StageError(stage.name, CycleCastError("; ".join(result.errors)))
            context[stage.name] = result.output
        return context

    def collect_warnings(self) -> List[str]:
        """汇总所有阶段的警告"""
        return [f"{name}: {w}" for name, result in self.results.items() for w in result.warnings]

    def collect_errors(self) -> List[str]:
        return [f"{name}: {e}" for name, result in self.results.items() for e in result.errors]

    def get_stage_statuses(self) -> Dict[str, str]:
        """获取所有阶段的状态"""
        return {stage.name: stage.status.value for stage in self.stages}
