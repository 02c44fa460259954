"""
异常定义模块
输入校验错误与数值计算错误分开, CLI 据此映射退出码
"""
from typing import Any, Dict, List, Optional


class CycleCastError(Exception):
    """所有 cyclecast 异常的基类"""

    exit_code = 2


class ValidationError(CycleCastError, ValueError):
    """输入数据或参数不合法 (退出码 1)"""

    exit_code = 1


class ComputationError(CycleCastError, RuntimeError):
    """数值计算失败 (退出码 2)"""

    exit_code = 2


class ArmaFitError(ComputationError):
    """ARMA 拟合失败, 附带每次重启的诊断信息"""

    def __init__(self, message: str, diagnostics: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class StageError(CycleCastError):
    """带有流水线阶段上下文的异常"""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"阶段 '{stage}' 失败: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, 'exit_code', 2)
