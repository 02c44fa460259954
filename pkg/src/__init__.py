"""
cyclecast
每日出租车乘客数的趋势/周期分解与 ARMA 预测

模块之间使用绝对导入, 运行时需要把 src/ 加入 sys.path (安装后由 py_modules 提供)
"""

__version__ = "1.0.0"
