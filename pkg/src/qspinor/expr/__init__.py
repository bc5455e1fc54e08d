"""Expression trees: nodes, parser/printer, evaluator and simplifier."""

from qspinor.expr.evaluate import UnboundVariableError, evaluate
from qspinor.expr.nodes import (
    Add,
    Call,
    Const,
    Div,
    Exp,
    Expr,
    I_UNIT,
    Mul,
    Neg,
    ONE,
    Pow,
    Q,
    Sub,
    Var,
    ZERO,
    as_expr,
    free_vars,
    functions_used,
    substitute,
    var_kind,
)
from qspinor.expr.normal import equivalent, normalize, simplify
from qspinor.expr.parser import ExprSyntaxError, UnknownFunctionError, parse, to_text

__all__ = [
    "Add", "Call", "Const", "Div", "Exp", "Expr", "ExprSyntaxError", "I_UNIT", "Mul", "Neg", "ONE",
    "Pow", "Q", "Sub", "UnboundVariableError", "UnknownFunctionError", "Var", "ZERO", "as_expr",
    "equivalent", "evaluate", "free_vars", "functions_used", "normalize", "parse", "simplify",
    "substitute", "to_text", "var_kind",
]
