"""q-deformed spinor calculus: Clifford algebra, q-derivatives, q-operators,
Neumann-series integrals and series solvers with residual audits."""

__version__ = "0.1.0"

from qspinor.clifford import (  # noqa: E402
    DEFAULT_SIGNATURE,
    GammaSet,
    Multivector,
    Signature,
    gamma_default,
    gamma_set,
    generators,
)
from qspinor.expr import evaluate, parse, simplify, to_text  # noqa: E402
from qspinor.qderiv import QContext, chain_rule, directional_qdiff, jackson_deriv, modified_qderiv  # noqa: E402

__all__ = [
    "DEFAULT_SIGNATURE", "GammaSet", "Multivector", "QContext", "Signature", "__version__", "chain_rule",
    "directional_qdiff", "evaluate", "gamma_default", "gamma_set", "generators", "jackson_deriv",
    "modified_qderiv", "parse", "simplify", "to_text",
]
