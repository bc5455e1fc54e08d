"""Neumann series, Jackson lattice integrals, and the integral-formula audit.

The series ``(1/(q b)) * sum_n [gamma_mu Psi(u(x0))]^n`` is the computable
object. Its claimed equality with a contour integral of ``Psi`` is only
measured (:func:`audit_integral_identity`), never asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from qspinor import kernels
from qspinor.clifford import (
    DEFAULT_SIGNATURE,
    GammaSet,
    Multivector,
    Signature,
    generator_matrix,
    spectral_radius,
)
from qspinor.expr import as_expr, evaluate, substitute
from qspinor.expr.evaluate import as_matrix
from qspinor.qderiv import QContext


class SeriesDivergenceError(ArithmeticError):
    """A Neumann series was asked for a value but its spectral radius is >= 1."""

    def __init__(self, message: str, result: "NeumannResult"):
        super().__init__(message)
        self.result = result


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None


def matrix_to_json(m) -> list | None:
    """``[[[re, im], ...], ...]``, non-finite parts as ``null``."""
    if m is None:
        return None
    m = np.atleast_2d(np.asarray(m, dtype=np.complex128))
    return [[[_finite_or_none(float(z.real)), _finite_or_none(float(z.imag))] for z in row] for row in m]


@dataclass
class NeumannResult:
    value: np.ndarray
    terms_used: int
    rho: float
    converged: bool
    closed_form: np.ndarray | None
    last_term_norm: float = 0.0

    @property
    def error(self) -> float | None:
        """Max-norm distance to ``(I - M)^-1`` when that exists."""
        if self.closed_form is None:
            return None
        return float(np.max(np.abs(self.value - self.closed_form)))

    def to_dict(self) -> dict:
        err = self.error
        return {
            "value": matrix_to_json(self.value),
            "terms_used": self.terms_used,
            "rho": _finite_or_none(self.rho),
            "converged": self.converged,
            "closed_form": matrix_to_json(self.closed_form),
            "error_vs_closed_form": None if err is None else _finite_or_none(err),
        }


def neumann_series(m, ctx: QContext | None = None) -> NeumannResult:
    """``I + M + M^2 + ...`` with a spectral-radius gate.

    Terms are summed left to right. With ``rho = spectral_radius(M) < 1`` the
    loop stops after adding a term whose max-norm is below
    ``tol * (1 - rho)``, which bounds the geometric tail by about ``tol``.
    Reaching ``max_terms`` first leaves ``converged`` false. With
    ``rho >= 1`` the partial sum at the cap (or at the first overflow) is
    returned, unconverged. ``closed_form`` is ``(I - M)^-1`` whenever
    ``I - M`` is invertible.
    """
    ctx = ctx or QContext()
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"Neumann series needs a square matrix, got shape {m.shape}")
    n = m.shape[0]
    rho = spectral_radius(m) if n else 0.0
    eye = np.eye(n, dtype=np.complex128)
    try:
        closed = np.linalg.inv(eye - m)
        if not np.all(np.isfinite(closed)):
            closed = None
    except np.linalg.LinAlgError:
        closed = None

    if rho < 1:
        stop = ctx.tol * (1.0 - rho)
    else:
        stop = 0.0  # never met: run to the cap or to overflow
    with np.errstate(over="ignore", invalid="ignore"):
        value, used, last = kernels.neumann_sum(m, stop, int(ctx.max_terms))
    value = np.asarray(value)
    converged = bool(rho < 1 and last < stop)
    return NeumannResult(value, int(used), float(rho), converged, closed, float(last))


@dataclass(frozen=True)
class QContour:
    """Geometric lattice ``{x0 * q^k : k = 0..K}`` standing in for a closed q-contour."""

    x0: complex = 1.0
    K: int = 200

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")
        if self.x0 == 0:
            raise ValueError("the lattice base point must be non-zero")

    def points(self, q: float) -> np.ndarray:
        return complex(self.x0) * q ** np.arange(self.K + 1, dtype=float)

    def metadata(self) -> dict:
        return {"x0": [complex(self.x0).real, complex(self.x0).imag], "K": self.K, "closed": False,
                "kind": "q-geometric lattice"}


def _as_array(v) -> np.ndarray:
    if isinstance(v, Multivector):
        raise TypeError("integrands must be scalar or matrix valued")
    return np.atleast_1d(np.asarray(v, dtype=np.complex128))


def jackson_contour_integral(f, var: str, contour: QContour, ctx: QContext, binding: Mapping | None = None):
    """``(1 - q) * sum_{k=0..K} q^k x0 f(q^k x0)``.

    Returns a complex scalar for scalar integrands, else a matrix.
    """
    f = as_expr(f)
    q = ctx.q
    rows = []
    shape = None
    for x in contour.points(q):
        try:
            v = evaluate(f, ctx.bind({**(binding or {}), var: x}))
        except (ZeroDivisionError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"integrand cannot be evaluated at {var} = {x}: {exc}") from exc
        arr = _as_array(v)
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            arr = _as_array(as_matrix(v, shape[0])) if shape != (1,) else None
            if arr is None or arr.shape != shape:
                raise ValueError("integrand changes shape across the lattice")
        rows.append(arr.ravel())
    if shape is None:
        return 0j
    total = kernels.jackson_sum(np.array(rows), complex(contour.x0), q)
    if shape == (1,):
        return complex(total[0])
    return np.asarray(total).reshape(shape)


def _psi_at(psi, u_of_x, x0, var: str, u: str, ctx: QContext, binding: Mapping | None):
    env = ctx.bind(binding)
    u_val = evaluate(as_expr(u_of_x), {**env, var: x0})
    return evaluate(as_expr(psi), {**env, u: u_val})


def _times(gamma_mu: np.ndarray, value) -> np.ndarray:
    if isinstance(value, np.ndarray):
        if value.shape != gamma_mu.shape:
            raise ValueError(f"Psi has shape {value.shape}, gamma has {gamma_mu.shape}")
        return gamma_mu @ value
    if isinstance(value, Multivector):
        raise TypeError("Psi must be scalar or matrix valued")
    return gamma_mu * complex(value)


def integral_formula_series(psi, u_of_x, gamma: GammaSet, mu: int, x0, ctx: QContext, *,
                            var: str = "x", u: str = "u", binding: Mapping | None = None) -> NeumannResult:
    """Neumann series of ``gamma_mu * Psi(u(x0))``."""
    value = _psi_at(psi, u_of_x, x0, var, u, ctx, binding)
    return neumann_series(_times(gamma[mu], value), ctx)


def integral_formula_rhs(psi, u_of_x, gamma: GammaSet, mu: int, x0, b: float, ctx: QContext, *,
                         var: str = "x", u: str = "u", binding: Mapping | None = None) -> np.ndarray:
    """``(1/(q b)) * sum_n [gamma_mu Psi(u(x0))]^n``.

    Raises :class:`SeriesDivergenceError` when the series does not converge
    and ``ValueError`` for ``b == 0``.
    """
    if b == 0:
        raise ValueError("b must be non-zero")
    series = integral_formula_series(psi, u_of_x, gamma, mu, x0, ctx, var=var, u=u, binding=binding)
    if not series.converged:
        raise SeriesDivergenceError(f"series did not converge (rho = {series.rho:.6g})", series)
    # divide by q then by b, so rhs(b) is exactly rhs(1) / b
    return (series.value / ctx.q) / b


def metric_dual(m: np.ndarray) -> np.ndarray:
    """``e^mu`` for a generator matrix with ``e_mu^2 = +-1``: its inverse, ``+-e_mu``."""
    sq = m @ m
    eye = np.eye(m.shape[0])
    if np.allclose(sq, eye):
        return m
    if np.allclose(sq, -eye):
        return -m
    raise ValueError("generator matrix does not square to +-1")


@dataclass
class IntegralAudit:
    lhs: np.ndarray
    rhs: np.ndarray | None
    abs_discrepancy: float | None
    rel_discrepancy: float | None
    series: NeumannResult
    contour: dict
    variant: str
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "lhs": matrix_to_json(self.lhs),
            "rhs": matrix_to_json(self.rhs),
            "abs_discrepancy": None if self.abs_discrepancy is None else _finite_or_none(self.abs_discrepancy),
            "rel_discrepancy": None if self.rel_discrepancy is None else _finite_or_none(self.rel_discrepancy),
            "series": self.series.to_dict(),
            "contour": self.contour,
            "notes": list(self.notes),
        }


def _discrepancy(lhs: np.ndarray, rhs: np.ndarray) -> tuple[float, float]:
    diff = float(np.max(np.abs(lhs - rhs)))
    scale = float(np.max(np.abs(rhs)))
    return diff, diff / scale if scale > 0 else math.inf


def audit_integral_identity(psi, u_of_x, gamma: GammaSet, mu: int, contour: QContour, b: float, ctx: QContext, *,
                            var: str = "x", u: str = "u", binding: Mapping | None = None,
                            variant: str = "gamma", sig: Signature = DEFAULT_SIGNATURE) -> IntegralAudit:
    """Compare the lattice integral of ``Psi(u(x))`` with the series formula.

    ``variant="gamma"``: lhs ``sum Psi d^q x`` (times the identity) against
    ``(1/(q b)) sum [gamma_mu Psi(u(x0))]^n``.
    ``variant="e"``: lhs ``(sum Psi d^q x) * e_mu`` against
    ``(e^mu/(q b)) sum [e_mu Psi(u(x0))]^n``, generators as matrices; ``mu``
    is then a 1-based generator index of ``sig``.

    Never raises on a mismatch or a divergent series; the report says what happened.
    """
    if b == 0:
        raise ValueError("b must be non-zero")
    composed = substitute(as_expr(psi), u, as_expr(u_of_x))
    integral = jackson_contour_integral(composed, var, contour, ctx, binding)
    notes: list[str] = []
    value = _psi_at(psi, u_of_x, contour.x0, var, u, ctx, binding)

    if variant == "gamma":
        prefactor = gamma[mu]
        left_factor = None
    elif variant == "e":
        prefactor = generator_matrix(sig, mu)
        left_factor = metric_dual(prefactor)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    dim = prefactor.shape[0]
    series = neumann_series(_times(prefactor, value), ctx)
    lhs = as_matrix(integral, dim) if not isinstance(integral, np.ndarray) else integral
    if left_factor is not None:
        lhs = lhs @ prefactor

    with np.errstate(all="ignore"):
        rhs = (series.value / ctx.q) / b
        if left_factor is not None:
            rhs = left_factor @ rhs
    if not series.converged:
        notes.append(f"series not converged (rho = {series.rho:.6g}); rhs is the partial sum")
    if not np.all(np.isfinite(rhs)):
        notes.append("rhs is not finite")
        abs_d = rel_d = None
    else:
        abs_d, rel_d = _discrepancy(lhs, rhs)
    return IntegralAudit(lhs, rhs, abs_d, rel_d, series, contour.metadata(), variant, notes)
