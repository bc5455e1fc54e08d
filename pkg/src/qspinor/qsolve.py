"""Series solutions of first-order q-spinor equations, with residual audits.

Each solver evaluates a closed-form (or implicit) Neumann-series formula
pointwise. The formulas are derived under a contour normalization that is
postulated rather than proved, so every report also carries an independent
residual: the equation's left-hand side with the solution substituted and
all q-derivatives taken as numeric Jackson quotients on ``{x, q x}``. The
residual is the ground truth; the series is just the formula.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from qspinor.clifford import (
    DEFAULT_SIGNATURE,
    GammaSet,
    Signature,
    gamma_default,
    generator_matrix,
)
from qspinor.expr import Expr, as_expr, evaluate
from qspinor.expr.evaluate import as_matrix
from qspinor.qderiv import QContext
from qspinor.qintegral import NeumannResult, SeriesDivergenceError, matrix_to_json, metric_dual, neumann_series

DAMPING = 0.5
MAX_FIXED_POINT_ITERATIONS = 500


# -- equations -------------------------------------------------------------


@dataclass(frozen=True, kw_only=True)
class _Equation:
    gamma: GammaSet = field(default_factory=gamma_default)
    mu: int = 0
    ctx: QContext = field(default_factory=QContext)
    var: str = "x"
    u: str = "u"
    u_of_x: Expr | str = "x"
    binding: Mapping | None = None

    kind = "?"

    def __post_init__(self):
        object.__setattr__(self, "u_of_x", as_expr(self.u_of_x))
        if not 0 <= self.mu < len(self.gamma):
            raise ValueError(f"gamma index {self.mu} outside 0..{len(self.gamma) - 1}")

    @property
    def dim(self) -> int:
        return self.gamma.dim

    @property
    def gamma_mu(self) -> np.ndarray:
        return self.gamma[self.mu]

    def field_at(self, expr, x: float):
        """Value of a coefficient function at ``x``; it may use ``x`` and ``u``."""
        env = self.ctx.bind(self.binding)
        env[self.var] = x
        env[self.u] = evaluate(self.u_of_x, env)
        return evaluate(as_expr(expr), env)

    def matrix_at(self, expr, x: float) -> np.ndarray:
        return as_matrix(self.field_at(expr, x), self.dim)


def _nonzero(name: str, value: float):
    if value == 0:
        raise ValueError(f"{name} must be non-zero")


@dataclass(frozen=True, kw_only=True)
class Homogeneous(_Equation):
    """``gamma_mu D_q psi - b psi = 0``."""

    b: float
    kind = "homogeneous"

    def __post_init__(self):
        super().__post_init__()
        _nonzero("b", self.b)


@dataclass(frozen=True, kw_only=True)
class Inhomogeneous(_Equation):
    """``gamma_mu D_q psi - b phi = 0``."""

    b: float
    phi: Expr | str
    kind = "inhomogeneous"

    def __post_init__(self):
        super().__post_init__()
        _nonzero("b", self.b)
        object.__setattr__(self, "phi", as_expr(self.phi))


@dataclass(frozen=True, kw_only=True)
class _CliffordEquation(_Equation):
    """Equations whose prefactor is a Clifford generator ``e_mu`` (1-based) in matrix form."""

    sig: Signature = DEFAULT_SIGNATURE
    mu: int = 1

    def __post_init__(self):
        object.__setattr__(self, "u_of_x", as_expr(self.u_of_x))
        if not 1 <= self.mu <= self.sig.n:
            raise ValueError(f"generator index {self.mu} outside signature {self.sig}")

    @property
    def dim(self) -> int:
        return generator_matrix(self.sig, self.mu).shape[0]

    @property
    def e_mu(self) -> np.ndarray:
        return generator_matrix(self.sig, self.mu)

    @property
    def e_upper(self) -> np.ndarray:
        return metric_dual(self.e_mu)


@dataclass(frozen=True, kw_only=True)
class NewOpInhomogeneous(_CliffordEquation):
    """``D^q psi - a phi = 0`` with ``D^q psi = e_mu d psi/d x`` (one coordinate)."""

    a: float
    phi: Expr | str
    kind = "new-op-inhomogeneous"

    def __post_init__(self):
        super().__post_init__()
        _nonzero("a", self.a)
        object.__setattr__(self, "phi", as_expr(self.phi))


@dataclass(frozen=True, kw_only=True)
class Electromagnetic(_Equation):
    """``gamma_mu D_q Psi - e gamma^mu A Psi - m g = 0``."""

    e: float
    m: float
    A: Expr | str
    g: Expr | str
    kind = "em"

    def __post_init__(self):
        super().__post_init__()
        _nonzero("m", self.m)
        object.__setattr__(self, "A", as_expr(self.A))
        object.__setattr__(self, "g", as_expr(self.g))


@dataclass(frozen=True, kw_only=True)
class DiracEM(_Equation):
    """``gamma^mu D_q Psi - e gamma^mu A Psi - m Psi = 0``."""

    e: float
    m: float
    A: Expr | str
    kind = "dirac-em"

    def __post_init__(self):
        super().__post_init__()
        _nonzero("m", self.m)
        object.__setattr__(self, "A", as_expr(self.A))


@dataclass(frozen=True, kw_only=True)
class PotentialB(_CliffordEquation):
    """``a D^q psi + b e_mu B phi = 0`` with ``D^q psi = e_mu d psi/d x``."""

    a: float
    b: float
    B: Expr | str
    phi: Expr | str
    kind = "potential-b"

    def __post_init__(self):
        super().__post_init__()
        _nonzero("a", self.a)
        object.__setattr__(self, "B", as_expr(self.B))
        object.__setattr__(self, "phi", as_expr(self.phi))


QSpinorEquation = Homogeneous | Inhomogeneous | NewOpInhomogeneous | Electromagnetic | DiracEM | PotentialB


# -- reports ---------------------------------------------------------------


@dataclass
class FixedPointInfo:
    iterations: int
    converged: bool
    last_step: float
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "last_step": self.last_step if math.isfinite(self.last_step) else None,
            "reason": self.reason,
        }


@dataclass
class PointSolution:
    x: float
    value: np.ndarray | None
    series: list[NeumannResult]
    fixed_point: FixedPointInfo | None = None

    @property
    def converged(self) -> bool:
        ok = self.value is not None and all(s.converged for s in self.series)
        if self.fixed_point is not None:
            ok = ok and self.fixed_point.converged
        return ok

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "value": matrix_to_json(self.value),
            "converged": self.converged,
            "series": [s.to_dict() for s in self.series],
            "fixed_point": None if self.fixed_point is None else self.fixed_point.to_dict(),
        }


@dataclass
class SolveReport:
    kind: str
    points: list[float]
    per_point: list[PointSolution]
    residual: float
    residual_points: list[float]
    diagnostics: list[str] = field(default_factory=list)

    @property
    def converged_everywhere(self) -> bool:
        return all(p.converged for p in self.per_point)

    @property
    def values(self) -> list[np.ndarray | None]:
        """Per-point values, including unconverged partial results."""
        return [p.value for p in self.per_point]

    @property
    def solutions(self) -> list[np.ndarray] | None:
        """Per-point solutions, or None unless every point converged."""
        return self.values if self.converged_everywhere else None

    def to_dict(self) -> dict:
        return {
            "equation": self.kind,
            "points": list(self.points),
            "converged_everywhere": self.converged_everywhere,
            "solutions": None if self.solutions is None else [matrix_to_json(v) for v in self.solutions],
            "per_point": [p.to_dict() for p in self.per_point],
            "residual": self.residual if math.isfinite(self.residual) else None,
            "residual_points": list(self.residual_points),
            "diagnostics": list(self.diagnostics),
        }


# -- fixed-point iteration -------------------------------------------------


def damped_fixed_point(
    F: Callable[[np.ndarray], np.ndarray],
    seed: np.ndarray,
    tol: float,
    *,
    damping: float = DAMPING,
    max_iter: int = MAX_FIXED_POINT_ITERATIONS,
) -> tuple[np.ndarray, FixedPointInfo]:
    """Iterate ``P <- (1 - damping) P + damping F(P)`` until a step is below ``tol``."""
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    p = np.array(seed, dtype=np.complex128)
    step = math.inf
    for k in range(1, max_iter + 1):
        try:
            fp = F(p)
        except SeriesDivergenceError as exc:
            return p, FixedPointInfo(k - 1, False, step, f"series diverged: {exc}")
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = (1 - damping) * p + damping * fp
            step = float(np.max(np.abs(nxt - p)))
        p = nxt
        if not math.isfinite(step):
            return p, FixedPointInfo(k, False, step, "iterate overflowed")
        if step < tol:
            return p, FixedPointInfo(k, True, step)
    return p, FixedPointInfo(max_iter, False, step, f"no convergence in {max_iter} iterations")


def _series(m: np.ndarray, ctx: QContext) -> NeumannResult:
    res = neumann_series(m, ctx)
    if not res.converged:
        raise SeriesDivergenceError(f"series diverged (rho = {res.rho:.6g})", res)
    return res


def _seed_matrix(seed, dim: int) -> np.ndarray:
    return as_matrix(complex(seed) if np.isscalar(seed) else np.asarray(seed, dtype=np.complex128), dim)


def fixed_point_map(eq, x: float) -> Callable[[np.ndarray], np.ndarray]:
    """The map whose fixed point the implicit solvers look for at ``x``.

    * homogeneous: ``F(P) = (1/q) sum [gamma_mu P]^n`` (``b`` cancels);
    * em: ``F(P) = R - (e/(q m)) sum [gamma_mu A P]^n`` with
      ``R = (1/q) sum [gamma_mu g]^n``;
    * dirac-em: ``F(P) = (1/q) sum [gamma_mu P]^n - (e/(q m)) sum [gamma_mu A P]^n``.
    """
    q = eq.ctx.q
    g_mu = eq.gamma_mu
    if isinstance(eq, Homogeneous):
        return lambda p: _series(g_mu @ p, eq.ctx).value / q
    if isinstance(eq, Electromagnetic):
        r = _series(g_mu @ eq.matrix_at(eq.g, x), eq.ctx).value / q
        a = eq.matrix_at(eq.A, x)
        c = eq.e / (q * eq.m)
        return lambda p: r - c * _series(g_mu @ a @ p, eq.ctx).value
    if isinstance(eq, DiracEM):
        a = eq.matrix_at(eq.A, x)
        c = eq.e / (q * eq.m)
        return lambda p: _series(g_mu @ p, eq.ctx).value / q - c * _series(g_mu @ a @ p, eq.ctx).value
    raise TypeError(f"{type(eq).__name__} has an explicit solution, not a fixed-point map")


# -- pointwise formulas ----------------------------------------------------


def _explicit(m: np.ndarray, ctx: QContext, x: float, scale=None, factor: float = 1.0) -> PointSolution:
    """``(1/q) sum M^n``, optionally post-processed by ``scale``.

    ``factor`` bounds how much ``scale`` can magnify an error; the series
    tolerance is tightened by ``q / factor`` so the final value stays within
    ``ctx.tol`` of the closed form.
    """
    res = neumann_series(m, dataclasses.replace(ctx, tol=ctx.tol * min(1.0, ctx.q / factor)))
    value = res.value / ctx.q
    if scale is not None:
        value = scale(value)
    return PointSolution(x, value, [res])


def _solve_point(eq, x: float, seed) -> PointSolution:
    ctx = eq.ctx
    if isinstance(eq, Inhomogeneous):
        return _explicit(eq.gamma_mu @ eq.matrix_at(eq.phi, x), ctx, x)
    if isinstance(eq, NewOpInhomogeneous):
        return _explicit(eq.e_mu @ eq.matrix_at(eq.phi, x), ctx, x)
    if isinstance(eq, PotentialB):
        m = eq.e_mu @ eq.matrix_at(eq.B, x) @ eq.matrix_at(eq.phi, x)
        e_up = eq.e_upper
        return _explicit(m, ctx, x, scale=lambda v: -(e_up @ v) / eq.a, factor=max(1.0, 1 / abs(eq.a)))
    if isinstance(eq, Electromagnetic) and eq.e == 0:
        # decoupled: the implicit relation is already solved
        return _explicit(eq.gamma_mu @ eq.matrix_at(eq.g, x), ctx, x)
    try:
        F = fixed_point_map(eq, x)
    except SeriesDivergenceError as exc:
        return PointSolution(x, exc.result.value / ctx.q, [exc.result],
                             FixedPointInfo(0, False, math.inf, f"series diverged: {exc}"))
    start = _seed_matrix(seed, eq.dim)
    value, info = damped_fixed_point(F, start, ctx.tol)
    return PointSolution(x, value, [], info)


def _matches(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


def _lookup(candidate: Mapping, x: float):
    for k, v in candidate.items():
        if _matches(k, x):
            return v
    raise KeyError(x)


def _lhs(eq, x: float, psi, psi_q) -> np.ndarray:
    """Left-hand side of ``eq`` at ``x`` with numeric Jackson quotient of the candidate."""
    q = eq.ctx.q
    dim = eq.dim
    psi = as_matrix(psi, dim)
    d = (as_matrix(psi_q, dim) - psi) / ((q - 1) * x)
    if isinstance(eq, Homogeneous):
        return eq.gamma_mu @ d - eq.b * psi
    if isinstance(eq, Inhomogeneous):
        return eq.gamma_mu @ d - eq.b * eq.matrix_at(eq.phi, x)
    if isinstance(eq, NewOpInhomogeneous):
        return eq.e_mu @ d - eq.a * eq.matrix_at(eq.phi, x)
    if isinstance(eq, Electromagnetic):
        up = eq.gamma.upper(eq.mu)
        return eq.gamma_mu @ d - eq.e * up @ eq.matrix_at(eq.A, x) @ psi - eq.m * eq.matrix_at(eq.g, x)
    if isinstance(eq, DiracEM):
        up = eq.gamma.upper(eq.mu)
        return up @ d - eq.e * up @ eq.matrix_at(eq.A, x) @ psi - eq.m * psi
    if isinstance(eq, PotentialB):
        return eq.a * (eq.e_mu @ d) + eq.b * (eq.e_mu @ eq.matrix_at(eq.B, x) @ eq.matrix_at(eq.phi, x))
    raise TypeError(f"unknown equation {eq!r}")


def residual_details(eq, candidate: Mapping[float, object], points: Sequence[float] | None = None):
    """``(max residual, points used)``; see :func:`residual`."""
    q = eq.ctx.q
    if points is None:
        points = []
        for x in candidate:
            try:
                _lookup(candidate, q * x)
            except KeyError:
                continue
            points.append(x)
        if not points:
            raise ValueError("candidate has no point x whose q-shift q*x is also present")
    worst = 0.0
    for x in points:
        if x == 0:
            raise ValueError("the Jackson quotient is undefined at x = 0")
        try:
            psi = _lookup(candidate, x)
            psi_q = _lookup(candidate, q * x)
        except KeyError:
            raise ValueError(f"candidate is missing the value at x = {x} or at q*x = {q * x}") from None
        with np.errstate(all="ignore"):
            lhs = _lhs(eq, x, psi, psi_q)
        norm = float(np.max(np.abs(lhs))) if lhs.size else 0.0
        worst = max(worst, norm if math.isfinite(norm) else math.inf)
    return worst, list(points)


def residual(eq, candidate: Mapping[float, object], points: Sequence[float] | None = None) -> float:
    """Max over lattice points of the max-norm of the equation's left-hand side.

    ``candidate`` maps ``x`` to a scalar or matrix value. Each point used
    needs both ``x`` and ``q*x`` in ``candidate``; without ``points`` every
    such ``x`` is used.
    """
    return residual_details(eq, candidate, points)[0]


# -- solvers ---------------------------------------------------------------


def solve(eq, points: Sequence[float], *, seed=0.0) -> SolveReport:
    """Solve ``eq`` pointwise and audit the result.

    The formula is also evaluated at ``q*x`` for every requested ``x`` so the
    residual can use a Jackson quotient; only requested points are listed
    in the report.
    """
    points = [float(x) for x in points]
    if not points:
        raise ValueError("at least one point is required")
    q = eq.ctx.q
    per_point = [_solve_point(eq, x, seed) for x in points]
    shifted = [_solve_point(eq, q * x, seed) for x in points]

    diagnostics = []
    for p in per_point + shifted:
        if not p.converged:
            why = p.fixed_point.reason if p.fixed_point and p.fixed_point.reason else "series did not converge"
            diagnostics.append(f"x = {p.x:.6g}: {why}")
    candidate = {}
    for p in per_point + shifted:
        candidate.setdefault(p.x, p.value)
    res_points = [x for x in points if x != 0]
    if res_points:
        res, _ = residual_details(eq, candidate, res_points)
    else:
        res = math.nan
        diagnostics.append("no non-zero point for a residual")
    if not math.isfinite(res):
        diagnostics.append("residual is not finite")
    return SolveReport(eq.kind, points, per_point, res, res_points, diagnostics)


def solve_inhomogeneous(eq: Inhomogeneous, points: Sequence[float]) -> SolveReport:
    """``psi(u(x)) = (1/q) sum_n [gamma_mu phi(u(x))]^n`` at each point."""
    if not isinstance(eq, Inhomogeneous):
        raise TypeError("expected an Inhomogeneous equation")
    return solve(eq, points)


def solve_new_op_inhomogeneous(eq: NewOpInhomogeneous, points: Sequence[float]) -> SolveReport:
    """``psi(u(x)) = (1/q) sum_n [e_mu phi(u(x))]^n`` at each point."""
    if not isinstance(eq, NewOpInhomogeneous):
        raise TypeError("expected a NewOpInhomogeneous equation")
    return solve(eq, points)


def solve_homogeneous(eq: Homogeneous, points: Sequence[float], *, seed=0.0) -> SolveReport:
    """Fixed point of ``P = (1/q) sum [gamma_mu P]^n``, damped iteration from ``seed``."""
    if not isinstance(eq, Homogeneous):
        raise TypeError("expected a Homogeneous equation")
    return solve(eq, points, seed=seed)


def solve_electromagnetic(eq: Electromagnetic, points: Sequence[float], *, seed=None) -> SolveReport:
    """``P + (e/(q m)) sum [gamma_mu A P]^n = (1/q) sum [gamma_mu g]^n`` for ``P``.

    With ``e == 0`` the right-hand side is returned directly; otherwise the
    damped iteration starts from ``seed`` (default: that right-hand side).
    """
    if not isinstance(eq, Electromagnetic):
        raise TypeError("expected an Electromagnetic equation")
    if seed is None and eq.e != 0:
        return _solve_seeded_by_rhs(eq, points)
    return solve(eq, points, seed=0.0 if seed is None else seed)


def _solve_seeded_by_rhs(eq: Electromagnetic, points: Sequence[float]) -> SolveReport:
    # per-point seeds differ, so run the points one at a time and merge
    reports = []
    for x in points:
        seeds = {}
        for y in (float(x), eq.ctx.q * float(x)):
            res = neumann_series(eq.gamma_mu @ eq.matrix_at(eq.g, y), eq.ctx)
            seeds[y] = res.value / eq.ctx.q if res.converged else np.zeros((eq.dim, eq.dim))
        reports.append(_solve_with_seeds(eq, float(x), seeds))
    return _merge(eq, reports)


def _solve_with_seeds(eq, x: float, seeds: Mapping[float, np.ndarray]) -> SolveReport:
    q = eq.ctx.q
    here = _solve_point(eq, x, seeds[x])
    there = _solve_point(eq, q * x, seeds[q * x])
    candidate = {x: here.value, q * x: there.value}
    diagnostics = []
    for p in (here, there):
        if not p.converged:
            why = p.fixed_point.reason if p.fixed_point and p.fixed_point.reason else "series did not converge"
            diagnostics.append(f"x = {p.x:.6g}: {why}")
    res = residual(eq, candidate, [x]) if x != 0 else math.nan
    return SolveReport(eq.kind, [x], [here], res, [x] if x != 0 else [], diagnostics)


def _merge(eq, reports: list[SolveReport]) -> SolveReport:
    per_point = [p for r in reports for p in r.per_point]
    finite = [r.residual for r in reports if not math.isnan(r.residual)]
    res = max(finite) if finite else math.nan
    diagnostics = [d for r in reports for d in r.diagnostics]
    if not math.isfinite(res):
        diagnostics.append("residual is not finite")
    return SolveReport(eq.kind, [p.x for p in per_point], per_point, res,
                       [x for r in reports for x in r.residual_points], diagnostics)


def solve_dirac_em(eq: DiracEM, points: Sequence[float], *, seed=0.0) -> SolveReport:
    """``P + (e/(q m)) sum [gamma_mu A P]^n = (1/q) sum [gamma_mu P]^n``, damped iteration from ``seed``."""
    if not isinstance(eq, DiracEM):
        raise TypeError("expected a DiracEM equation")
    return solve(eq, points, seed=seed)


def solve_potential_b(eq: PotentialB, points: Sequence[float]) -> SolveReport:
    """``psi(x) = -(1/(a q)) e^mu sum_n [e_mu B(x) phi(u(x))]^n`` with ``e^mu = e_mu^-1``."""
    if not isinstance(eq, PotentialB):
        raise TypeError("expected a PotentialB equation")
    return solve(eq, points)


SOLVERS = {
    "homogeneous": solve_homogeneous,
    "inhomogeneous": solve_inhomogeneous,
    "new-op-inhomogeneous": solve_new_op_inhomogeneous,
    "em": solve_electromagnetic,
    "dirac-em": solve_dirac_em,
    "potential-b": solve_potential_b,
}
