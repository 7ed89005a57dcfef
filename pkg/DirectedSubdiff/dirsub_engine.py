"""
Directed subdifferentials from directional derivatives alone.

The derivative route works recursively: at x the support component in the
direction l is f'(x; l), and the lower component is the directed
subdifferential at 0 of the restriction y -> f'(x; l + Pi^T_{n-1,l} y).
This module also certifies the result (the bound M) and compares the
derivative route with the DC and quasidifferential embedding routes.
"""
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .directed_sets import DirectedInterval, DirectedSet, EqualityReport, ds_equal, ds_to_json
from .embedding import (dc_directed_subdifferential, dc_of_directional_derivative,
                        qd_directed_subdifferential)
from .errors import DimensionError, DirSubError, EvaluationError, InconsistentInputError
from .expr_core import ACTIVE_TOL, Expr, dd_function, dini_dd, dini_dd_batch, evaluate, format_expr, substitute_affine
from .geometry import Polytope, SphereGrid, lift_matrix, support_function

ROUTE_DERIVATIVE = 'derivative'
ROUTE_DC = 'dc'
ROUTE_QD = 'qd'
ROUTE_DC_DERIVATIVE = 'dc_derivative'

CONTINUITY_FACTOR = 10.0
CONSISTENCY_SAMPLES = 100
CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class MCertificate:
    """
    Evidence that f is M-directed subdifferentiable at x on the sampled grid.

    levels[k] is the largest absolute entry of the k-th level of the directed
    subdifferential (level 0 holds f'(x; l)); M is their maximum and so
    equals the norm of the directed subdifferential.
    continuity_max_jump is the largest |f'(x; l) - f'(x; l')| over adjacent grid
    directions; it is flagged when it exceeds
    continuity_factor * angular spacing * max(1, M).
    """
    M: float
    levels: Tuple[float, ...]
    continuity_max_jump: float
    continuity_flagged: bool = False
    lipschitz_bound: Optional[float] = None

    @property
    def within_lipschitz_bound(self) -> Optional[bool]:
        if self.lipschitz_bound is None:
            return None
        return self.M <= self.lipschitz_bound

    def to_json(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"M": self.M,
                               "levels": list(self.levels),
                               "continuity_max_jump": self.continuity_max_jump,
                               "continuity_flagged": self.continuity_flagged}
        if self.lipschitz_bound is not None:
            doc["lipschitz_bound"] = self.lipschitz_bound
            doc["within_lipschitz_bound"] = self.within_lipschitz_bound
        return doc


@dataclass(frozen=True)
class DirSubResult:
    value: DirectedSet
    certificate: MCertificate
    route: str

    def to_json(self) -> Dict[str, Any]:
        return {"route": self.route,
                "value": ds_to_json(self.value),
                "certificate": self.certificate.to_json()}


def restrict(phi: Expr, l: Sequence[float]) -> Expr:
    """The restriction y -> phi(l + Pi^T_{n-1,l} y), an expression of arity n-1."""
    l = np.asarray(l, dtype=float).reshape(-1)
    if l.size != phi.n:
        raise DimensionError(f"direction of dimension {l.size} for an expression of arity {phi.n}")
    if phi.n < 2:
        raise DimensionError("restriction needs an expression of arity >= 2")
    return substitute_affine(phi, lift_matrix(l), l)


def _default_threads() -> int:
    try:
        threads = int(os.environ.get('DIRSUB_THREADS', '1'))
    except ValueError:
        threads = 1
    return threads if threads > 0 else (os.cpu_count() or 1)


def _derivative_route(f: Expr, x: np.ndarray, grid: SphereGrid, active_tol: float,
                      executor: Optional[ThreadPoolExecutor] = None) -> DirectedSet:
    if f.n != grid.n:
        raise DimensionError(f"expression of arity {f.n} on an n={grid.n} grid")
    directions = grid.directions
    supports = dini_dd_batch(f, x, directions, active_tol)
    if grid.n == 1:
        return DirectedSet.from_interval(DirectedInterval(float(supports[0]), float(supports[1])))
    phi = dd_function(f, x, active_tol)
    if grid.n == 2:
        # y -> phi(l + y w) with w = (l2, -l1) has the interval (phi'(l; -w), phi'(l; w)) at 0
        across = np.column_stack([directions[:, 1], -directions[:, 0]])
        neg = dini_dd_batch(phi, directions, -across, active_tol)
        pos = dini_dd_batch(phi, directions, across, active_tol)
        return DirectedSet(grid, [supports, np.column_stack([neg, pos])])
    origin = np.zeros(grid.n - 1)

    def lower(l: np.ndarray) -> DirectedSet:
        try:
            return _derivative_route(restrict(phi, l), origin, grid.sub_grid, active_tol)
        except EvaluationError as exc:
            raise EvaluationError(f"{exc} while processing direction l={l.tolist()}") from exc

    if executor is None:
        lowers = [lower(l) for l in directions]
    else:
        lowers = list(executor.map(lower, directions))
    return DirectedSet.from_entries(grid, supports, lowers)


def _certificate(value: DirectedSet, continuity_factor: float = CONTINUITY_FACTOR,
                 lipschitz_bound: Optional[float] = None) -> MCertificate:
    levels = tuple(float(np.max(np.abs(level))) for level in value.components)
    M = max(levels)
    jump = 0.0
    flagged = False
    if value.n >= 2:
        supports = value.supports
        edges = value.grid.neighbour_graph.edges()
        jump = max((abs(supports[i] - supports[j]) for i, j in edges), default=0.0)
        threshold = continuity_factor * value.grid.angular_spacing * max(1.0, M)
        flagged = jump > threshold
        if flagged:
            warnings.warn(f"directional derivative jumps by {jump:.3g} between adjacent grid directions "
                          f"(threshold {threshold:.3g}); continuity on the sphere is doubtful")
    return MCertificate(M, levels, float(jump), flagged, lipschitz_bound)


def directed_subdifferential(f: Expr, x: Sequence[float], grid: SphereGrid,
                             active_tol: float = ACTIVE_TOL,
                             threads: Optional[int] = None,
                             continuity_factor: float = CONTINUITY_FACTOR) -> DirSubResult:
    """
    The directed subdifferential of f at x via directional derivatives.

    Args:
        f: expression of arity grid.n
        x: point of evaluation
        grid: sphere grid; its sub-grids are used for the lower components
        active_tol: relative tolerance deciding active max/min children
        threads: worker threads for the outermost direction loop; defaults to
            the DIRSUB_THREADS environment variable (0 = one per CPU)
    Returns:
        DirSubResult with route 'derivative'
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != f.n:
        raise DimensionError(f"point of dimension {x.size} for an expression of arity {f.n}")
    threads = _default_threads() if threads is None else threads
    if threads > 1 and grid.n == 3:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            value = _derivative_route(f, x, grid, active_tol, executor)
    else:
        value = _derivative_route(f, x, grid, active_tol)
    return DirSubResult(value, _certificate(value, continuity_factor), ROUTE_DERIVATIVE)


def certify(f: Expr, x: Sequence[float], grid: SphereGrid,
            lipschitz_bound: Optional[float] = None, **kwargs) -> MCertificate:
    """
    The certificate of the derivative route; M equals the norm of the
    directed subdifferential, the smallest admissible constant.
    """
    certificate = directed_subdifferential(f, x, grid, **kwargs).certificate
    if lipschitz_bound is not None:
        certificate = replace(certificate, lipschitz_bound=float(lipschitz_bound))
    return certificate


@dataclass(frozen=True)
class RouteReport:
    """Pairwise comparison of the directed subdifferentials from several routes."""
    results: Dict[str, DirSubResult]
    comparisons: List[Tuple[str, str, EqualityReport]] = field(default_factory=list)
    tol: float = CONSISTENCY_TOL

    @property
    def passed(self) -> bool:
        return all(report.equal for _, _, report in self.comparisons)

    @property
    def max_discrepancy(self) -> float:
        return max((report.discrepancy for _, _, report in self.comparisons), default=0.0)

    def to_json(self) -> Dict[str, Any]:
        return {"status": "PASS" if self.passed else "FAIL",
                "tol": self.tol,
                "routes": sorted(self.results),
                "comparisons": [{"routes": [a, b], **report.to_json()} for a, b, report in self.comparisons],
                "certificates": {name: r.certificate.to_json() for name, r in sorted(self.results.items())}}


def _sample_points(x: np.ndarray, rng: np.random.Generator, count: int) -> np.ndarray:
    radius = max(1.0, float(np.abs(x).max()))
    return x + rng.uniform(-radius, radius, size=(count, x.size))


def _sample_directions(n: int, rng: np.random.Generator, count: int) -> np.ndarray:
    d = rng.normal(size=(count, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _check_dc_consistency(f: Expr, g: Expr, h: Expr, x: np.ndarray, rng: np.random.Generator) -> None:
    for point in _sample_points(x, rng, CONSISTENCY_SAMPLES):
        try:
            fv = evaluate(f, point)
        except EvaluationError:
            continue
        gh = evaluate(g, point) - evaluate(h, point)
        if abs(fv - gh) > CONSISTENCY_TOL * max(1.0, abs(fv)):
            raise InconsistentInputError(
                f"f = {format_expr(f)} differs from g - h at {point.tolist()}: {fv!r} vs {gh!r}")


def _check_qd_consistency(derivative, lower: Polytope, upper: Polytope, n: int,
                          rng: np.random.Generator) -> None:
    negated_upper = upper.negate()
    for l in _sample_directions(n, rng, CONSISTENCY_SAMPLES):
        expected = derivative(l)
        qd = support_function(lower, l) - support_function(negated_upper, l)
        if abs(expected - qd) > CONSISTENCY_TOL * max(1.0, abs(expected)):
            raise InconsistentInputError(
                f"quasidifferential pair gives {qd!r} in direction {l.tolist()}, the function gives {expected!r}")


def compare_routes(x: Sequence[float], grid: SphereGrid,
                   f: Optional[Expr] = None,
                   dc: Optional[Tuple[Expr, Expr]] = None,
                   qd: Optional[Tuple[Polytope, Polytope]] = None,
                   tol: float = CONSISTENCY_TOL,
                   active_tol: float = ACTIVE_TOL,
                   threads: Optional[int] = None,
                   seed: int = 0) -> RouteReport:
    """
    Compute every route the inputs allow and compare them pairwise.

    f gives the derivative route, a DC pair (g, h) the routes 'dc' and
    'dc_derivative', a quasidifferential pair (lower, upper) the route 'qd'.
    Inputs describing the same function are spot-checked first: f against
    g - h at random points, the quasidifferential pair against f'(x; .) (or
    g'(x; .) - h'(x; .)) in random directions.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != grid.n:
        raise DimensionError(f"point of dimension {x.size} on an n={grid.n} grid")
    rng = np.random.default_rng(seed)

    if dc is not None:
        g, h = dc
        if f is not None:
            _check_dc_consistency(f, g, h, x, rng)
    if qd is not None:
        lower, upper = qd
        if lower.n != grid.n or upper.n != grid.n:
            raise DimensionError(f"quasidifferential pair in R^{lower.n}, R^{upper.n} on an n={grid.n} grid")
        if f is not None:
            _check_qd_consistency(lambda l: dini_dd(f, x, l, active_tol), lower, upper, grid.n, rng)
        elif dc is not None:
            _check_qd_consistency(lambda l: dini_dd(g, x, l, active_tol) - dini_dd(h, x, l, active_tol),
                                  lower, upper, grid.n, rng)

    results: Dict[str, DirSubResult] = {}
    if f is not None:
        results[ROUTE_DERIVATIVE] = directed_subdifferential(f, x, grid, active_tol, threads)
    if dc is not None:
        value = dc_directed_subdifferential(g, h, x, grid, active_tol)
        results[ROUTE_DC] = DirSubResult(value, _certificate(value), ROUTE_DC)
        value = dc_of_directional_derivative(g, h, x, grid, active_tol)
        results[ROUTE_DC_DERIVATIVE] = DirSubResult(value, _certificate(value), ROUTE_DC_DERIVATIVE)
    if qd is not None:
        value = qd_directed_subdifferential(lower, upper, grid)
        results[ROUTE_QD] = DirSubResult(value, _certificate(value), ROUTE_QD)
    if len(results) < 2:
        raise DirSubError("compare_routes needs inputs for at least two routes")

    names = list(results)
    comparisons = [(a, b, ds_equal(results[a].value, results[b].value, tol))
                   for i, a in enumerate(names) for b in names[i + 1:]]
    return RouteReport(results, comparisons, tol)


# bounds on M from the closure properties of directed subdifferentiability

def linear_combination_bound(alpha: float, M1: float, beta: float, M2: float) -> float:
    """Bound for alpha*f1 + beta*f2."""
    return abs(alpha) * M1 + abs(beta) * M2


def product_bound(M1: float, M2: float, f1_x: float, f2_x: float) -> float:
    """Bound for f1*f2 at x."""
    return M1 * abs(f2_x) + M2 * abs(f1_x)


def quotient_bound(M1: float, M2: float, f1_x: float, f2_x: float) -> float:
    """Bound for f1/f2 at x, f2(x) != 0."""
    if f2_x == 0:
        raise EvaluationError("quotient bound with vanishing denominator")
    return (M1 * abs(f2_x) + M2 * abs(f1_x)) / (f2_x * f2_x)


def max_min_bound(Ms: Sequence[float], active: Iterable[int]) -> float:
    """Bound for a pointwise max or min: the largest M over the active branches."""
    active = list(active)
    if not active:
        raise ValueError("at least one branch must be active")
    return max(abs(Ms[i]) for i in active)
