"""
The embedding J_n of polytopes into directed sets and the directed
subdifferentials of DC and quasidifferentiable functions built from it.
"""
from typing import Sequence, Tuple

import numpy as np

from .directed_sets import DirectedSet, di_from_interval, ds_linear_comb
from .errors import DimensionError
from .expr_core import ACTIVE_TOL, Expr, convex_polyhedral_subdifferential, dd_function
from .geometry import VERTEX_TOL, Polytope, SphereGrid, inner_products, project


class EmbeddedSet(DirectedSet):
    """J_n(source): a directed set that remembers the polytope it was built from."""
    source: Polytope

    def __init__(self, grid: SphereGrid, components: Sequence[np.ndarray], source: Polytope):
        super().__init__(grid, components)
        self.source = source


def _planar_levels(points: np.ndarray, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Both levels of J_2(conv points) on the S^1 grid given by directions.

    The lower interval at l is the range of the face Y(l, C) along the first
    coordinate of Pi_{1,l}, i.e. along (l2, -l1).
    """
    values = inner_products(points, directions)
    top = values.max(axis=0)
    on_face = values >= top - VERTEX_TOL * np.maximum(1.0, np.abs(top))
    across = inner_products(points, np.column_stack([directions[:, 1], -directions[:, 0]]))
    low = np.where(on_face, across, np.inf).min(axis=0)
    high = np.where(on_face, across, -np.inf).max(axis=0)
    return top, np.column_stack([-low, high])


def embed(C: Polytope, grid: SphereGrid) -> EmbeddedSet:
    """
    J_n(C) on the given grid.

    n=1: the directed interval of [min C, max C]. n>=2: at each grid direction
    l the support value delta*(l, C) and the embedding of the supporting face
    Y(l, C) projected to R^{n-1}. Support values and faces of all directions
    come from one table of inner products.
    """
    if C.n != grid.n:
        raise DimensionError(f"cannot embed a polytope in R^{C.n} on an n={grid.n} grid")
    if grid.n == 1:
        values = C.vertices[:, 0]
        interval = di_from_interval(float(values.min()), float(values.max()))
        return EmbeddedSet(grid, [[interval.a1_neg, interval.a1_pos]], C)
    if grid.n == 2:
        return EmbeddedSet(grid, _planar_levels(C.vertices, grid.directions), C)

    values = inner_products(C.vertices, grid.directions)
    top = values.max(axis=0)
    on_face = values >= top - VERTEX_TOL * np.maximum(1.0, np.abs(top))
    sub_directions = grid.sub_grid.directions
    middle = np.empty((len(grid), len(sub_directions)))
    bottom = np.empty((len(grid), len(sub_directions), 2))
    for k, l in enumerate(grid.directions):
        face = project(l, C.vertices[on_face[:, k]])
        middle[k], bottom[k] = _planar_levels(face, sub_directions)
    return EmbeddedSet(grid, [top, middle, bottom], C)


def dc_directed_subdifferential(g: Expr, h: Expr, x: Sequence[float], grid: SphereGrid,
                                active_tol: float = ACTIVE_TOL) -> DirectedSet:
    """J_n(dg(x)) - J_n(dh(x)) for f = g - h with g, h in max-affine form."""
    if g.n != h.n:
        raise DimensionError(f"DC parts have arities {g.n} and {h.n}")
    dg = convex_polyhedral_subdifferential(g, x, active_tol)
    dh = convex_polyhedral_subdifferential(h, x, active_tol)
    return ds_linear_comb(1.0, embed(dg, grid), -1.0, embed(dh, grid))


def qd_directed_subdifferential(lower: Polytope, upper: Polytope, grid: SphereGrid) -> DirectedSet:
    """
    J_n(lower) - J_n(-upper) for a quasidifferential pair.

    upper is the upper quasidifferential itself; it is reflected through the
    origin here.
    """
    if lower.n != upper.n:
        raise DimensionError(f"quasidifferential pair in R^{lower.n} and R^{upper.n}")
    return ds_linear_comb(1.0, embed(lower, grid), -1.0, embed(upper.negate(), grid))


def qd_pair_from_dc(g: Expr, h: Expr, x: Sequence[float],
                    active_tol: float = ACTIVE_TOL) -> Tuple[Polytope, Polytope]:
    """The quasidifferential (dg(x), -dh(x)) of f = g - h."""
    lower = convex_polyhedral_subdifferential(g, x, active_tol)
    upper = convex_polyhedral_subdifferential(h, x, active_tol).negate()
    return lower, upper


def dc_of_directional_derivative(g: Expr, h: Expr, x: Sequence[float], grid: SphereGrid,
                                 active_tol: float = ACTIVE_TOL) -> DirectedSet:
    """
    The DC route applied to d -> g'(x; d) - h'(x; d) at d = 0.

    Both directional derivatives are positively homogeneous max-affine
    functions whose subdifferentials at 0 are dg(x) and dh(x).
    """
    if g.n != h.n:
        raise DimensionError(f"DC parts have arities {g.n} and {h.n}")
    origin = np.zeros(g.n)
    return dc_directed_subdifferential(dd_function(g, x, active_tol), dd_function(h, x, active_tol),
                                       origin, grid, active_tol)
