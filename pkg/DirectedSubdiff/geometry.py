"""
Sphere sampling, the fixed rotation family R_{n,l}, the projections Pi_{n-1,l}
and the support machinery of convex polytopes (support functions, supporting faces).
"""
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .errors import DimensionError, SerializationError

UNIT_TOL = 1e-10
VERTEX_TOL = 1e-9

DEFAULT_K2 = 360
DEFAULT_GRID3 = (45, 90)
DEFAULT_K3_SUB = 120

_SQRT_HALF = math.sqrt(0.5)
# directions at the angles pi*j/4, j = 0..7
_SPECIAL_2D = np.array([
    (1.0, 0.0), (_SQRT_HALF, _SQRT_HALF), (0.0, 1.0), (-_SQRT_HALF, _SQRT_HALF),
    (-1.0, 0.0), (-_SQRT_HALF, -_SQRT_HALF), (0.0, -1.0), (_SQRT_HALF, -_SQRT_HALF),
])


@dataclass(frozen=True)
class SphereGrid:
    """
    Deterministic sampling of S^{n-1}.

    Grids compare equal iff they were built from the same dimension and
    resolutions, so two directed sets on equal grids can be combined.
    For n >= 2, sub_grid is the grid of S^{n-2} used by every lower-dimensional
    component.
    """
    n: int
    resolution: Tuple[int, ...]
    sub_grid: Optional['SphereGrid']
    directions: np.ndarray = field(compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.directions)

    @property
    def angles(self) -> np.ndarray:
        """Polar angles of a 2-D grid, 2*pi*j/K."""
        if self.n != 2:
            raise DimensionError("angles are only defined for n=2 grids")
        K = self.resolution[0]
        return 2.0 * np.pi * np.arange(K) / K

    @property
    def angular_spacing(self) -> float:
        if self.n == 1:
            return math.pi
        if self.n == 2:
            return 2.0 * math.pi / self.resolution[0]
        polar, azimuth = self.resolution
        return max(math.pi / polar, 2.0 * math.pi / azimuth)

    @property
    def shapes(self) -> List[Tuple[int, ...]]:
        """Array shape of each level of a directed set living on this grid."""
        shapes = []
        prefix: Tuple[int, ...] = ()
        grid: Optional[SphereGrid] = self
        while grid is not None:
            prefix = prefix + (len(grid),)
            shapes.append(prefix)
            grid = grid.sub_grid
        return shapes

    @cached_property
    def neighbour_graph(self) -> nx.Graph:
        """Graph on direction indices joining adjacent grid directions."""
        G = nx.Graph()
        G.add_nodes_from(range(len(self)))
        if self.n == 2:
            K = len(self)
            G.add_edges_from((j, (j + 1) % K) for j in range(K))
        elif self.n == 3:
            polar, azimuth = self.resolution
            south = len(self) - 1

            def ring_node(i: int, j: int) -> int:
                return 1 + (i - 1) * azimuth + (j % azimuth)

            for i in range(1, polar):
                for j in range(azimuth):
                    G.add_edge(ring_node(i, j), ring_node(i, j + 1))
                    if i + 1 < polar:
                        G.add_edge(ring_node(i, j), ring_node(i + 1, j))
            for j in range(azimuth):
                G.add_edge(0, ring_node(1, j))
                G.add_edge(south, ring_node(polar - 1, j))
        return G

    def to_json(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"n": self.n, "resolution": list(self.resolution)}
        if self.n == 3:
            doc["sub_grid"] = self.sub_grid.to_json()
        return doc

    @staticmethod
    def from_json(doc: Dict[str, Any]) -> 'SphereGrid':
        try:
            n = int(doc["n"])
            resolution = tuple(int(r) for r in doc.get("resolution", []))
            sub = doc.get("sub_grid")
            sub_K = int(sub["resolution"][0]) if sub is not None else None
        except (KeyError, TypeError, ValueError, IndexError, AttributeError) as exc:
            raise SerializationError(f"malformed grid description: {doc!r}") from exc
        if len(resolution) != {1: 0, 2: 1, 3: 2}.get(n, len(resolution)):
            raise SerializationError(f"grid of dimension {n} with resolution {list(resolution)}")
        if n == 1:
            return make_sphere_grid(1)
        if n == 2:
            return make_sphere_grid(2, resolution[0])
        return make_sphere_grid(n, resolution, sub_resolution=sub_K)


def make_sphere_grid(n: int,
                     resolution: Optional[Any] = None,
                     sub_resolution: Optional[int] = None) -> SphereGrid:
    """
    Build the deterministic grid of S^{n-1}.

    Args:
        n: dimension, 1, 2 or 3
        resolution: K for n=2 (8 must divide K); (K_polar, K_azimuth) for n=3
        sub_resolution: K of the S^1 grid used below an n=3 grid
    """
    if n == 1:
        directions = np.array([[-1.0], [1.0]])
        directions.setflags(write=False)
        return SphereGrid(1, (), None, directions)

    if n == 2:
        K = DEFAULT_K2 if resolution is None else int(_first(resolution))
        if K <= 0 or K % 8 != 0:
            raise DimensionError(f"n=2 grid resolution must be a positive multiple of 8, got {K}")
        j = np.arange(K)
        angles = 2.0 * np.pi * j / K
        directions = np.column_stack([np.cos(angles), np.sin(angles)])
        special = (8 * j) % K == 0
        directions[special] = _SPECIAL_2D[(8 * j[special]) // K]
        directions.setflags(write=False)
        return SphereGrid(2, (K,), make_sphere_grid(1), directions)

    if n == 3:
        polar, azimuth = DEFAULT_GRID3 if resolution is None else tuple(int(r) for r in resolution)
        if polar < 2 or azimuth < 3:
            raise DimensionError(f"n=3 grid needs K_polar >= 2 and K_azimuth >= 3, got {(polar, azimuth)}")
        sub = make_sphere_grid(2, DEFAULT_K3_SUB if sub_resolution is None else sub_resolution)
        rows = [(0.0, 0.0, 1.0)]
        for i in range(1, polar):
            theta = math.pi * i / polar
            for k in range(azimuth):
                phi = 2.0 * math.pi * k / azimuth
                rows.append((math.sin(theta) * math.cos(phi),
                             math.sin(theta) * math.sin(phi),
                             math.cos(theta)))
        rows.append((0.0, 0.0, -1.0))
        directions = np.array(rows)
        directions[np.abs(directions) < 1e-15] = 0.0
        directions.setflags(write=False)
        return SphereGrid(3, (polar, azimuth), sub, directions)

    raise DimensionError(f"sphere grids are supported for n in {{1, 2, 3}}, got n={n}")


def _first(resolution: Any) -> Any:
    if isinstance(resolution, (tuple, list)):
        return resolution[0]
    return resolution


def _as_unit(l: Sequence[float]) -> np.ndarray:
    l = np.asarray(l, dtype=float).reshape(-1)
    if abs(np.linalg.norm(l) - 1.0) > UNIT_TOL:
        raise DimensionError(f"direction must be a unit vector, got norm {np.linalg.norm(l)}")
    return l


def rotation(l: Sequence[float]) -> np.ndarray:
    """
    The fixed rotation R_{n,l} with R_{n,l} l = e^n.

    n=2: [[l2, -l1], [l1, l2]].
    n=3: rotation about the axis l x e^3 taking l to e^3; identity at e^3 and
    diag(1, -1, -1) at -e^3.
    """
    l = _as_unit(l)
    n = l.size
    if n == 2:
        return np.array([[l[1], -l[0]], [l[0], l[1]]])
    if n == 3:
        c = l[2]
        if 1.0 + c <= UNIT_TOL:
            return np.diag([1.0, -1.0, -1.0])
        v = np.cross(l, np.array([0.0, 0.0, 1.0]))
        K = np.array([[0.0, -v[2], v[1]],
                      [v[2], 0.0, -v[0]],
                      [-v[1], v[0], 0.0]])
        return np.eye(3) + K + (K @ K) / (1.0 + c)
    raise DimensionError(f"rotations are defined for n in {{2, 3}}, got n={n}")


def lift_matrix(l: Sequence[float]) -> np.ndarray:
    """The n x (n-1) matrix Pi^T_{n-1,l} mapping R^{n-1} onto span{l}^perp."""
    R = rotation(l)
    return R.T[:, :-1]


def project(l: Sequence[float], x: Sequence[float]) -> np.ndarray:
    """Pi_{n-1,l} x: rotate by R_{n,l} and drop the last coordinate."""
    R = rotation(l)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != R.shape[0]:
        raise DimensionError(f"cannot project a point of dimension {x.shape[-1]} with l of dimension {R.shape[0]}")
    return (x @ R.T)[..., :-1]


def lift(l: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """Pi^T_{n-1,l} y = R^{-1}_{n,l} (y, 0)."""
    P = lift_matrix(l)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != P.shape[1]:
        raise DimensionError(f"cannot lift a point of dimension {y.size} with l of dimension {P.shape[0]}")
    return P @ y


class Polytope:
    """
    A convex compact set given by a finite, nonempty list of vertices in R^n.

    Unless normalize=False, duplicates and non-extreme points are removed.
    """
    vertices: np.ndarray  # shape (m, n)

    def __init__(self, vertices: Any, normalize: bool = True, tol: float = VERTEX_TOL):
        V = np.array(vertices, dtype=float)
        if V.ndim == 1:
            V = V.reshape(-1, 1)
        if V.ndim != 2 or V.shape[0] == 0 or V.shape[1] == 0:
            raise DimensionError("a polytope needs a nonempty (m, n) vertex array")
        if not np.all(np.isfinite(V)):
            raise DimensionError("polytope vertices must be finite")
        if normalize:
            V = extreme_points(V, tol)
        V.setflags(write=False)
        self.vertices = V

    @property
    def n(self) -> int:
        return self.vertices.shape[1]

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def negate(self) -> 'Polytope':
        """The algebraic negative {-x : x in C}."""
        return Polytope(-self.vertices, normalize=False)

    def scale(self, factor: float) -> 'Polytope':
        if factor < 0:
            raise ValueError("polytopes are only scaled by nonnegative factors")
        return Polytope(factor * self.vertices)

    def to_json(self) -> Dict[str, Any]:
        return {"n": self.n, "vertices": self.vertices.tolist()}

    @staticmethod
    def from_json(doc: Dict[str, Any]) -> 'Polytope':
        try:
            n = int(doc["n"])
            vertices = doc["vertices"]
        except (KeyError, TypeError, ValueError) as exc:
            raise SerializationError(f"malformed polytope document: {doc!r}") from exc
        poly = Polytope(vertices)
        if poly.n != n:
            raise DimensionError(f"polytope declares n={n} but has vertices of dimension {poly.n}")
        return poly

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polytope):
            return False
        return self.vertices.shape == other.vertices.shape and \
            sorted(map(tuple, self.vertices)) == sorted(map(tuple, other.vertices))

    def __hash__(self) -> int:
        return hash(tuple(sorted(map(tuple, self.vertices))))

    def __repr__(self) -> str:
        return f"Polytope(n={self.n}, vertices={self.vertices.tolist()})"


def minkowski_sum(A: Polytope, B: Polytope) -> Polytope:
    """A + B from all vertex pairs, pruned to extreme points."""
    if A.n != B.n:
        raise DimensionError(f"Minkowski sum of polytopes in R^{A.n} and R^{B.n}")
    sums = A.vertices[:, None, :] + B.vertices[None, :, :]
    return Polytope(sums.reshape(-1, A.n))


def convex_hull(polytopes: Sequence[Polytope]) -> Polytope:
    """conv of the union of the given polytopes."""
    dims = {p.n for p in polytopes}
    if len(dims) != 1:
        raise DimensionError(f"convex hull of polytopes of dimensions {sorted(dims)}")
    return Polytope(np.vstack([p.vertices for p in polytopes]))


def inner_products(points: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """
    The (m, K) table of <p_i, l_k>.

    Summed coordinate by coordinate, so each entry is bitwise independent of
    how many rows or directions are evaluated together.
    """
    points = np.asarray(points, dtype=float)
    directions = np.asarray(directions, dtype=float)
    table = points[:, 0, None] * directions[None, :, 0]
    for i in range(1, points.shape[1]):
        table = table + points[:, i, None] * directions[None, :, i]
    return table


def support_function(C: Polytope, l: Sequence[float]) -> float:
    """delta*(l, C) = max over vertices of <l, v>."""
    l = np.asarray(l, dtype=float).reshape(-1)
    if l.size != C.n:
        raise DimensionError(f"direction of dimension {l.size} for a polytope in R^{C.n}")
    return float(np.max(inner_products(C.vertices, l[None, :])))


def supporting_face(C: Polytope, l: Sequence[float], tol: float = VERTEX_TOL) -> Polytope:
    """Y(l, C): the vertices attaining delta*(l, C) up to tol * max(1, |delta*|); Y(0, C) = C."""
    l = np.asarray(l, dtype=float).reshape(-1)
    if l.size != C.n:
        raise DimensionError(f"direction of dimension {l.size} for a polytope in R^{C.n}")
    if not np.any(l):
        return C
    values = inner_products(C.vertices, l[None, :])[:, 0]
    top = values.max()
    mask = values >= top - tol * max(1.0, abs(top))
    return Polytope(C.vertices[mask], normalize=False)


def extreme_points(points: np.ndarray, tol: float = VERTEX_TOL) -> np.ndarray:
    """
    Extreme points of the finite point set, in their original order.

    The affine hull is found by SVD; inside it the hull is exact: end points
    for a segment, monotone chain for a polygon, facet enumeration for a
    3-polytope.
    """
    pts = _unique_rows(np.asarray(points, dtype=float), tol)
    if len(pts) <= 2:
        return pts
    scale = max(1.0, float(np.abs(pts).max()))
    centered = pts - pts.mean(axis=0)
    _, sing, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(sing > tol * scale))
    if rank == 0:
        return pts[:1]
    coords = centered @ vt[:rank].T
    if rank == 1:
        keep = {int(np.argmin(coords[:, 0])), int(np.argmax(coords[:, 0]))}
    elif rank == 2:
        keep = set(_hull_2d(coords, tol * scale))
    elif rank == 3:
        keep = _hull_3d(coords, tol * scale)
    else:
        raise DimensionError(f"extreme point extraction supports affine dimension <= 3, got {rank}")
    return pts[sorted(keep)]


def _unique_rows(points: np.ndarray, tol: float) -> np.ndarray:
    kept: List[np.ndarray] = []
    for p in points:
        scale = max(1.0, float(np.abs(p).max()))
        if not any(np.abs(p - q).max() <= tol * scale for q in kept):
            kept.append(p)
    return np.array(kept)


def _hull_2d(coords: np.ndarray, tol: float) -> List[int]:
    def cross(o: int, a: int, b: int) -> float:
        return (coords[a, 0] - coords[o, 0]) * (coords[b, 1] - coords[o, 1]) \
            - (coords[a, 1] - coords[o, 1]) * (coords[b, 0] - coords[o, 0])

    order = sorted(range(len(coords)), key=lambda i: (coords[i, 0], coords[i, 1]))
    lower: List[int] = []
    for i in order:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= tol:
            lower.pop()
        lower.append(i)
    upper: List[int] = []
    for i in reversed(order):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= tol:
            upper.pop()
        upper.append(i)
    return lower[:-1] + upper[:-1]


def _hull_3d(coords: np.ndarray, tol: float) -> set:
    extreme = set()
    seen_facets = set()
    for i, j, k in combinations(range(len(coords)), 3):
        u = coords[j] - coords[i]
        normal = np.cross(u, coords[k] - coords[i])
        norm = np.linalg.norm(normal)
        if norm <= tol:
            continue
        normal = normal / norm
        heights = (coords - coords[i]) @ normal
        if heights.max() > tol and heights.min() < -tol:
            continue
        on_plane = np.flatnonzero(np.abs(heights) <= tol)
        key = tuple(on_plane)
        if key in seen_facets:
            continue
        seen_facets.add(key)
        u = u / np.linalg.norm(u)
        basis = np.column_stack([u, np.cross(normal, u)])
        facet = (coords[on_plane] - coords[i]) @ basis
        for idx in _hull_2d(facet, tol):
            extreme.add(int(on_plane[idx]))
    return extreme
