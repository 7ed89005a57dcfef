"""
The space of directed sets at grid resolution: directed intervals, recursive
directed sets, linear operations, norm, equality and JSON serialization.

A directed set on an n-dimensional grid is stored level by level. Level k is
an array of shape (m_0, ..., m_k) where m_j is the number of directions of the
j-th grid in the chain grid, grid.sub_grid, ...; level 0 holds the support
values a_n(l) and the last level holds the directed interval pairs
(a_1(-1), a_1(+1)).
"""
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionError, SerializationError
from .geometry import SphereGrid, make_sphere_grid


@dataclass(frozen=True)
class DirectedInterval:
    """
    A directed interval (a1_neg, a1_pos) = (a_1(-1), a_1(+1)).

    The usual interval [a, b] is (-a, b); any pair of reals is allowed, so
    the endpoints may come in reversed order.
    """
    a1_neg: float
    a1_pos: float

    def __post_init__(self):
        if not (np.isfinite(self.a1_neg) and np.isfinite(self.a1_pos)):
            raise ValueError(f"directed interval entries must be finite, got {(self.a1_neg, self.a1_pos)}")

    @property
    def lower_endpoint(self) -> float:
        return -self.a1_neg

    @property
    def upper_endpoint(self) -> float:
        return self.a1_pos

    @property
    def is_inverted(self) -> bool:
        """True when the left endpoint exceeds the right one."""
        return self.lower_endpoint > self.upper_endpoint

    def norm(self) -> float:
        return max(abs(self.a1_neg), abs(self.a1_pos))

    def __add__(self, other: 'DirectedInterval') -> 'DirectedInterval':
        return DirectedInterval(self.a1_neg + other.a1_neg, self.a1_pos + other.a1_pos)

    def __sub__(self, other: 'DirectedInterval') -> 'DirectedInterval':
        return DirectedInterval(self.a1_neg - other.a1_neg, self.a1_pos - other.a1_pos)

    def __mul__(self, alpha: float) -> 'DirectedInterval':
        return DirectedInterval(alpha * self.a1_neg, alpha * self.a1_pos)

    __rmul__ = __mul__

    def __neg__(self) -> 'DirectedInterval':
        return DirectedInterval(-self.a1_neg, -self.a1_pos)

    def __str__(self) -> str:
        return f"[{self.lower_endpoint!r}, {self.upper_endpoint!r}]->"


def di_from_interval(a: float, b: float) -> DirectedInterval:
    """J_1([a, b]) = (-a, b); requires a <= b."""
    if a > b:
        raise ValueError(f"[{a}, {b}] is not an interval; build DirectedInterval directly for a general pair")
    return DirectedInterval(-float(a), float(b))


class DirectedSet:
    """
    An element of D(R^n) sampled on a sphere grid.

    Instances are immutable; arithmetic returns new objects and is only
    defined between sets on equal grids.
    """
    grid: SphereGrid
    components: Tuple[np.ndarray, ...]
    # numpy scalars defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, grid: SphereGrid, components: Sequence[Any]):
        shapes = grid.shapes
        if len(components) != len(shapes):
            raise DimensionError(f"a directed set on an n={grid.n} grid has {len(shapes)} levels, got {len(components)}")
        levels = []
        for k, (level, shape) in enumerate(zip(components, shapes)):
            level = np.array(level, dtype=float)
            if level.shape != shape:
                raise DimensionError(f"level {k} has shape {level.shape}, expected {shape}")
            if not np.all(np.isfinite(level)):
                raise ValueError(f"level {k} of a directed set has non-finite entries")
            level.setflags(write=False)
            levels.append(level)
        self.grid = grid
        self.components = tuple(levels)

    @staticmethod
    def zero(grid: SphereGrid) -> 'DirectedSet':
        return DirectedSet(grid, [np.zeros(shape) for shape in grid.shapes])

    @staticmethod
    def from_interval(interval: DirectedInterval) -> 'DirectedSet':
        return DirectedSet(make_sphere_grid(1), [[interval.a1_neg, interval.a1_pos]])

    @staticmethod
    def from_entries(grid: SphereGrid,
                     supports: Sequence[float],
                     lowers: Sequence['DirectedSet']) -> 'DirectedSet':
        """Assemble (A_{n-1}(l), a_n(l)) over the grid directions l, in grid order."""
        if grid.n < 2:
            raise DimensionError("entries only exist for directed sets of dimension >= 2")
        if len(supports) != len(grid) or len(lowers) != len(grid):
            raise DimensionError(f"expected {len(grid)} entries, got {len(supports)} supports and {len(lowers)} lowers")
        for lower in lowers:
            if lower.grid != grid.sub_grid:
                raise DimensionError("lower components must live on the grid's sub-grid")
        levels = [np.asarray(supports, dtype=float)]
        for k in range(grid.n - 1):
            levels.append(np.stack([lower.components[k] for lower in lowers]))
        return DirectedSet(grid, levels)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def supports(self) -> np.ndarray:
        """a_n(l) at every grid direction (n >= 2)."""
        if self.n == 1:
            raise DimensionError("a directed interval has no support component")
        return self.components[0]

    def support(self, i: int) -> float:
        return float(self.supports[i])

    def lower(self, i: int) -> 'DirectedSet':
        """A_{n-1}(l_i), the lower-dimensional component at the i-th grid direction."""
        if self.n == 1:
            raise DimensionError("a directed interval has no lower component")
        return DirectedSet(self.grid.sub_grid, [level[i] for level in self.components[1:]])

    @property
    def interval(self) -> DirectedInterval:
        if self.n != 1:
            raise DimensionError(f"only n=1 directed sets are intervals, this one has n={self.n}")
        neg, pos = self.components[0]
        return DirectedInterval(float(neg), float(pos))

    def __add__(self, other: 'DirectedSet') -> 'DirectedSet':
        return ds_linear_comb(1.0, self, 1.0, other)

    def __sub__(self, other: 'DirectedSet') -> 'DirectedSet':
        return ds_linear_comb(1.0, self, -1.0, other)

    def __neg__(self) -> 'DirectedSet':
        return self * -1.0

    def __mul__(self, alpha: float) -> 'DirectedSet':
        return DirectedSet(self.grid, [alpha * level for level in self.components])

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"DirectedSet(n={self.n}, grid={self.grid.resolution}, norm={ds_norm(self)!r})"


def _check_same_grid(A: DirectedSet, B: DirectedSet) -> None:
    if A.grid != B.grid:
        raise DimensionError(f"grid mismatch: n={A.n} {A.grid.resolution} vs n={B.n} {B.grid.resolution}")


def ds_linear_comb(alpha: float, A: DirectedSet, beta: float, B: DirectedSet) -> DirectedSet:
    """alpha*A + beta*B, component by component."""
    _check_same_grid(A, B)
    return DirectedSet(A.grid, [alpha * a + beta * b for a, b in zip(A.components, B.components)])


def ds_norm(A: DirectedSet) -> float:
    """max over all levels and directions of the absolute component values."""
    return max(float(np.max(np.abs(level))) for level in A.components)


@dataclass(frozen=True)
class EqualityReport:
    """
    Outcome of ds_equal.

    worst_chain lists the directions (one per level, outermost first) that
    lead to the largest componentwise discrepancy; the final entry is -1 or +1
    when the worst entry sits in a directed interval.
    """
    equal: bool
    discrepancy: float
    tol: float
    worst_level: int
    worst_chain: List[List[float]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.equal

    def to_json(self) -> Dict[str, Any]:
        return {"equal": self.equal, "discrepancy": self.discrepancy, "tol": self.tol,
                "worst_level": self.worst_level, "worst_chain": self.worst_chain}


def ds_equal(A: DirectedSet, B: DirectedSet, tol: float = 0.0) -> EqualityReport:
    """True iff ds_norm(A - B) <= tol, with the location of the worst discrepancy."""
    diff = A - B
    grids = []
    grid = A.grid
    while grid is not None:
        grids.append(grid)
        grid = grid.sub_grid
    worst_level, worst_index, discrepancy = 0, (), -1.0
    for k, level in enumerate(diff.components):
        flat = int(np.argmax(np.abs(level)))
        value = float(np.abs(level).flat[flat])
        if value > discrepancy:
            worst_level, worst_index, discrepancy = k, np.unravel_index(flat, level.shape), value
    assert len(worst_index) == worst_level + 1, "one direction index per level"
    chain = [grids[j].directions[int(i)].tolist() for j, i in enumerate(worst_index)]
    return EqualityReport(discrepancy <= tol, discrepancy, tol, worst_level, chain)


def ds_to_json(A: DirectedSet) -> Dict[str, Any]:
    """The recursive JSON document of A."""
    if A.n == 1:
        neg, pos = A.components[0]
        return {"n": 1, "neg": float(neg), "pos": float(pos)}
    entries = [{"l": A.grid.directions[i].tolist(),
                "support": A.support(i),
                "lower": ds_to_json(A.lower(i))} for i in range(len(A.grid))]
    return {"n": A.n, "grid": A.grid.to_json(), "entries": entries}


def ds_from_json(doc: Dict[str, Any]) -> DirectedSet:
    try:
        n = int(doc["n"])
        if n == 1:
            return DirectedSet.from_interval(DirectedInterval(float(doc["neg"]), float(doc["pos"])))
        grid = SphereGrid.from_json(doc["grid"])
        entries = doc["entries"]
        supports = [float(e["support"]) for e in entries]
        lowers = [ds_from_json(e["lower"]) for e in entries]
        directions = np.array([e["l"] for e in entries], dtype=float)
        if grid.n != n:
            raise SerializationError(f"document declares n={n} but its grid has n={grid.n}")
        if directions.shape != grid.directions.shape or np.abs(directions - grid.directions).max() > 1e-12:
            raise SerializationError("entry directions do not match the declared grid resolution")
        return DirectedSet.from_entries(grid, supports, lowers)
    except (KeyError, TypeError, ValueError, IndexError, AttributeError) as exc:
        if isinstance(exc, (DimensionError, SerializationError)):
            raise
        raise SerializationError(f"malformed directed set document: {exc}") from exc


def json_text(doc: Any) -> str:
    """
    JSON text of a document of dicts, lists, strings, numbers and booleans.

    Floats are written as 17-significant-digit decimals, which read back to
    the same double, and keys keep their insertion order.
    """
    if isinstance(doc, (bool, np.bool_)):
        return 'true' if doc else 'false'
    if isinstance(doc, (float, np.floating)):
        if not np.isfinite(doc):
            raise SerializationError(f"non-finite number {doc!r} in JSON output")
        return format(float(doc), '.17g')
    if isinstance(doc, (int, np.integer)):
        return str(int(doc))
    if doc is None or isinstance(doc, str):
        return json.dumps(doc)
    if isinstance(doc, dict):
        return '{' + ', '.join(f"{json.dumps(str(k))}: {json_text(v)}" for k, v in doc.items()) + '}'
    if isinstance(doc, (list, tuple, np.ndarray)):
        return '[' + ', '.join(json_text(v) for v in doc) + ']'
    raise SerializationError(f"cannot write {type(doc).__name__} as JSON")


def ds_serialize(A: DirectedSet) -> str:
    """JSON text of A; floats are written as 17-significant-digit decimals."""
    return json_text(ds_to_json(A))


def ds_deserialize(data: Union[str, Dict[str, Any]]) -> DirectedSet:
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SerializationError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SerializationError("a directed set document must be a JSON object")
    return ds_from_json(data)
