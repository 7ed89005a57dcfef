import csv
import math
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib.pyplot as plt
import numpy as np

from .directed_sets import DirectedInterval, DirectedSet, di_from_interval
from .dirsub_engine import compare_routes
from .embedding import qd_pair_from_dc
from .errors import DimensionError
from .expr_core import (Expr, add, affine, constant, maximum, minimum, multiply, negate,
                        parse, subtract)
from .geometry import Polytope, SphereGrid, make_sphere_grid

# f_N is Lipschitz with this constant for every N
NON_QD_LIPSCHITZ = math.sqrt(2.0)
SVG_SIZE = 800


def convex_max_example() -> Expr:
    """f(x) = max(|x1|, |x2|); its subdifferential at 0 is the unit diamond."""
    return parse("max(abs(x1), abs(x2))", 2)


def non_qd_text(N: int) -> str:
    if N < 1:
        raise ValueError(f"truncation N must be positive, got {N}")
    terms = ["abs(x1-x2)"] + [f"abs(x1-x2/{k})" for k in range(2, N + 1)]
    return f"min({', '.join(terms)})" if N > 1 else terms[0]


def non_qd_example(N: int) -> Expr:
    """
    f_N(x) = min_{k<=N} |x1 - x2/k|, the truncation of a function that is
    directed subdifferentiable at 0 without being quasidifferentiable there.
    """
    return parse(non_qd_text(N), 2)


def convex_max_reference(l: Sequence[float], tol: float = 1e-12) -> Tuple[float, DirectedInterval]:
    """
    Closed form of the directed subdifferential of max(|x1|, |x2|) at 0 in the
    direction l: the support max(|l1|, |l2|) and the projected supporting face
    of the unit diamond.
    """
    l1, l2 = (float(v) for v in l)
    support = max(abs(l1), abs(l2))
    if abs(abs(l1) - abs(l2)) <= tol:
        half = math.sqrt(0.5)
        return support, di_from_interval(-half, half)
    if l1 > abs(l2):
        point = l2
    elif l1 < -abs(l2):
        point = -l2
    elif l2 > abs(l1):
        point = -l1
    else:
        point = l1
    return support, di_from_interval(point, point)


# ---------------------------------------------------------------------------
# random instances

def random_max_affine(n: int, rng: np.random.Generator, max_pieces: int = 6,
                      coeff_range: float = 3.0, ties_at: Optional[Sequence[float]] = None) -> Expr:
    """
    max of 1..max_pieces random affine atoms with coefficients in
    [-coeff_range, coeff_range]. With ties_at, the first two atoms are
    shifted to be active at that point.
    """
    pieces = int(rng.integers(1, max_pieces + 1))
    C = rng.uniform(-coeff_range, coeff_range, size=(pieces, n))
    b = rng.uniform(-coeff_range, coeff_range, size=pieces)
    if ties_at is not None and pieces >= 2:
        x = np.asarray(ties_at, dtype=float)
        top = float(np.max(C @ x + b))
        b[:2] = top - C[:2] @ x
    return maximum(affine(c, offset) for c, offset in zip(C, b))


def random_polytope(n: int, rng: np.random.Generator, max_vertices: int = 6,
                    coeff_range: float = 3.0) -> Polytope:
    count = int(rng.integers(1, max_vertices + 1))
    return Polytope(rng.uniform(-coeff_range, coeff_range, size=(count, n)))


def random_piecewise_affine(n: int, rng: np.random.Generator, depth: int = 5,
                            coeff_range: float = 3.0) -> Expr:
    """A random tree of affine atoms under +, -, constant scaling, negation, min and max."""
    if depth <= 1 or rng.random() < 0.2:
        return affine(rng.uniform(-coeff_range, coeff_range, size=n),
                      float(rng.uniform(-coeff_range, coeff_range)))
    op = rng.choice(['sum', 'difference', 'scale', 'negation', 'min', 'max'])
    if op == 'negation':
        return negate(random_piecewise_affine(n, rng, depth - 1, coeff_range))
    if op == 'scale':
        factor = constant(float(rng.uniform(-coeff_range, coeff_range)), n)
        return multiply(factor, random_piecewise_affine(n, rng, depth - 1, coeff_range))
    if op in ('min', 'max'):
        arity = int(rng.integers(2, 4))
        children = [random_piecewise_affine(n, rng, depth - 1, coeff_range) for _ in range(arity)]
        return maximum(children) if op == 'max' else minimum(children)
    left = random_piecewise_affine(n, rng, depth - 1, coeff_range)
    right = random_piecewise_affine(n, rng, depth - 1, coeff_range)
    return add(left, right) if op == 'sum' else subtract(left, right)


def run_route_study(n: int = 2, instances: int = 50, grid: Optional[SphereGrid] = None,
                    tol: float = 1e-9, seed: int = 42) -> List[Dict[str, object]]:
    """
    Compare the derivative, DC and quasidifferential routes on random DC
    functions f = g - h with g, h max-affine.

    Returns one row per instance with the largest pairwise discrepancy.
    """
    rng = np.random.default_rng(seed)
    grid = make_sphere_grid(n) if grid is None else grid
    rows = []
    for index in range(instances):
        x = rng.uniform(-1.0, 1.0, size=n)
        g = random_max_affine(n, rng, ties_at=x)
        h = random_max_affine(n, rng, ties_at=x)
        report = compare_routes(x, grid, f=subtract(g, h), dc=(g, h), qd=qd_pair_from_dc(g, h, x),
                                tol=tol, seed=seed + index)
        rows.append({"instance": index, "x": x.tolist(), "passed": report.passed,
                     "max_discrepancy": report.max_discrepancy})
    return rows


# ---------------------------------------------------------------------------
# export of two-dimensional results

def profile_rows(A: DirectedSet) -> List[Tuple[float, float, float, float]]:
    """(angle, support, lower_neg, lower_pos) for every direction of an n=2 directed set."""
    if A.n != 2:
        raise DimensionError(f"profiles are only defined for n=2 directed sets, got n={A.n}")
    lowers = A.components[1]
    return [(float(angle), float(s), float(neg), float(pos))
            for angle, s, (neg, pos) in zip(A.grid.angles, A.supports, lowers)]


def write_profile_csv(A: DirectedSet, path: str) -> None:
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(["angle", "support", "lower_neg", "lower_pos"])
        for row in profile_rows(A):
            writer.writerow([format(v, '.17g') for v in row])


def plot_directed_set_2d(A: DirectedSet, path: str, title: Optional[str] = None) -> None:
    """
    Polar plot of the support values and the band between the endpoints of
    the lower directed intervals, written as an 800x800 SVG.
    """
    rows = np.array(profile_rows(A))
    angles = np.append(rows[:, 0], rows[0, 0] + 2.0 * np.pi)
    support = np.append(rows[:, 1], rows[0, 1])
    left = -np.append(rows[:, 2], rows[0, 2])
    right = np.append(rows[:, 3], rows[0, 3])

    with plt.rc_context({'svg.hashsalt': 'DirectedSubdiff'}):
        fig = plt.figure(figsize=(SVG_SIZE / 72.0, SVG_SIZE / 72.0), dpi=72)
        _draw_profile(fig, angles, support, left, right, title)
        fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)


def _draw_profile(fig, angles, support, left, right, title):
    ax = fig.add_subplot(projection='polar')
    low = min(support.min(), left.min(), right.min())
    high = max(support.max(), left.max(), right.max())
    margin = max(0.1, 0.1 * (high - low))
    ax.set_rlim(low - margin, high + margin)
    ax.fill_between(angles, np.minimum(left, right), np.maximum(left, right),
                    alpha=0.3, label="lower interval")
    ax.plot(angles, support, linewidth=1.5, label="support")
    ax.legend(loc='upper right', fontsize='small')
    if title:
        ax.set_title(title)


if __name__ == "__main__":
    for row in run_route_study(instances=5):
        print(row)
