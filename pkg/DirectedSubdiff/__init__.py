"""
DirectedSubdiff: directed subdifferentials of nonconvex piecewise-affine
functions, computed recursively from directional derivatives.
"""

from .errors import DirSubError, ExprParseError, EvaluationError, DimensionError, NotPolyhedralError, SerializationError, InconsistentInputError
from .expr_core import Expr, parse, format_expr, evaluate, dini_dd, dini_dd_batch, dd_function, substitute_affine, is_max_affine, convex_polyhedral_subdifferential, constant, affine, variable, maximum, minimum, absolute
from .geometry import SphereGrid, make_sphere_grid, rotation, lift_matrix, project, lift, Polytope, minkowski_sum, convex_hull, support_function, supporting_face, extreme_points
from .directed_sets import DirectedInterval, DirectedSet, EqualityReport, di_from_interval, ds_linear_comb, ds_norm, ds_equal, ds_serialize, ds_deserialize
from .embedding import EmbeddedSet, embed, dc_directed_subdifferential, qd_directed_subdifferential, qd_pair_from_dc, dc_of_directional_derivative
from .dirsub_engine import DirSubResult, MCertificate, RouteReport, restrict, directed_subdifferential, certify, compare_routes, linear_combination_bound, product_bound, quotient_bound, max_min_bound
from .case_studies import convex_max_example, non_qd_example, convex_max_reference, random_max_affine, random_polytope, random_piecewise_affine, run_route_study, write_profile_csv, plot_directed_set_2d
