"""
Command-line front end.

    python -m DirectedSubdiff subdiff -f "max(abs(x1),abs(x2))" -x 0,0 -n 2 -K 360
    python -m DirectedSubdiff compare --example convex-max
    python -m DirectedSubdiff viz --example convex-max -o profile

Exit codes: 0 success, 1 parse error, 2 evaluation error, 3 dimension, grid
or input error, 4 inconsistent route inputs, 5 routes disagree.
"""
import argparse
import json
import logging
import re
import sys
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from .case_studies import NON_QD_LIPSCHITZ, convex_max_example, non_qd_example, plot_directed_set_2d, write_profile_csv
from .directed_sets import json_text
from .dirsub_engine import compare_routes, directed_subdifferential
from .errors import DimensionError, DirSubError, SerializationError
from .expr_core import Expr, constant, parse
from .geometry import Polytope, SphereGrid, make_sphere_grid

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 3
EXIT_ROUTES_DISAGREE = 5

EXAMPLES = ('convex-max', 'non-qd')


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs, collected from the flags."""
    command: str
    function: Optional[str] = None
    g: Optional[str] = None
    h: Optional[str] = None
    lower_path: Optional[str] = None
    upper_path: Optional[str] = None
    point: Optional[Tuple[float, ...]] = None
    n: Optional[int] = None
    K: Optional[int] = None
    grid3: Optional[Tuple[int, int]] = None
    tol: float = 1e-9
    output: str = '-'
    example: Optional[str] = None
    N: int = 5
    lipschitz: Optional[float] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise DimensionError(f"tolerance must be positive, got {self.tol}")
        if self.example is not None and self.example not in EXAMPLES:
            raise DimensionError(f"unknown example {self.example!r}")
        if self.N < 1:
            raise DimensionError(f"truncation N must be positive, got {self.N}")

    @property
    def dimension(self) -> int:
        if self.n is not None:
            return self.n
        if self.point is not None:
            return len(self.point)
        if self.example is not None:
            return 2
        for text in (self.function, self.g, self.h):
            if text is not None:
                return _max_variable(text)
        raise DimensionError("cannot infer the dimension; pass -n or -x")

    @property
    def x(self) -> np.ndarray:
        n = self.dimension
        if self.point is None:
            return np.zeros(n)
        if len(self.point) != n:
            raise DimensionError(f"point {list(self.point)} does not have dimension {n}")
        return np.array(self.point)

    def grid(self) -> SphereGrid:
        n = self.dimension
        if n == 3:
            return make_sphere_grid(3, self.grid3, sub_resolution=self.K)
        return make_sphere_grid(n, self.K if n == 2 else None)


def _max_variable(text: str) -> int:
    indices = [int(i) for i in re.findall(r"x(\d+)", text)]
    return max(indices, default=1)


def _expressions(config: RunConfig) -> Tuple[Optional[Expr], Optional[Tuple[Expr, Expr]]]:
    """The function and DC pair given by the flags or the built-in example."""
    n = config.dimension
    if config.example == 'convex-max':
        f = convex_max_example()
        return f, (f, constant(0.0, 2))
    if config.example == 'non-qd':
        return non_qd_example(config.N), None
    f = parse(config.function, n) if config.function is not None else None
    dc = None
    if config.g is not None or config.h is not None:
        if config.g is None or config.h is None:
            raise DimensionError("a DC pair needs both -g and -h")
        dc = (parse(config.g, n), parse(config.h, n))
    return f, dc


def _load_polytope(path: str) -> Polytope:
    try:
        with open(path) as handle:
            return Polytope.from_json(json.load(handle))
    except json.JSONDecodeError as exc:
        raise SerializationError(f"{path}: invalid JSON: {exc}") from exc


def _emit(doc: Dict[str, Any], output: str) -> None:
    text = json_text(doc) + "\n"
    if output == '-':
        sys.stdout.write(text)
    else:
        with open(output, 'w') as handle:
            handle.write(text)
        logger.info("wrote %s", output)


def cmd_subdiff(config: RunConfig) -> int:
    f, _ = _expressions(config)
    if f is None:
        raise DimensionError("subdiff needs -f or --example")
    grid = config.grid()
    logger.info("derivative route for %s at %s on grid %s", f, config.x.tolist(), grid.resolution)
    result = directed_subdifferential(f, config.x, grid)
    lipschitz = config.lipschitz
    if lipschitz is None and config.example == 'non-qd':
        lipschitz = NON_QD_LIPSCHITZ
    if lipschitz is not None:
        result = replace(result, certificate=replace(result.certificate, lipschitz_bound=lipschitz))
    doc = result.to_json()
    _emit(doc, config.output)
    return EXIT_OK


def cmd_compare(config: RunConfig) -> int:
    f, dc = _expressions(config)
    qd = None
    if config.lower_path is not None or config.upper_path is not None:
        if config.lower_path is None or config.upper_path is None:
            raise DimensionError("a quasidifferential pair needs both --lower and --upper")
        qd = (_load_polytope(config.lower_path), _load_polytope(config.upper_path))
    grid = config.grid()
    report = compare_routes(config.x, grid, f=f, dc=dc, qd=qd, tol=config.tol)
    for a, b, equality in report.comparisons:
        logger.info("%s vs %s: discrepancy %.3g", a, b, equality.discrepancy)
    _emit(report.to_json(), config.output)
    if not report.passed:
        logger.error("routes disagree by %.3g (tol %.3g)", report.max_discrepancy, config.tol)
        return EXIT_ROUTES_DISAGREE
    return EXIT_OK


def cmd_viz(config: RunConfig) -> int:
    f, _ = _expressions(config)
    if f is None:
        raise DimensionError("viz needs -f or --example")
    if config.dimension != 2:
        raise DimensionError(f"viz only plots n=2 results, got n={config.dimension}")
    result = directed_subdifferential(f, config.x, config.grid())
    prefix = 'dirsub_profile' if config.output == '-' else config.output
    write_profile_csv(result.value, prefix + '.csv')
    plot_directed_set_2d(result.value, prefix + '.svg', title=str(f))
    logger.info("wrote %s.csv and %s.svg", prefix, prefix)
    return EXIT_OK


COMMANDS = {'subdiff': cmd_subdiff, 'compare': cmd_compare, 'viz': cmd_viz}


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the input-error code instead of argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _grid3(text: str) -> Tuple[int, int]:
    try:
        polar, azimuth = (int(v) for v in text.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected P,A, got {text!r}")
    return polar, azimuth


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog='DirectedSubdiff',
                             description="Directed subdifferentials via directional derivatives.")
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_ArgumentParser)
    for name, text in (('subdiff', "directed subdifferential and certificate as JSON"),
                       ('compare', "compare the derivative, DC and quasidifferential routes"),
                       ('viz', "CSV and SVG profile of an n=2 result")):
        # -h is the second DC part, so help is --help only
        cmd = sub.add_parser(name, help=text, add_help=False)
        cmd.add_argument('--help', action='help', help="show this help message and exit")
        cmd.add_argument('-f', dest='function', help="expression in x1..xn")
        if name == 'compare':
            cmd.add_argument('-g', dest='g', help="convex part g of f = g - h")
            cmd.add_argument('-h', dest='h', help="convex part h of f = g - h")
            cmd.add_argument('--lower', dest='lower_path', help="JSON polytope: lower quasidifferential")
            cmd.add_argument('--upper', dest='upper_path', help="JSON polytope: upper quasidifferential")
        cmd.add_argument('-x', dest='point', type=_floats, help="comma-separated point, e.g. -x=0,0")
        cmd.add_argument('-n', dest='n', type=int, help="dimension (1, 2 or 3)")
        cmd.add_argument('-K', dest='K', type=int, help="S^1 grid resolution (sub-grid for n=3)")
        cmd.add_argument('--grid3', type=_grid3, help="n=3 grid resolution P,A")
        cmd.add_argument('--tol', type=float, default=1e-9)
        cmd.add_argument('-o', dest='output', default='-', help="output file, '-' for stdout; prefix for viz")
        cmd.add_argument('--example', choices=EXAMPLES)
        cmd.add_argument('--N', dest='N', type=int, default=5, help="truncation of the non-qd example")
        cmd.add_argument('--lipschitz', type=float, help="Lipschitz bound to check M against")
        cmd.add_argument('--verbose', action='store_true')
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(command=args.command,
                     function=args.function,
                     g=getattr(args, 'g', None),
                     h=getattr(args, 'h', None),
                     lower_path=getattr(args, 'lower_path', None),
                     upper_path=getattr(args, 'upper_path', None),
                     point=args.point,
                     n=args.n,
                     K=args.K,
                     grid3=args.grid3,
                     tol=args.tol,
                     output=args.output,
                     example=args.example,
                     N=args.N,
                     lipschitz=args.lipschitz)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        config = config_from_args(args)
        return COMMANDS[config.command](config)
    except DirSubError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
