"""
Arithmetic field expressions over x1..xn

Drift and diffusion entries are written as small formulas such as
``3*x1 - x1^3``; they are parsed with sympy (``^`` is power) and compiled to
vectorized numpy callables.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .errors import ConfigValidationError
from ..models.sde import SdeSpec

logger = logging.getLogger(__name__)

_TRANSFORMATIONS = standard_transformations + (convert_xor,)
_ALLOWED_ATOMS = (sympy.Symbol, sympy.Number, sympy.NumberSymbol)
_ALLOWED_FUNCS = (sympy.Add, sympy.Mul, sympy.Pow)


def state_symbols(dim: int) -> List[sympy.Symbol]:
    return list(sympy.symbols(" ".join(f"x{i + 1}" for i in range(dim)), real=True, seq=True))


def parse_field_expression(text: str, dim: int, path: str = "") -> sympy.Expr:
    """
    Parse one field entry

    Args:
        text: expression text, e.g. ``0.001*x1 - x1*x2``
        dim: state dimension (allowed symbols are x1..x{dim})
        path: config key path used in error messages

    Returns:
        sympy expression

    Raises:
        ConfigValidationError: syntax error, unknown symbol or disallowed operation
    """
    symbols = state_symbols(dim)
    local = {s.name: s for s in symbols}
    try:
        expr = parse_expr(str(text), local_dict=local, global_dict={"Integer": sympy.Integer,
                                                                     "Float": sympy.Float,
                                                                     "Rational": sympy.Rational,
                                                                     "Symbol": sympy.Symbol,
                                                                     "pi": sympy.pi,
                                                                     "E": sympy.E},
                          transformations=_TRANSFORMATIONS, evaluate=True)
    except Exception as e:
        raise ConfigValidationError(f"cannot parse expression {text!r}: {e}", path) from e
    if not isinstance(expr, sympy.Expr):
        raise ConfigValidationError(f"expression {text!r} is not arithmetic", path)
    unknown = {s.name for s in expr.free_symbols} - set(local)
    if unknown:
        raise ConfigValidationError(
            f"unknown symbols {sorted(unknown)} in {text!r}; allowed: {sorted(local)}", path
        )
    for node in sympy.preorder_traversal(expr):
        if not isinstance(node, _ALLOWED_ATOMS + _ALLOWED_FUNCS):
            raise ConfigValidationError(
                f"operation {type(node).__name__} not allowed in {text!r}", path
            )
    return expr


def compile_scalar_field(expr: sympy.Expr, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized evaluator: (N, dim) array -> (N,) array"""
    fn = sympy.lambdify(state_symbols(dim), expr, modules="numpy")

    def evaluate(x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        value = fn(*[x[:, i] for i in range(dim)])
        return np.broadcast_to(np.asarray(value, dtype=float), (x.shape[0],))

    return evaluate


@dataclass
class CompiledSde:
    """Compiled drift/diffusion evaluators for an SdeSpec"""
    dim: int
    drift_fns: Sequence[Callable[[np.ndarray], np.ndarray]]
    diffusion_fns: Sequence[Sequence[Callable[[np.ndarray], np.ndarray]]]
    diffusion_is_zero: bool

    def drift(self, x: np.ndarray) -> np.ndarray:
        """b(x): (N, n) -> (N, n)"""
        return np.stack([f(x) for f in self.drift_fns], axis=-1)

    def diffusion_matrix(self, x: np.ndarray) -> np.ndarray:
        """Lambda(x): (N, n) -> (N, n, n)"""
        rows = [np.stack([f(x) for f in row], axis=-1) for row in self.diffusion_fns]
        return np.stack(rows, axis=-2)

    def diffusion(self, x: np.ndarray) -> np.ndarray:
        """a(x) = Lambda Lambda^T: (N, n) -> (N, n, n)"""
        lam = self.diffusion_matrix(x)
        return np.einsum("sik,sjk->sij", lam, lam)


def compile_sde(spec: SdeSpec) -> CompiledSde:
    """Parse and compile every field entry of an SdeSpec"""
    n = spec.dim
    drift_exprs = [parse_field_expression(e, n, f"sde.drift[{i}]") for i, e in enumerate(spec.drift)]
    diff_exprs = [
        [parse_field_expression(e, n, f"sde.diffusion_matrix[{i}][{j}]") for j, e in enumerate(row)]
        for i, row in enumerate(spec.diffusion_matrix)
    ]
    zero = all(e == 0 for row in diff_exprs for e in row)
    logger.debug(f"コンパイル済みSDE: drift={drift_exprs}, diffusion={diff_exprs}")
    return CompiledSde(
        dim=n,
        drift_fns=[compile_scalar_field(e, n) for e in drift_exprs],
        diffusion_fns=[[compile_scalar_field(e, n) for e in row] for row in diff_exprs],
        diffusion_is_zero=zero,
    )
