"""Working-precision management and vectorised extended-precision helpers.

All extended-precision arithmetic runs on :mod:`gmpy2` scalars stored in
numpy ``object`` arrays.  The working precision (in bits) lives in a
thread-local slot that mirrors the active gmpy2 context, so that caches
can key on it and retries at doubled precision recompute everything.
"""

from __future__ import annotations

import ast
import functools
import math
import operator
import threading
from contextlib import contextmanager
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

DEFAULT_BITS = 212

_local = threading.local()


def get_bits() -> int:
    """Return the configured working precision in bits."""
    return getattr(_local, "bits", DEFAULT_BITS)


def set_default_bits(bits: int) -> None:
    """Set the working precision for the current thread."""
    if bits < 53:
        raise ValueError("working precision must be at least 53 bits")
    _local.bits = int(bits)


def decimal_digits(bits: int | None = None) -> int:
    """Number of decimal digits carried by ``bits`` binary digits."""
    return int((get_bits() if bits is None else bits) * math.log10(2))


@contextmanager
def working_precision(bits: int) -> Iterator[int]:
    """Run a block at ``bits`` bits of working precision.

    Examples
    --------
    >>> with working_precision(100):
    ...     mpfr(1).precision
    100
    """
    old = get_bits()
    _local.bits = int(bits)
    try:
        with gmpy2.context(gmpy2.get_context(), precision=int(bits)):
            yield int(bits)
    finally:
        _local.bits = old


def precise(fn: Callable) -> Callable:
    """Decorator running ``fn`` with the gmpy2 context at working precision."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        bits = get_bits()
        if gmpy2.get_context().precision == bits:
            return fn(*args, **kwargs)
        with gmpy2.context(gmpy2.get_context(), precision=bits):
            return fn(*args, **kwargs)

    return wrapper


def eps() -> mpfr:
    """Unit roundoff of the working precision."""
    return mpfr(2) ** (-get_bits())


# ---------------------------------------------------------------------------
# Parsing of exact real inputs
# ---------------------------------------------------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {"sqrt": gmpy2.sqrt, "exp": gmpy2.exp, "log": gmpy2.log}


def _eval_node(node: ast.AST, source: str):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, source)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        # Re-read the literal text so that "0.1" is rounded once, at
        # working precision, rather than going through a binary double.
        text = ast.get_source_segment(source, node)
        return mpfr(text)
    if isinstance(node, ast.Name):
        if node.id == "pi":
            return gmpy2.const_pi()
        if node.id == "e":
            return gmpy2.exp(1)
        raise ValueError(f"unknown name {node.id!r} in real expression")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        val = _eval_node(node.operand, source)
        return -val if isinstance(node.op, ast.USub) else val
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left, source),
                                      _eval_node(node.right, source))
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
        return _FUNCS[node.func.id](_eval_node(node.args[0], source))
    raise ValueError(f"unsupported syntax in real expression: {ast.dump(node)}")


def parse_real(text: str) -> mpfr:
    """Evaluate a small arithmetic expression at working precision.

    Accepted are decimal literals, ``pi``, ``e``, the operators
    ``+ - * / **`` and the functions ``sqrt``, ``exp`` and ``log``.

    Examples
    --------
    >>> with working_precision(64):
    ...     float(parse_real("1/pi"))
    0.3183098861837907
    """
    text = text.strip()
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse real expression {text!r}") from exc
    return _eval_node(tree, text)


RealLike = Any  # str | int | float | Fraction | mpfr


def to_mpfr(x: RealLike) -> mpfr:
    """Convert an exact real input to an mpfr at working precision."""
    if isinstance(x, str):
        return parse_real(x)
    if isinstance(x, Fraction):
        return mpfr(x.numerator) / x.denominator
    if isinstance(x, (int, float, np.integer, np.floating)):
        return mpfr(x) if not isinstance(x, np.floating) else mpfr(float(x))
    if isinstance(x, type(mpfr(0))):
        return +x
    raise TypeError(f"cannot interpret {x!r} as a real number")


def to_mpc(z: Any) -> Any:
    """Convert a complex or real input to an mpc (or mpfr if real)."""
    if isinstance(z, type(mpc(0))):
        return z
    if isinstance(z, complex):
        if z.imag == 0:
            return mpfr(z.real)
        return mpc(mpfr(z.real), mpfr(z.imag))
    return to_mpfr(z)


# ---------------------------------------------------------------------------
# Object-array helpers
# ---------------------------------------------------------------------------

def mparray(values: Iterable) -> np.ndarray:
    """Build a 1-d object array from an iterable of gmpy2 scalars."""
    values = list(values)
    out = np.empty(len(values), dtype=object)
    for i, v in enumerate(values):
        out[i] = v
    return out


def mpzeros(n: int, complex_: bool = False) -> np.ndarray:
    """Object array of ``n`` extended-precision zeros."""
    zero = mpc(0) if complex_ else mpfr(0)
    out = np.empty(n, dtype=object)
    out[:] = [zero] * n
    return out


vreal = np.frompyfunc(lambda v: v.real, 1, 1)
vimag = np.frompyfunc(lambda v: v.imag, 1, 1)
vabs = np.frompyfunc(abs, 1, 1)
vconj = np.frompyfunc(lambda v: v.conjugate(), 1, 1)
vsqrt = np.frompyfunc(gmpy2.sqrt, 1, 1)
vexp = np.frompyfunc(gmpy2.exp, 1, 1)
vlog = np.frompyfunc(gmpy2.log, 1, 1)
vcos = np.frompyfunc(gmpy2.cos, 1, 1)
vsin = np.frompyfunc(gmpy2.sin, 1, 1)
vfloat = np.frompyfunc(float, 1, 1)
vcomplex = np.frompyfunc(complex, 1, 1)


def as_object_array(x: Any) -> np.ndarray:
    """View scalar or sequence input as an object array (no copy if possible)."""
    if isinstance(x, np.ndarray) and x.dtype == object:
        return x
    arr = np.asarray(x, dtype=object)
    return arr


def to_float_array(x: np.ndarray) -> np.ndarray:
    """Round an object array of reals to float64."""
    return np.asarray(vfloat(as_object_array(x)), dtype=float)


def to_complex_array(x: np.ndarray) -> np.ndarray:
    """Round an object array of complex values to complex128."""
    return np.asarray(vcomplex(as_object_array(x)), dtype=complex)


def is_complex_scalar(v: Any) -> bool:
    return isinstance(v, (complex, type(mpc(0))))


def fmt(x: Any, digits: int | None = None) -> str:
    """Format an extended-precision scalar as a decimal string.

    Real values become a single decimal string; complex values become
    ``"re+imj"`` style strings with both parts at ``digits`` digits.
    """
    digits = decimal_digits() if digits is None else digits
    if isinstance(x, type(mpc(0))):
        re = format(x.real, f".{digits}g")
        im = format(x.imag, f".{digits}g")
        sign = "" if im.startswith("-") else "+"
        return f"{re}{sign}{im}j"
    if isinstance(x, complex):
        return fmt(mpc(x), digits)
    return format(mpfr(x), f".{digits}g")
