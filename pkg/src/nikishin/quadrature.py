"""Extended-precision quadrature rules.

Gauss-Jacobi rules for the weight ``(1-u)**alpha * (1+u)**beta`` on
``[-1, 1]`` are obtained by polishing double-precision seeds with Newton
steps on the three-term recurrence, and are cached per precision.  The
Chebyshev cases ``alpha = beta = -1/2`` and ``alpha = beta = 1/2`` use
their closed forms.
"""

from __future__ import annotations

import threading
from functools import lru_cache

import gmpy2
import numpy as np
from gmpy2 import mpfr
from scipy.special import roots_jacobi

from .precision import get_bits, mparray, to_mpfr, vcos, vsin

_lock = threading.Lock()
_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _jacobi_eval(n: int, alpha, beta, x: np.ndarray):
    """Return ``P_n(x)`` and ``P_{n-1}(x)`` for Jacobi polynomials."""
    one = mpfr(1)
    p_prev = np.full(x.shape, one, dtype=object)
    if n == 0:
        return p_prev, np.zeros_like(p_prev)
    ab = alpha + beta
    p = (alpha + 1) + (ab + 2) * (x - 1) / 2
    for k in range(2, n + 1):
        c = 2 * k + ab
        a1 = 2 * k * (k + ab) * (c - 2)
        a2 = (c - 1) * (alpha * alpha - beta * beta)
        a3 = (c - 2) * (c - 1) * c
        a4 = 2 * (k + alpha - 1) * (k + beta - 1) * c
        p, p_prev = ((a2 + a3 * x) * p - a4 * p_prev) / a1, p
    return p, p_prev


def _jacobi_derivative(n, alpha, beta, x, p, p_prev):
    """Derivative of ``P_n`` from ``P_n`` and ``P_{n-1}`` (interior points)."""
    ab = alpha + beta
    c = 2 * n + ab
    return (n * ((alpha - beta) - c * x) * p + 2 * (n + alpha) * (n + beta) * p_prev) / (
        c * (1 - x * x))


def _is_half(v, target: str) -> bool:
    return v == to_mpfr(target)


def gauss_jacobi(n: int, alpha="0", beta="0") -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi nodes and weights on ``[-1, 1]`` at working precision.

    Parameters
    ----------
    n : int
        Number of nodes.
    alpha, beta : real-like
        Exponents of ``(1 - u)`` and ``(1 + u)``; both must exceed -1.

    Returns
    -------
    nodes, weights : ndarray of mpfr
        Nodes in decreasing order and the positive weights.
    """
    bits = get_bits()
    key = (n, str(alpha), str(beta), bits)
    with _lock:
        hit = _cache.get(key)
    if hit is not None:
        return hit
    a = to_mpfr(alpha)
    b = to_mpfr(beta)
    if a <= -1 or b <= -1:
        raise ValueError("Jacobi exponents must exceed -1")
    pi = gmpy2.const_pi()
    j = np.arange(1, n + 1, dtype=object)
    if a == b and _is_half(a, "-0.5"):
        theta = pi * (2 * j - 1) / (2 * n)
        nodes = vcos(mparray(theta))
        weights = np.full(n, pi / n, dtype=object)
    elif a == b and _is_half(a, "0.5"):
        theta = pi * j / (n + 1)
        nodes = vcos(mparray(theta))
        s = vsin(mparray(theta))
        weights = (pi / (n + 1)) * s * s
    else:
        nodes = _polished_nodes(n, a, b, bits)
        p, p_prev = _jacobi_eval(n, a, b, nodes)
        dp = _jacobi_derivative(n, a, b, nodes, p, p_prev)
        const = (mpfr(2) ** (a + b + 1) * gmpy2.gamma(n + a + 1) * gmpy2.gamma(n + b + 1)
                 / (gmpy2.gamma(n + a + b + 1) * gmpy2.gamma(mpfr(n + 1))))
        weights = const / ((1 - nodes * nodes) * dp * dp)
    result = (mparray(nodes), mparray(weights))
    with _lock:
        _cache[key] = result
    return result


def _polished_nodes(n, a, b, bits):
    seeds, _ = roots_jacobi(n, float(a), float(b))
    x = mparray(mpfr(float(s)) for s in seeds[::-1])
    tol = mpfr(2) ** (-bits + 4)
    for _ in range(12):
        p, p_prev = _jacobi_eval(n, a, b, x)
        dp = _jacobi_derivative(n, a, b, x, p, p_prev)
        step = p / dp
        x = x - step
        if max(abs(s) for s in step) < tol:
            break
    else:  # pragma: no cover - seeds are accurate to double precision
        raise ArithmeticError("Newton polish of Gauss-Jacobi nodes did not converge")
    p, p_prev = _jacobi_eval(n, a, b, x)
    dp = _jacobi_derivative(n, a, b, x, p, p_prev)
    return mparray(x - p / dp)


@lru_cache(maxsize=None)
def _chebyshev_grid(n: int, bits: int):
    pi = gmpy2.const_pi()
    theta = mparray(pi * (2 * j + 1) / (2 * n) for j in range(n))
    return vcos(theta)


def chebyshev_points(n: int) -> np.ndarray:
    """First-kind Chebyshev points ``cos((2j+1)pi/(2n))`` at working precision."""
    return _chebyshev_grid(n, get_bits())
