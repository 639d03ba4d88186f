"""Limit functions of ratio asymptotics.

The normalised limits ``F~_k`` of ``Q_{n_l,k}/Q_{n,k}`` solve a coupled
boundary-value system on the intervals ``D_k`` (the continuous parts of
the supports): each ``F~_k`` is a Szego function of the weight
``|F~_{k-1} F~_{k+1}|`` on ``D_k``, times the normalised conformal map
of the complement of ``D_k`` when ``k <= tau^{-1}(l)``.  This module
solves that system by a Gauss-Seidel fixed point over Szego maps,
recovers the constants ``c_k`` and ``kappa_k`` and evaluates the
branches ``psi_k`` and ``G_0``.

Szego functions are represented by Chebyshev coefficients of ``log w``
on a first-kind grid.  By default all arithmetic is numpy double
precision; passing ``bits`` runs the same algorithm on gmpy2 scalars,
which is needed to follow ratio errors below ``1e-15``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import gmpy2
import numpy as np
from scipy.fft import dct
from scipy.linalg import solve_banded

from .errors import (
    BranchAmbiguity,
    FixedPointNonConvergence,
    ProductDeviation,
    WeightNonpositive,
)
from .precision import mparray, to_mpc, to_mpfr, vabs, vcos, vexp, vlog, vsqrt, working_precision

log = logging.getLogger(__name__)

GRID = 512


# ---------------------------------------------------------------------------
# Arithmetic backends
# ---------------------------------------------------------------------------

class _Double:
    """numpy complex128 arithmetic."""

    bits = None

    def complex_array(self, z):
        return np.asarray(z, dtype=complex)

    def real(self, x) -> float:
        return float(x)

    sqrt = staticmethod(np.sqrt)
    exp = staticmethod(np.exp)
    log = staticmethod(np.log)
    abs = staticmethod(np.abs)

    def cos_theta(self, x, a, b):
        return np.clip((2 * np.asarray(x, dtype=float) - a - b) / (b - a), -1, 1)

    def cheb_coefficients(self, values):
        return dct(np.asarray(values, dtype=float), type=2) / len(values)

    def nodes(self, a, b, n):
        theta = np.pi * (np.arange(n) + 0.5) / n
        return (a + b) / 2 + (b - a) / 2 * np.cos(theta)

    def eval_cos_series(self, coef, u):
        """``sum_{n>=1} coef[n] T_n(u)`` for ``u`` in ``[-1, 1]``."""
        return np.polynomial.chebyshev.chebval(u, np.concatenate([[0.0], coef[1:]]))


class _Multi:
    """gmpy2 object-array arithmetic at ``bits`` bits."""

    def __init__(self, bits: int):
        self.bits = bits

    def complex_array(self, z):
        if np.ndim(z) == 0:
            return gmpy2.mpc(to_mpc(z))
        return np.frompyfunc(lambda v: gmpy2.mpc(to_mpc(v)), 1, 1)(np.asarray(z, dtype=object))

    def real(self, x):
        return x.real if isinstance(x, type(gmpy2.mpc(0))) else gmpy2.mpfr(x)

    @staticmethod
    def sqrt(z):
        return vsqrt(z)

    @staticmethod
    def exp(z):
        return vexp(z)

    @staticmethod
    def log(z):
        return vlog(z)

    @staticmethod
    def abs(z):
        return vabs(z)

    def cos_theta(self, x, a, b):
        u = (2 * np.asarray(x, dtype=object) - a - b) / (b - a)
        return np.frompyfunc(lambda v: min(max(v, gmpy2.mpfr(-1)), gmpy2.mpfr(1)), 1, 1)(u)

    def cheb_coefficients(self, values):
        n = len(values)
        return _cos_matrix(n, self.bits).dot(np.asarray(values, dtype=object)) * 2 / n

    def nodes(self, a, b, n):
        theta = mparray(gmpy2.const_pi() * (2 * j + 1) / (2 * n) for j in range(n))
        return (a + b) / 2 + (b - a) / 2 * vcos(theta)

    def eval_cos_series(self, coef, u):
        # Clenshaw for sum_{n>=1} coef[n] T_n(u)
        b1 = u * 0
        b2 = u * 0
        for c in coef[:0:-1]:
            b1, b2 = 2 * u * b1 - b2 + c, b1
        return u * b1 - b2


@lru_cache(maxsize=8)
def _cos_matrix(n: int, bits: int) -> np.ndarray:
    with working_precision(bits):
        pi = gmpy2.const_pi()
        table = [gmpy2.cos(pi * q / (2 * n)) for q in range(4 * n)]
        mat = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                mat[i, j] = table[(i * (2 * j + 1)) % (4 * n)]
    return mat


def _backend(bits: int | None):
    return _Double() if bits is None else _Multi(bits)


def _interval(iv) -> tuple:
    if hasattr(iv, "fa"):
        return iv
    a, b = iv
    return (a, b)


def _endpoints(iv, be):
    if hasattr(iv, "fa"):
        return (iv.fa, iv.fb) if be.bits is None else (iv.lo, iv.hi)
    a, b = iv
    if be.bits is None:
        return float(to_mpfr(a) if isinstance(a, str) else a), float(
            to_mpfr(b) if isinstance(b, str) else b)
    return to_mpfr(a if not isinstance(a, float) else repr(a)), to_mpfr(
        b if not isinstance(b, float) else repr(b))


def _joukowski(u, be):
    """``u + sqrt(u-1) sqrt(u+1)``: the branch with ``|W| > 1`` off ``[-1, 1]``."""
    return u + be.sqrt(u - 1) * be.sqrt(u + 1)


def _on_cut(a, b, z, rel: float = 1e-15) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    a, b = float(a), float(b)
    scale = b - a
    return (np.abs(z.imag) <= rel * scale) & (z.real >= a) & (z.real <= b)


def _phi(a, b, z, be):
    return _joukowski((2 * z - a - b) / (b - a), be)


def conformal_map(interval, z, bits: int | None = None):
    """Exterior conformal map of the complement of ``[a, b]``.

    ``phi(z) = (2z - a - b + 2 sqrt((z-a)(z-b))) / (b - a)`` with the
    square root positive for ``z > b``; ``|phi| > 1`` off the interval and
    ``phi'(inf) = 4/(b - a)``.

    Raises
    ------
    BranchAmbiguity
        For real ``z`` on the cut.

    Examples
    --------
    >>> round(conformal_map((-1, 1), 2).real, 12)
    3.732050807569
    """
    be = _backend(bits)
    with _context(bits):
        a, b = _endpoints(interval, be)
        scalar = np.ndim(z) == 0
        zz = be.complex_array(np.atleast_1d(z))
        if np.any(_on_cut(a, b, np.asarray(zz, dtype=complex))):
            raise BranchAmbiguity(f"conformal map evaluated on the cut [{a}, {b}]")
        out = _phi(a, b, zz, be)
        return out[0] if scalar else out


def conformal_derivative_at_infinity(interval, bits: int | None = None):
    """``phi'(inf) = 4/(b - a)``."""
    be = _backend(bits)
    with _context(bits):
        a, b = _endpoints(interval, be)
        return 4 / (b - a)


class _context:
    def __init__(self, bits):
        self.bits = bits
        self._cm = None

    def __enter__(self):
        if self.bits is not None:
            self._cm = working_precision(self.bits)
            self._cm.__enter__()
        return self

    def __exit__(self, *exc):
        if self._cm is not None:
            return self._cm.__exit__(*exc)
        return False


def _series(coef, t, be):
    """``sum_{n>=1} coef[n] t**n`` by Horner's rule."""
    acc = t * 0
    for c in coef[:0:-1]:
        acc = (acc + c) * t
    return acc


def _trim(coef, tol):
    mags = [abs(float(c)) for c in coef]
    scale = max(max(mags), 1.0)
    last = max([i for i, v in enumerate(mags) if v > tol * scale], default=0) + 1
    return coef[:max(last, 2)]


# ---------------------------------------------------------------------------
# Szego functions
# ---------------------------------------------------------------------------

@dataclass
class SzegoFunction:
    """Szego function of a positive weight on an interval.

    ``S`` and ``1/S`` are analytic off ``[a, b]``, ``S(inf) > 0`` and
    ``|S(x)|**2 = w(x)`` on the interval.  ``log S`` is
    ``(c_0/2 + sum_n c_n W**-n) / 2`` where ``c_n`` are the Chebyshev
    coefficients of ``log w`` and ``W`` is the exterior conformal map.
    """

    a: object
    b: object
    coef: np.ndarray
    bits: int | None = None

    @classmethod
    def from_log_values(cls, a, b, log_w, bits: int | None = None) -> "SzegoFunction":
        be = _backend(bits)
        tol = 1e-18 if bits is None else 2.0 ** (-bits - 8)
        return cls(a, b, _trim(be.cheb_coefficients(log_w), tol), bits)

    @property
    def _be(self):
        return _backend(self.bits)

    @property
    def at_infinity(self):
        """``S(inf) = exp(c_0 / 4)``."""
        if self.bits is None:
            return float(np.exp(self.coef[0] / 4))
        with _context(self.bits):
            return gmpy2.exp(self.coef[0] / 4)

    def log_normalized(self, z):
        """``log(S(z)/S(inf))`` off the interval."""
        be = self._be
        with _context(self.bits):
            w = _phi(self.a, self.b, be.complex_array(z), be)
            return _series(self.coef, 1 / w, be) / 2

    def __call__(self, z):
        be = self._be
        scalar = np.ndim(z) == 0
        with _context(self.bits):
            zz = be.complex_array(np.atleast_1d(z))
            if np.any(_on_cut(self.a, self.b, np.asarray(zz, dtype=complex))):
                raise BranchAmbiguity("Szego function evaluated on its cut; use boundary_modulus")
            out = self.at_infinity * be.exp(self.log_normalized(zz))
        return out[0] if scalar else out

    def boundary_modulus(self, x):
        """``|S(x +- i0)|`` on the interval."""
        be = self._be
        with _context(self.bits):
            u = be.cos_theta(np.atleast_1d(x), self.a, self.b)
            log_w = self.coef[0] / 2 + be.eval_cos_series(self.coef, u)
            return be.exp(log_w / 2)

    def verify(self, weight: Callable, samples: int = 257) -> float:
        """Largest relative boundary mismatch ``| |S|**2/w - 1 |`` on a grid
        of second-kind Chebyshev points (not the construction grid)."""
        a, b = float(self.a), float(self.b)
        theta = np.pi * np.arange(1, samples + 1) / (samples + 1)
        x = (a + b) / 2 + (b - a) / 2 * np.cos(theta)
        mod = np.asarray(self.boundary_modulus(x), dtype=float)
        return float(np.max(np.abs(mod ** 2 / weight(x) - 1)))


def szego_function(interval, weight: Callable, z=None, grid: int = GRID,
                   bits: int | None = None):
    """Szego function of ``weight`` on ``interval``.

    Parameters
    ----------
    interval : (a, b) or Interval
    weight : callable
        Vectorised, continuous and strictly positive on ``[a, b]``.
    z : complex or array, optional
        Evaluation points; if omitted the :class:`SzegoFunction` is returned.
    bits : int, optional
        Extended working precision (double precision by default).

    Raises
    ------
    WeightNonpositive
        If ``weight`` is not strictly positive on the construction grid.
    """
    be = _backend(bits)
    with _context(bits):
        a, b = _endpoints(interval, be)
        x = be.nodes(a, b, grid)
        w = np.asarray(weight(x), dtype=float if bits is None else object)
        if any(not (float(v) > 0) or not math.isfinite(float(v)) for v in w):
            raise WeightNonpositive(f"weight not strictly positive on [{a}, {b}]")
        s = SzegoFunction.from_log_values(a, b, be.log(w), bits)
    return s if z is None else s(z)


# ---------------------------------------------------------------------------
# Boundary-value system
# ---------------------------------------------------------------------------

@dataclass
class SurfaceSpec:
    """Intervals ``D_1..D_m`` of the sheeted surface; consecutive ones disjoint.

    Intervals may be ``(a, b)`` pairs (floats or decimal strings) or
    :class:`~nikishin.measures.Interval` objects; the latter keep their
    exact endpoints for extended-precision solves.
    """

    intervals: list

    def __post_init__(self):
        self.intervals = [_interval(iv) for iv in self.intervals]
        fl = self.float_intervals()
        for (a, b) in fl:
            if not a < b:
                raise ValueError(f"invalid interval [{a}, {b}]")
        for (a1, b1), (a2, b2) in zip(fl, fl[1:]):
            if not (b1 < a2 or b2 < a1):
                raise ValueError("consecutive intervals must be disjoint")

    def float_intervals(self) -> list[tuple[float, float]]:
        return [tuple(float(v) for v in _endpoints(iv, _Double())) for iv in self.intervals]

    @property
    def m(self) -> int:
        return len(self.intervals)


def tau_inverse(tau: Sequence[int], l: int) -> int:
    """Position ``j`` with ``tau(j) = l`` (1-based)."""
    tau = list(tau)
    if sorted(tau) != list(range(1, len(tau) + 1)):
        raise ValueError(f"{tau} is not a permutation")
    return tau.index(l) + 1


@dataclass
class LimitSolution:
    """Solution of the boundary-value system for one component ``l``.

    Attributes
    ----------
    spec : SurfaceSpec
    l : int
    tau : tuple
    tau_inv_l : int
        ``tau^{-1}(l)``; ``F_k`` has a simple pole at infinity for
        ``k <= tau_inv_l``.
    szego : list of SzegoFunction
        Szego functions ``S_k`` of ``|F~_{k-1} F~_{k+1}|`` on ``D_k``.
    omega, c, kappa : list
        ``omega_k``, ``c_k`` and ``kappa_k`` for ``k = 1..m``.
    iterations : int
    change : float
        Last change of the ``log`` weights between sweeps.
    bits : int or None
        Working precision of the solve (``None`` for double).
    """

    spec: SurfaceSpec
    l: int
    tau: tuple
    tau_inv_l: int
    szego: list
    omega: list
    c: list
    kappa: list
    iterations: int
    change: float
    bits: int | None = None
    history: list = field(default_factory=list, repr=False)

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def _be(self):
        return _backend(self.bits)

    def pole(self, k: int) -> int:
        return 1 if k <= self.tau_inv_l else 0

    def F_tilde(self, k: int, z):
        """Normalised ``F~_k`` (``F~_0 = F~_{m+1} = 1``)."""
        with _context(self.bits):
            return _F_tilde(self.spec, self.szego, self.pole, k, z, self._be)

    def F(self, k: int, z):
        """``F_k = c_k F~_k``."""
        if k == 0 or k == self.m + 1:
            with _context(self.bits):
                return self._be.complex_array(z) * 0 + 1
        with _context(self.bits):
            return self.c[k - 1] * self.F_tilde(k, z)

    def boundary_modulus(self, k: int, x):
        """``|F_k(x +- i0)|`` on ``D_k``."""
        be = self._be
        with _context(self.bits):
            a, b = _endpoints(self.spec.intervals[k - 1], be)
            s = self.szego[k - 1]
            mod = s.boundary_modulus(x) / s.at_infinity
            if self.pole(k):
                mod = mod / (4 / (b - a))
            return self.c[k - 1] * mod

    def boundary_residuals(self, samples: int = GRID) -> list[float]:
        """``max | |F_k|**2 / |F_{k-1} F_{k+1}| - 1 |`` on each ``D_k``.

        Sampled at second-kind Chebyshev points, which differ from the
        construction grid.
        """
        out = []
        be = self._be
        for k in range(1, self.m + 1):
            with _context(self.bits):
                a, b = _endpoints(self.spec.intervals[k - 1], be)
                if self.bits is None:
                    theta = np.pi * np.arange(1, samples + 1) / (samples + 1)
                    x = (a + b) / 2 + (b - a) / 2 * np.cos(theta)
                else:
                    pi = gmpy2.const_pi()
                    x = mparray((a + b) / 2 + (b - a) / 2 * gmpy2.cos(pi * j / (samples + 1))
                                for j in range(1, samples + 1))
                num = be.abs(self.boundary_modulus(k, x)) ** 2
                den = be.abs(self.F(k - 1, x) * self.F(k + 1, x))
                out.append(float(max(abs(v) for v in (num / den - 1))))
        return out

    def to_json(self, points: Sequence[complex] = ()) -> dict:
        res = self.boundary_residuals()
        pts = list(points)
        vals = np.atleast_1d(g0(self, np.asarray(pts, dtype=complex))) if pts else []
        return {
            "l": self.l,
            "tau": list(self.tau),
            "tau_inv_l": self.tau_inv_l,
            "iterations": self.iterations,
            "precision_bits": self.bits,
            "components": [
                {"k": k, "boundary_residual": f"{res[k - 1]:.6e}",
                 "c": _dec(self.c[k - 1]), "omega": _dec(self.omega[k - 1]),
                 "kappa": _dec(self.kappa[k - 1])}
                for k in range(1, self.m + 1)],
            "G0": [{"z": [_dec(complex(z).real), _dec(complex(z).imag)],
                    "value": [_dec(complex(v).real), _dec(complex(v).imag)]}
                   for z, v in zip(pts, vals)],
        }


def _dec(x) -> str:
    return format(float(x), ".17g")


def _F_tilde(spec, szego, pole, k, z, be):
    m = spec.m
    zz = be.complex_array(z)
    if k == 0 or k == m + 1:
        return zz * 0 + 1
    a, b = _endpoints(spec.intervals[k - 1], be)
    out = be.exp(szego[k - 1].log_normalized(zz))
    if pole(k):
        out = out * _phi(a, b, zz, be) / (4 / (b - a))
    return out


def solve_bvp(spec: SurfaceSpec, l: int, tau: Sequence[int], tol: float | None = None,
              max_iter: int = 500, init: str = "conformal", grid: int = GRID,
              bits: int | None = None) -> LimitSolution:
    """Solve the boundary-value system for component ``l``.

    Parameters
    ----------
    spec : SurfaceSpec
    l : int
        Distinguished component, ``1 <= l <= m``.
    tau : sequence of int
        Permutation defining ``tau^{-1}(l)``.
    tol : float, optional
        Stop when successive ``log`` weights agree to ``tol`` on every
        grid; defaults to ``1e-13`` in double precision and
        ``2**(16 - bits)`` otherwise.
    init : {"conformal", "perturbed"}
        ``"conformal"`` starts from ``F~_k = phi~_k`` (``k <= tau^{-1}(l)``)
        and ``1`` otherwise; ``"perturbed"`` multiplies every component
        by a smooth non-trivial Szego factor, for uniqueness probes.
    bits : int, optional
        Extended working precision.

    Raises
    ------
    FixedPointNonConvergence
        If the iteration cap is reached.
    """
    m = spec.m
    if not 1 <= l <= m:
        raise ValueError(f"component {l} out of range 1..{m}")
    t_inv = tau_inverse(tau, l)
    be = _backend(bits)
    if tol is None:
        tol = 1e-13 if bits is None else 2.0 ** (16 - bits)

    def pole(k):
        return 1 if k <= t_inv else 0

    with _context(bits):
        ends = [_endpoints(iv, be) for iv in spec.intervals]
        nodes = [be.nodes(a, b, grid) for a, b in ends]
        zero = 0.0 if bits is None else gmpy2.mpfr(0)
        current = [nodes[k] * 0 + zero for k in range(m)]
        if init == "conformal":
            szego = [SzegoFunction(a, b, np.array([zero, zero], dtype=object if bits else float),
                                   bits) for a, b in ends]
        elif init == "perturbed":
            szego = []
            for k, ((a, b), x) in enumerate(zip(ends, nodes)):
                u = (2 * x - a - b) / (b - a)
                current[k] = 0.7 * u + 0.3 * u * u + 0.2 if bits is None else \
                    u * gmpy2.mpfr("0.7") + u * u * gmpy2.mpfr("0.3") + gmpy2.mpfr("0.2")
                szego.append(SzegoFunction.from_log_values(a, b, current[k], bits))
        else:
            raise ValueError(f"unknown initialisation {init!r}")

        damping = 1.0
        history: list[float] = []
        for it in range(1, max_iter + 1):
            change = 0.0
            for k in range(1, m + 1):
                a, b = ends[k - 1]
                x = nodes[k - 1]
                w = be.abs(_F_tilde(spec, szego, pole, k - 1, x, be)
                           * _F_tilde(spec, szego, pole, k + 1, x, be))
                if any(not (float(v) > 0) for v in np.atleast_1d(w)):
                    raise WeightNonpositive(f"boundary weight of component {k} vanishes")
                target = be.log(w)
                diff = target - current[k - 1]
                change = max(change, max(abs(float(v)) for v in diff))
                new = target if damping == 1.0 else current[k - 1] + diff * damping
                current[k - 1] = new
                szego[k - 1] = SzegoFunction.from_log_values(a, b, new, bits)
            history.append(change)
            if change < tol:
                break
            if damping == 1.0 and len(history) >= 3 and history[-1] > history[-2] \
                    and history[-2] < history[-3]:
                log.info("boundary-value iteration oscillates; damping by 0.5")
                damping = 0.5
        else:
            raise FixedPointNonConvergence(
                f"no convergence after {max_iter} sweeps (last change {history[-1]:.2e})")

        omega = []
        for k in range(1, m + 1):
            a, b = ends[k - 1]
            s_inf = szego[k - 1].at_infinity
            omega.append((s_inf * 4 / (b - a)) ** 2 if pole(k) else s_inf ** 2)
        c = constants_from_omega(omega, bits)
        one = 1.0 if bits is None else gmpy2.mpfr(1)
        ext = [one] + list(c) + [one]
        sq = math.sqrt if bits is None else gmpy2.sqrt
        kappa = [ext[k] / sq(ext[k - 1] * ext[k + 1]) for k in range(1, m + 1)]
    return LimitSolution(spec, l, tuple(tau), t_inv, szego, omega, list(c), kappa, it,
                         history[-1], bits, history)


def constants_from_omega(omega: Sequence, bits: int | None = None):
    """Solve ``2 log c_k - log c_{k-1} - log c_{k+1} = log omega_k`` (``c_0 = c_{m+1} = 1``).

    The solution is ``log c_k = sum_j G_{kj} log omega_j`` with the
    inverse of the discrete Laplacian, ``G_{kj} = min(k,j)(m+1-max(k,j))/(m+1)``;
    the double-precision path uses a banded solve.

    Examples
    --------
    >>> constants_from_omega([4.0])
    array([2.])
    """
    m = len(omega)
    if bits is None:
        ab = np.zeros((3, m))
        ab[0, 1:] = -1.0
        ab[1, :] = 2.0
        ab[2, :-1] = -1.0
        return np.exp(solve_banded((1, 1), ab, np.log(np.asarray(omega, dtype=float))))
    with _context(bits):
        logs = [gmpy2.log(w) for w in omega]
        out = []
        for k in range(1, m + 1):
            acc = gmpy2.mpfr(0)
            for j in range(1, m + 1):
                acc += gmpy2.mpfr(min(k, j) * (m + 1 - max(k, j))) / (m + 1) * logs[j - 1]
            out.append(gmpy2.exp(acc))
        return out


# ---------------------------------------------------------------------------
# Surface branches
# ---------------------------------------------------------------------------

def branches(sol: LimitSolution, z, tol: float = 1e-10) -> np.ndarray:
    """Branches ``psi_0..psi_m`` of the surface function at ``z``.

    ``psi_0 = 1/F_1`` and ``psi_k = F_k/F_{k+1}``; their product is checked
    to equal one.

    Returns
    -------
    ndarray of shape ``(m+1,) + shape(z)``

    Raises
    ------
    ProductDeviation
        If ``prod psi_k`` differs from 1 by more than ``tol``.
    """
    m = sol.m
    F = [sol.F(k, z) for k in range(m + 2)]
    psi = [1 / F[1]] + [F[k] / F[k + 1] for k in range(1, m + 1)]
    prod = psi[0]
    for p in psi[1:]:
        prod = prod * p
    dev = max(abs(complex(v) - 1) for v in np.atleast_1d(prod))
    if dev > tol:
        raise ProductDeviation(f"product of branches deviates from 1 by {dev:.2e}")
    return np.array(psi)


def g0(sol: LimitSolution, z):
    """``G_0 = F~_1``, the limit of ``Q_{n_l}/Q_n``."""
    return sol.F_tilde(1, z)


def kappas(sol: LimitSolution) -> list:
    """``kappa_k = c_k / sqrt(c_{k-1} c_{k+1})`` for ``k = 1..m``."""
    return list(sol.kappa)


def growth_constants(sol: LimitSolution, radius: float = 1e6) -> tuple[complex, complex]:
    """Sampled ``z psi_0(z)`` and ``psi_{tau^{-1}(l)}(z)/z`` at ``z = radius``.

    The first tends to ``1/F_1'(inf) > 0``; the second is finite and
    nonzero on the sheet carrying the pole.
    """
    z = np.array([radius + 0j])
    psi = branches(sol, z)
    return complex(radius * psi[0][0]), complex(psi[sol.tau_inv_l][0] / radius)


def full_increment_limit(solutions: Sequence[LimitSolution], z, k: int = 1):
    """``prod_l F~_k^{(l)}(z)``: the limit of ``Q_{n+1,k}/Q_{n,k}``."""
    out = None
    for sol in solutions:
        val = sol.F_tilde(k, z)
        out = val if out is None else out * val
    return out
