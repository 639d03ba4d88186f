"""Extended-precision monic polynomials in a Chebyshev basis."""

from __future__ import annotations

import random
import threading
from typing import Sequence

import gmpy2
import mpmath
import numpy as np
from gmpy2 import mpc, mpfr

from .errors import ResidualTooLarge
from .measures import Interval
from .precision import (
    as_object_array,
    decimal_digits,
    fmt,
    get_bits,
    mparray,
    to_float_array,
    to_mpc,
    working_precision,
)


def chebyshev_leading(n: int, interval: Interval):
    """Leading monomial coefficient of ``T_n((2x-a-b)/(b-a))``."""
    if n == 0:
        return mpfr(1)
    return mpfr(2) ** (n - 1) * (2 / (interval.hi - interval.lo)) ** n


def chebyshev_vander(u: np.ndarray, n: int) -> np.ndarray:
    """Matrix ``V[j, i] = T_i(u_j)`` for ``i = 0..n-1`` (object dtype)."""
    u = as_object_array(u)
    v = np.empty((len(u), max(n, 1)), dtype=object)
    v[:, 0] = mpfr(1) + 0 * u
    if n > 1:
        v[:, 1] = u
    for i in range(2, n):
        v[:, i] = 2 * u * v[:, i - 1] - v[:, i - 2]
    return v[:, :n]


class MonicPoly:
    """Monic polynomial stored by Chebyshev coefficients on an interval.

    Parameters
    ----------
    interval : Interval
        Reference interval ``[a, b]``; the basis is ``T_i(u)`` with
        ``u = (2x - a - b)/(b - a)``.
    coefficients : sequence of mpfr
        ``c_0..c_N``; the top coefficient must equal
        ``1/chebyshev_leading(N)`` so that the polynomial is monic.
    zeros : sequence, optional
        Zeros, if already known (e.g. polynomials defined by their zeros).

    Examples
    --------
    >>> with working_precision(64):
    ...     p = MonicPoly.from_zeros([mpfr(-1)/2, mpfr(1)/2], Interval(-1, 1))
    ...     float(p(mpfr(2)))
    3.75
    """

    def __init__(self, interval: Interval, coefficients: Sequence, zeros: Sequence | None = None):
        self.interval = interval
        self.coefficients = mparray(coefficients)
        self.degree = len(self.coefficients) - 1
        self._zeros = {}
        self._lock = threading.Lock()
        if zeros is not None:
            self._zeros[get_bits()] = sorted_zeros(zeros)
        self._dcoef = None

    # -- construction ------------------------------------------------------
    @classmethod
    def one(cls, interval: Interval) -> "MonicPoly":
        return cls(interval, [mpfr(1)], zeros=[])

    @classmethod
    def from_zeros(cls, zeros: Sequence, interval: Interval) -> "MonicPoly":
        """Monic polynomial with the given zeros (product form kept)."""
        zeros = list(zeros)
        n = len(zeros)
        if n == 0:
            return cls.one(interval)
        # Chebyshev interpolation at n+1 first-kind points.
        pi = gmpy2.const_pi()
        theta = [pi * (2 * j + 1) / (2 * (n + 1)) for j in range(n + 1)]
        u = mparray(gmpy2.cos(t) for t in theta)
        a, b = interval.lo, interval.hi
        x = (a + b) / 2 + (b - a) / 2 * u
        vals = _product(zeros, x)
        coef = []
        for i in range(n + 1):
            c = sum(vals[j] * gmpy2.cos(i * theta[j]) for j in range(n + 1)) * 2 / (n + 1)
            coef.append(c / 2 if i == 0 else c)
        coef[-1] = 1 / chebyshev_leading(n, interval)
        poly = cls(interval, coef, zeros=zeros)
        poly._product_form = True
        return poly

    _product_form = False

    # -- evaluation --------------------------------------------------------
    def _u(self, z):
        a, b = self.interval.lo, self.interval.hi
        return (2 * z - a - b) / (b - a)

    def __call__(self, z):
        scalar = np.ndim(z) == 0
        zs = np.atleast_1d(as_object_array(z))
        if self._product_form:
            out = _product(self.zeros(), zs)
        else:
            out = _clenshaw(self.coefficients, self._u(zs))
        return out[0] if scalar else out

    def derivative(self, z):
        """First derivative at ``z``."""
        if self.degree == 0:
            return 0 * z
        if self._dcoef is None or self._dcoef[0] != get_bits():
            self._dcoef = (get_bits(), _cheb_derivative(self.coefficients))
        scale = 2 / (self.interval.hi - self.interval.lo)
        scalar = np.ndim(z) == 0
        zs = np.atleast_1d(as_object_array(z))
        out = _clenshaw(self._dcoef[1], self._u(zs)) * scale
        return out[0] if scalar else out

    # -- zeros -------------------------------------------------------------
    def zeros(self):
        """Sorted zeros (mpfr when real, mpc otherwise), cached per precision."""
        bits = get_bits()
        with self._lock:
            if bits in self._zeros:
                return self._zeros[bits]
            known = dict(self._zeros)
        if known:
            # polish lower/higher precision zeros at the current precision
            seeds = known[max(known)]
            zs = self._polish([to_mpc(z) for z in seeds])
        else:
            zs = self._compute_zeros()
        zs = sorted_zeros(zs)
        with self._lock:
            self._zeros[bits] = zs
        return zs

    def real_zeros(self, imag_tol=None):
        """Zeros projected to the real line after checking they are real.

        Raises
        ------
        ResidualTooLarge
            If some zero has imaginary part above ``imag_tol``
            (default ``10**(-P/4)``).
        """
        imag_tol = mpfr(10) ** (-decimal_digits() // 4) if imag_tol is None else imag_tol
        out = []
        for z in self.zeros():
            if isinstance(z, type(mpc(0))):
                if abs(z.imag) > imag_tol * max(1, abs(z)):
                    raise ResidualTooLarge(f"zero {z} is not real")
                z = z.real
            out.append(z)
        return sorted(out)

    def _compute_zeros(self):
        n = self.degree
        if n == 0:
            return []
        c = to_float_array(self.coefficients)
        try:
            seeds = np.polynomial.chebyshev.chebroots(c / np.max(np.abs(c)))
        except np.linalg.LinAlgError:  # pragma: no cover
            seeds = np.array([])
        a, b = self.interval.fa, self.interval.fb
        seeds = [0.5 * (a + b) + 0.5 * (b - a) * s for s in np.atleast_1d(seeds)]
        if len(seeds) == n:
            zs = self._polish([mpc(complex(s)) if abs(complex(s).imag) > 0 else mpfr(float(np.real(s)))
                               for s in seeds])
            if self._verify(zs):
                return zs
        zs = self._polish(self._eig_zeros())
        if not self._verify(zs):
            raise ResidualTooLarge("zeros of polynomial could not be verified")
        return zs

    def _eig_zeros(self):
        """Colleague-matrix eigenvalues at working precision (mpmath)."""
        n = self.degree
        with mpmath.workprec(get_bits()):
            c = [mpmath.mpf(str(v)) for v in self.coefficients]
            lead = c[-1]
            mat = mpmath.zeros(n, n)
            if n == 1:
                mat[0, 0] = -c[0] / c[1]
            else:
                # u T_0 = T_1, u T_i = (T_{i-1} + T_{i+1})/2, T_n eliminated
                mat[0, 1] = 1
                for i in range(1, n - 1):
                    mat[i, i - 1] = mpmath.mpf(1) / 2
                    mat[i, i + 1] = mpmath.mpf(1) / 2
                mat[n - 1, n - 2] = mpmath.mpf(1) / 2
                for j in range(n):
                    mat[n - 1, j] -= c[j] / (2 * lead)
            eig = mpmath.eig(mat, left=False, right=False)
            vals = [(str(mpmath.re(e)), str(mpmath.im(e))) for e in eig]
        a, b = self.interval.lo, self.interval.hi
        out = []
        for re, im in vals:
            out.append((a + b) / 2 + (b - a) / 2 * mpc(mpfr(re), mpfr(im)))
        return out

    def _polish(self, zs, iterations: int = 60):
        out = []
        tol = mpfr(2) ** (6 - get_bits())
        for z in zs:
            z = to_mpc(z) if not isinstance(z, type(mpfr(0))) else z
            for _ in range(iterations):
                f = self(z)
                d = self.derivative(z)
                if d == 0:
                    break
                step = f / d
                z = z - step
                if abs(step) <= tol * max(1, abs(z)):
                    break
            if isinstance(z, type(mpc(0))) and z.imag == 0:
                z = z.real
            out.append(z)
        return out

    def _verify(self, zs) -> bool:
        if len(zs) != self.degree:
            return False
        scale = max([abs(z) for z in zs] + [mpfr(1)])
        gap_tol = mpfr(2) ** (16 - get_bits()) * scale
        srt = sorted_zeros(zs)
        for z1, z2 in zip(srt, srt[1:]):
            if abs(z1 - z2) <= gap_tol:
                return False
        rng = random.Random(1234)
        a, b = self.interval.fa, self.interval.fb
        tol = mpfr(10) ** (-decimal_digits() // 2)
        for _ in range(20):
            t = complex(rng.uniform(a - 1, b + 1), rng.uniform(-1, 1))
            z = mpc(t)
            lhs = self(z) if not self._product_form else _clenshaw(self.coefficients, self._u(np.array([z], dtype=object)))[0]
            rhs = _product(srt, np.array([z], dtype=object))[0]
            if abs(lhs - rhs) > tol * abs(rhs):
                return False
        return True

    # -- conversions ---------------------------------------------------------
    def monomial_coefficients(self):
        """Coefficients ``p_0..p_N`` in the monomial basis of ``x``."""
        n = self.degree
        a, b = self.interval.lo, self.interval.hi
        alpha, beta = 2 / (b - a), -(a + b) / (b - a)
        # T_i(alpha x + beta) as monomial coefficient lists
        t_prev, t_cur = [mpfr(1)], [beta, alpha]
        total = [mpfr(0)] * (n + 1)
        total[0] += self.coefficients[0]
        if n >= 1:
            for j, v in enumerate(t_cur):
                total[j] += self.coefficients[1] * v
        for i in range(2, n + 1):
            nxt = [mpfr(0)] * (i + 1)
            for j, v in enumerate(t_cur):
                nxt[j] += 2 * beta * v
                nxt[j + 1] += 2 * alpha * v
            for j, v in enumerate(t_prev):
                nxt[j] -= v
            t_prev, t_cur = t_cur, nxt
            for j, v in enumerate(t_cur):
                total[j] += self.coefficients[i] * v
        return total

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "basis_interval": [str(self.interval.a), str(self.interval.b)],
            "coefficients": [fmt(c) for c in self.coefficients],
            "zeros": [fmt(z) for z in self.zeros()],
        }

    def __repr__(self):
        return f"MonicPoly(degree={self.degree}, interval={self.interval})"


def sorted_zeros(zs):
    return sorted(zs, key=lambda z: (float(z.real), float(z.imag) if hasattr(z, "imag") else 0.0))


def _product(zeros, x):
    x = as_object_array(x)
    out = mpfr(1) + 0 * x
    for z in zeros:
        out = out * (x - z)
    return out


def _clenshaw(coef, u):
    u = as_object_array(u)
    b1 = 0 * u
    b2 = 0 * u
    for c in coef[:0:-1]:
        b1, b2 = 2 * u * b1 - b2 + c, b1
    return u * b1 - b2 + coef[0]


def _cheb_derivative(coef):
    n = len(coef) - 1
    d = [mpfr(0)] * (n + 1)
    for k in range(n, 0, -1):
        d[k - 1] = (d[k + 1] if k + 1 <= n else 0) + 2 * k * coef[k]
    d[0] = d[0] / 2
    return mparray(d[:max(n, 1)])


def solve_linear(a: np.ndarray, rhs: np.ndarray, rel_tol=None):
    """Gaussian elimination with partial pivoting on object arrays.

    Returns
    -------
    x : ndarray or None
        Solution, or ``None`` if a pivot falls below ``rel_tol`` times the
        largest entry of its column (numerically singular).
    min_pivot_ratio : mpfr
        Smallest ``|pivot| / column scale`` encountered.
    """
    a = a.copy()
    rhs = rhs.copy()
    n = a.shape[0]
    rel_tol = mpfr(2) ** (16 - get_bits()) if rel_tol is None else rel_tol
    colscale = [max(abs(a[i, j]) for i in range(n)) or mpfr(1) for j in range(n)]
    worst = mpfr(1)
    for k in range(n):
        piv = max(range(k, n), key=lambda i: abs(a[i, k]) / colscale[k])
        ratio = abs(a[piv, k]) / colscale[k]
        worst = min(worst, ratio)
        if ratio <= rel_tol:
            return None, worst
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            rhs[[k, piv]] = rhs[[piv, k]]
        inv = 1 / a[k, k]
        for i in range(k + 1, n):
            f = a[i, k] * inv
            if f != 0:
                a[i, k:] = a[i, k:] - f * a[k, k:]
                rhs[i] = rhs[i] - f * rhs[k]
    x = np.empty(n, dtype=object)
    for k in range(n - 1, -1, -1):
        x[k] = (rhs[k] - np.sum(a[k, k + 1:] * x[k + 1:])) / a[k, k]
    return x, worst
