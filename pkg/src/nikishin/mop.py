"""Multi-index combinatorics and multiple orthogonal polynomials.

The monic polynomial ``Q_n`` of degree ``|n|`` satisfies
``int Q_n(x) x**nu ds_k(x) = 0`` for ``nu < n_k`` and every component
``s_k`` of a Nikishin system.  It is computed from the linear system in
its Chebyshev coefficients on the hull of ``sigma_1``.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from gmpy2 import mpfr

from .errors import (
    ImbalanceBoundExceeded,
    IndexOutOfClass,
    ResidualTooLarge,
    SingularSystem,
)
from .measures import Measure, NikishinSystem
from .polynomials import MonicPoly, chebyshev_leading, chebyshev_vander, solve_linear
from .precision import as_object_array, decimal_digits, get_bits, precise, working_precision

log = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Multi-indices
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class MultiIndex:
    """A multi-index ``n = (n_1, ..., n_m)`` of non-negative integers.

    Examples
    --------
    >>> n = MultiIndex((3, 1, 2))
    >>> n.size, n.imbalance, n.tau
    (6, 3, (1, 3, 2))
    """

    entries: tuple

    def __post_init__(self):
        entries = tuple(int(v) for v in self.entries)
        if not entries or any(v < 0 for v in entries):
            raise ValueError(f"invalid multi-index {self.entries}")
        object.__setattr__(self, "entries", entries)

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def size(self) -> int:
        """``|n|``."""
        return sum(self.entries)

    @property
    def imbalance(self) -> int:
        """``max_k(m n_k) - |n|``; zero exactly on constant indices."""
        return max(self.m * v for v in self.entries) - self.size

    @property
    def tau(self) -> tuple:
        return tau_permutation(self)

    def __getitem__(self, k: int) -> int:
        """Component ``n_k`` with 1-based ``k``."""
        return self.entries[k - 1]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return self.m

    def increment(self, l: int) -> "MultiIndex":
        return increment(self, l)[0]

    def __str__(self):
        return "(" + ",".join(str(v) for v in self.entries) + ")"


def as_index(n) -> MultiIndex:
    return n if isinstance(n, MultiIndex) else MultiIndex(tuple(n))


def tau_permutation(n) -> tuple:
    """Ordering of components by first maximum among the unselected ones.

    Returns a tuple ``(tau(1), ..., tau(m))`` of 1-based indices.

    Examples
    --------
    >>> tau_permutation((2, 2, 1))
    (1, 2, 3)
    >>> tau_permutation((1, 2))
    (2, 1)
    """
    entries = as_index(n).entries
    remaining = list(range(len(entries)))
    order = []
    while remaining:
        best = max(entries[j] for j in remaining)
        pick = next(j for j in remaining if entries[j] == best)
        order.append(pick + 1)
        remaining.remove(pick)
    return tuple(order)


@dataclass(frozen=True)
class IndexClassification:
    """Class membership flags of a multi-index."""

    in_star_formal: bool
    in_star_effective: bool
    in_circledast: bool
    tau: tuple


def classify(n) -> IndexClassification:
    """Classify ``n``.

    ``in_star_formal``: no ``i < j < k`` with ``n_i < n_j < n_k``.
    ``in_star_effective``: formal membership, or ``m <= 3`` (every index
    then has a second-type construction).  ``in_circledast``:
    ``n_j <= n_i + 1`` whenever ``i < j``.
    """
    e = as_index(n).entries
    m = len(e)
    increasing = any(e[i] < e[j] < e[k]
                     for i in range(m) for j in range(i + 1, m) for k in range(j + 1, m))
    circled = all(e[j] <= e[i] + 1 for i in range(m) for j in range(i + 1, m))
    return IndexClassification(
        in_star_formal=not increasing,
        in_star_effective=(not increasing) or m <= 3,
        in_circledast=circled,
        tau=tau_permutation(e),
    )


def increment(n, l: int) -> tuple[MultiIndex, bool]:
    """Return ``n_l`` (component ``l`` raised by one) and whether ``tau`` is kept.

    Examples
    --------
    >>> increment((2, 2), 2)
    (MultiIndex(entries=(2, 3)), False)
    """
    n = as_index(n)
    if not 1 <= l <= n.m:
        raise ValueError(f"component {l} out of range 1..{n.m}")
    e = list(n.entries)
    e[l - 1] += 1
    nl = MultiIndex(tuple(e))
    return nl, tau_permutation(nl) == tau_permutation(n)


@dataclass
class Path:
    """Sequence of multi-indices with the increment used at each step.

    Attributes
    ----------
    seed : MultiIndex
        Starting point (not included in ``indices``).
    indices : list of MultiIndex
        The path proper.
    steps : list of int or None
        Component incremented to reach ``indices[j]`` from its predecessor,
        ``None`` for full increments.
    max_imbalance : int
    """

    seed: MultiIndex
    indices: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    max_imbalance: int = 0

    def pairs(self):
        """Consecutive pairs ``(n, n_next, l)`` including the seed."""
        prev = self.seed
        for n, l in zip(self.indices, self.steps):
            yield prev, n, l
            prev = n


def staircase_path(m: int, length: int, l_sequence: Sequence[int] | None = None,
                   full_increment: bool = False, seed=None,
                   imbalance_bound: int | None = None) -> Path:
    """Generate a multi-index path by cyclic or full increments.

    Parameters
    ----------
    m : int
        Number of components.
    length : int
        Number of indices generated after the seed.
    l_sequence : sequence of int, optional
        Components incremented cyclically (default ``1..m``).
    full_increment : bool
        If true each step adds one to every component.
    seed : sequence of int, optional
        Starting index (default all zeros).
    imbalance_bound : int, optional
        Maximal allowed imbalance along the path.

    Raises
    ------
    ImbalanceBoundExceeded

    Examples
    --------
    >>> [str(n) for n in staircase_path(3, 6).indices][-1]
    '(2,2,2)'
    """
    if length < 1:
        raise ValueError("path length must be at least 1")
    seed = as_index(seed if seed is not None else (0,) * m)
    if seed.m != m:
        raise ValueError("seed has the wrong number of components")
    cycle = list(l_sequence) if l_sequence else list(range(1, m + 1))
    path = Path(seed)
    cur = seed
    worst = seed.imbalance
    for j in range(length):
        if full_increment:
            cur = MultiIndex(tuple(v + 1 for v in cur.entries))
            step = None
        else:
            step = cycle[j % len(cycle)]
            cur = increment(cur, step)[0]
        worst = max(worst, cur.imbalance)
        if imbalance_bound is not None and cur.imbalance > imbalance_bound:
            raise ImbalanceBoundExceeded(
                f"{cur} has imbalance {cur.imbalance} > bound {imbalance_bound}")
        path.indices.append(cur)
        path.steps.append(step)
    path.max_imbalance = worst
    return path


# ---------------------------------------------------------------------------
# Monic multiple orthogonal polynomials
# ---------------------------------------------------------------------------


class MomentCache:
    """Chebyshev Gram matrices ``int T_i T_j ds_k`` keyed by measure.

    Entries are grown on demand; reads are concurrent, inserts exclusive.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._store: dict = {}

    def gram(self, measure: Measure, interval, size: int) -> np.ndarray:
        cap = 16
        while cap < size:
            cap *= 2
        key = (id(measure), get_bits(), str(interval))
        with self._lock:
            hit = self._store.get(key)
        if hit is not None and hit[0] >= cap:
            return hit[1][:size, :size]
        res, _ = measure.resolution_for(None, degree=2 * cap)
        rule = measure.rule(res)
        a, b = interval.lo, interval.hi
        u = (2 * rule.nodes - a - b) / (b - a)
        v = chebyshev_vander(u, cap)
        g = (v.T * rule.weights[None, :]).dot(v)
        with self._lock:
            self._store[key] = (cap, g, measure)  # keep measure alive for id()
        return g[:size, :size]


_default_cache = MomentCache()


@dataclass
class MopResult:
    """Diagnostics attached to a computed ``Q_n``."""

    poly: MonicPoly
    bits: int
    residual: mpfr
    min_pivot_ratio: mpfr


def _require_class(n: MultiIndex):
    cls = classify(n)
    if n.m >= 4 and not cls.in_star_formal:
        raise IndexOutOfClass(f"{n}: no construction for m >= 4 outside the (*) class")


def _build_system(system: NikishinSystem, n: MultiIndex, cache: MomentCache):
    interval = system.generators[0].hull
    big_n = n.size
    a = np.empty((big_n, big_n), dtype=object)
    rhs = np.empty(big_n, dtype=object)
    lead = 1 / chebyshev_leading(big_n, interval)
    row = 0
    for k, nk in enumerate(n.entries):
        if nk == 0:
            continue
        g = cache.gram(system.components[k], interval, big_n + 1)
        for nu in range(nk):
            a[row, :] = g[nu, :big_n]
            rhs[row] = -lead * g[nu, big_n]
            row += 1
    return a, rhs, lead


def orthogonality_residual(system: NikishinSystem, n, poly: MonicPoly):
    """Largest relative residual ``|int Q x^nu ds_k| / int |Q x^nu| d|s_k|``."""
    n = as_index(n)
    worst = mpfr(0)
    # Evaluating Q in the Chebyshev basis of a wider hull (mass points) costs
    # eps * sum|c_j| absolutely, which can dwarf eps * |Q| on the support.
    noise = mpfr(2) ** (24 - get_bits()) * sum(abs(c) for c in poly.coefficients)
    for k, nk in enumerate(n.entries):
        s = system.components[k]
        reach = max(abs(s.hull.lo), abs(s.hull.hi), mpfr(1))
        for nu in range(nk):
            val, scale = s.integrate(lambda x, nu=nu: poly(x) * x ** nu,
                                     degree=n.size + nu, return_scale=True,
                                     atol=noise * reach ** nu * abs(s.mass))
            worst = max(worst, abs(val) / scale if scale else abs(val))
    return worst


@precise
def solve_monic_mop(system: NikishinSystem, n, cache: MomentCache | None = None,
                    check_residual: bool = True, diagnostics: bool = False):
    """Monic multiple orthogonal polynomial ``Q_n`` of a Nikishin system.

    Parameters
    ----------
    system : NikishinSystem
    n : MultiIndex or sequence of int
    cache : MomentCache, optional
        Shared Gram-matrix cache (a module-level cache by default).
    check_residual : bool
        Re-check all orthogonality conditions with monomials after the
        solve, raising :class:`ResidualTooLarge` above ``10**(-P/4)``.
    diagnostics : bool
        Return a :class:`MopResult` instead of the bare polynomial.

    Raises
    ------
    IndexOutOfClass
        For ``m >= 4`` and an index outside the ``(*)`` class.
    SingularSystem
        If the system is singular at working and at doubled precision.
    ResidualTooLarge
    """
    n = as_index(n)
    if n.m != system.m:
        raise ValueError(f"index {n} does not match a system with m = {system.m}")
    _require_class(n)
    cache = cache or _default_cache
    interval = system.generators[0].hull
    bits = get_bits()
    if n.size == 0:
        poly = MonicPoly.one(interval)
        return MopResult(poly, bits, mpfr(0), mpfr(1)) if diagnostics else poly
    a, rhs, lead = _build_system(system, n, cache)
    coef, ratio = solve_linear(a, rhs)
    used = bits
    if coef is None:
        log.warning("system for %s singular at %d bits; retrying at %d", n, bits, 2 * bits)
        with working_precision(2 * bits):
            a2, rhs2, lead2 = _build_system(system, n, cache)
            coef2, ratio2 = solve_linear(a2, rhs2)
        if coef2 is None:
            raise SingularSystem(f"{n}: orthogonality system singular at {2 * bits} bits; "
                                 "the index appears non-normal")
        raise SingularSystem(f"{n}: system singular at {bits} bits but regular at "
                             f"{2 * bits} bits; precision exhausted")
    poly = MonicPoly(interval, list(coef) + [lead])
    residual = mpfr(0)
    if check_residual:
        residual = orthogonality_residual(system, n, poly)
        tol = mpfr(10) ** (-(decimal_digits() // 4))
        if residual > tol:
            raise ResidualTooLarge(f"{n}: orthogonality residual {float(residual):.3e}")
    if diagnostics:
        return MopResult(poly, used, residual, ratio)
    return poly
