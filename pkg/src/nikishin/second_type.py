"""Second-type functions and their zero, orthogonality and normalisation data.

For a multi-index ``n`` the chain starts with ``Psi_{n,0} = Q_n`` and
continues with ``Psi_{n,k+1}(z) = int Psi_{n,k}(x) ds(x)/(z - x)`` where
``s`` is the transfer measure of level ``k``: the component
``s^k_{r_k}`` of the derived Nikishin system ``Sigma^k``.  The derived
systems are built from inverse measures and weighted products and are
shared between all chains of one system, since they only depend on the
sequence of selection indices ``r_0, r_1, ...``.

Every measure in this module is an evaluator-based
:class:`~nikishin.measures.Measure`; nothing is ever discretised into a
density on the real line.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from .errors import (
    ContourCrossesSingularity,
    IndexOutOfClass,
    QuadratureNonConvergence,
    ZeroCountMismatch,
)
from .measures import (
    Interval,
    Measure,
    NikishinSystem,
    Weighted,
    _bracketed_root,
    inverse_measure,
    nested_product,
)
from .mop import MomentCache, MultiIndex, as_index, classify, solve_monic_mop
from .polynomials import MonicPoly
from .precision import (
    as_object_array,
    decimal_digits,
    get_bits,
    mparray,
    precise,
    to_mpc,
    working_precision,
)

log = logging.getLogger(__name__)

_struct_lock = threading.RLock()


# ---------------------------------------------------------------------------
# Derived systems
# ---------------------------------------------------------------------------

@dataclass
class DerivedLevel:
    """Measures of one level of the derived hierarchy.

    Attributes
    ----------
    k : int
        Level index.
    sigma : dict
        ``position -> measure`` for the generators ``sigma^k_j``,
        ``j = k+1..m``.
    orth : list of (label, position, measure)
        Orthogonality measures of ``Psi_{n,k}``; ``position`` selects the
        entry of ``n^k`` giving the number of conditions.
    transfer_position : int
        Position ``r_k`` of the transfer measure.
    transfer : Measure
        ``s^k_{r_k}``.
    """

    k: int
    sigma: dict
    orth: list
    transfer_position: int
    transfer: Measure


def _memo(system: NikishinSystem, key, build: Callable):
    with _struct_lock:
        hit = system.derived.get(key)
        if hit is None:
            hit = build()
            system.derived[key] = hit
        return hit


def _product(system, path, sigma, i, j):
    """``s^k_{i,j} = <sigma_i, ..., sigma_j>`` for the level reached by ``path``."""
    if path == () and i == 1:
        return system.components[j - 1]
    return _memo(system, ("prod", path, i, j),
                 lambda: nested_product([sigma[p] for p in range(i, j + 1)]))


def _tau(system, path, sigma, i, j):
    def build():
        s = _product(system, path, sigma, i, j)
        _, tau = inverse_measure(s, name=f"tau^{len(path)}[{i},{j}]")
        return tau
    return _memo(system, ("tau", path, i, j), build)


def _sigma_level(system: NikishinSystem, path: tuple) -> dict:
    """``Sigma^k`` reached from ``Sigma^0`` by the selections in ``path``."""
    m = system.m
    if not path:
        return {j + 1: g for j, g in enumerate(system.generators)}

    def build():
        prev = _sigma_level(system, path[:-1])
        k, r = len(path) - 1, path[-1]
        if r == k + 1:
            return {j: prev[j] for j in range(k + 2, m + 1)}
        key = path[:-1]
        new = {k + 2: _tau(system, key, prev, k + 2, r)}
        for j in range(k + 3, r + 1):
            s_left = _product(system, key, prev, j - 1, r)
            new[j] = Weighted(_tau(system, key, prev, j, r), s_left.cauchy,
                              singular_hulls=[s_left.hull],
                              name=f"s^{k}[{j - 1},{r}]*tau^{k}[{j},{r}]")
        if r + 1 <= m:
            new[r + 1] = Weighted(prev[r + 1], prev[r].cauchy, singular_hulls=[prev[r].hull],
                                  name=f"<{prev[r + 1].name},{prev[r].name}>")
        for j in range(r + 2, m + 1):
            new[j] = prev[j]
        return new

    return _memo(system, ("sigma", path), build)


def _generic_level(system: NikishinSystem, path: tuple) -> tuple[dict, list]:
    def build():
        k = len(path)
        sigma = _sigma_level(system, path)
        orth = [(f"s^{k}_{i}", i, _product(system, path, sigma, k + 1, i))
                for i in range(k + 1, system.m + 1)]
        return sigma, orth
    return _memo(system, ("level", path), build)


def _special_levels(system: NikishinSystem) -> list[DerivedLevel]:
    """Levels of the ``m = 3``, ``n1 < n2 < n3`` construction."""

    def build():
        g = {j + 1: s for j, s in enumerate(system.generators)}
        s23 = _product(system, (), g, 2, 3)
        s32 = _memo(system, ("special", "s32"),
                    lambda: nested_product([g[3], g[2]]))
        _, tau23 = inverse_measure(s23, name="tau[2,3]")
        _, tau32 = inverse_measure(s32, name="tau[3,2]")
        sigma2, sigma3 = g[2], g[3]
        w1 = Weighted(tau23, lambda x: s32.cauchy(x) / sigma3.cauchy(x),
                      singular_hulls=[sigma3.hull], name="(s32/sigma3)*tau[2,3]")
        w2 = Weighted(tau32, lambda x: s23.cauchy(x) / sigma2.cauchy(x),
                      singular_hulls=[sigma2.hull], name="(s23/sigma2)*tau[3,2]")
        comps = system.components
        lvl0 = DerivedLevel(0, g, [(f"s_{i}", i, comps[i - 1]) for i in (1, 2, 3)], 3, comps[2])
        lvl1 = DerivedLevel(1, {2: tau23, 3: w1},
                            [("tau[2,3]", 2, tau23), ("(s32/sigma3)*tau[2,3]", 3, w1)], 3, w1)
        lvl2 = DerivedLevel(2, {3: w2}, [("(s23/sigma2)*tau[3,2]", 3, w2)], 3, w2)
        return [lvl0, lvl1, lvl2]

    return _memo(system, ("special",), build)


def is_special(n: MultiIndex) -> bool:
    """Whether ``n`` needs the dedicated ``m = 3``, ``n1 < n2 < n3`` construction."""
    return n.m == 3 and n[1] < n[2] < n[3]


def first_max_position(reduced: dict) -> int:
    """Position of the first maximal entry of ``n^k`` (a ``position -> value`` map)."""
    best = max(reduced.values())
    return min(p for p, v in reduced.items() if v == best)


def derived_levels(system: NikishinSystem, n) -> tuple[list[DerivedLevel], list[dict]]:
    """Derived levels ``0..m-1`` and reduced indices ``n^0..n^m`` for ``n``.

    Reduced indices are returned as ``position -> value`` maps; ``n^m``
    is empty.
    """
    n = as_index(n)
    m = n.m
    reduced = [{j + 1: v for j, v in enumerate(n.entries)}]
    if is_special(n):
        levels = _special_levels(system)
        reduced.append({2: n[1], 3: n[2]})
        reduced.append({3: n[1]})
        reduced.append({})
        return list(levels), reduced
    levels = []
    path: tuple = ()
    for k in range(m):
        cur = reduced[-1]
        r = first_max_position(cur)
        sigma, orth = _generic_level(system, path)
        transfer = _product(system, path, sigma, k + 1, r)
        levels.append(DerivedLevel(k, sigma, orth, r, transfer))
        values = [cur[p] for p in sorted(cur) if p != r]
        reduced.append({k + 2 + i: v for i, v in enumerate(values)})
        path = path + (r,)
    return levels, reduced


# ---------------------------------------------------------------------------
# Second-type function evaluators
# ---------------------------------------------------------------------------

class Psi:
    """Evaluator of ``Psi_{n,k}``.

    Level 0 wraps the polynomial ``Q_n``; higher levels are the Cauchy
    transform of ``Psi_{n,k-1} ds`` for the transfer measure ``ds``.
    """

    def __init__(self, k: int, poly: MonicPoly | None = None, measure: Weighted | None = None):
        self.k = k
        self.poly = poly
        self.measure = measure

    @property
    def singular_hull(self) -> Interval | None:
        return None if self.measure is None else self.measure.hull

    @precise
    def __call__(self, z):
        if self.poly is not None:
            return self.poly(z)
        return self.measure.cauchy(z)

    @precise
    def derivative(self, z):
        if self.poly is not None:
            return self.poly.derivative(z)
        return self.measure.cauchy_derivative(z)

    def __repr__(self):
        return f"<Psi level {self.k}>"


@dataclass
class ChainLevel:
    """Data attached to level ``k`` of a second-type chain.

    Attributes
    ----------
    k : int
    reduced_index : tuple
        ``n^k`` (empty for ``k = m``).
    positions : tuple
        Positions ``k+1..m`` carried by ``n^k``.
    r_prev : int or None
        ``r_{k-1}`` (``None`` at level 0).
    r : int or None
        ``r_k`` (``None`` at level ``m``).
    psi : Psi
        ``Psi_{n,k}``, analytic off ``Delta_k``.
    zero_poly : MonicPoly
        ``Q_{n,k}``, whose zeros are those of ``Psi_{n,k-1}`` on ``Delta_k``
        (``Q_{n,0} = 1``).
    sigma_level : Measure or None
        ``sigma^{k-1}_k``.
    transfer_measure : Measure or None
        ``s^{k-1}_{r_{k-1}}``, the measure integrating ``Psi_{n,k-1}``.
    orth : list
        ``(label, count, measure)`` triples of the orthogonality relations
        satisfied by ``Psi_{n,k}``.
    next_sigma : Measure or None
        ``sigma^k_{k+1}``, whose support carries the zeros of ``Psi_{n,k}``.
    zeros : list
        Zeros of ``Psi_{n,k}`` on ``Delta_{k+1}`` (``k < m``).
    """

    k: int
    reduced_index: tuple
    positions: tuple
    r_prev: int | None
    r: int | None
    psi: Psi
    zero_poly: MonicPoly | None = None
    sigma_level: Measure | None = None
    transfer_measure: Measure | None = None
    orth: list = field(default_factory=list)
    next_sigma: Measure | None = None
    next_transfer: Measure | None = None
    zeros: list = field(default_factory=list)

    @property
    def size(self) -> int:
        """``|n^k|``."""
        return sum(self.reduced_index)

    @property
    def zero_interval(self) -> Interval | None:
        """``Delta_{k+1}``: the hull of ``sigma^k_{k+1}``."""
        return None if self.next_sigma is None else self.next_sigma.hull

    def count_at(self, position: int) -> int:
        return self.reduced_index[self.positions.index(position)]


class SecondTypeChain:
    """Per-index bundle of ``Psi_{n,k}``, ``Q_{n,k}`` and normalisation data.

    Built by :func:`build_chain`.  ``levels[k]`` holds the level-``k``
    data for ``k = 0..m``; normalisation objects are computed on first
    access by :func:`normalized_objects`.
    """

    def __init__(self, system: NikishinSystem, n: MultiIndex, levels: list[ChainLevel],
                 bits: int, special: bool):
        self.system = system
        self.n = n
        self.levels = levels
        self.bits = bits
        self.special = special
        self._normal = None

    @property
    def m(self) -> int:
        return self.n.m

    def Q(self, k: int) -> MonicPoly:
        """``Q_{n,k}`` for ``k = 0..m+1`` (``Q_{n,0} = Q_{n,m+1} = 1``)."""
        if k == 0 or k == self.m + 1:
            return MonicPoly.one(self.system.generators[0].hull)
        return self.levels[k].zero_poly

    def psi(self, k: int) -> Psi:
        return self.levels[k].psi

    @precise
    def H(self, k: int, z):
        """``H_{n,k} = Q_{n,k-1} Psi_{n,k-1} / Q_{n,k}`` for ``k = 1..m+1``."""
        if not 1 <= k <= self.m + 1:
            raise ValueError("H_{n,k} is defined for k = 1..m+1")
        z = as_object_array(z)
        return (as_object_array(self.Q(k - 1)(z)) * as_object_array(self.psi(k - 1)(z))
                / as_object_array(self.Q(k)(z)))

    def normalized(self) -> "NormalizedObjects":
        if self._normal is None:
            self._normal = normalized_objects(self)
        return self._normal

    def to_json(self) -> dict:
        out = {"n": list(self.n.entries), "precision_bits": self.bits,
               "special_branch": self.special, "levels": []}
        for lvl in self.levels:
            out["levels"].append({
                "k": lvl.k,
                "reduced_index": list(lvl.reduced_index),
                "r": lvl.r,
                "zeros": [format(z, ".30g") for z in lvl.zeros],
            })
        return out

    def __repr__(self):
        return f"<SecondTypeChain n={self.n}>"


def _check_index(n: MultiIndex):
    if n.size == 0:
        raise IndexOutOfClass("second-type chains need a nonzero multi-index")
    if n.m >= 4 and not classify(n).in_star_formal:
        raise IndexOutOfClass(f"{n}: no second-type construction for m >= 4 outside (*)")


@precise
def _build(system: NikishinSystem, n: MultiIndex, cache: MomentCache | None,
           q_n: MonicPoly | None) -> SecondTypeChain:
    m = n.m
    levels_data, reduced = derived_levels(system, n)
    if q_n is None:
        q_n = solve_monic_mop(system, n, cache=cache)
    levels: list[ChainLevel] = []
    psi = Psi(0, poly=q_n)
    for k in range(m + 1):
        red = reduced[k]
        positions = tuple(sorted(red))
        lvl = ChainLevel(k, tuple(red[p] for p in positions), positions,
                         None if k == 0 else levels_data[k - 1].transfer_position,
                         None if k == m else levels_data[k].transfer_position, psi)
        if k > 0:
            prev = levels_data[k - 1]
            lvl.sigma_level = prev.sigma[k]
            lvl.transfer_measure = prev.transfer
        if k < m:
            data = levels_data[k]
            lvl.orth = [(label, red[pos], meas) for label, pos, meas in data.orth]
            lvl.next_sigma = data.sigma[k + 1]
            lvl.next_transfer = data.transfer
            psi = Psi(k + 1, measure=Weighted(data.transfer, lvl.psi,
                                              singular_hulls=[] if k == 0 else
                                              [lvl.psi.singular_hull],
                                              degree=lvl.size, loose=k > 0,
                                              name=f"Psi{k}*{data.transfer.name}"))
        levels.append(lvl)
    chain = SecondTypeChain(system, n, levels, get_bits(), is_special(n))
    levels[0].zeros = q_n.real_zeros() if n.size else []
    levels[1].zero_poly = q_n
    for k in range(1, m):
        lvl = levels[k]
        lvl.zeros = zeros_on_interval(chain, k)
        levels[k + 1].zero_poly = MonicPoly.from_zeros(lvl.zeros, lvl.zero_interval)
    return chain


def build_chain(system: NikishinSystem, n, cache: MomentCache | None = None,
                q_n: MonicPoly | None = None, retry: bool = True) -> SecondTypeChain:
    """Build the second-type chain of ``n``.

    Parameters
    ----------
    system : NikishinSystem
    n : MultiIndex or sequence of int
        Nonzero; for ``m >= 4`` it must lie in the formal ``(*)`` class.
    cache : MomentCache, optional
        Gram-matrix cache for the solve of ``Q_n``.
    q_n : MonicPoly, optional
        Precomputed ``Q_n`` at the working precision.
    retry : bool
        Rebuild at doubled precision when a zero count comes out wrong
        before reporting :class:`ZeroCountMismatch`.

    Returns
    -------
    SecondTypeChain
        Levels ``0..m``, with the zeros of every ``Psi_{n,k}`` on
        ``Delta_{k+1}`` and the polynomials ``Q_{n,k}``.
    """
    n = as_index(n)
    if n.m != system.m:
        raise ValueError(f"index {n} does not match a system with m = {system.m}")
    _check_index(n)
    try:
        return _build(system, n, cache, q_n)
    except ZeroCountMismatch as exc:
        if not retry:
            raise
        bits = 2 * get_bits()
        log.warning("%s: %s; rebuilding at %d bits", n, exc, bits)
        with working_precision(bits):
            return _build(system, n, cache, None)


# ---------------------------------------------------------------------------
# Zeros
# ---------------------------------------------------------------------------

def _grid(interval: Interval, count: int) -> np.ndarray:
    """Chebyshev-Lobatto grid with ``count + 1`` points, increasing."""
    pi = gmpy2.const_pi()
    a, b = interval.lo, interval.hi
    c, h = (a + b) / 2, (b - a) / 2
    return mparray(c - h * gmpy2.cos(pi * j / count) for j in range(count + 1))


def _sign(v) -> int:
    return int(gmpy2.sign(v.real if isinstance(v, type(mpc(0))) else v))


def _scan(psi: Psi, interval: Interval, count: int) -> list:
    xs = _grid(interval, count)
    vals = as_object_array(psi(xs))
    roots = []
    for i in range(len(xs) - 1):
        fl, fr = vals[i], vals[i + 1]
        sl, sr = _sign(fl), _sign(fr)
        if sl == 0:
            if not roots or roots[-1] != xs[i]:
                roots.append(xs[i])
            continue
        if sr == 0 or sl == sr:
            continue
        roots.append(_bracketed_root(psi, xs[i], xs[i + 1], fl, fr, psi.derivative))
    if _sign(vals[-1]) == 0:
        roots.append(xs[-1])
    return roots


@precise
def zeros_on_interval(chain: SecondTypeChain, k: int) -> list:
    """Sorted real zeros of ``Psi_{n,k}`` on ``Delta_{k+1}``.

    Level 0 returns the zeros of ``Q_n``.  Higher levels scan a grid
    with at least eight points per expected zero for sign changes,
    refine each bracket by safeguarded Newton steps and double the grid
    when the count is off.

    Raises
    ------
    ZeroCountMismatch
        If the count differs from ``|n^k|``, if a zero sits on an endpoint,
        or if a gap of ``supp sigma^k_{k+1}`` holds two zeros.
    """
    if not 0 <= k < chain.m:
        raise ValueError("zeros are defined for levels 0..m-1")
    lvl = chain.levels[k]
    expected = lvl.size
    interval = lvl.zero_interval
    if k == 0:
        zeros = chain.levels[0].psi.poly.real_zeros()
    else:
        count = max(16, 8 * expected)
        for _ in range(4):
            zeros = _scan(lvl.psi, interval, count)
            if len(zeros) == expected:
                break
            count *= 2
    if len(zeros) != expected:
        raise ZeroCountMismatch(
            f"{chain.n}, level {k}: found {len(zeros)} zeros on {interval}, expected {expected}")
    for z in zeros:
        if not interval.lo < z < interval.hi:
            raise ZeroCountMismatch(f"{chain.n}, level {k}: zero {z} not interior to {interval}")
    for lo, hi in gap_zero_counts(lvl, zeros):
        if hi > 1:
            raise ZeroCountMismatch(f"{chain.n}, level {k}: {hi} zeros in gap {lo}")
    return sorted(zeros)


def gap_zero_counts(level: ChainLevel, zeros) -> list[tuple[tuple, int]]:
    """Zero counts on the closures of the gaps of ``supp sigma^k_{k+1}``."""
    sigma = level.next_sigma
    out = []
    for lo, hi in sigma.gaps():
        count = sum(1 for z in zeros if lo <= float(z) <= hi)
        out.append(((lo, hi), count))
    return out


@dataclass
class InterlacingResult:
    """Outcome of an interlacing check at one level."""

    ok: bool
    k: int
    witness: list
    min_gap: float
    reason: str = ""

    def __bool__(self):
        return self.ok


def check_interlacing(chain_n: SecondTypeChain, chain_nl: SecondTypeChain,
                      k: int) -> InterlacingResult:
    """Check strict alternation of the zeros of ``Psi_{n,k}`` and ``Psi_{n_l,k}``.

    Parameters
    ----------
    chain_n, chain_nl : SecondTypeChain
        Chains of ``n`` and of an increment ``n_l`` with the same
        ``tau`` permutation.
    k : int
        Level, ``0 <= k <= m-1``.

    Returns
    -------
    InterlacingResult
        ``witness`` is the merged sorted zero list with labels ``"n"``
        and ``"n_l"``.
    """
    if chain_n.n.tau != chain_nl.n.tau:
        raise IndexOutOfClass(f"{chain_n.n} and {chain_nl.n} have different tau")
    a = [(z, "n") for z in chain_n.levels[k].zeros]
    b = [(z, "n_l") for z in chain_nl.levels[k].zeros]
    merged = sorted(a + b, key=lambda t: t[0])
    witness = [(float(z), lab) for z, lab in merged]
    gaps = [float(q[0] - p[0]) for p, q in zip(merged, merged[1:])]
    min_gap = min(gaps) if gaps else math.inf
    diff = len(b) - len(a)
    if diff not in (0, 1):
        return InterlacingResult(False, k, witness, min_gap,
                                 f"zero counts {len(a)} and {len(b)} cannot interlace")
    if min_gap <= 0:
        return InterlacingResult(False, k, witness, min_gap, "shared zero")
    labels = [lab for _, lab in merged]
    for x, y in zip(labels, labels[1:]):
        if x == y:
            return InterlacingResult(False, k, witness, min_gap, "two consecutive zeros of "
                                     f"the same function ({x})")
    if diff == 1 and labels and labels[0] != "n_l":
        return InterlacingResult(False, k, witness, min_gap, "outer zeros must belong to n_l")
    return InterlacingResult(True, k, witness, min_gap)


def nonvanishing_off_support(chain: SecondTypeChain, k: int, samples: int = 64) -> bool:
    """Sampled check that ``Psi_{n,k}`` keeps its sign on real segments off
    ``Delta_k`` and ``Delta_{k+1}``."""
    lvl = chain.levels[k]
    if k == 0:
        return True
    blocked = [lvl.psi.singular_hull]
    if lvl.zero_interval is not None:
        blocked.append(lvl.zero_interval)
    hulls = [g.hull for g in chain.system.generators]
    lo = min(h.fa for h in hulls) - 2.0
    hi = max(h.fb for h in hulls) + 2.0
    edges = sorted([lo, hi] + [e for h in blocked for e in (h.fa, h.fb)])
    pad = 1e-3
    for left, right in zip(edges, edges[1:]):
        if any(h.fa <= (left + right) / 2 <= h.fb for h in blocked) or right - left < 4 * pad:
            continue
        xs = mparray(mpfr(left + pad + (right - left - 2 * pad) * j / samples)
                     for j in range(samples + 1))
        try:
            vals = as_object_array(lvl.psi(xs))
        except (QuadratureNonConvergence, ContourCrossesSingularity):
            continue
        signs = {_sign(v) for v in vals}
        if 0 in signs or len(signs) > 1:
            return False
    return True


# ---------------------------------------------------------------------------
# Orthogonality residuals
# ---------------------------------------------------------------------------

@dataclass
class ResidualEntry:
    """Largest relative residual of one family of orthogonality relations."""

    level: int
    label: str
    conditions: int
    residual: mpfr


def residual_tolerance() -> mpfr:
    """Agreement tolerance between successive rules in residual integrals.

    Nested second-type evaluations lose digits to cancellation, so the
    rules are asked to agree to half the working precision only; the
    relations themselves are checked far below that.
    """
    return mpfr(2) ** (-(get_bits() // 2))


@precise
def moment_residuals(measure: Measure, f: Callable, count: int, degree: int = 0,
                     rtol=None) -> list:
    """Relative values ``|int x^nu f ds| / int |x^nu f| d|s|`` for ``nu < count``.

    ``f`` is evaluated once per rule and shared by all powers; the rule is
    refined until every power agrees with the coarser rule to ``rtol``.
    """
    if count == 0:
        return []
    rtol = residual_tolerance() if rtol is None else rtol
    res, _ = measure.resolution_for(None, degree + count)
    prev = None
    while True:
        rule = measure.rule(res)
        base = rule.weights * as_object_array(f(rule.nodes))
        vals, scales = [], []
        pw = base
        for nu in range(count):
            if nu:
                pw = pw * rule.nodes
            vals.append(np.sum(pw))
            scales.append(sum(abs(v) for v in pw))
        if prev is not None and all(abs(v - p) <= rtol * sc
                                    for v, p, sc in zip(vals, prev, scales)):
            return [abs(v) / sc if sc else abs(v) for v, sc in zip(vals, scales)]
        prev = vals
        nxt = measure.refine(res)
        if measure._node_count(nxt) > measure.node_cap:
            raise QuadratureNonConvergence(
                f"{measure.name}: residual integrals not stable at {measure._node_count(res)} nodes")
        res = nxt


@precise
def orthogonality_residuals(chain: SecondTypeChain) -> list[ResidualEntry]:
    """Relative residuals ``|int x^nu Psi_{n,k} ds| / int |x^nu Psi_{n,k}| d|s|``.

    One entry per level ``k = 0..m-1`` and orthogonality measure of that
    level; for the special ``m = 3`` branch these are the relations of its
    four families (components ``s_{1,j}``, ``tau_{2,3}``,
    ``(s_{3,2}/sigma_3) tau_{2,3}`` and ``(s_{2,3}/sigma_2) tau_{3,2}``).
    """
    out = []
    for lvl in chain.levels[:-1]:
        for label, count, meas in lvl.orth:
            vals = moment_residuals(meas, lvl.psi, count, degree=lvl.size)
            out.append(ResidualEntry(lvl.k, label, count, max(vals, default=mpfr(0))))
    return out


@precise
def derived_orthogonality_residuals(chain: SecondTypeChain) -> list[ResidualEntry]:
    """Residuals of ``int x^j Psi_{n,k} ds^k_{r_k} / Q_{n,k+2} = 0``, ``j < |n^k|``.

    This is the form taken by ``x^j Q_{n,k+1} H_{n,k+1} / (Q_{n,k} Q_{n,k+2})``
    after cancelling ``Q_{n,k+1}`` against the zeros it shares with
    ``Psi_{n,k}``.
    """
    out = []
    for k in range(chain.m):
        lvl = chain.levels[k]
        q2 = chain.Q(k + 2)
        vals = moment_residuals(
            lvl.next_transfer,
            lambda x: as_object_array(lvl.psi(x)) / as_object_array(q2(x)),
            lvl.size, degree=lvl.size)
        out.append(ResidualEntry(k, "orto1", lvl.size, max(vals, default=mpfr(0))))
    return out


def decay_exponent(chain: SecondTypeChain, k: int) -> tuple[float, int]:
    """Fitted decay exponent of ``Psi_{n,k}`` at infinity and the predicted one.

    The fit uses ``|z| = 10**2, 10**3, 10**4`` on the positive real axis,
    dropping radii at which the expected magnitude would fall below the
    square root of the working precision.

    Returns
    -------
    fitted, predicted : float, int
        ``predicted = -(n^{k-1}_{r_{k-1}} + 1)``.
    """
    if not 1 <= k <= chain.m:
        raise ValueError("decay is defined for levels 1..m")
    prev = chain.levels[k - 1]
    predicted = -(prev.count_at(prev.r) + 1)
    digits = decimal_digits() / 2
    radii = [10.0 ** e for e in (2, 3, 4) if (-predicted) * e < digits] or [1e2, 1e3]
    vals = [abs(chain.psi(k)(mpfr(r))) for r in radii]
    logs = [float(gmpy2.log(v)) for v in vals]
    xs = [math.log(r) for r in radii]
    slope = float(np.polyfit(xs, logs, 1)[0])
    return slope, predicted


# ---------------------------------------------------------------------------
# Normalisation objects
# ---------------------------------------------------------------------------

@dataclass
class NormalizedObjects:
    """``K_{n,k}``, ``kappa_{n,k}``, ``epsilon_{n,k}`` and the derived evaluators.

    ``K[0] = 1``; ``K[k]``, ``kappa[k]`` and ``epsilon[k]`` are defined for
    ``k = 1..m`` (index 0 of ``kappa``/``epsilon`` is unused and set to 1).
    """

    chain: SecondTypeChain
    K: list
    kappa: list
    epsilon: list
    J: list

    def q(self, k: int) -> Callable:
        """Orthonormal polynomial ``q_{n,k} = kappa_{n,k} Q_{n,k}``."""
        kap, poly = self.kappa[k], self.chain.Q(k)
        return lambda x: kap * as_object_array(poly(x))

    def h(self, k: int) -> Callable:
        """``h_{n,k} = K_{n,k-1}^2 H_{n,k}``, ``k = 1..m+1``."""
        c = self.K[k - 1] ** 2
        return lambda z: c * self.chain.H(k, z)

    def rho(self, k: int) -> Weighted:
        """Varying measure ``rho_{n,k} = h_{n,k} ds^{k-1}_{r_{k-1}} / (Q_{n,k-1} Q_{n,k+1})``."""
        chain = self.chain
        lvl, lvl_prev = chain.levels[k], chain.levels[k - 1]
        q_next = chain.Q(k + 1)
        c = self.K[k - 1] ** 2

        def dens(x):
            x = as_object_array(x)
            # H_{n,k} / (Q_{n,k-1} Q_{n,k+1}) = Psi_{n,k-1} / (Q_{n,k} Q_{n,k+1})
            return c * as_object_array(lvl_prev.psi(x)) / (
                as_object_array(lvl.zero_poly(x)) * as_object_array(q_next(x)))

        return Weighted(lvl.transfer_measure, dens, singular_hulls=_hulls(lvl_prev),
                        name=f"rho[{k}]", loose=True)

    def orthonormal_measure(self, k: int) -> Weighted:
        """Positive unit-mass measure ``q_{n,k}^2 d|rho_{n,k}|``."""
        chain = self.chain
        lvl = chain.levels[k]
        lvl_prev = chain.levels[k - 1]
        q_next = chain.Q(k + 1)
        c = self.epsilon[k] * self.K[k] ** 2

        def dens(x):
            x = as_object_array(x)
            return c * as_object_array(lvl.zero_poly(x)) * as_object_array(
                lvl_prev.psi(x)) / as_object_array(q_next(x))

        return Weighted(lvl.transfer_measure, dens, singular_hulls=_hulls(lvl_prev),
                        degree=lvl.zero_poly.degree, name=f"q^2|rho|[{k}]", loose=True)


def _hulls(level: ChainLevel) -> list:
    hull = level.psi.singular_hull
    return [] if hull is None else [hull]


@precise
def normalized_objects(chain: SecondTypeChain) -> NormalizedObjects:
    """Compute ``K_{n,k}``, ``kappa_{n,k}`` and the signs ``epsilon_{n,k}``.

    ``K_{n,k}^{-2}`` is the total variation of
    ``Q_{n,k} Psi_{n,k-1} ds^{k-1}_{r_{k-1}} / Q_{n,k+1}``; since the
    integrand has constant sign this is ``|J_k|`` for the signed integral
    ``J_k``, and ``epsilon_{n,k} = sign(J_k)``.
    """
    K, kappa, eps, J = [mpfr(1)], [mpfr(1)], [1], [None]
    for k in range(1, chain.m + 1):
        lvl = chain.levels[k]
        prev = chain.levels[k - 1]
        q_next = chain.Q(k + 1)

        def f(x, lvl=lvl, prev=prev, q_next=q_next):
            x = as_object_array(x)
            return as_object_array(lvl.zero_poly(x)) * as_object_array(prev.psi(x)) / \
                as_object_array(q_next(x))

        val = lvl.transfer_measure.integrate(f, degree=2 * lvl.zero_poly.degree,
                                             rtol=residual_tolerance())
        if isinstance(val, type(mpc(0))):
            val = val.real
        J.append(val)
        kk = 1 / gmpy2.sqrt(abs(val))
        K.append(kk)
        kappa.append(kk / K[k - 1])
        eps.append(int(gmpy2.sign(val)))
    return NormalizedObjects(chain, K, kappa, eps, J)


def h_identity_residual(chain: SecondTypeChain, k: int, points) -> mpfr:
    """Largest relative gap in ``h_{n,k+1}(z) = eps int q^2 d|rho|/(z-x)`` at ``points``."""
    norm = chain.normalized()
    lhs = as_object_array(norm.h(k + 1)(mparray(to_mpc(z) for z in points)))
    meas = norm.orthonormal_measure(k)
    rhs = norm.epsilon[k] * as_object_array(meas.cauchy(mparray(to_mpc(z) for z in points)))
    return max(abs(a - b) / abs(b) for a, b in zip(lhs, rhs))


def h_constant_sign(chain: SecondTypeChain, k: int, samples: int = 64) -> bool:
    """Sampled check that ``H_{n,k+1}`` has constant sign on ``Delta_{k+1}``.

    Grid points closer than ``1e-6`` relative to a zero of ``Q_{n,k+1}``
    (removable singularities) are skipped.
    """
    if k == 0:
        return True
    lvl = chain.levels[k]
    interval = lvl.zero_interval
    zs = [float(z) for z in lvl.zeros]
    xs = [x for x in _grid(interval, samples)[1:-1]
          if all(abs(float(x) - z) > 1e-6 * interval.length for z in zs)]
    vals = as_object_array(chain.H(k + 1, mparray(xs)))
    signs = {_sign(v) for v in vals}
    return len(signs) == 1 and 0 not in signs
