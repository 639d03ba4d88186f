"""Measures of a Nikishin hierarchy and their Cauchy transforms.

Two integration engines are used.

* **Quadrature** measures (generators and anything obtained from them by
  multiplying the density with an analytic function) integrate with a
  Gauss-Jacobi rule on the continuous part plus an exact sum over the
  mass points.
* **Contour** measures (the inverse measures ``tau`` and their weighted
  descendants) are never discretised.  They are described by a *density*
  ``D`` analytic off the hull such that
  ``int f dmu = (1/2 pi i) oint f(zeta) D(zeta) dzeta`` for ``f``
  analytic near the hull; for ``tau`` the density is the Cauchy
  transform itself.  Integrals use the trapezoidal rule on Bernstein
  ellipses around the hull.

Resolution (node count, ellipse radius) is chosen a priori from the
Bernstein radius of the nearest singularity, so that Cauchy transforms
are cheap, and :func:`integrate` verifies by doubling.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from .errors import (
    ConfigError,
    ContourCrossesSingularity,
    EvaluationOnSupportError,
    LaurentExtractionUnstable,
    OverlappingHullsError,
    QuadratureNonConvergence,
    SignIndeterminate,
)
from .precision import (
    RealLike,
    as_object_array,
    get_bits,
    mparray,
    precise,
    to_mpc,
    to_mpfr,
    vabs,
    vcos,
    vexp,
    vsin,
)
from .quadrature import gauss_jacobi

#: Default cap on node counts for both engines.
DEFAULT_NODE_CAP = 4096
#: Smallest rule ever used.
MIN_NODES = 64
#: Extra bits of accuracy requested on top of the working precision when
#: choosing a resolution a priori.
SAFETY_BITS = 40
#: Number of ellipses in a contour family (radii ``R_sep**(i/FAMILY)``).
FAMILY = 8


def _pow2ceil(x: float) -> int:
    n = MIN_NODES
    while n < x:
        n *= 2
    return n


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """A compact real interval ``[a, b]`` with exactly specified endpoints.

    Endpoints are kept in their input form (decimal strings, integers,
    fractions or floats) and converted at the working precision on access.
    """

    a: RealLike
    b: RealLike

    def __post_init__(self):
        if not self.fa < self.fb:
            raise ConfigError(f"interval needs a < b, got [{self.a}, {self.b}]")

    @property
    def fa(self) -> float:
        return float(to_mpfr(self.a))

    @property
    def fb(self) -> float:
        return float(to_mpfr(self.b))

    @property
    def lo(self) -> mpfr:
        return to_mpfr(self.a)

    @property
    def hi(self) -> mpfr:
        return to_mpfr(self.b)

    @property
    def length(self) -> float:
        return self.fb - self.fa

    def contains(self, x: float, pad: float = 0.0) -> bool:
        return self.fa - pad <= x <= self.fb + pad

    def distance(self, other: "Interval") -> float:
        """Euclidean distance between two intervals (0 if they meet)."""
        return max(0.0, other.fa - self.fb, self.fa - other.fb)

    def bernstein_radius(self, z: complex) -> float:
        """Bernstein-ellipse parameter of ``z`` (1 on the interval)."""
        h = 0.5 * (self.fb - self.fa)
        u = (complex(z) - 0.5 * (self.fa + self.fb)) / h
        big = 0.5 * (abs(u - 1) + abs(u + 1))
        return big + math.sqrt(max(big * big - 1.0, 0.0))

    def point_at_radius(self, rho: float) -> float:
        """Real point right of the interval with Bernstein radius ``rho``."""
        h = 0.5 * (self.fb - self.fa)
        return 0.5 * (self.fa + self.fb) + h * 0.5 * (rho + 1.0 / rho)

    def hull_with(self, points: Sequence[float]) -> "Interval":
        if not points:
            return self
        lo = min([self.fa, *points])
        hi = max([self.fb, *points])
        a = self.a if lo == self.fa else lo
        b = self.b if hi == self.fb else hi
        return Interval(a, b)

    def __str__(self):
        return f"[{self.a}, {self.b}]"


def _poly_eval(coeffs: Sequence[mpfr], x):
    acc = 0 * x + coeffs[-1] if coeffs else 0 * x
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class WeightSpec:
    """Density ``(b-x)**alpha (x-a)**beta * poly(x) * exp(exp_poly(x))``.

    Parameters
    ----------
    alpha, beta : real-like
        Jacobi exponents at the right and left endpoint; both ``> -1``.
    poly : sequence of real-like
        Monomial coefficients ``c0, c1, ...`` of a polynomial that must be
        strictly positive on the open interval.
    exp_poly : sequence of real-like
        Monomial coefficients of the exponent polynomial.
    """

    alpha: RealLike = "0"
    beta: RealLike = "0"
    poly: tuple = ("1",)
    exp_poly: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "poly", tuple(self.poly))
        object.__setattr__(self, "exp_poly", tuple(self.exp_poly))
        if float(to_mpfr(self.alpha)) <= -1 or float(to_mpfr(self.beta)) <= -1:
            raise ConfigError("Jacobi exponents must exceed -1")
        if not self.poly:
            raise ConfigError("analytic factor polynomial must be non-empty")

    def factor(self, x):
        """Evaluate the analytic factor ``poly(x) * exp(exp_poly(x))``."""
        x = as_object_array(x)
        val = _poly_eval([to_mpfr(c) for c in self.poly], x)
        if self.exp_poly:
            val = val * vexp(as_object_array(_poly_eval([to_mpfr(c) for c in self.exp_poly], x)))
        return val

    def density(self, interval: Interval, x):
        """Full density at points of the open interval."""
        x = as_object_array(x)
        a, b = interval.lo, interval.hi
        al, be = to_mpfr(self.alpha), to_mpfr(self.beta)
        jac = np.frompyfunc(lambda t: (b - t) ** al * (t - a) ** be, 1, 1)(x)
        return jac * self.factor(x)

    def validate(self, interval: Interval, samples: int = 257) -> None:
        """Check strict positivity of the analytic factor on a sample grid."""
        a, b = interval.lo, interval.hi
        grid = mparray(a + (b - a) * mpfr(j) / (samples - 1) for j in range(samples))
        vals = self.factor(grid)
        if any(v <= 0 for v in vals):
            raise ConfigError(f"analytic weight factor is not positive on {interval}")

    @property
    def is_chebyshev(self) -> bool:
        return (to_mpfr(self.alpha) == mpfr("-0.5") and to_mpfr(self.beta) == mpfr("-0.5"))


@dataclass(frozen=True)
class Rule:
    """Discrete integration rule: ``int f dmu ~ sum(weights * f(nodes))``."""

    nodes: np.ndarray
    weights: np.ndarray
    resolution: tuple

    def apply(self, values) -> object:
        return np.sum(self.weights * values)


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------

class Measure:
    """Abstract signed measure with compact support on the real line.

    Attributes
    ----------
    name : str
        Human readable label used in reports.
    hull : Interval
        Convex hull of the support.
    continuous : Interval or None
        Continuous part of the support (``None`` for purely atomic).
    clearance : float or None
        Distance from the hull to the nearest foreign singular set of the
        integrands this measure meets (neighbouring hulls).  ``None`` for
        a measure used in isolation.
    """

    engine: str = "quadrature"
    loose: bool = False

    def __init__(self, name: str, hull: Interval, continuous: Interval | None,
                 clearance: float | None, node_cap: int = DEFAULT_NODE_CAP):
        self.name = name
        self.hull = hull
        self.continuous = continuous
        self.clearance = clearance
        self.node_cap = node_cap
        self._lock = threading.Lock()
        self._rules: dict = {}
        self._scalars: dict = {}

    # -- support -----------------------------------------------------------
    def atoms(self) -> list:
        """Locations of the mass points (mpfr at working precision)."""
        return []

    def support_pieces(self) -> list[tuple[float, float]]:
        """Sorted closed pieces of the support as float pairs."""
        pieces = [(float(x), float(x)) for x in self.atoms()]
        if self.continuous is not None:
            pieces.append((self.continuous.fa, self.continuous.fb))
        return sorted(pieces)

    def gaps(self) -> list[tuple[float, float]]:
        """Open components of ``hull`` minus the support."""
        pieces = self.support_pieces()
        return [(p[1], q[0]) for p, q in zip(pieces, pieces[1:]) if q[0] > p[1]]

    def on_support(self, z: complex, rel: float = 1e-14) -> bool:
        z = complex(z)
        scale = self.hull.length
        if abs(z.imag) > rel * scale:
            return False
        for lo, hi in self.support_pieces():
            if lo - rel * scale <= z.real <= hi + rel * scale:
                return True
        return False

    # -- geometry ----------------------------------------------------------
    @property
    def reference(self) -> Interval:
        """Interval whose Bernstein ellipses drive resolution choice."""
        if self.engine == "quadrature" and self.continuous is not None:
            return self.continuous
        return self.hull

    def separation_radius(self) -> float:
        """Bernstein radius of the nearest foreign singularity."""
        ref = self.reference
        gap = self.clearance if self.clearance is not None else 2.0 * self.hull.length
        # distance from the reference interval to the foreign set, measured
        # from the hull (the reference may be smaller than the hull)
        extra = max(self.hull.fb - ref.fb, ref.fa - self.hull.fa)
        return ref.bernstein_radius(ref.fb + gap + extra)

    # -- resolution --------------------------------------------------------
    def _budget(self) -> float:
        return get_bits() * math.log(2) + SAFETY_BITS * math.log(2)

    def resolution_for(self, z=None, degree: int = 0) -> tuple[tuple, bool]:
        """Choose a rule resolution for a Cauchy kernel at ``z``.

        Returns
        -------
        resolution : tuple
            Opaque key accepted by :meth:`rule`.
        inside : bool
            For contour measures, whether ``z`` lies inside the chosen
            ellipse (the density residue must then be added).
        """
        r_sep = self.separation_radius()
        if self.engine == "quadrature":
            rho = r_sep
            if z is not None:
                rz = self.reference.bernstein_radius(z)
                if rz <= 1.0 + 1e-13:
                    raise EvaluationOnSupportError(f"{z} lies on the support of {self.name}")
                rho = min(rho, rz)
            n = _pow2ceil(self._budget() / (2.0 * math.log(rho)) + 2 * degree + 8)
            if n > self.node_cap:
                raise QuadratureNonConvergence(
                    f"{self.name}: {n} nodes needed at z={z}, cap {self.node_cap}")
            return (n,), False
        rz = None if z is None else max(self.hull.bernstein_radius(z), 1.0)
        best = None
        for i in range(1, FAMILY):
            radius = r_sep ** (i / FAMILY)
            if rz is None or rz > radius * 1.0000001:
                outer = r_sep if rz is None else min(rz, r_sep)
                e, inside = min(math.log(radius), math.log(outer / radius)), False
            else:
                e = min(math.log(radius / rz), math.log(r_sep / radius))
                inside = True
            if best is None or e > best[0]:
                best = (e, i, inside)
        e, i, inside = best
        if e < 0.02:
            raise ContourCrossesSingularity(
                f"{self.name}: no ellipse separates z={z} from the hull and foreign sets")
        m = _pow2ceil(self._budget() / e + degree + 8)
        if m > self.node_cap:
            raise QuadratureNonConvergence(
                f"{self.name}: {m} contour points needed at z={z}, cap {self.node_cap}")
        return (i, m), inside

    def refine(self, resolution: tuple) -> tuple:
        """Next finer resolution (doubled node count)."""
        if len(resolution) == 1:
            return (2 * resolution[0],)
        return (resolution[0], 2 * resolution[1])

    def _node_count(self, resolution: tuple) -> int:
        return resolution[-1]

    # -- rules -------------------------------------------------------------
    def rule(self, resolution: tuple) -> Rule:
        """Integration rule at ``resolution`` (cached per precision)."""
        key = (get_bits(), resolution)
        with self._lock:
            hit = self._rules.get(key)
        if hit is not None:
            return hit
        nodes, weights = self._build_rule(resolution)
        result = Rule(nodes, weights, resolution)
        with self._lock:
            self._rules[key] = result
        return result

    def _build_rule(self, resolution: tuple):  # pragma: no cover - abstract
        raise NotImplementedError

    def density(self, zeta):
        """Cauchy density ``D`` used by contour integration."""
        raise NotImplementedError(f"{type(self).__name__} has no contour density")

    def _contour(self, resolution: tuple):
        """Ellipse nodes and ``dzeta/(i M)`` factors for contour rules."""
        i, m = resolution
        radius = mpfr(self.separation_radius() ** (i / FAMILY))
        hull = self.hull
        c = (hull.lo + hull.hi) / 2
        h = (hull.hi - hull.lo) / 2
        half = m // 2
        theta = mparray(2 * gmpy2.const_pi() * j / m for j in range(half + 1))
        cos, sin = vcos(theta), vsin(theta)
        p, q = (radius + 1 / radius) / 2, (radius - 1 / radius) / 2
        upper = mparray(mpc(c + h * p * cs, h * q * sn) for cs, sn in zip(cos, sin))
        dz = mparray(mpc(-h * p * sn, h * q * cs) for cs, sn in zip(cos, sin))
        return upper, dz, m

    def _contour_rule(self, resolution: tuple, density: Callable):
        upper, dz, m = self._contour(resolution)
        d_upper = as_object_array(density(upper))
        w_upper = d_upper * dz / mpc(0, m)
        half = m // 2
        lower_nodes = [upper[j].conjugate() for j in range(half - 1, 0, -1)]
        lower_w = [w_upper[j].conjugate() for j in range(half - 1, 0, -1)]
        nodes = mparray(list(upper) + lower_nodes)
        weights = mparray(list(w_upper) + lower_w)
        return nodes, weights

    # -- evaluation --------------------------------------------------------
    @precise
    def cauchy(self, z, degree: int = 0):
        """Cauchy transform ``int dmu(x)/(z - x)``.

        ``z`` may be a scalar or an array; the result has the same shape.
        """
        scalar = np.ndim(z) == 0
        zs = np.atleast_1d(as_object_array(z)).ravel()
        out = np.empty(len(zs), dtype=object)
        groups: dict = {}
        for idx, zz in enumerate(zs):
            zz = to_mpc(zz)
            zs[idx] = zz
            if self.on_support(complex(zz)):
                raise EvaluationOnSupportError(f"{zz} lies on the support of {self.name}")
            res, inside = self.resolution_for(complex(zz), degree)
            groups.setdefault((res, inside), []).append(idx)
        for (res, inside), idxs in groups.items():
            rule = self.rule(res)
            pts = zs[idxs]
            vals = np.sum(rule.weights[None, :] / (pts[:, None] - rule.nodes[None, :]), axis=1)
            if inside:
                vals = vals + as_object_array(self.density(pts))
            out[idxs] = vals
        out = self._realify(zs, out)
        return out[0] if scalar else out.reshape(np.shape(z))

    def _realify(self, zs, vals):
        """Drop rounding-level imaginary parts at real evaluation points."""
        res = np.empty(len(vals), dtype=object)
        for i, (zz, v) in enumerate(zip(zs, vals)):
            if (not isinstance(zz, type(mpc(0)))) and isinstance(v, type(mpc(0))):
                res[i] = v.real
            else:
                res[i] = v
        return res

    @precise
    def cauchy_derivative(self, z, degree: int = 0):
        """Derivative of the Cauchy transform at points outside the rule contour."""
        scalar = np.ndim(z) == 0
        zs = np.atleast_1d(as_object_array(z)).ravel()
        out = np.empty(len(zs), dtype=object)
        for idx, zz in enumerate(zs):
            zz = to_mpc(zz)
            zs[idx] = zz
            res, inside = self.resolution_for(complex(zz), degree)
            if inside:
                raise ContourCrossesSingularity("derivative needs a point outside the contour")
            rule = self.rule(res)
            d = zz - rule.nodes
            out[idx] = -np.sum(rule.weights / (d * d))
        out = self._realify(zs, out)
        return out[0] if scalar else out

    @precise
    def integrate(self, f: Callable, degree: int = 0, rtol=None, cap: int | None = None,
                  return_scale: bool = False, atol=0):
        """Integrate ``f`` against the measure, doubling until stable.

        Parameters
        ----------
        f : callable
            Vectorised function of an object array of nodes.
        degree : int
            Polynomial-degree hint for the integrand.
        rtol : mpfr, optional
            Agreement tolerance between successive rules relative to
            ``sum |w f|``; defaults to :meth:`default_rtol`.
        atol : mpfr, optional
            Absolute agreement floor, for integrands whose evaluation error
            exceeds ``rtol`` times their pointwise size.
        cap : int, optional
            Node-count cap; defaults to the measure's cap.

        Returns
        -------
        value
            The integral (mpfr for quadrature, mpc or mpfr for contour).
        """
        rtol = self.default_rtol() if rtol is None else rtol
        cap = self.node_cap if cap is None else cap
        res, _ = self.resolution_for(None, degree)
        prev = None
        while True:
            rule = self.rule(res)
            terms = rule.weights * as_object_array(f(rule.nodes))
            val = np.sum(terms)
            scale = np.sum(vabs(terms))
            if prev is not None and abs(val - prev) <= rtol * scale + atol:
                if self.engine == "contour":
                    val = _maybe_real(val, scale)
                return (val, scale) if return_scale else val
            prev = val
            nxt = self.refine(res)
            if self._node_count(nxt) > cap:
                raise QuadratureNonConvergence(
                    f"{self.name}: integral not stable at {self._node_count(res)} nodes")
            res = nxt

    def default_rtol(self) -> mpfr:
        """Default agreement tolerance of :meth:`integrate`.

        ``2**(24 - bits)``, or ``2**(-bits/2)`` for measures flagged
        ``loose`` whose density carries cancellation noise.
        """
        if self.loose:
            return mpfr(2) ** (-(get_bits() // 2))
        return mpfr(2) ** (24 - get_bits())

    def integrate_fixed(self, f: Callable, degree: int = 0):
        """Integrate with the a-priori resolution only (no doubling check)."""
        rule = self.rule(self.resolution_for(None, degree)[0])
        return np.sum(rule.weights * as_object_array(f(rule.nodes)))

    # -- scalars -----------------------------------------------------------
    def _cached_scalar(self, name: str, compute: Callable):
        key = (name, get_bits())
        with self._lock:
            if key in self._scalars:
                return self._scalars[key]
        val = compute()
        with self._lock:
            self._scalars[key] = val
        return val

    @property
    def mass(self):
        """Total mass ``mu(R)``."""
        return self._cached_scalar("mass", lambda: _as_real(self.integrate(lambda x: 0 * x + 1)))

    def moment(self, k: int):
        """Moment ``int x**k dmu``."""
        return self._cached_scalar(f"m{k}", lambda: _as_real(
            self.integrate(lambda x: x ** k, degree=k)))

    def probe_points(self) -> list[float]:
        """Real points right of the hull used to determine the sign."""
        b = self.hull.fb
        gap = self.clearance if self.clearance is not None else self.hull.length
        return [b + 0.25 * gap, b + 0.75 * gap, b + 4 * self.hull.length + gap]

    @property
    def sign(self) -> int:
        """Sign of the measure, read off the Cauchy transform right of the hull."""
        def compute():
            signs = {int(gmpy2.sign(_as_real(self.cauchy(mpfr(x))))) for x in self.probe_points()}
            if len(signs) != 1 or 0 in signs:
                raise SignIndeterminate(f"{self.name}: Cauchy transform changes sign right of hull")
            return signs.pop()
        return self._cached_scalar("sign", compute)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} on {self.hull}>"


def _as_real(v):
    return v.real if isinstance(v, type(mpc(0))) else v


def _maybe_real(val, scale):
    if isinstance(val, type(mpc(0))) and abs(val.imag) <= mpfr(2) ** (32 - get_bits()) * scale:
        return val.real
    return val


class Generator(Measure):
    """Generator measure: Jacobi-type density on an interval plus masses.

    Parameters
    ----------
    interval : Interval
        Continuous part of the support.
    weight : WeightSpec
        Density on ``interval``.
    masses : sequence of (location, weight)
        Finitely many mass points outside ``interval`` with weights of the
        same sign as the density.
    name : str
    clearance : float, optional
        Distance to neighbouring intervals of a Nikishin system.

    Examples
    --------
    >>> with working_precision(64):
    ...     mu = arcsine(-1, 1)
    ...     float(mu.cauchy(2))
    0.5773502691896257
    """

    engine = "quadrature"

    def __init__(self, interval: Interval, weight: WeightSpec | None = None,
                 masses: Sequence[tuple[RealLike, RealLike]] = (), name: str = "sigma",
                 clearance: float | None = None, node_cap: int = DEFAULT_NODE_CAP,
                 validate: bool = True):
        weight = weight or WeightSpec()
        masses = tuple((loc, w) for loc, w in masses)
        if validate:
            weight.validate(interval)
            for loc, w in masses:
                x = float(to_mpfr(loc))
                if interval.contains(x):
                    raise ConfigError(f"mass at {loc} lies inside {interval}")
                if float(to_mpfr(w)) <= 0:
                    raise ConfigError("mass-point weights must be positive")
        hull = interval.hull_with([float(to_mpfr(loc)) for loc, _ in masses])
        super().__init__(name, hull, interval, clearance, node_cap)
        self.interval = interval
        self.weight = weight
        self.masses = masses

    def with_clearance(self, clearance: float | None) -> "Generator":
        """Copy of the generator with a different clearance."""
        return Generator(self.interval, self.weight, self.masses, self.name, clearance,
                         self.node_cap, validate=False)

    def atoms(self) -> list:
        return [to_mpfr(loc) for loc, _ in self.masses]

    def _build_rule(self, resolution: tuple):
        (n,) = resolution
        u, lam = gauss_jacobi(n, self.weight.alpha, self.weight.beta)
        a, b = self.interval.lo, self.interval.hi
        h = (b - a) / 2
        x = (a + b) / 2 + h * u
        expo = to_mpfr(self.weight.alpha) + to_mpfr(self.weight.beta) + 1
        w = lam * (h ** expo) * as_object_array(self.weight.factor(x))
        if self.masses:
            x = mparray(list(x) + self.atoms())
            w = mparray(list(w) + [to_mpfr(wt) for _, wt in self.masses])
        return x, w


class Weighted(Measure):
    """Measure ``g(x) dmu(x)`` for ``g`` analytic near the hull of ``mu``.

    Used for products ``<sigma1, sigma2>`` (``g`` is a Cauchy transform),
    ratios such as ``(hat s / hat sigma) dtau`` and all the weighted
    measures appearing in second-type function recursions.

    Parameters
    ----------
    base : Measure
    multiplier : callable
        Vectorised analytic function.
    singular_hulls : sequence of Interval
        Where ``multiplier`` is singular; used to shrink the clearance.
    degree : int
        Polynomial-degree hint of ``multiplier`` (adds nodes).
    name : str
    loose : bool
        The multiplier is only accurate to about half the working
        precision (nested second-type functions); integrals then check
        agreement to that level.  Inherited from ``base``.
    """

    def __init__(self, base: Measure, multiplier: Callable, singular_hulls=(),
                 degree: int = 0, name: str | None = None, loose: bool = False):
        clearance = base.clearance
        for hull in singular_hulls:
            d = base.hull.distance(hull)
            if d <= 0:
                raise OverlappingHullsError(f"multiplier singular on {hull}, which meets {base.hull}")
            clearance = d if clearance is None else min(clearance, d)
        super().__init__(name or f"g*{base.name}", base.hull, base.continuous, clearance,
                         base.node_cap)
        self.base = base
        self.multiplier = multiplier
        self.singular_hulls = tuple(singular_hulls)
        self.degree = degree
        self.engine = base.engine
        self.loose = loose or base.loose

    def atoms(self) -> list:
        return self.base.atoms()

    def resolution_for(self, z=None, degree: int = 0):
        return super().resolution_for(z, degree + self.degree)

    def _build_rule(self, resolution: tuple):
        rule = self.base.rule(resolution)
        return rule.nodes, rule.weights * as_object_array(self.multiplier(rule.nodes))

    def density(self, zeta):
        zeta = as_object_array(zeta)
        return as_object_array(self.multiplier(zeta)) * as_object_array(self.base.density(zeta))


class InverseMeasure(Measure):
    """Measure ``tau`` with ``1/hat s = l + hat tau`` on the hull of ``s``.

    Built by :func:`inverse_measure`.  The Cauchy transform is evaluated in
    closed form; integration uses contour quadrature with density
    ``hat tau``.
    """

    engine = "contour"

    def __init__(self, s: Measure, name: str | None = None):
        super().__init__(name or f"tau[{s.name}]", s.hull, s.continuous, s.clearance, s.node_cap)
        self.s = s

    @property
    def l_coefficients(self):
        """``(l0, l1)`` with ``l(z) = l1 z + l0``, at working precision."""
        return self._cached_scalar("lcoef", lambda: _laurent_linear(self.s))

    def l(self, z):
        l0, l1 = self.l_coefficients
        return l1 * z + l0

    def density(self, zeta):
        return self._closed_form(as_object_array(zeta))

    def _closed_form(self, zs):
        l0, l1 = self.l_coefficients
        s_hat = as_object_array(self.s.cauchy(zs))
        return 1 / s_hat - (l1 * zs + l0)

    @precise
    def cauchy(self, z, degree: int = 0):
        scalar = np.ndim(z) == 0
        zs = np.atleast_1d(as_object_array(z)).ravel()
        zs = mparray(to_mpc(v) for v in zs)
        for zz in zs:
            if self.on_support(complex(zz)):
                raise EvaluationOnSupportError(f"{zz} lies on the support of {self.name}")
        out = self._realify(zs, self._closed_form(zs))
        return out[0] if scalar else out.reshape(np.shape(z))

    def _build_rule(self, resolution: tuple):
        return self._contour_rule(resolution, self.density)

    def atoms(self) -> list:
        return [loc for loc, _ in self.atom_masses()]

    def atom_masses(self) -> list:
        """Mass points of ``tau``: zeros of ``hat s`` in gaps of ``supp s``."""
        return self._cached_scalar("atoms", self._find_atoms)

    def _find_atoms(self):
        found = []
        for lo, hi in self.s.gaps():
            root = _gap_zero(self.s, lo, hi)
            if root is not None:
                found.append((root, 1 / self.s.cauchy_derivative(root)))
        return found

    @property
    def mass(self):
        def compute():
            m0, m1, m2 = (self.s.moment(k) for k in range(3))
            return (m1 * m1 - m0 * m2) / (m0 ** 3)
        return self._cached_scalar("mass", compute)


def _laurent_linear(s: Measure):
    m0, m1 = s.moment(0), s.moment(1)
    if m0 == 0:
        raise LaurentExtractionUnstable(f"{s.name} has zero total mass")
    return (-m1 / (m0 * m0), 1 / m0)


def _gap_zero(s: Measure, lo: float, hi: float):
    """Zero of ``hat s`` in the open gap ``(lo, hi)`` of its support, if any."""
    width = hi - lo
    def val(x):
        return s.cauchy(x)
    left = right = None
    for frac in (1e-6, 1e-4, 1e-2):
        try:
            left = (to_mpfr(lo) + mpfr(frac) * mpfr(width), None)
            left = (left[0], val(left[0]))
            break
        except (QuadratureNonConvergence, ContourCrossesSingularity):
            left = None
    for frac in (1e-6, 1e-4, 1e-2):
        try:
            right = (to_mpfr(hi) - mpfr(frac) * mpfr(width), None)
            right = (right[0], val(right[0]))
            break
        except (QuadratureNonConvergence, ContourCrossesSingularity):
            right = None
    if left is None or right is None:
        raise QuadratureNonConvergence(f"cannot resolve hat s near the gap ({lo}, {hi})")
    (xl, fl), (xr, fr) = left, right
    if gmpy2.sign(fl) == gmpy2.sign(fr):
        return None
    return _bracketed_root(val, xl, xr, fl, fr, lambda x: s.cauchy_derivative(x))


def _bracketed_root(f, xl, xr, fl, fr, df=None, max_iter: int = 400):
    """Safeguarded Newton/bisection root of ``f`` on ``[xl, xr]``."""
    tol = mpfr(2) ** (8 - get_bits()) * max(abs(xl), abs(xr), mpfr(1))
    x = (xl + xr) / 2
    for _ in range(max_iter):
        fx = f(x)
        if fx == 0:
            return x
        if gmpy2.sign(fx) == gmpy2.sign(fl):
            xl, fl = x, fx
        else:
            xr, fr = x, fx
        if xr - xl <= tol:
            return (xl + xr) / 2
        step_ok = False
        if df is not None:
            try:
                d = df(x)
                if d != 0:
                    xn = x - fx / d
                    if xl < xn < xr and abs(xn - x) < (xr - xl) / 2:
                        if abs(xn - x) <= tol:
                            return xn
                        x, step_ok = xn, True
            except (ArithmeticError, ValueError):
                step_ok = False
        if not step_ok:
            x = (xl + xr) / 2
    return x


# ---------------------------------------------------------------------------
# Measure algebra
# ---------------------------------------------------------------------------

def arcsine(a: RealLike = -1, b: RealLike = 1, masses=(), name: str = "sigma",
            clearance: float | None = None) -> Generator:
    """Normalised arcsine (equilibrium) measure ``dx / (pi sqrt((b-x)(x-a)))``."""
    return Generator(Interval(a, b), WeightSpec("-0.5", "-0.5", ("1/pi",)), masses,
                     name=name, clearance=clearance)


def point_mass(location: RealLike, weight: RealLike = 1, name: str = "delta") -> "AtomicMeasure":
    """Single mass point ``weight * delta_location``."""
    return AtomicMeasure([(location, weight)], name)


class AtomicMeasure(Measure):
    """Finite combination of mass points (no continuous part)."""

    engine = "quadrature"

    def __init__(self, masses: Sequence[tuple[RealLike, RealLike]], name: str = "delta"):
        locs = [float(to_mpfr(loc)) for loc, _ in masses]
        lo, hi = min(locs), max(locs)
        pad = 1e-9 * max(1.0, abs(lo), abs(hi)) if hi == lo else 0.0
        super().__init__(name, Interval(lo - pad, hi + pad), None, None)
        self.masses = tuple(masses)

    def atoms(self) -> list:
        return [to_mpfr(loc) for loc, _ in self.masses]

    def resolution_for(self, z=None, degree: int = 0):
        return (len(self.masses),), False

    def _build_rule(self, resolution: tuple):
        return mparray(self.atoms()), mparray(to_mpfr(w) for _, w in self.masses)


def _check_disjoint(m1: Measure, m2: Measure):
    if m1.hull.distance(m2.hull) <= 0:
        raise OverlappingHullsError(f"hulls of {m1.name} and {m2.name} intersect")


def product_measure(sigma1: Measure, sigma2: Measure, name: str | None = None) -> Weighted:
    """The measure ``<sigma1, sigma2> = hat sigma2(x) dsigma1(x)``.

    Raises
    ------
    OverlappingHullsError
        If the hulls of ``sigma1`` and ``sigma2`` meet.
    """
    _check_disjoint(sigma1, sigma2)
    return Weighted(sigma1, sigma2.cauchy, singular_hulls=[sigma2.hull],
                    name=name or f"<{sigma1.name},{sigma2.name}>")


def nested_product(measures: Sequence[Measure]) -> Measure:
    """Right-nested product ``<mu1, <mu2, ..., mu_k>>`` (``mu1`` if k = 1)."""
    if not measures:
        raise ValueError("empty product")
    if len(measures) == 1:
        return measures[0]
    inner = nested_product(measures[1:])
    names = ",".join(m.name for m in measures)
    return product_measure(measures[0], inner, name=f"<{names}>")


@dataclass
class NikishinSystem:
    """Generators ``sigma_1..sigma_m`` and components ``s_1..s_m``."""

    generators: list
    components: list = field(default_factory=list)
    #: memo of derived measures shared by second-type chains
    derived: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def m(self) -> int:
        return len(self.generators)


def system_clearances(hulls: Sequence[Interval]) -> list[float | None]:
    """Distance of each hull to its neighbours in the sequence."""
    out = []
    for j, hull in enumerate(hulls):
        ds = [hull.distance(hulls[i]) for i in (j - 1, j + 1) if 0 <= i < len(hulls)]
        out.append(min(ds) if ds else None)
    return out


def nikishin_components(generators: Sequence[Measure]) -> NikishinSystem:
    """Build the Nikishin system generated by ``generators``.

    Consecutive hulls must be disjoint.  Generators are re-issued with the
    clearance implied by their neighbours so that every derived measure
    chooses contours and node counts that respect the neighbouring cuts.
    """
    gens = list(generators)
    for g1, g2 in zip(gens, gens[1:]):
        _check_disjoint(g1, g2)
    clear = system_clearances([g.hull for g in gens])
    gens = [g.with_clearance(c) if isinstance(g, Generator) else g for g, c in zip(gens, clear)]
    comps = [nested_product(gens[:k + 1]) for k in range(len(gens))]
    comps[0] = gens[0]
    return NikishinSystem(gens, comps)


@precise
def inverse_measure(s: Measure, name: str | None = None):
    """Decompose ``1/hat s = l + hat tau``.

    Returns
    -------
    l : tuple
        ``(l0, l1)`` with ``l(z) = l1 z + l0``.
    tau : InverseMeasure

    Raises
    ------
    SignIndeterminate
        If ``s`` or ``hat tau`` is not of constant sign right of the hull.
    LaurentExtractionUnstable
        If ``z hat tau(z)`` does not approach the predicted total mass.
    """
    _ = s.sign
    tau = InverseMeasure(s, name=name)
    l0, l1 = tau.l_coefficients
    mass = tau.mass
    far = mpfr(s.hull.fb + 1e4 * s.hull.length)
    approx = far * tau.cauchy(far)
    if abs(approx - mass) > mpfr("1e-2") * abs(mass):
        raise LaurentExtractionUnstable(f"{tau.name}: z*tau(z) = {approx} vs mass {mass}")
    _ = tau.sign
    return (l0, l1), tau


def cauchy_transform(mu: Measure, z, degree: int = 0):
    """``int dmu(x)/(z-x)`` for scalar or array ``z`` off the support."""
    return mu.cauchy(z, degree)


def integrate(mu: Measure, f: Callable, **kwargs):
    """Integrate ``f`` against ``mu`` with resolution doubling."""
    return mu.integrate(f, **kwargs)


# ---------------------------------------------------------------------------
# Identities of the measure algebra
# ---------------------------------------------------------------------------

@precise
def product_splitting_residual(sigma2: Measure, sigma3: Measure, points) -> mpfr:
    """Largest relative gap in ``hat sigma_2 hat sigma_3 = hat s_{2,3} + hat s_{3,2}``.

    ``points`` must avoid both hulls.
    """
    s23 = product_measure(sigma2, sigma3)
    s32 = product_measure(sigma3, sigma2)
    zs = mparray(to_mpc(z) for z in points)
    lhs = as_object_array(sigma2.cauchy(zs)) * as_object_array(sigma3.cauchy(zs))
    rhs = as_object_array(s23.cauchy(zs)) + as_object_array(s32.cauchy(zs))
    return max(abs(a - b) / abs(a) for a, b in zip(lhs, rhs))


@precise
def inverse_ratio_residual(sigma2: Measure, sigma3: Measure, points) -> mpfr:
    """Largest relative gap in the representation of ``hat sigma_2 / hat s_{2,3}``.

    The ratio equals ``C_1`` plus the Cauchy transform of
    ``(hat s_{3,2} / hat sigma_3) d tau_{2,3}``, where ``tau_{2,3}`` is the
    inverse measure of ``s_{2,3}`` and ``C_1 = |sigma_2| / |s_{2,3}|``.
    ``points`` must avoid the hull of ``sigma_2``.
    """
    s23 = product_measure(sigma2, sigma3)
    s32 = product_measure(sigma3, sigma2)
    _, tau23 = inverse_measure(s23)
    w = Weighted(tau23, lambda x: s32.cauchy(x) / sigma3.cauchy(x),
                 singular_hulls=[sigma3.hull], name="(s32/sigma3)*tau[2,3]")
    c1 = sigma2.mass / s23.mass
    zs = mparray(to_mpc(z) for z in points)
    lhs = as_object_array(w.cauchy(zs)) + c1
    rhs = as_object_array(sigma2.cauchy(zs)) / as_object_array(s23.cauchy(zs))
    return max(abs(a - b) / abs(b) for a, b in zip(lhs, rhs))


@precise
def inverse_roundtrip_residual(s: Measure, points) -> mpfr:
    """Largest relative gap in ``1/hat s = l + hat tau`` at ``points``.

    ``hat tau`` is taken from the contour rule of ``tau`` (the generic
    :meth:`Measure.cauchy` path) rather than from its closed form, so the
    check exercises the Laurent coefficients and the contour quadrature.
    """
    (l0, l1), tau = inverse_measure(s)
    zs = mparray(to_mpc(z) for z in points)
    lhs = 1 / as_object_array(s.cauchy(zs))
    rhs = l1 * zs + l0 + as_object_array(Measure.cauchy(tau, zs))
    return max(abs(a - b) / abs(a) for a, b in zip(lhs, rhs))
