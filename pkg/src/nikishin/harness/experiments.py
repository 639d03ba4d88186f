"""Experiment runners: ratio asymptotics, weak limits, mass-point attraction
and the structural verification suites.

Every runner works at the configured precision and returns a report
object holding plain Python values (decimal strings for extended
precision numbers), so reports serialize without further conversion.
A step whose solve fails is recorded with the error and its message; the
run continues with the next step.
"""

from __future__ import annotations

import logging
import random
from dataclasses import asdict, dataclass, field
from itertools import product as cartesian
from typing import Callable, Iterable

import gmpy2
from gmpy2 import mpfr

from ..errors import ConfigError, NikishinError
from ..limits import LimitSolution, SurfaceSpec, solve_bvp
from ..measures import (
    arcsine,
    inverse_ratio_residual,
    inverse_roundtrip_residual,
    product_measure,
    product_splitting_residual,
)
from ..mop import MomentCache, MultiIndex, as_index, classify
from ..precision import as_object_array, fmt, parse_real, working_precision
from ..second_type import (
    SecondTypeChain,
    build_chain,
    check_interlacing,
    h_constant_sign,
    orthogonality_residuals,
)
from .config import ExperimentConfig, check_theorem_path, path_pairs

log = logging.getLogger(__name__)

DIGITS = 20


def _num(x) -> str:
    """Deterministic decimal string (``DIGITS`` significant digits)."""
    return fmt(x, DIGITS)


def _cplx(z) -> list[str]:
    z = gmpy2.mpc(z)
    return [_num(z.real), _num(z.imag)]


# ---------------------------------------------------------------------------
# Report types
# ---------------------------------------------------------------------------

@dataclass
class PointRecord:
    """Measured ratio, its limit and the absolute error at one point."""

    point: str
    ratio: list
    limit: list
    error: str


@dataclass
class StepRecord:
    """One path step ``n -> n_l`` (``l = None`` for a full increment)."""

    n: list
    n_l: list
    l: int | None
    size: int
    points: list = field(default_factory=list)
    levels: list = field(default_factory=list)
    kappa: list = field(default_factory=list)
    K: list = field(default_factory=list)
    telescoping: str | None = None
    extra: dict = field(default_factory=dict)
    failure: dict | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None


@dataclass
class ConvergenceReport:
    """Result of one experiment run."""

    name: str
    experiment: str
    precision_bits: int
    m: int
    points: list
    steps: list = field(default_factory=list)
    limits: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def failures(self) -> list:
        return [s for s in self.steps if not s.ok]

    def errors(self, point: int = 0, l: int | None = None) -> list[tuple[int, float]]:
        """``(|n|, abs error)`` at ``points[point]`` for successful steps,
        optionally restricted to increments of component ``l``."""
        out = []
        for s in self.steps:
            if s.ok and s.points and (l is None or s.l == l):
                out.append((s.size, float(parse_real(s.points[point].error))))
        return out

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "experiment": self.experiment,
            "precision_bits": self.precision_bits,
            "m": self.m,
            "points": self.points,
            "summary": self.summary,
            "notes": self.notes,
            "limits": self.limits,
            "steps": [asdict(s) for s in self.steps],
        }


# ---------------------------------------------------------------------------
# Shared machinery
# ---------------------------------------------------------------------------

class ChainStore:
    """Chains of one system, built on demand and kept for reuse."""

    def __init__(self, system):
        self.system = system
        self.cache = MomentCache()
        self._chains: dict = {}

    def get(self, n) -> SecondTypeChain:
        n = as_index(n)
        hit = self._chains.get(n.entries)
        if hit is None:
            hit = build_chain(self.system, n, cache=self.cache)
            self._chains[n.entries] = hit
        return hit

    def drop_below(self, size: int) -> None:
        """Forget chains of total size below ``size``."""
        for key in [k for k in self._chains if sum(k) < size]:
            del self._chains[key]


class LimitStore:
    """Boundary-value solutions keyed by ``(l, tau)``."""

    def __init__(self, cfg: ExperimentConfig):
        self.spec = SurfaceSpec(cfg.intervals())
        bits = cfg.tolerance("limit_bits")
        self.bits = None if bits in (None, 53) else int(bits)
        tol = cfg.tolerances.get("bvp")
        self.tol = None if tol is None else float(parse_real(str(tol)))
        self._sols: dict = {}

    def get(self, l: int, tau: tuple) -> LimitSolution:
        key = (l, tuple(tau))
        hit = self._sols.get(key)
        if hit is None:
            hit = solve_bvp(self.spec, l, tau, tol=self.tol, bits=self.bits)
            self._sols[key] = hit
        return hit

    def summaries(self) -> list[dict]:
        out = []
        for (l, tau), sol in sorted(self._sols.items()):
            out.append({"l": l, "tau": list(tau), "iterations": sol.iterations,
                        "precision_bits": sol.bits,
                        "boundary_residual": [f"{r:.3e}" for r in sol.boundary_residuals()],
                        "c": [_num(c) for c in sol.c], "kappa": [_num(k) for k in sol.kappa]})
        return out


def _failure(exc: Exception) -> dict:
    return {"error": type(exc).__name__, "message": str(exc)}


def _far_enough(chain: SecondTypeChain, k: int, z, margin: float) -> bool:
    """Whether ``z`` keeps ``margin`` from the support carrying the zeros of ``Q_{n,k}``."""
    if k == 1:
        hull = chain.system.generators[0].hull
    else:
        hull = chain.levels[k - 1].zero_interval
    zc = complex(z)
    x = min(max(zc.real, hull.fa), hull.fb)
    return abs(complex(x, 0) - zc) >= margin


def _ratio_options(cfg: ExperimentConfig) -> dict:
    opts = {"levels": "all", "normalization": True}
    opts.update(cfg.source.get("ratio", {}))
    return opts


def _limit_value(limits: LimitStore, n: MultiIndex, l: int | None, k: int, z):
    """``F~_k^{(l)}(z)``, or the product over ``l`` for a full increment."""
    if l is not None:
        return limits.get(l, n.tau).F_tilde(k, z)
    val = None
    for j in range(1, n.m + 1):
        f = limits.get(j, n.tau).F_tilde(k, z)
        val = f if val is None else val * f
    return val


def _telescoping(store: ChainStore, n: MultiIndex, points, k_max: int) -> mpfr:
    """Largest relative gap in ``Q_{n+1,k}/Q_{n,k} = prod_j Q_{n_tau(j+1),k}/Q_{n_tau(j),k}``.

    Intermediate indices add one to the components ``tau(1), ..., tau(j)``.
    """
    m = n.m
    order = n.tau
    chain_seq = [store.get(n)]
    cur = list(n.entries)
    for j in range(m):
        cur[order[j] - 1] += 1
        chain_seq.append(store.get(tuple(cur)))
    worst = mpfr(0)
    for k in range(1, k_max + 1):
        for z in points:
            direct = chain_seq[-1].Q(k)(z) / chain_seq[0].Q(k)(z)
            prod = 1
            for a, b in zip(chain_seq, chain_seq[1:]):
                prod = prod * (b.Q(k)(z) / a.Q(k)(z))
            worst = max(worst, abs(prod - direct) / abs(direct))
    return worst


# ---------------------------------------------------------------------------
# Ratio experiment
# ---------------------------------------------------------------------------

def run_ratio_experiment(cfg: ExperimentConfig, precision_bits: int | None = None,
                         ) -> ConvergenceReport:
    """Ratios ``Q_{n_l,k}/Q_{n,k}`` along the configured path against their limits.

    For each step the first-level ratio is compared with ``G_0^{(l)}`` at
    every evaluation point (these rows form the CSV table); level
    ``k >= 2`` ratios are compared with ``F~_k^{(l)}`` at the points
    that keep the margin from ``Delta_k``.  With normalisation enabled
    the ratios of ``kappa_{n,k}`` and ``K_{n,k}`` are recorded next to
    ``kappa_k^{(l)}`` and ``kappa_1^{(l)} ... kappa_k^{(l)}``.  In
    full-increment mode the limit is the product over ``l`` and the
    telescoping identity through the intermediate indices is checked.

    Raises
    ------
    ConfigError
        If theorem mode is active and a path step changes ``tau``; this
        is checked before any solve.
    """
    bits = precision_bits or cfg.precision_bits
    path = cfg.build_path()
    full = cfg.path.mode == "full_increment"
    if cfg.path.theorem and not full:
        check_theorem_path(path)
    opts = _ratio_options(cfg)
    margin = float(parse_real(str(cfg.tolerance("eval_margin"))))
    report = ConvergenceReport(cfg.name, cfg.experiment, bits, cfg.m, cfg.point_labels())
    report.notes.append("convergence is judged by trend (monotone decrease and a final "
                        "threshold); no rate is assumed")
    with working_precision(bits):
        system = cfg.build_system()
        store = ChainStore(system)
        limits = LimitStore(cfg)
        points = cfg.eval_points_mp()
        levels = range(1, cfg.m + 1) if opts["levels"] == "all" else list(opts["levels"])
        for n, nl, l in path_pairs(path):
            step = StepRecord(list(n.entries), list(nl.entries), l, n.size)
            try:
                _ratio_step(step, store, limits, n, nl, l, points, report.points, levels,
                            margin, opts["normalization"], full)
            except NikishinError as exc:
                log.warning("step %s -> %s failed: %s", n, nl, exc)
                step.failure = _failure(exc)
            report.steps.append(step)
            store.drop_below(n.size)
        report.limits = limits.summaries()
    report.summary = decay_summary(report)
    return report


def _ratio_step(step, store, limits, n, nl, l, points, labels, levels, margin, normalization,
                full):
    ch_n, ch_l = store.get(n), store.get(nl)
    for z, label in zip(points, labels):
        r = ch_l.Q(1)(z) / ch_n.Q(1)(z)
        g = _limit_value(limits, n, l, 1, z)
        step.points.append(PointRecord(label, _cplx(r), _cplx(g), _num(abs(r - g))))
    for k in levels:
        if k == 1:
            continue
        entry = {"k": k, "points": []}
        for z, label in zip(points, labels):
            if not _far_enough(ch_n, k, z, margin):
                continue
            r = ch_l.Q(k)(z) / ch_n.Q(k)(z)
            f = _limit_value(limits, n, l, k, z)
            entry["points"].append({"point": label, "ratio": _cplx(r), "limit": _cplx(f),
                                    "error": _num(abs(r - f))})
        step.levels.append(entry)
    if normalization and not full:
        nn, nnl = ch_n.normalized(), ch_l.normalized()
        sol = limits.get(l, n.tau)
        prod = 1
        for k in range(1, n.m + 1):
            prod = prod * sol.kappa[k - 1]
            step.kappa.append({"k": k, "ratio": _num(nnl.kappa[k] / nn.kappa[k]),
                               "limit": _num(sol.kappa[k - 1])})
            step.K.append({"k": k, "ratio": _num(nnl.K[k] / nn.K[k]), "limit": _num(prod)})
        z = points[0] if points else None
        if z is not None:
            qr = nnl.q(1)(z) / nn.q(1)(z)
            step.extra["orthonormal_ratio"] = {
                "point": labels[0], "ratio": _cplx(qr),
                "limit": _cplx(sol.kappa[0] * sol.F_tilde(1, z))}
    if full:
        k_max = max(levels) if levels else 1
        step.telescoping = _num(_telescoping(store, n, points, k_max))


def decay_summary(report: ConvergenceReport) -> dict:
    """Error table per point and per increment component, with trend flags.

    ``monotone_last_5`` holds for a component when its last five recorded
    errors strictly decrease; ``final_error`` is the error of its last step.
    """
    out = {"failed_steps": len(report.failures), "per_point": []}
    comps = sorted({s.l for s in report.steps if s.ok}, key=lambda v: (v is None, v))
    for p, label in enumerate(report.points):
        entry = {"point": label, "components": []}
        for l in comps:
            errs = report.errors(p, l)
            tail = [e for _, e in errs[-5:]]
            entry["components"].append({
                "l": l,
                "table": [[size, f"{e:.6e}"] for size, e in errs],
                "monotone_last_5": len(tail) == 5 and all(b < a for a, b in zip(tail, tail[1:])),
                "final_error": f"{errs[-1][1]:.6e}" if errs else None,
            })
        out["per_point"].append(entry)
    return out


# ---------------------------------------------------------------------------
# Weak-limit experiment
# ---------------------------------------------------------------------------

def _weak_function(name: str, a, b) -> Callable:
    def cheb(j):
        def f(x):
            u = (2 * as_object_array(x) - a - b) / (b - a)
            t0, t1 = u * 0 + 1, u
            for _ in range(j - 1):
                t0, t1 = t1, 2 * u * t1 - t0
            return t1 if j else t0
        return f

    table = {
        "1": lambda x: as_object_array(x) * 0 + 1,
        "x": lambda x: as_object_array(x),
        "x^2": lambda x: as_object_array(x) ** 2,
        "T1": cheb(1), "T2": cheb(2), "T3": cheb(3),
    }
    return table[name]


def run_weaklimit_experiment(cfg: ExperimentConfig, k: int | None = None,
                             functions: Iterable[str] | None = None,
                             precision_bits: int | None = None) -> ConvergenceReport:
    """Integrals of ``f q_{n,k}**2 d|rho_{n,k}|`` against the arcsine limit.

    The reference value is ``int f dx / (pi sqrt((b-x)(x-a)))`` on the
    continuous support ``[a, b]`` of ``sigma_k``, computed by Gauss-Chebyshev
    quadrature.  The function ``"cauchy"`` compares
    ``epsilon_{n,k} h_{n,k+1}(z)`` with ``1/sqrt((z-b)(z-a))`` at the
    configured ``cauchy_point``.
    """
    bits = precision_bits or cfg.precision_bits
    opts = cfg.weak_limit
    k = k or int(opts.get("k", 1))
    if not 1 <= k <= cfg.m:
        raise ConfigError(f"weak-limit level {k} out of range 1..{cfg.m}")
    names = list(functions or opts.get("functions", ["1", "x", "x^2"]))
    path = cfg.build_path()
    report = ConvergenceReport(cfg.name, "weak_limit", bits, cfg.m, names)
    with working_precision(bits):
        system = cfg.build_system()
        store = ChainStore(system)
        iv = system.generators[k - 1].interval
        a, b = iv.lo, iv.hi
        ref = arcsine(iv.a, iv.b)
        cz = opts.get("cauchy_point", ("5", "0"))
        zc = gmpy2.mpc(parse_real(cz[0]), parse_real(cz[1]))
        for n in path.indices:
            step = StepRecord(list(n.entries), list(n.entries), None, n.size)
            try:
                chain = store.get(n)
                norm = chain.normalized()
                mu = norm.orthonormal_measure(k)
                for name in names:
                    if name == "cauchy":
                        val = norm.epsilon[k] * norm.h(k + 1)(zc)
                        lim = 1 / (gmpy2.sqrt(zc - b) * gmpy2.sqrt(zc - a))
                        label = f"cauchy@{cz[0]}{'-' if cz[1].startswith('-') else '+'}" \
                                f"{cz[1].lstrip('+-')}i"
                    else:
                        f = _weak_function(name, a, b)
                        val = mu.integrate(f, rtol=mpfr(2) ** (-(bits // 2)))
                        lim = ref.integrate(f)
                        label = name
                    err = abs(val - lim)
                    rel = err / abs(lim) if lim != 0 else err
                    step.points.append(PointRecord(label, _cplx(val), _cplx(lim), _num(err)))
                    step.extra.setdefault("relative_error", []).append(_num(rel))
            except NikishinError as exc:
                step.failure = _failure(exc)
            report.steps.append(step)
            store.drop_below(n.size)
    report.summary = {"failed_steps": len(report.failures), "level": k}
    return report


# ---------------------------------------------------------------------------
# Mass-point attraction
# ---------------------------------------------------------------------------

def run_denisov_experiment(cfg: ExperimentConfig, precision_bits: int | None = None,
                           ) -> ConvergenceReport:
    """Distance from each mass point to the nearest zero of ``Q_{n,k}``.

    Targets are the atoms of ``sigma^{k-1}_k`` outside its continuous
    support.  Each step also records the number of zeros in every gap of
    that support (at most one is expected) and the interlacing check
    against the previous index when both share ``tau``.
    """
    bits = precision_bits or cfg.precision_bits
    path = cfg.build_path()
    report = ConvergenceReport(cfg.name, "denisov", bits, cfg.m, [])
    with working_precision(bits):
        system = cfg.build_system()
        store = ChainStore(system)
        prev = None
        labels: list[str] = []
        for n in path.indices:
            step = StepRecord(list(n.entries), list(n.entries), None, n.size)
            try:
                chain = store.get(n)
                for k, x in mass_targets(chain):
                    label = f"k={k}:{float(x):.12g}"
                    if label not in labels:
                        labels.append(label)
                    zeros = chain.levels[k - 1].zeros
                    if not zeros:
                        continue
                    near = min(zeros, key=lambda z: abs(z - x))
                    # CSV slots: ratio = nearest zero, limit = mass location
                    step.points.append(PointRecord(label, _cplx(near), _cplx(x),
                                                   _num(abs(near - x))))
                for k in range(1, cfg.m + 1):
                    lvl = chain.levels[k - 1]
                    counts = _gap_counts(lvl.next_sigma, lvl.zeros)
                    step.levels.append({"k": k, "gap_counts": counts,
                                        "ok": all(c <= 1 for c in counts)})
                if prev is not None and prev.n.tau == n.tau and n.size == prev.n.size + 1:
                    step.extra["interlacing"] = [
                        bool(check_interlacing(prev, chain, k)) for k in range(cfg.m)]
                prev = chain
            except NikishinError as exc:
                step.failure = _failure(exc)
                prev = None
            report.steps.append(step)
            store.drop_below(n.size)
    report.points = labels
    if not labels:
        report.notes.append("no mass points outside the continuous supports; "
                            "the target set is empty")
    last = report.steps[-1] if report.steps else None
    report.summary = {"failed_steps": len(report.failures),
                      "final_distance": {p.point: p.error for p in last.points}
                      if last is not None and last.ok else {}}
    return report


def mass_targets(chain: SecondTypeChain) -> list[tuple[int, mpfr]]:
    """``(k, x)`` for the atoms ``x`` of ``sigma^{k-1}_k`` off its continuous support."""
    out = []
    for k in range(1, chain.m + 1):
        sigma = chain.levels[k - 1].next_sigma
        cont = sigma.continuous
        for x in sigma.atoms():
            if cont is None or not cont.contains(float(x)):
                out.append((k, x))
    return out


def _gap_counts(sigma, zeros) -> list[int]:
    out = []
    for lo, hi in sigma.gaps():
        out.append(sum(1 for z in zeros if lo < float(z) < hi))
    return out


# ---------------------------------------------------------------------------
# Structural verification
# ---------------------------------------------------------------------------

@dataclass
class CheckRow:
    """One verified property."""

    suite: str
    n: str
    level: int | str
    check: str
    value: str
    tolerance: str
    passed: bool


@dataclass
class VerifyReport:
    name: str
    precision_bits: int
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.rows) and not self.failures

    def add(self, *args) -> None:
        self.rows.append(CheckRow(*args))

    def to_json(self) -> dict:
        return {"name": self.name, "precision_bits": self.precision_bits, "ok": self.ok,
                "rows": [asdict(r) for r in self.rows], "failures": self.failures}


SUITES = ("zeros", "interlacing", "orthogonality", "special", "identities")


def effective_indices(m: int, max_size: int) -> list[MultiIndex]:
    """Nonzero indices with ``|n| <= max_size`` in the effective ``(*)`` class,
    ordered by size and then lexicographically."""
    out = []
    for e in cartesian(range(max_size + 1), repeat=m):
        if 0 < sum(e) <= max_size and classify(e).in_star_effective:
            out.append(as_index(e))
    return sorted(out, key=lambda n: (n.size, n.entries))


def run_verify(cfg: ExperimentConfig, precision_bits: int | None = None,
               suites: Iterable[str] | None = None) -> VerifyReport:
    """Run the structural property suites.

    ``zeros``: zero counts ``|n^k|`` of ``Psi_{n,k}`` on ``Delta_{k+1}``,
    zeros interior to the hull and at most one zero per gap.
    ``interlacing``: every same-``tau`` increment pair inside the size
    bound, at every level.  ``orthogonality``: relative residuals of all
    orthogonality relations of each chain.  ``special``: the same
    residuals for the configured ``m = 3`` increasing indices, at their
    own tolerance.  ``identities``: product splitting, the inverse-ratio
    representation and the inverse-measure round trip for the last two
    generators at 50 seeded random points.
    """
    bits = precision_bits or cfg.precision_bits
    opts = cfg.verify
    suites = list(suites or opts.get("suites", SUITES))
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise ConfigError(f"unknown verify suites {sorted(unknown)}")
    max_size = int(opts.get("max_size", 6))
    orth_tol = mpfr(str(opts.get("orthogonality_tol", "1e-15")))
    special_tol = mpfr(str(opts.get("special_tol", "1e-12")))
    ident_tol = mpfr(str(opts.get("identity_tol", "1e-20")))
    report = VerifyReport(cfg.name, bits)
    with working_precision(bits):
        system = cfg.build_system()
        store = ChainStore(system)
        if "identities" in suites:
            _identity_suite(report, system, int(opts.get("seed", 2024)), ident_tol)
        need_chains = {"zeros", "interlacing", "orthogonality"} & set(suites)
        indices = effective_indices(cfg.m, max_size) if need_chains else []
        for n in indices:
            try:
                chain = store.get(n)
            except NikishinError as exc:
                report.failures.append({"n": str(n), **_failure(exc)})
                continue
            if "zeros" in suites:
                _zero_checks(report, chain)
            if "orthogonality" in suites:
                try:
                    for e in orthogonality_residuals(chain):
                        report.add("orthogonality", str(n), e.level, e.label,
                                   f"{float(e.residual):.3e}", f"{float(orth_tol):.0e}",
                                   bool(e.residual < orth_tol))
                except NikishinError as exc:
                    report.failures.append({"n": str(n), "suite": "orthogonality",
                                            **_failure(exc)})
            if "interlacing" in suites:
                # pairs (p, n) with n = p_l: p is smaller, so already built
                for l in range(1, cfg.m + 1):
                    e = list(n.entries)
                    if e[l - 1] == 0:
                        continue
                    e[l - 1] -= 1
                    p = as_index(e)
                    if p.size == 0 or p.tau != n.tau or not classify(p).in_star_effective:
                        continue
                    try:
                        base = store.get(p)
                    except NikishinError:
                        continue
                    for k in range(cfg.m):
                        res = check_interlacing(base, chain, k)
                        report.add("interlacing", f"{p}->{n}", k, "alternation",
                                   f"{res.min_gap:.3e}", "0", res.ok)
            store.drop_below(n.size - 1)
        if "special" in suites and cfg.m == 3:
            for e in opts.get("special_indices", [[1, 2, 3], [2, 3, 4]]):
                n = as_index(e)
                try:
                    chain = store.get(n)
                    for ent in orthogonality_residuals(chain):
                        report.add("special", str(n), ent.level, ent.label,
                                   f"{float(ent.residual):.3e}", f"{float(special_tol):.0e}",
                                   bool(ent.residual < special_tol))
                except NikishinError as exc:
                    report.failures.append({"n": str(n), "suite": "special", **_failure(exc)})
    return report


def _zero_checks(report: VerifyReport, chain: SecondTypeChain) -> None:
    n = str(chain.n)
    for k in range(chain.m):
        lvl = chain.levels[k]
        zeros = lvl.zeros
        report.add("zeros", n, k, "count", str(len(zeros)), str(lvl.size), len(zeros) == lvl.size)
        hull = lvl.zero_interval
        inside = all(hull.fa < float(z) < hull.fb for z in zeros)
        report.add("zeros", n, k, "interior", str(inside), "True", inside)
        counts = _gap_counts(lvl.next_sigma, zeros)
        report.add("zeros", n, k, "per_gap", str(max(counts, default=0)), "1",
                   all(c <= 1 for c in counts))
        if k >= 1:
            ok = h_constant_sign(chain, k)
            report.add("zeros", n, k, "H_constant_sign", str(ok), "True", ok)


def _identity_suite(report: VerifyReport, system, seed: int, tol) -> None:
    gens = system.generators
    if len(gens) < 2:
        return
    s2, s3 = gens[-2], gens[-1]
    points = _random_points([s2.hull, s3.hull], 50, seed)
    checks = [
        ("product_splitting", lambda: product_splitting_residual(s2, s3, points)),
        ("inverse_ratio", lambda: inverse_ratio_residual(s2, s3, points)),
        ("inverse_roundtrip", lambda: inverse_roundtrip_residual(product_measure(s2, s3),
                                                                 points)),
    ]
    for label, fn in checks:
        try:
            val = fn()
            report.add("identities", f"({s2.name},{s3.name})", "-", label,
                       f"{float(val):.3e}", f"{float(tol):.0e}", bool(val < tol))
        except NikishinError as exc:
            report.failures.append({"suite": "identities", "check": label, **_failure(exc)})


def _random_points(hulls, count: int, seed: int) -> list[complex]:
    """Seeded points in a box around the hulls, off the real axis by at least
    a tenth of the smallest hull length."""
    rnd = random.Random(seed)
    lo = min(h.fa for h in hulls) - 1.0
    hi = max(h.fb for h in hulls) + 1.0
    gap = 0.1 * min(h.length for h in hulls)
    out = []
    while len(out) < count:
        x = rnd.uniform(lo, hi)
        y = rnd.choice((-1, 1)) * rnd.uniform(gap, 3.0)
        out.append(complex(x, y))
    return out


RUNNERS = {
    "ratio": run_ratio_experiment,
    "weak_limit": run_weaklimit_experiment,
    "denisov": run_denisov_experiment,
}


def run_experiment(cfg: ExperimentConfig, precision_bits: int | None = None):
    """Dispatch on ``cfg.experiment``."""
    return RUNNERS[cfg.experiment](cfg, precision_bits=precision_bits)
