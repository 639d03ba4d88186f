"""End-to-end acceptance checks.

Each test prints one ``PASS``/``FAIL`` line (repeated in the terminal
summary).  Runs go through the shipped configs in ``configs/`` and the
same code paths as the ``nikishin`` command.  The two literal readings
that cannot hold (see README, "Known discrepancies") are strict xfails:
they print ``FAIL`` and would turn the suite red if they ever passed.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from nikishin.harness.cli import main
from nikishin.harness.config import load_config
from nikishin.harness.experiments import run_experiment
from nikishin.limits import SurfaceSpec, branches, g0, solve_bvp

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

RESULTS: list[str] = []


def record(label: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
    print(line)
    RESULTS.append(line)
    return ok


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def _step(report, n):
    return next(s for s in report.steps if s.n == list(n))


def _errors(step):
    return {p.point: float(p.error) for p in step.points}


def _run(name):
    return _timed(run_experiment, load_config(CONFIGS / name))


def _verify(name, out_dir):
    t0 = time.perf_counter()
    code = main(["verify", str(CONFIGS / name), "--out-dir", str(out_dir)])
    elapsed = time.perf_counter() - t0
    stem = load_config(CONFIGS / name).name
    doc = json.loads((out_dir / f"{stem}_verify.json").read_text())
    return code, elapsed, doc, out_dir / f"{stem}_verify.csv"


@pytest.fixture(scope="module")
def chebyshev():
    return _run("chebyshev_m1.json")


@pytest.fixture(scope="module")
def staircase():
    return _run("staircase_m2.json")[0]


@pytest.fixture(scope="module")
def verify_m2(tmp_path_factory):
    return _verify("verify_m2.json", tmp_path_factory.mktemp("verify_m2_a"))


@pytest.fixture(scope="module")
def verify_m3(tmp_path_factory):
    return _verify("verify_m3.json", tmp_path_factory.mktemp("verify_m3"))


def test_criterion_1_rakhmanov(chebyshev):
    report, elapsed = chebyshev
    step = _step(report, (40,))
    errs = _errors(step)
    ok = max(errs.values()) < 1e-6 and elapsed < 60 and not report.failures
    record(1, ok, f"n=40 errors {', '.join(f'{k}: {v:.2e}' for k, v in errs.items())} "
                  f"(tol 1e-6), run {elapsed:.1f}s (limit 60s)")
    assert ok


def test_criterion_2_denisov():
    denisov, _ = _run("denisov_m1.json")
    ratio, _ = _run("denisov_ratio_m1.json")
    last = denisov.steps[-1]
    dist = float(last.points[0].error)
    err = _errors(_step(ratio, (40,)))["-3+0i"]
    ok = (last.n == [30] and last.points[0].limit[0].startswith("1.5") and dist < 1e-3
          and err < 1e-6 and not denisov.failures and not ratio.failures)
    record(2, ok, f"min distance from 1.5 to zeros of Q_30 {dist:.2e} (tol 1e-3); "
                  f"ratio error at -3 for n=40 {err:.2e} (tol 1e-6)")
    assert ok


def _structural(doc):
    rows = [r for r in doc["rows"] if r["suite"] in ("zeros", "interlacing")]
    bad = [r for r in rows if not r["passed"]]
    return rows, bad


@pytest.mark.slow
def test_criterion_3_structural(verify_m2, verify_m3):
    parts, ok = [], True
    for m, (code, elapsed, doc, _) in ((2, verify_m2), (3, verify_m3)):
        rows, bad = _structural(doc)
        counts = sum(1 for r in rows if r["check"] == "count")
        pairs = len({r["n"] for r in rows if r["suite"] == "interlacing"})
        ok &= not bad and not doc["failures"] and elapsed < 1800 and counts > 0 and pairs > 0
        parts.append(f"m={m}: {counts} zero counts, {pairs} interlacing pairs, "
                     f"{len(bad)} violations, {len(doc['failures'])} solver failures, "
                     f"{elapsed / 60:.1f} min")
    record(3, ok, "; ".join(parts) + " (|n| <= 12, limit 30 min each)")
    assert ok


@pytest.mark.slow
def test_criterion_4_orthogonality(verify_m2, verify_m3):
    orth = [r for _, _, doc, _ in (verify_m2, verify_m3) for r in doc["rows"]
            if r["suite"] == "orthogonality"]
    special = [r for r in verify_m3[2]["rows"] if r["suite"] == "special"]
    worst = max(float(r["value"]) for r in orth)
    worst_special = max(float(r["value"]) for r in special)
    names = sorted({r["n"] for r in special})
    ok = worst < 1e-15 and worst_special < 1e-12 and names == ["(1,2,3)", "(2,3,4)"]
    record(4, ok, f"worst relative residual {worst:.2e} over {len(orth)} relations (tol 1e-15); "
                  f"special branch {names} worst {worst_special:.2e} (tol 1e-12)")
    assert ok


@pytest.mark.slow
def test_criterion_5_identities(verify_m3):
    rows = {r["check"]: float(r["value"]) for r in verify_m3[2]["rows"]
            if r["suite"] == "identities"}
    bits = verify_m3[2]["precision_bits"]
    working = 2.0 ** (16 - bits)
    ok = (rows["product_splitting"] < 1e-20 and rows["inverse_ratio"] < 1e-20
          and rows["inverse_roundtrip"] < working)
    record(5, ok, f"50 points: product splitting {rows['product_splitting']:.2e}, "
                  f"inverse ratio {rows['inverse_ratio']:.2e} (tol 1e-20); round trip "
                  f"{rows['inverse_roundtrip']:.2e} (tol 2^(16-{bits}) = {working:.1e})")
    assert ok


def test_criterion_6_boundary_value_solver():
    rng = np.random.default_rng(6)
    z = rng.uniform(-4, 4, 50) + 1j * rng.choice([-1, 1], 50) * rng.uniform(0.05, 3, 50)
    one = solve_bvp(SurfaceSpec([(-1, 1)]), 1, (1,))
    jouk = np.max(np.abs(g0(one, z) - (z + np.sqrt(z - 1) * np.sqrt(z + 1)) / 2))
    spec = SurfaceSpec([("-1", "1"), ("2", "3")])
    res, agree, prod = 0.0, 0.0, 0.0
    for l in (1, 2):
        a = solve_bvp(spec, l, (1, 2), grid=512)
        b = solve_bvp(spec, l, (1, 2), grid=512, init="perturbed")
        res = max(res, *a.boundary_residuals(), *b.boundary_residuals())
        agree = max(agree, float(np.max(np.abs(g0(a, z) - g0(b, z)))))
        prod = max(prod, float(np.max(np.abs(np.prod(branches(a, z), axis=0) - 1))))
    ok = jouk < 1e-12 and res < 1e-10 and agree < 1e-8 and prod < 1e-10
    record(6, ok, f"Joukowski {jouk:.1e} (tol 1e-12); boundary residual {res:.1e} (tol 1e-10); "
                  f"initialisations agree {agree:.1e} (tol 1e-8); |prod psi - 1| {prod:.1e} "
                  "(tol 1e-10)")
    assert ok


def _component_tails(report):
    out = {}
    for p, label in enumerate(report.points):
        for l in (1, 2):
            out[(label, l)] = [e for _, e in report.errors(p, l)[-5:]]
    return out


@pytest.mark.slow
def test_criterion_7_ratio_limits(staircase):
    tails = _component_tails(staircase)
    last_size = staircase.steps[-1].size
    ok = last_size == 24 and not staircase.failures
    parts = []
    for (label, l), tail in tails.items():
        mono = len(tail) == 5 and all(b < a for a, b in zip(tail, tail[1:]))
        ok &= mono and tail[-1] < 1e-2
        parts.append(f"z={label} l={l}: {'decreasing' if mono else 'NOT decreasing'}, "
                     f"final {tail[-1]:.2e}")
    record(7, ok, f"|n| up to {last_size}, last 5 steps per component; " + "; ".join(parts)
           + " (final tol 1e-2)")
    assert ok


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="the two components converge to different limits; "
                                       "their interleaved errors are not monotone")
def test_criterion_7_interleaved_reading(staircase):
    ok = True
    parts = []
    for p, label in enumerate(staircase.points):
        tail = [e for _, e in staircase.errors(p)[-5:]]
        mono = all(b < a for a, b in zip(tail, tail[1:]))
        ok &= mono
        parts.append(f"z={label}: " + ", ".join(f"{e:.2e}" for e in tail))
    record("7 (interleaved l=1,2 reading)", ok, "; ".join(parts))
    assert ok


def test_criterion_8_weak_limits():
    report, _ = _run("weaklimit_m2.json")
    step = next(s for s in report.steps if s.size == 24)
    parts, ok = [], step.ok
    for p, rel in zip(step.points, step.extra["relative_error"]):
        rel = float(rel)
        if p.point == "x":
            # the arcsine integral of x vanishes: measure against int |x| = 2/pi instead
            rel = float(p.error) / (2 / math.pi)
        ok &= rel < 0.02
        parts.append(f"{p.point}: {rel:.2e}")
    record(8, ok, f"|n|=24, level 1: relative deviations {', '.join(parts)} (tol 2e-2)")
    assert ok


@pytest.mark.slow
def test_criterion_9_full_increment_and_constants(chebyshev, staircase):
    full, _ = _run("full_increment_m2.json")
    tele = max(float(s.telescoping) for s in full.steps if s.ok)
    bits = full.precision_bits
    tele_tol = 2.0 ** (24 - bits)
    trend_ok = True
    for p in range(len(full.points)):
        tail = [e for _, e in full.errors(p)[-5:]]
        trend_ok &= all(b < a for a, b in zip(tail, tail[1:])) and tail[-1] < 1e-2
    # kappa and K ratios recorded along the m = 2 staircase, per component
    later = [s for s in staircase.steps if s.ok and s.kappa]
    first, last = later[0], later[-1]

    def gap(step, key):
        return max(abs(float(e["ratio"]) - float(e["limit"])) for e in getattr(step, key))

    kappa_ok = all(gap(last, key) < gap(first, key) and gap(last, key) < 1e-6
                   for key in ("kappa", "K"))
    report, _ = chebyshev
    ratio = float(_step(report, (40,)).kappa[0]["ratio"])
    kappa_ok &= abs(ratio - 2.0) < 1e-6  # 4/(b - a) on [-1, 1]
    ok = tele < tele_tol and trend_ok and kappa_ok and not full.failures
    record(9, ok, f"telescoping {tele:.1e} (tol 2^(24-{bits})); full-increment ratio vs prod "
                  f"G0 decreasing, final {full.errors(0)[-1][1]:.1e}; kappa/K ratio gaps "
                  f"{gap(first, 'kappa'):.1e} -> {gap(last, 'kappa'):.1e}, "
                  f"{gap(first, 'K'):.1e} -> {gap(last, 'K'):.1e} (20-digit records); m=1 kappa ratio {ratio:.12f} "
                  "vs 4/(b-a) = 2")
    assert ok


@pytest.mark.xfail(strict=True, reason="kappa_1 = phi'(inf) = 4/(b-a), not 2/(b-a)")
def test_criterion_9_kappa_literal(chebyshev):
    report, _ = chebyshev
    step = _step(report, (40,))
    measured = float(step.kappa[0]["ratio"])
    limit = float(step.kappa[0]["limit"])
    target = 2 / (1 - (-1))
    ok = abs(measured - target) < 1e-6 and abs(limit - target) < 1e-6
    record("9 (kappa_1 = 2/(b-a), m=1 Chebyshev)", ok,
           f"measured kappa ratio {measured:.12f}, solver kappa_1 {limit:.12f}, "
           f"2/(b-a) = {target}")
    assert ok


@pytest.mark.slow
def test_criterion_10_determinism(verify_m2, tmp_path):
    _, _, _, first_csv = verify_m2
    code, _, _, second_csv = _verify("verify_m2.json", tmp_path)
    same = first_csv.read_bytes() == second_csv.read_bytes()
    ok = same and code == 0 and verify_m2[0] == 0
    record(10, ok, f"two `nikishin verify` runs of verify_m2.json: CSV bytes "
                   f"{'identical' if same else 'DIFFER'} ({len(first_csv.read_bytes())} bytes)")
    assert ok
