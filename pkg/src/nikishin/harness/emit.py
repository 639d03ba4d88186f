"""Persistence of reports: CSV tables, versioned JSON and SVG error plots.

Output is deterministic: numbers are written from their decimal string
form, rows follow report order and SVG files carry no timestamp and a
fixed hash salt.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable

SCHEMA_VERSION = 1

RATIO_COLUMNS = ("size", "point", "ratio_re", "ratio_im", "limit_re", "limit_im", "abs_error")
VERIFY_COLUMNS = ("suite", "n", "level", "check", "value", "tolerance", "passed")


def ratio_header(m: int) -> list[str]:
    """``size, n_1..n_m, point, ratio_re, ratio_im, limit_re, limit_im, abs_error``."""
    return ["size"] + [f"n_{j}" for j in range(1, m + 1)] + list(RATIO_COLUMNS[1:])


def ratio_rows(report) -> list[list[str]]:
    rows = []
    for step in report.steps:
        if not step.ok:
            continue
        for p in step.points:
            rows.append([str(step.size)] + [str(v) for v in step.n]
                        + [p.point, p.ratio[0], p.ratio[1], p.limit[0], p.limit[1], p.error])
    return rows


def _open(path: Path, mode: str = "w"):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open(mode, newline="" if "b" not in mode else None)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_csv(path: Path, header: Iterable[str], rows: Iterable[Iterable[str]]) -> Path:
    path = Path(path)
    with _open(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow(list(row))
    return path


def write_json(path: Path, kind: str, payload: dict, config: dict | None = None) -> Path:
    path = Path(path)
    doc = {"schema_version": SCHEMA_VERSION, "kind": kind}
    if config is not None:
        doc["config"] = config
    doc.update(payload)
    with _open(path) as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path


def write_svg(path: Path, report) -> Path:
    """Line plot of ``log10`` absolute error against ``|n|``.

    One line per evaluation point and increment component.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    plt.rcParams["svg.hashsalt"] = "nikishin"
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    comps = sorted({s.l for s in report.steps if s.ok}, key=lambda v: (v is None, v))
    for p, label in enumerate(report.points):
        for l in comps:
            data = [(size, e) for size, e in report.errors(p, l) if e > 0 and math.isfinite(e)]
            if not data:
                continue
            xs, ys = zip(*data)
            name = label if l is None else f"{label}, l={l}"
            ax.plot(xs, [math.log10(y) for y in ys], marker="o", markersize=3, label=name)
    ax.set_xlabel("|n|")
    ax.set_ylabel("log10 abs error")
    ax.set_title(report.name)
    ax.grid(True, alpha=0.3)
    if ax.lines:
        ax.legend(fontsize=7)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def emit(report, out_dir: Path, formats: Iterable[str] = ("csv", "json"),
         config: dict | None = None) -> dict:
    """Write ``report`` into ``out_dir`` and return ``{format: path}``.

    Ratio-type reports (ratio, weak-limit, Denisov) share the CSV layout
    of :func:`ratio_header`; verification reports use
    :data:`VERIFY_COLUMNS`.
    """
    out_dir = Path(out_dir)
    formats = set(formats)
    stem = report.name
    written = {}
    if hasattr(report, "rows"):
        if "csv" in formats:
            rows = [[r.suite, r.n, str(r.level), r.check, r.value, r.tolerance,
                     "PASS" if r.passed else "FAIL"] for r in report.rows]
            written["csv"] = write_csv(out_dir / f"{stem}_verify.csv", VERIFY_COLUMNS, rows)
        if "json" in formats:
            written["json"] = write_json(out_dir / f"{stem}_verify.json", "verify",
                                         report.to_json(), config)
        return written
    if "csv" in formats:
        written["csv"] = write_csv(out_dir / f"{stem}.csv", ratio_header(report.m),
                                   ratio_rows(report))
    if "json" in formats:
        written["json"] = write_json(out_dir / f"{stem}.json", report.experiment,
                                     report.to_json(), config)
    if "svg" in formats:
        written["svg"] = write_svg(out_dir / f"{stem}.svg", report)
    return written
