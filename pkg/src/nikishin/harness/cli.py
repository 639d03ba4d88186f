"""Command line interface.

``nikishin run <config> [--precision-bits N] [--out-dir D] [--plot]``
    Run the configured experiment and write CSV/JSON (and SVG with --plot).
``nikishin limits <config> --component l [--tau ...]``
    Solve the boundary-value system only and print its JSON.
``nikishin verify <config>``
    Run the structural property suites; exit status 1 on any violation.

Exit status 2 signals an invalid config.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, NikishinError
from ..limits import SurfaceSpec, solve_bvp
from .config import load_config
from .emit import emit
from .experiments import run_experiment, run_verify

log = logging.getLogger("nikishin")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nikishin", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("config")
    run.add_argument("--precision-bits", type=int, default=None)
    run.add_argument("--out-dir", default=None)
    run.add_argument("--plot", action="store_true", help="also write an SVG error plot")

    lim = sub.add_parser("limits", help="solve the boundary-value system")
    lim.add_argument("config")
    lim.add_argument("--component", "-l", type=int, required=True)
    lim.add_argument("--tau", type=int, nargs="+", default=None,
                     help="permutation (default: identity)")
    lim.add_argument("--out-dir", default=None)

    ver = sub.add_parser("verify", help="run the structural property suites")
    ver.add_argument("config")
    ver.add_argument("--precision-bits", type=int, default=None)
    ver.add_argument("--out-dir", default=None)
    return p


def _formats(cfg, plot: bool) -> list[str]:
    out = [f for f in ("csv", "json", "svg") if cfg.outputs.get(f)]
    if plot and "svg" not in out:
        out.append("svg")
    return out


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out_dir or cfg.outputs.get("dir", "out"))
    report = run_experiment(cfg, precision_bits=args.precision_bits)
    written = emit(report, out_dir, _formats(cfg, args.plot), config=cfg.to_dict())
    for kind, path in written.items():
        print(f"{kind}: {path}")
    if report.failures:
        print(f"{len(report.failures)} step(s) failed; see the JSON report", file=sys.stderr)
    return 0


def cmd_limits(args) -> int:
    cfg = load_config(args.config)
    tau = tuple(args.tau) if args.tau else tuple(range(1, cfg.m + 1))
    spec = SurfaceSpec(cfg.intervals())
    bits = cfg.tolerance("limit_bits")
    sol = solve_bvp(spec, args.component, tau, bits=None if bits in (None, 53) else int(bits))
    doc = {"schema_version": 1, "kind": "limits", **sol.to_json(cfg.eval_points)}
    text = json.dumps(doc, indent=2)
    print(text)
    if args.out_dir:
        path = Path(args.out_dir) / f"{cfg.name}_limits_l{args.component}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
    return 0


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out_dir or cfg.outputs.get("dir", "out"))
    report = run_verify(cfg, precision_bits=args.precision_bits)
    emit(report, out_dir, ("csv", "json"), config=cfg.to_dict())
    bad = [r for r in report.rows if not r.passed]
    print(f"{len(report.rows)} checks, {len(bad)} violations, "
          f"{len(report.failures)} solver failures")
    for r in bad[:20]:
        print(f"FAIL {r.suite} {r.n} level {r.level} {r.check}: {r.value} (tol {r.tolerance})")
    return 0 if report.ok else 1


COMMANDS = {"run": cmd_run, "limits": cmd_limits, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NikishinError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
