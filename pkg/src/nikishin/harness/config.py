"""Experiment configuration: a JSON document per experiment.

All reals are decimal strings (or short expressions such as ``"1/pi"``
and ``"-1/2"``) so that nothing is rounded to double precision at
ingest.  A minimal ratio experiment looks like::

    {
      "schema_version": 1,
      "name": "chebyshev",
      "experiment": "ratio",
      "precision_bits": 212,
      "system": {"generators": [
          {"interval": ["-1", "1"], "weight": "jacobi(-1/2, -1/2)"}]},
      "path": {"mode": "staircase", "length": 40},
      "eval_points": [["2", "0"], ["1", "1"], ["-3", "0"]]
    }

Weights follow the grammar
``jacobi(alpha, beta) * poly([c0, c1, ...]) * exp_poly([d0, d1, ...])``
(each factor optional, in any order) for the density
``(b-x)**alpha (x-a)**beta * poly(x) * exp(exp_poly(x))``; mass points
are ``[[location, weight], ...]``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Any

import gmpy2

from ..errors import ConfigError
from ..measures import Generator, Interval, NikishinSystem, WeightSpec, nikishin_components
from ..mop import MultiIndex, Path, as_index, increment, staircase_path
from ..precision import parse_real, working_precision

SCHEMA_VERSION = 1

EXPERIMENTS = ("ratio", "weak_limit", "denisov")
PATH_MODES = ("staircase", "full_increment", "explicit")
WEAK_FUNCTIONS = ("1", "x", "x^2", "T1", "T2", "T3", "cauchy")

DEFAULT_TOLERANCES = {
    "eval_margin": "0.05",
    "bvp": "1e-13",
    "limit_bits": 128,
    "product": "1e-10",
}


# ---------------------------------------------------------------------------
# Weight grammar
# ---------------------------------------------------------------------------

_FACTOR = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$", re.S)


def _split_top(text: str, sep: str) -> list[str]:
    """Split ``text`` at ``sep`` outside brackets and parentheses."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise ConfigError(f"unbalanced brackets in {text!r}")
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth:
        raise ConfigError(f"unbalanced brackets in {text!r}")
    parts.append("".join(cur))
    return parts


def _real_text(text: str) -> str:
    text = text.strip()
    if not text:
        raise ConfigError("empty number in weight expression")
    try:
        parse_real(text)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse {text!r} as a real number") from exc
    return text


def _coefficient_list(text: str) -> tuple[str, ...]:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ConfigError(f"expected a bracketed coefficient list, got {text!r}")
    inner = text[1:-1].strip()
    if not inner:
        return ()
    return tuple(_real_text(t) for t in _split_top(inner, ","))


def parse_weight(text: str) -> WeightSpec:
    """Parse a weight expression into a :class:`WeightSpec`.

    Examples
    --------
    >>> w = parse_weight("jacobi(-1/2, -1/2) * poly([1/pi])")
    >>> (w.alpha, w.beta, w.poly)
    ('-1/2', '-1/2', ('1/pi',))
    >>> parse_weight("exp_poly([0, 1])").exp_poly
    ('0', '1')
    """
    if not isinstance(text, str) or not text.strip():
        raise ConfigError("weight must be a non-empty string")
    alpha, beta, poly, exp_poly = "0", "0", ("1",), ()
    seen = set()
    for part in _split_top(text, "*"):
        match = _FACTOR.match(part)
        if not match:
            raise ConfigError(f"cannot parse weight factor {part.strip()!r}")
        name, args = match.group(1), match.group(2)
        if name in seen:
            raise ConfigError(f"weight factor {name!r} given twice")
        seen.add(name)
        if name == "jacobi":
            pieces = _split_top(args, ",")
            if len(pieces) != 2:
                raise ConfigError("jacobi(alpha, beta) takes two arguments")
            alpha, beta = (_real_text(p) for p in pieces)
        elif name == "poly":
            poly = _coefficient_list(args)
            if not poly:
                raise ConfigError("poly([...]) needs at least one coefficient")
        elif name == "exp_poly":
            exp_poly = _coefficient_list(args)
        else:
            raise ConfigError(f"unknown weight factor {name!r}")
    return WeightSpec(alpha, beta, poly, exp_poly)


# ---------------------------------------------------------------------------
# Config objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorConfig:
    interval: tuple[str, str]
    weight: WeightSpec
    masses: tuple[tuple[str, str], ...] = ()

    def build(self, name: str) -> Generator:
        return Generator(Interval(*self.interval), self.weight, self.masses, name=name)


@dataclass(frozen=True)
class PathConfig:
    mode: str = "staircase"
    length: int = 10
    seed: tuple[int, ...] | None = None
    l_sequence: tuple[int, ...] | None = None
    imbalance_bound: int | None = None
    indices: tuple[tuple[int, ...], ...] = ()
    theorem: bool = True


@dataclass
class ExperimentConfig:
    """Validated experiment description.

    Attributes
    ----------
    name : str
    experiment : str
        One of ``"ratio"``, ``"weak_limit"`` and ``"denisov"``.
    precision_bits : int
    generators : list of GeneratorConfig
    path : PathConfig
    eval_points : list of complex
        Kept as ``(re, im)`` decimal string pairs in ``eval_points_text``.
    tolerances : dict
    weak_limit : dict
        ``k`` (level), ``functions`` and ``cauchy_point`` for the
        weak-limit experiment.
    verify : dict
        ``max_size``, ``suites`` and ``special_indices`` for ``nikishin verify``.
    outputs : dict
        ``dir``, ``csv``, ``json`` and ``svg`` flags.
    """

    name: str
    experiment: str
    precision_bits: int
    generators: list
    path: PathConfig
    eval_points_text: list
    tolerances: dict = field(default_factory=dict)
    weak_limit: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    source: dict = field(default_factory=dict, repr=False)

    @property
    def m(self) -> int:
        return len(self.generators)

    @property
    def eval_points(self) -> list[complex]:
        return [complex(float(parse_real(re_)), float(parse_real(im))) for re_, im in
                self.eval_points_text]

    def eval_points_mp(self) -> list:
        """Evaluation points as mpc values at the current working precision."""
        return [gmpy2.mpc(parse_real(re_), parse_real(im)) for re_, im in self.eval_points_text]

    def point_labels(self) -> list[str]:
        """Evaluation points as ``re+imi`` strings built from the config text."""
        out = []
        for re_, im in self.eval_points_text:
            sign = "-" if im.startswith("-") else "+"
            out.append(f"{re_}{sign}{im.lstrip('+-')}i")
        return out

    def tolerance(self, key: str):
        return self.tolerances.get(key, DEFAULT_TOLERANCES.get(key))

    def intervals(self) -> list[Interval]:
        return [Interval(*g.interval) for g in self.generators]

    def build_system(self) -> NikishinSystem:
        """Generators and components at the configured precision."""
        with working_precision(self.precision_bits):
            gens = [g.build(f"sigma{j + 1}") for j, g in enumerate(self.generators)]
            return nikishin_components(gens)

    def build_path(self) -> Path:
        p = self.path
        if p.mode == "explicit":
            idx = [as_index(i) for i in p.indices]
            path = Path(idx[0], max_imbalance=idx[0].imbalance)
            for prev, cur in zip(idx, idx[1:]):
                diff = [b - a for a, b in zip(prev.entries, cur.entries)]
                if diff == [1] * len(diff):
                    step = None
                elif sorted(diff) == [0] * (len(diff) - 1) + [1]:
                    step = diff.index(1) + 1
                else:
                    raise ConfigError(f"explicit path step {prev} -> {cur} is not an increment")
                path.indices.append(cur)
                path.steps.append(step)
                path.max_imbalance = max(path.max_imbalance, cur.imbalance)
            if p.imbalance_bound is not None and path.max_imbalance > p.imbalance_bound:
                raise ConfigError(f"explicit path exceeds the imbalance bound {p.imbalance_bound}")
            return path
        return staircase_path(self.m, p.length, l_sequence=p.l_sequence,
                              full_increment=p.mode == "full_increment", seed=p.seed,
                              imbalance_bound=p.imbalance_bound)

    def to_dict(self) -> dict:
        return dict(self.source)


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def _point(value) -> tuple[str, str]:
    if isinstance(value, str):
        return (_real_text(value), "0")
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return (_real_text(str(value[0])), _real_text(str(value[1])))
    raise ConfigError(f"evaluation point {value!r} must be a string or a [re, im] pair")


def _generator(raw: dict, j: int) -> GeneratorConfig:
    _require(isinstance(raw, dict), f"generator {j} must be an object")
    unknown = set(raw) - {"interval", "weight", "masses"}
    _require(not unknown, f"generator {j}: unknown keys {sorted(unknown)}")
    iv = raw.get("interval")
    _require(isinstance(iv, (list, tuple)) and len(iv) == 2,
             f"generator {j}: interval must be [a, b]")
    a, b = (_real_text(str(v)) for v in iv)
    _require(float(parse_real(a)) < float(parse_real(b)), f"generator {j}: need a < b")
    weight = parse_weight(raw.get("weight", "jacobi(0, 0)"))
    masses = []
    for pair in raw.get("masses", []):
        _require(isinstance(pair, (list, tuple)) and len(pair) == 2,
                 f"generator {j}: masses are [[location, weight], ...]")
        masses.append((_real_text(str(pair[0])), _real_text(str(pair[1]))))
    return GeneratorConfig((a, b), weight, tuple(masses))


def _path(raw: dict, m: int) -> PathConfig:
    _require(isinstance(raw, dict), "path must be an object")
    mode = raw.get("mode", "staircase")
    _require(mode in PATH_MODES, f"path mode must be one of {PATH_MODES}")
    seed = raw.get("seed")
    if seed is not None:
        _require(len(seed) == m, "path seed has the wrong length")
        seed = tuple(int(v) for v in seed)
    lseq = raw.get("l_sequence")
    if lseq is not None:
        lseq = tuple(int(v) for v in lseq)
        _require(all(1 <= v <= m for v in lseq), "l_sequence entries must lie in 1..m")
    indices = tuple(tuple(int(v) for v in i) for i in raw.get("indices", ()))
    if mode == "explicit":
        _require(len(indices) >= 2, "explicit paths need at least two indices")
        _require(all(len(i) == m for i in indices), "explicit path index of wrong length")
    length = int(raw.get("length", 10))
    _require(length >= 1, "path length must be positive")
    bound = raw.get("imbalance_bound")
    return PathConfig(mode, length, seed, lseq, None if bound is None else int(bound), indices,
                      bool(raw.get("theorem", True)))


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a decoded JSON document.

    Raises
    ------
    ConfigError
        On any schema violation, malformed number or weight expression,
        invalid interval layout or evaluation point too close to a hull.
    """
    _require(isinstance(raw, dict), "config must be a JSON object")
    version = raw.get("schema_version", SCHEMA_VERSION)
    _require(version == SCHEMA_VERSION, f"unsupported schema_version {version}")
    experiment = raw.get("experiment", "ratio")
    _require(experiment in EXPERIMENTS, f"experiment must be one of {EXPERIMENTS}")
    bits = int(raw.get("precision_bits", 212))
    _require(bits >= 64, "precision_bits must be at least 64")
    system = raw.get("system")
    _require(isinstance(system, dict) and system.get("generators"),
             "system.generators must be a non-empty list")
    gens = [_generator(g, j + 1) for j, g in enumerate(system["generators"])]
    m = len(gens)
    path = _path(raw.get("path", {}), m)
    points = [_point(p) for p in raw.get("eval_points", [])]
    tolerances = dict(raw.get("tolerances", {}))
    unknown = set(tolerances) - set(DEFAULT_TOLERANCES)
    _require(not unknown, f"unknown tolerances {sorted(unknown)}")
    weak = dict(raw.get("weak_limit", {}))
    for f in weak.get("functions", []):
        _require(f in WEAK_FUNCTIONS, f"weak-limit function must be one of {WEAK_FUNCTIONS}")
    if "cauchy_point" in weak:
        weak["cauchy_point"] = _point(weak["cauchy_point"])
    verify = dict(raw.get("verify", {}))
    outputs = {"dir": "out", "csv": True, "json": True, "svg": False}
    outputs.update(raw.get("outputs", {}))

    cfg = ExperimentConfig(str(raw.get("name", "experiment")), experiment, bits, gens, path,
                           points, tolerances, weak, verify, outputs, raw)
    _validate_geometry(cfg)
    return cfg


def _validate_geometry(cfg: ExperimentConfig) -> None:
    with working_precision(cfg.precision_bits):
        ivs = cfg.intervals()
        for j, g in enumerate(cfg.generators):
            # positivity of the analytic factor and mass placement
            g.build(f"sigma{j + 1}")
        hulls = [Interval(iv.a, iv.b).hull_with([float(parse_real(loc)) for loc, _ in g.masses])
                 for iv, g in zip(ivs, cfg.generators)]
    for j in range(len(hulls) - 1):
        _require(hulls[j].distance(hulls[j + 1]) > 0,
                 f"hulls of generators {j + 1} and {j + 2} overlap")
    margin = float(parse_real(str(cfg.tolerance("eval_margin"))))
    for z in cfg.eval_points:
        d = _distance(hulls[0], z)
        _require(d >= margin, f"evaluation point {z} is within {margin} of the first hull")
    bound = cfg.path.imbalance_bound
    if cfg.path.mode != "explicit" and bound is not None:
        _require(bound >= 0, "imbalance bound must be non-negative")


def _distance(hull: Interval, z: complex) -> float:
    x = min(max(z.real, hull.fa), hull.fb)
    return abs(complex(x, 0) - z)


def load_config(path: str | FsPath) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    path = FsPath(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(raw)


def path_pairs(path: Path) -> list[tuple[MultiIndex, MultiIndex, int]]:
    """Consecutive ``(n, n_l, l)`` pairs of a path, excluding the zero seed."""
    return [(n, nl, l) for n, nl, l in path.pairs() if n.size > 0]


def check_theorem_path(path: Path) -> None:
    """Assert that every increment keeps ``tau``.

    Raises
    ------
    ConfigError
        Naming the first offending pair.
    """
    for n, nl, l in path_pairs(path):
        if l is None:
            continue
        _, same = increment(n, l)
        if not same:
            raise ConfigError(f"path step {n} -> {nl} changes tau ({n.tau} -> {nl.tau})")
