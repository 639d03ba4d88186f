import csv
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nikishin.errors import ConfigError
from nikishin.harness.cli import main
from nikishin.harness.config import check_theorem_path, parse_config, parse_weight
from nikishin.harness.emit import emit, ratio_header
from nikishin.harness.experiments import (
    ConvergenceReport,
    effective_indices,
    run_experiment,
    run_verify,
)
from nikishin.mop import staircase_path


def _raw(**over):
    raw = {
        "schema_version": 1,
        "name": "tiny",
        "experiment": "ratio",
        "precision_bits": 128,
        "system": {"generators": [{"interval": ["-1", "1"], "weight": "jacobi(-1/2, -1/2)"}]},
        "path": {"mode": "staircase", "length": 3},
        "eval_points": [["2", "0"], ["1", "1"]],
        "tolerances": {"limit_bits": 53},
    }
    raw.update(over)
    return raw


def _write(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return p


class TestWeightGrammar:
    def test_all_factors(self):
        w = parse_weight("exp_poly([0, 1/2]) * jacobi(1/2, -1/3) * poly([2, 1])")
        assert (w.alpha, w.beta, w.poly, w.exp_poly) == ("1/2", "-1/3", ("2", "1"), ("0", "1/2"))

    def test_defaults(self):
        w = parse_weight("poly([1/pi])")
        assert (w.alpha, w.beta, w.exp_poly) == ("0", "0", ())

    @pytest.mark.parametrize("text", ["", "jacobi(1)", "gauss(1, 2)", "poly(1, 2)",
                                      "poly([1]) * poly([2])", "jacobi(a, 0)", "poly([1]",
                                      "poly([])"])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_weight(text)

    @given(st.fractions(min_value="-49/50", max_value=5, max_denominator=50),
           st.fractions(min_value="-49/50", max_value=5, max_denominator=50),
           st.lists(st.integers(-9, 9), max_size=4))
    def test_roundtrip_of_generated_expressions(self, alpha, beta, coefs):
        exp_part = "[" + ", ".join(str(c) for c in coefs) + "]"
        w = parse_weight(f"jacobi({alpha}, {beta}) * exp_poly({exp_part})")
        assert (w.alpha, w.beta) == (str(alpha), str(beta))
        assert w.exp_poly == tuple(str(c) for c in coefs)


class TestConfig:
    def test_valid(self):
        cfg = parse_config(_raw())
        assert cfg.m == 1 and cfg.eval_points == [2 + 0j, 1 + 1j]
        assert cfg.point_labels() == ["2+0i", "1+1i"]
        assert [n.entries for n in cfg.build_path().indices] == [(1,), (2,), (3,)]

    @pytest.mark.parametrize("over,match", [
        ({"schema_version": 2}, "schema_version"),
        ({"experiment": "nope"}, "experiment"),
        ({"precision_bits": 32}, "precision_bits"),
        ({"system": {"generators": []}}, "generators"),
        ({"eval_points": [["0.5", "0.01"]]}, "within"),
        ({"path": {"mode": "spiral"}}, "mode"),
        ({"tolerances": {"bogus": 1}}, "tolerances"),
        ({"system": {"generators": [{"interval": ["-1", "1"]},
                                    {"interval": ["0", "2"]}]}}, "overlap"),
        ({"system": {"generators": [{"interval": ["1", "-1"]}]}}, "a < b"),
    ])
    def test_invalid(self, over, match):
        with pytest.raises(ConfigError, match=match):
            parse_config(_raw(**over))

    def test_explicit_path(self):
        cfg = parse_config(_raw(
            system={"generators": [{"interval": ["-1", "1"]}, {"interval": ["2", "3"]}]},
            path={"mode": "explicit", "indices": [[1, 0], [1, 1], [2, 2], [3, 2]]}))
        path = cfg.build_path()
        assert path.steps == [2, None, 1]

    def test_explicit_path_rejects_jumps(self):
        cfg = parse_config(_raw(path={"mode": "explicit", "indices": [[1], [3]]}))
        with pytest.raises(ConfigError, match="increment"):
            cfg.build_path()

    def test_theorem_mode_rejects_tau_change(self):
        path = staircase_path(2, 2, l_sequence=[2], seed=(1, 1))
        with pytest.raises(ConfigError, match="changes tau"):
            check_theorem_path(path)

    def test_theorem_violation_before_solves(self, tmp_path):
        raw = _raw(system={"generators": [{"interval": ["-1", "1"]}, {"interval": ["2", "3"]}]},
                   path={"mode": "staircase", "length": 2, "l_sequence": [2], "seed": [1, 1]})
        assert main(["run", str(_write(tmp_path, raw)), "--out-dir", str(tmp_path)]) == 2
        assert not list(tmp_path.glob("*.csv"))


class TestEmit:
    def test_empty_report_is_header_only(self, tmp_path):
        rep = ConvergenceReport("empty", "ratio", 128, 2, [])
        out = emit(rep, tmp_path, ("csv",))
        assert out["csv"].read_text() == ",".join(ratio_header(2)) + "\n"

    def test_rows_and_formats(self, tmp_path):
        cfg = parse_config(_raw())
        rep = run_experiment(cfg)
        out = emit(rep, tmp_path, ("csv", "json"), config=cfg.to_dict())
        rows = list(csv.reader(out["csv"].open()))
        assert rows[0] == ratio_header(1)
        # seed (0,) is skipped: steps (1)->(2) and (2)->(3) at two points
        assert len(rows) == 1 + 2 * 2
        assert "svg" not in out and not list(tmp_path.glob("*.svg"))
        doc = json.loads(out["json"].read_text())
        assert doc["schema_version"] == 1 and doc["kind"] == "ratio"
        assert doc["config"]["name"] == "tiny"

    def test_svg(self, tmp_path):
        cfg = parse_config(_raw())
        out = emit(run_experiment(cfg), tmp_path, ("svg",))
        text = out["svg"].read_text()
        assert text.startswith("<?xml") and "<svg" in text


class TestCli:
    def test_run_and_determinism(self, tmp_path, capsys):
        cfg = _write(tmp_path, _raw(outputs={"svg": False}))
        assert main(["run", str(cfg), "--out-dir", str(tmp_path / "a"), "--plot"]) == 0
        assert main(["run", str(cfg), "--out-dir", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "tiny.svg").exists()
        assert not (tmp_path / "b" / "tiny.svg").exists()
        for name in ("tiny.csv", "tiny.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_limits_command(self, tmp_path, capsys):
        raw = _raw(system={"generators": [{"interval": ["-1", "1"]}, {"interval": ["2", "3"]}]})
        cfg = _write(tmp_path, raw)
        assert main(["limits", str(cfg), "--component", "2", "--tau", "1", "2"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["kind"] == "limits" and doc["l"] == 2

    def test_missing_file(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.json")]) == 2

    def test_bad_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert main(["verify", str(p)]) == 2

    def test_verify_small(self, tmp_path, capsys):
        raw = _raw(system={"generators": [{"interval": ["-1", "1"]}, {"interval": ["2", "3"]}]},
                   verify={"max_size": 3, "suites": ["zeros", "interlacing", "orthogonality"]})
        assert main(["verify", str(_write(tmp_path, raw)), "--out-dir", str(tmp_path)]) == 0
        assert "0 violations" in capsys.readouterr().out
        assert (tmp_path / "tiny_verify.csv").exists()


def test_effective_indices_cover_all_small_indices():
    idx = effective_indices(2, 3)
    assert len(idx) == 9 and all(0 < n.size <= 3 for n in idx)


def test_verify_report_rows():
    cfg = parse_config(_raw(verify={"max_size": 2, "suites": ["zeros"]}))
    rep = run_verify(cfg)
    assert rep.ok and rep.rows
    assert {r.suite for r in rep.rows} == {"zeros"}
