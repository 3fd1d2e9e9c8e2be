import csv
import io
import json
import math

import pytest

from mlorder.cli import main, validate
from mlorder.monotonicity import threshold_increasing
from mlorder.special import MLQuery, ml

INTERVAL = {"kind": "interval", "params": {"L": 1.0, "n_modes": 10},
            "coefficients": [0.8, 0.1, 0.05]}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(lines))))


def summary(text):
    return dict(ln[2:].split("=", 1) for ln in text.splitlines() if ln.startswith("# "))


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


class TestML:
    def test_exponential_row(self, capsys):
        code, out, _ = run(capsys, "ml", "eval", "--rho", "1", "--mu", "1", "--z", "-1")
        assert code == 0
        head, row = rows(out)
        assert head == ["z", "value", "abs_error_bound", "method"]
        assert float(row[0]) == -1.0
        assert float(row[1]) == pytest.approx(math.exp(-1), rel=1e-15)

    def test_asymptotic_row(self, capsys):
        code, out, _ = run(capsys, "ml", "eval", "--rho", "0.5", "--mu", "0.5", "--z", "-100")
        row = rows(out)[1]
        assert code == 0
        assert float(row[1]) == pytest.approx(2.8205248812996592e-05, rel=1e-12)
        assert row[3] == "asymptotic-neg"

    def test_missing_rho(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["ml", "eval", "--z", "-1"])
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_bad_domain_exit_2(self, capsys):
        code, _, err = run(capsys, "ml", "eval", "--rho", "1.5", "--z", "-1")
        assert code == 2 and "error" in err

    def test_comma_lists_and_17_digits(self, capsys):
        _, out, _ = run(capsys, "ml", "eval", "--rho", "0.5", "--z", "0.5,1", "-2")
        body = rows(out)[1:]
        assert [float(r[0]) for r in body] == [0.5, 1.0, -2.0]
        # 17 significant digits round-trip exactly
        assert float(body[2][1]) == ml(MLQuery(0.5, 1.0, -2.0)).value

    def test_json_validates(self, capsys):
        _, out, _ = run(capsys, "ml", "dml", "--rho", "0.5", "--t", "0.02", "0.1",
                        "--kind", "rl", "--format", "json")
        doc = json.loads(out)
        validate(doc, "table.json")
        assert doc["rows"][1][4] == pytest.approx(1.152560978309398, rel=1e-7)


class TestMono:
    def test_caputo_all_positive(self, capsys):
        code, out, _ = run(capsys, "mono", "scan", "--rho0", "0.5", "--t", "0.02",
                           "--kind", "caputo")
        s = summary(out)
        assert code == 0
        assert s["all_positive"] == "true" and s["in_regime"] == "true"
        assert s["first_violation_rho"] == ""

    def test_rl_counterexample(self, capsys):
        # the claimed all_negative=true does not hold; small orders give positive values
        _, out, _ = run(capsys, "mono", "scan", "--rho0", "0.5", "--t", "0.1", "--kind", "rl")
        s = summary(out)
        assert s["in_regime"] == "true"
        assert s["all_negative"] == "false"
        assert float(s["first_violation_rho"]) == 0.5

    def test_out_of_regime(self, capsys):
        _, out, _ = run(capsys, "mono", "scan", "--rho0", "0.5", "--t", "0.5", "--format", "json")
        doc = json.loads(out)
        validate(doc, "table.json")
        assert doc["summary"]["in_regime"] is False
        assert len(doc["rows"]) == 64

    def test_verify_terms_needs_args(self, capsys):
        code, _, err = run(capsys, "mono", "verify-terms", "--rho", "0.5")
        assert code == 2 and "--random" in err

    def test_verify_terms_random_deterministic(self, capsys):
        argv = ["mono", "verify-terms", "--random", "5", "--seed", "3", "--n-max", "100"]
        _, a, _ = run(capsys, *argv)
        _, b, _ = run(capsys, *argv)
        assert a == b
        assert summary(a)["cases"] == "5"


class TestForward:
    def test_rows(self, capsys, tmp_path):
        p = write(tmp_path, "p.json", INTERVAL)
        code, out, _ = run(capsys, "forward", "solve", "--problem", p, "--rho", "0.7",
                           "--x", "0.3,0.6", "--t", "0.1")
        assert code == 0
        body = rows(out)
        assert body[0] == ["x", "t", "u"] and len(body) == 3

    def test_rho_required(self, capsys, tmp_path):
        p = write(tmp_path, "p.json", INTERVAL)
        code, _, _ = run(capsys, "forward", "solve", "--problem", p, "--x", "0.3", "--t", "0.1")
        assert code == 2

    def test_malformed_json(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        code, _, err = run(capsys, "forward", "solve", "--problem", str(p), "--rho", "0.5",
                           "--x", "0.3", "--t", "0.1")
        assert code == 2 and "error" in err

    def test_schema_violation(self, capsys, tmp_path):
        p = write(tmp_path, "p.json", {"kind": "sphere", "coefficients": [1.0]})
        code, _, err = run(capsys, "forward", "solve", "--problem", p, "--rho", "0.5",
                           "--x", "0.3", "--t", "0.1")
        assert code == 2 and "error" in err

    def test_output_file_is_deterministic(self, capsys, tmp_path):
        p = write(tmp_path, "p.json", INTERVAL)
        outs = []
        for name in ("a.json", "b.json"):
            o = tmp_path / name
            main(["forward", "solve", "--problem", p, "--rho", "0.4", "--x", "0.5",
                  "--t", "0.01", "1", "--format", "json", "--output", str(o)])
            outs.append(o.read_bytes())
        assert outs[0] == outs[1]
        validate(json.loads(outs[0]), "table.json")


def _forward_value(capsys, path, rho, x0, t0):
    _, out, _ = run(capsys, "forward", "solve", "--problem", path, "--rho", str(rho),
                    "--x", str(x0), "--t", str(t0))
    return float(rows(out)[1][2])


class TestInverse:
    def setup_problem(self, capsys, tmp_path, rho_star):
        dom = write(tmp_path, "dom.json", INTERVAL)
        x0, rho0 = 0.3, 0.3
        t0 = threshold_increasing(rho0) * 0.5
        d0 = _forward_value(capsys, dom, rho_star, x0, t0)
        return {"observation": {"x0": x0, "t0": t0, "d0": d0}, "domain_ref": "dom.json",
                "rho0": rho0}

    def test_point_round_trip(self, capsys, tmp_path):
        doc = self.setup_problem(capsys, tmp_path, 0.7)
        p = write(tmp_path, "inv.json", doc)
        code, out, _ = run(capsys, "inverse", "point", "--problem", p)
        res = json.loads(out)
        validate(res, "inverse_result.json")
        assert code == 0 and res["status"] == "Unique"
        assert abs(res["rho_hat"] - 0.7) <= 1e-6

    def test_no_solution(self, capsys, tmp_path):
        doc = self.setup_problem(capsys, tmp_path, 0.7)
        doc["observation"]["d0"] = -1.0
        p = write(tmp_path, "inv.json", doc)
        code, out, _ = run(capsys, "inverse", "point", "--problem", p)
        assert code == 3
        assert json.loads(out)["status"] == "NoSolutionBelowRange"

    def test_missing_observation_field(self, capsys, tmp_path):
        p = write(tmp_path, "inv.json", {"observation": {"x0": 0.3}, "domain": INTERVAL,
                                         "rho0": 0.3})
        code, _, err = run(capsys, "inverse", "point", "--problem", p)
        assert code == 2 and "t0" in err

    def test_pskhu_csv(self, capsys, tmp_path):
        from mlorder.inverse import pskhu_forward
        u0 = pskhu_forward(0.8, 1.0, 0.5, 0.2)
        p = write(tmp_path, "ps.json", {"observation": {"phi": 1.0, "lambda": 0.5, "x0": 0.2,
                                                        "u0": u0}})
        code, out, _ = run(capsys, "inverse", "pskhu", "--problem", p, "--format", "csv")
        body = rows(out)
        assert body[0] == ["rho_hat", "status", "iterations", "residual"]
        assert code in (0, 4)
        assert body[1][1] in ("Unique", "HypothesesUnverified")


def test_alimov_eigen(capsys):
    code, out, _ = run(capsys, "alimov", "eigen", "--h", "1", "--H", "1")
    row = rows(out)[1]
    assert code == 0
    assert float(row[3]) == pytest.approx(-1.4392288398898176, rel=1e-12)
    assert float(row[2]) ** 2 == pytest.approx(-float(row[3]), rel=1e-12)
