import csv
import io
import json
from fractions import Fraction as F

import pytest

from fmdist.cli import main
from fmdist.distances import d_alpha_matching, tv_matching


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def usage_error(capsys, *argv):
    with pytest.raises(SystemExit) as info:
        main(list(argv))
    capsys.readouterr()
    return info.value.code


def test_pmf_generalized(capsys):
    code, out, _ = run(capsys, "pmf", "--dist", "generalized", "--n", "2", "--lambda", "0.5")
    assert code == 0
    assert [(r["j"], r["exact"], r["decimal"]) for r in rows(out)] == [
        ("0", "5/8", "0.625"),
        ("1", "1/4", "0.25"),
        ("2", "1/8", "0.125"),
    ]


def test_pmf_classical(capsys):
    _, out, _ = run(capsys, "pmf", "--dist", "classical", "--n", "1")
    assert [(r["j"], r["exact"]) for r in rows(out)] == [("0", "0"), ("1", "1")]


@pytest.mark.parametrize("method", ["closed", "inclusion-exclusion", "thinning", "enumerate"])
def test_pmf_methods_agree(capsys, method):
    _, out, _ = run(capsys, "pmf", "--dist", "generalized", "--n", "5", "--lambda", "2/3", "--method", method)
    _, ref, _ = run(capsys, "pmf", "--dist", "generalized", "--n", "5", "--lambda", "2/3")
    assert out == ref


def test_pmf_poisson_prefix(capsys):
    _, out, _ = run(capsys, "pmf", "--dist", "poisson-prefix", "--n", "1", "--lambda", "1/2")
    assert rows(out)[0]["decimal"] == "0.606530659712633"


@pytest.mark.parametrize("lam", ["1.5", "0", "1e-1", "abc"])
def test_pmf_rejects_bad_lambda(capsys, lam):
    assert usage_error(capsys, "pmf", "--dist", "generalized", "--n", "2", "--lambda", lam) == 2


def test_lambda_error_message(capsys):
    with pytest.raises(SystemExit):
        main(["pmf", "--dist", "generalized", "--n", "2", "--lambda", "1.5"])
    assert "(0, 1]" in capsys.readouterr().err


def test_moments(capsys):
    _, out, _ = run(capsys, "moments", "--dist", "generalized", "--n", "3", "--lambda", "1/2")
    assert [r["exact"] for r in rows(out)] == ["1", "1/2", "1/4", "1/8", "0", "0"]


def test_dist_tv(capsys):
    code, out, _ = run(capsys, "dist", "--metric", "tv", "--n", "3", "--lambda", "1")
    (row,) = rows(out)
    assert code == 0
    assert row["exact"] == "0.237473985299984"
    assert row["lower"] == "0.208333333333333"
    assert row["upper"] == "0.244444444444444"


@pytest.mark.parametrize("n, expected", [(3, "0.527861382798658"), (1, "2.19452804946533")])
def test_dist_fm(capsys, n, expected):
    _, out, _ = run(capsys, "dist", "--metric", "fm", "--n", str(n), "--lambda", "1", "--alpha", "2")
    assert rows(out)[0]["exact"] == expected


def test_dist_fm_needs_alpha(capsys):
    assert usage_error(capsys, "dist", "--metric", "fm", "--n", "3") == 2


def test_printed_cells_are_certified(capsys):
    digits = 20
    _, out, _ = run(capsys, "--digits", str(digits), "dist", "--metric", "fm", "--n", "12", "--lambda", "1/2", "--alpha", "3")
    row = rows(out)[0]
    report = d_alpha_matching(12, 3, F(1, 2), digits=max(50, digits + 5))
    assert report.exact.is_certified_rounding(digits)
    assert report.exact.error < F(1, 10**digits) / 2 * abs(report.exact.exact_value)
    assert row["exact"] == report.exact.format(digits)
    tv = tv_matching(12, F(1, 2), digits=55)
    _, out, _ = run(capsys, "--digits", str(digits), "dist", "--metric", "tv", "--n", "12", "--lambda", "1/2")
    assert rows(out)[0]["exact"] == tv.exact.format(digits)


def test_bounds_tv_grid(capsys):
    code, out, _ = run(capsys, "bounds", "--metric", "tv", "--lambda", "1", "--n-range", "1:30")
    table = rows(out)
    assert code == 0
    assert len(table) == 30
    assert {r["sandwich"] for r in table} == {"pass"}


def test_bounds_fm_grid(capsys):
    code, out, _ = run(capsys, "bounds", "--metric", "fm", "--alpha", "2", "--lambda", "0.5", "--n-range", "1:20")
    assert code == 0
    assert {r["sandwich"] for r in rows(out)} == {"pass"}


def test_bounds_reference(capsys):
    code, out, _ = run(capsys, "bounds", "--reference", "--n-range", "1:10")
    table = rows(out)
    assert code == 0
    assert list(table[0]) == ["n", "diaconis", "dasgupta", "corollary", "tv_exact", "ordered"]
    assert all(F(r["diaconis"]) >= F(r["dasgupta"]) for r in table)
    assert {r["ordered"] for r in table} == {"pass"}


@pytest.mark.parametrize("text", ["0:3", "3:2", "1:61", "1-3", "x"])
def test_bounds_rejects_bad_range(capsys, text):
    assert usage_error(capsys, "bounds", "--n-range", text) == 2


def test_simulate_zero_bin_and_determinism(capsys):
    argv = ["simulate", "--n", "3", "--lambda", "1", "--samples", "1000", "--seed", "7", "--workers", "4"]
    code, first, err = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert code == 0
    assert first == second
    assert "pass=true" in err
    assert rows(first)[2]["count"] == "0"


def test_simulate_zero_samples_is_usage_error(capsys):
    assert usage_error(capsys, "simulate", "--n", "3", "--samples", "0") == 2


def test_simulate_failure_exit(capsys):
    code, _, err = run(capsys, "simulate", "--n", "3", "--lambda", "1/2", "--samples", "2000", "--z-threshold", "0.001")
    assert code == 1
    assert "pass=false" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["pmf", "--dist", "generalized", "--n", "4", "--lambda", "1/3"],
        ["dist", "--metric", "fm", "--n", "4", "--alpha", "1/2", "--lambda", "0.9"],
        ["bounds", "--reference", "--n-range", "2:5"],
        ["simulate", "--n", "4", "--lambda", "1/2", "--samples", "500", "--seed", "3"],
    ],
)
def test_csv_json_round_trip(capsys, argv):
    _, text, _ = run(capsys, *argv)
    _, doc, _ = run(capsys, "--format", "json", *argv)
    parsed = json.loads(doc)
    assert parsed["rows"] == rows(text)
    assert parsed["meta"]["working_precision"] >= 20


def test_global_flags_after_subcommand(capsys):
    _, a, _ = run(capsys, "--digits", "8", "dist", "--metric", "tv", "--n", "3")
    _, b, _ = run(capsys, "dist", "--metric", "tv", "--n", "3", "--digits", "8")
    assert a == b
    assert rows(a)[0]["exact"] == "0.23747399"


def test_out_file(capsys, tmp_path):
    target = tmp_path / "pmf.csv"
    code, out, _ = run(capsys, "--out", str(target), "pmf", "--dist", "classical", "--n", "3")
    assert code == 0 and out == ""
    assert rows(target.read_text())[1]["exact"] == "1/2"


def test_verify_only(capsys):
    code, out, err = run(capsys, "verify", "--only", "matching-factorial-moments,derangements")
    assert code == 0
    assert [(r["check"], r["result"]) for r in rows(out)] == [
        ("matching-factorial-moments", "pass"),
        ("derangements", "pass"),
    ]
    assert "PASS matching-factorial-moments" in err


def test_verify_list(capsys):
    code, out, _ = run(capsys, "verify", "--list")
    assert code == 0
    assert "fm-sandwich" in out.split()


def test_verify_unknown_check(capsys):
    assert usage_error(capsys, "verify", "--only", "nope") == 2


def test_verify_precision_independent(capsys):
    names = "pmf-routes-agree,alpha-monotonicity,tv-dominated-by-d2"
    _, a, _ = run(capsys, "verify", "--only", names)
    _, b, _ = run(capsys, "--digits", "30", "verify", "--only", names)
    assert a == b


def test_missing_subcommand(capsys):
    assert usage_error(capsys) == 2
