import json
import math

import numpy as np
import pytest

from rlhaar import cli
from rlhaar.process import TruncationPlan
from rlhaar.reports import TAIL_HEADER, csv_text


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out)])
    return code, (out.read_bytes() if out.exists() else None)


def write_tail_csv(path, n, values, rel=0.01):
    rows = [(int(k), float(v), float(v * rel), 2000, 7) for k, v in zip(n, values)]
    path.write_text(csv_text(TAIL_HEADER, rows))
    return path


CUTS = 2.0 ** np.arange(6, 14)


# --- covariance-check -----------------------------------------------------------


def test_covariance_check_passes_at_level12(tmp_path):
    code, data = run(tmp_path, "covariance-check", "--max-level", "12", "--points", "1,1;0,0.5")
    assert code == 0
    lines = data.decode().splitlines()
    assert lines[0] == "s,t,exact,partial_J,deficit"
    s, t, exact, partial, deficit = map(float, lines[1].split(","))
    assert exact == pytest.approx(2 / math.pi, rel=1e-10) and 0 < deficit < 1e-3
    assert [float(v) for v in lines[2].split(",")[2:4]] == [0.0, 0.0]


def test_covariance_check_level0_fails_tolerance(tmp_path):
    code, data = run(tmp_path, "covariance-check", "--max-level", "0")
    assert code == 2
    deficit = float(data.decode().splitlines()[1].split(",")[4])
    assert deficit == pytest.approx(2 / math.pi - (0.7522528**2 + 0.2203297**2), abs=1e-6)


# --- tail-error --------------------------------------------------------------------


TAIL_ARGS = ["tail-error", "--max-level", "8", "--replicas", "40", "--cuts", "1,16,64,2000", "--seed", "9"]


def test_tail_error_byte_identical_and_worker_invariant(tmp_path):
    a = run(tmp_path, *TAIL_ARGS, name="a")
    b = run(tmp_path, *TAIL_ARGS, name="b")
    c = run(tmp_path, *TAIL_ARGS, "--workers", "4", name="c")
    assert a[0] == b[0] == c[0] == 0
    assert a[1] == b[1] == c[1]
    lines = a[1].decode().splitlines()
    assert lines[0] == ",".join(TAIL_HEADER)
    assert lines[-1] == "2000,0,0,40,9"  # beyond the 512-term plan
    means = [float(l.split(",")[1]) for l in lines[1:]]
    assert means[0] > means[1] > means[2] > 0


def test_tail_error_env_seed(tmp_path, monkeypatch):
    args = ["tail-error", "--max-level", "6", "--replicas", "4", "--cuts", "8"]
    monkeypatch.setenv(cli.SEED_ENV, "0x10")
    _, data = run(tmp_path, *args, name="env")
    assert data.decode().splitlines()[1].endswith(",16")
    monkeypatch.delenv(cli.SEED_ENV)
    _, data = run(tmp_path, *args, name="default")
    assert data.decode().splitlines()[1].endswith(f",{0x5EED0001}")
    monkeypatch.setenv(cli.SEED_ENV, "bogus")
    assert run(tmp_path, *args, name="bad")[0] == 1


def test_tail_error_plan_file(tmp_path):
    plan = TruncationPlan.random(6, 3)
    path = tmp_path / "plan.txt"
    path.write_text(plan.dumps())
    code, data = run(tmp_path, "tail-error", "--plan", f"file:{path}", "--replicas", "4", "--cuts", "8")
    assert code == 0
    code, data2 = run(tmp_path, "tail-error", "--max-level", "6", "--plan", "random:3", "--replicas", "4", "--cuts", "8")
    assert data == data2


@pytest.mark.parametrize(
    "body",
    ["drift\n0 0\n0 0\n", "drift\n1 0\n1 1\n", "drift\n0 zero\n1 0\n1 1\n", ""],
    ids=["duplicate", "omission", "malformed", "empty"],
)
def test_bad_plan_files_exit_1_without_output(tmp_path, body):
    path = tmp_path / "plan.txt"
    path.write_text(body)
    code, data = run(tmp_path, "tail-error", "--plan", str(path), "--replicas", "4", "--cuts", "2")
    assert code == 1 and data is None
    assert not [p for p in tmp_path.iterdir() if p.name != "plan.txt"]


@pytest.mark.parametrize(
    "argv",
    [
        ["tail-error", "--max-level", "6", "--alpha", "0.4"],
        ["tail-error", "--max-level", "6", "--replicas", "1"],
        ["tail-error", "--max-level", "6", "--grid-level", "7"],
        ["tail-error", "--max-level", "6", "--cuts", "8,4"],
        ["tail-error"],
    ],
)
def test_config_errors_exit_1(tmp_path, argv):
    code, data = run(tmp_path, *argv)
    assert code == 1 and data is None


@pytest.mark.parametrize(
    "argv",
    [["tail-error", "--max-level", "x"], ["tail-error", "--seed", "-1"], ["no-such-command"]],
)
def test_usage_errors_use_exit_1(argv):
    with pytest.raises(SystemExit) as info:
        cli.main(argv)
    assert info.value.code == 1


# --- rate-fit ------------------------------------------------------------------------


@pytest.mark.parametrize("beta", [1.0, 0.5])
def test_rate_fit_synthetic(tmp_path, beta):
    src = write_tail_csv(tmp_path / "in.csv", CUTS, CUTS**-1.0 * np.log(CUTS) ** beta)
    code, data = run(tmp_path, "rate-fit", str(src))
    assert code == 0
    rep = json.loads(data)
    assert rep["schema_version"] == "1"
    assert round(rep["beta"], 3) == beta
    assert rep["a"] == -1.0 and rep["seed"] == 7
    assert rep["beta_05_rejected"] is (beta == 1.0)
    assert len(rep["gap_ratio"]) == CUTS.size


def test_rate_fit_drops_empty_tails(tmp_path):
    n = list(CUTS) + [2.0**15]
    vals = list(CUTS**-1.0 * np.log(CUTS)) + [0.0]
    code, data = run(tmp_path, "rate-fit", str(write_tail_csv(tmp_path / "in.csv", n, vals)))
    assert code == 0 and json.loads(data)["rows_dropped"] == [2**15]


@pytest.mark.parametrize(
    "text",
    [
        "",
        "a,b,c\n1,2,3\n",
        "n,mean,std_error,replicas,seed\n",
        "n,mean,std_error,replicas,seed\n64,abc,0.1,2,0\n",
        "n,mean,std_error,replicas,seed\n64,0.1,0.01\n",
        "n,mean,std_error,replicas,seed\n64,0.1,0.01,2,0\n128,0.05,0.01,2,0\n",
    ],
    ids=["empty", "header", "no-rows", "non-numeric", "short-row", "too-few-rows"],
)
def test_rate_fit_malformed_exit_1(tmp_path, text):
    src = tmp_path / "in.csv"
    src.write_text(text)
    code, data = run(tmp_path, "rate-fit", str(src))
    assert code == 1 and data is None


def test_rate_fit_missing_file(tmp_path):
    assert run(tmp_path, "rate-fit", str(tmp_path / "nope.csv"))[0] == 1


# --- lower-bound ---------------------------------------------------------------------


def test_lower_bound_natural_level10(tmp_path):
    code, data = run(tmp_path, "lower-bound", "--level", "10", "--replicas", "50", "--seed", "3")
    assert code == 0
    rep = json.loads(data)
    assert rep["K_size"] >= 512 and rep["m"] >= 8 and rep["violations"] == []
    assert rep["sudakov_consistent"] is True
    assert rep["seed"] == 3 and rep["replicas"] == 50
    a = run(tmp_path, "lower-bound", "--level", "10", "--replicas", "50", "--seed", "3", "--workers", "3", name="w")
    assert a[1] == data


@pytest.mark.parametrize("level", ["9", "1", "0"])
def test_lower_bound_odd_level_exit_1(tmp_path, level):
    assert run(tmp_path, "lower-bound", "--level", level)[0] == 1


def test_lower_bound_random_plan_audit(tmp_path):
    code, data = run(
        tmp_path, "lower-bound", "--level", "8", "--replicas", "2", "--audit-plans", "1000",
        "--plan", "random:5",
    )
    rep = json.loads(data)
    assert code == 0 and rep["audit_plans"] == 1000 and rep["audit_violations"] == 0


def test_lower_bound_degenerate_level(tmp_path):
    code, data = run(tmp_path, "lower-bound", "--level", "4", "--replicas", "20")
    rep = json.loads(data)
    assert code == 0 and rep["degenerate"] is True and rep["min_score"] == "inf"


# --- lemma1-audit ----------------------------------------------------------------------


def test_lemma1_audit(tmp_path):
    code, data = run(tmp_path, "lemma1-audit", "--trials", "50", "--q-max", "16", "--seed", "1")
    assert code == 0
    rows = [l.split(",") for l in data.decode().splitlines()]
    assert rows[0] == ["q", "config_class", "configurations", "min_ratio", "proven_floor"]
    body = rows[1:]
    assert {int(r[0]) for r in body} == {2, 4, 8, 16}
    for q, cls, count, ratio, floor in body:
        q, ratio, floor = int(q), float(ratio), float(floor)
        assert ratio >= floor * (1 - 1e-12) > 0
        if cls == "equally_spaced":
            closed = sum(1 / l for l in range(1, 2 * q)) * (2 * q - 1) / (q * math.log(q))
            assert ratio == pytest.approx(closed, rel=1e-12)
