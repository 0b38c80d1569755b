"""Configuration, sampling, reports, registry, probes and the command line."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varsparse.gphi import Power
from varsparse.grid import Domain, GridFunction, constant, root_cube
from varsparse.harness import (
    ConfigError,
    ExperimentConfig,
    Report,
    UnknownSuiteError,
    all_suites,
    resolve,
    run_suite,
    verify_lemma,
)
from varsparse.harness.cli import main
from varsparse.harness.domination import domination_functions, domination_ratio, stability_factor
from varsparse.harness.report import CSV_COLUMNS, csv_text, merge_reports, read_csv, write_report
from varsparse.harness.samplers import step_function, trial_rng
from varsparse.harness.theorems import OperatorSpec, TheoremError, estimate_operator_norm, verify_theorem
from varsparse.sparse import SparseFamily


def _cfg(**kw):
    return ExperimentConfig.from_dict({"version": 1, **kw})


# --------------------------------------------------------------------------- config


def test_config_defaults():
    cfg = _cfg()
    assert (cfg.dimension, cfg.L, cfg.J, cfg.trials, cfg.seed, cfg.slack) == (1, 0, 8, 100, 0, 8.0)
    assert cfg.domain() == Domain(1, 0, 8)
    assert cfg.sweep((6, 8)) == (6, 8)


def test_config_full():
    cfg = _cfg(
        suite="lemma_326",
        domain={"dimension": 2, "L": -1, "J": 4, "shifts": [[0, 0], [1, 2]]},
        J_sweep=[3, 4],
        expressions={"p": "2 + x2"},
        operator={"kind": "fractional", "alpha": 1.5, "m": 1},
        trials=5,
        seed=9,
        tolerances={"rel": 1e-6},
        params={"cap": 10},
    )
    assert cfg.domain().shifts == ((0, 0), (1, 2))
    assert cfg.sweep((6,)) == (3, 4)
    assert cfg.expr("p") == "2 + x2" and cfg.expr("w", "1") == "1"
    assert cfg.tol("rel", 1.0) == 1e-6 and cfg.param("cap") == 10


@pytest.mark.parametrize(
    "raw",
    [
        {},
        {"version": 2},
        {"version": 1, "bogus": 1},
        {"version": 1, "domain": {"dimension": 3}},
        {"version": 1, "domain": {"J": 0}},
        {"version": 1, "domain": {"L": 4, "J": 30}},
        {"version": 1, "domain": {"shifts": [[3]]}},
        {"version": 1, "J_sweep": [8, 6]},
        {"version": 1, "expressions": {"p": "x2"}},
        {"version": 1, "expressions": {"p": "2 +"}},
        {"version": 1, "operator": {"kind": "wavelet"}},
        {"version": 1, "operator": {"alpha": 1.0}},
        {"version": 1, "operator": {"m": -1}},
        {"version": 1, "trials": 0},
        {"version": 1, "seed": -1},
        {"version": 1, "slack": 0},
        {"version": 1, "tolerances": {"rel": -1}},
        {"version": 1, "trials": True},
    ],
)
def test_config_rejects(raw):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(raw)


def test_config_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        ExperimentConfig.load(bad)
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.json")


# --------------------------------------------------------------------------- sampling


def test_trial_rng_is_deterministic_and_keyed():
    a = trial_rng(3, "suite", 1).random(4)
    assert np.array_equal(a, trial_rng(3, "suite", 1).random(4))
    assert not np.array_equal(a, trial_rng(3, "suite", 2).random(4))
    assert not np.array_equal(a, trial_rng(4, "suite", 1).random(4))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_step_functions_are_resolution_independent(seed, signed):
    coarse = step_function(Domain(1, 0, 6), trial_rng(seed, "t"), signed=signed).values
    fine = step_function(Domain(1, 0, 8), trial_rng(seed, "t"), signed=signed).values
    assert np.array_equal(fine.reshape(-1, 4)[:, 0], coarse)
    assert np.any(coarse != 0)


# --------------------------------------------------------------------------- reports


def _report():
    rep = Report("demo", 3)
    rep.add("a", 0.1, "trial 2", 8)
    rep.add("b", math.inf, "g0:k0:0", "6|8", "FAIL")
    return rep


def test_report_status_and_summary():
    rep = _report()
    assert not rep.passed
    assert rep.summary() == {"suite": "demo", "seed": 3, "status": "FAIL", "rows": 2, "failed_checks": ["b"]}


def test_csv_round_trip(tmp_path):
    rep = _report()
    paths = write_report(rep, tmp_path)
    text = paths["csv"].read_text()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert "0.1,trial 2,8,3,INFO" in text
    rows = read_csv(paths["csv"])
    assert [(r.check, r.constant) for r in rows] == [("a", 0.1), ("b", math.inf)]
    assert csv_text(rows) == text
    assert merge_reports([paths["csv"], paths["csv"]])[0].check == "a"
    assert "a@8" in json.loads(paths["timing"].read_text())


def test_read_csv_rejects_foreign_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(p)


# --------------------------------------------------------------------------- registry


def test_registry_aliases_and_kinds():
    assert resolve("3.2.6").id == "lemma_326"
    assert resolve("holderpp").id == "holder_pp"
    assert resolve("T2.1").kind == "domination"
    kinds = {s.kind for s in all_suites()}
    assert kinds == {"lemma", "theorem", "domination"}
    with pytest.raises(UnknownSuiteError):
        resolve("nope")
    with pytest.raises(UnknownSuiteError):
        verify_lemma("T1.1", _cfg())
    with pytest.raises(TheoremError):
        verify_theorem("lemma_326", _cfg())


@pytest.mark.parametrize("suite", ["constant_exponent", "lemma_326", "holder_pp", "self_adjoint", "commutator_identity"])
def test_suites_are_deterministic(suite):
    cfg = _cfg(trials=5, seed=11, domain={"J": 6})
    a, b = run_suite(suite, cfg), run_suite(suite, cfg)
    assert csv_text(a.rows) == csv_text(b.rows)
    assert a.summary() == b.summary()
    assert a.passed


def test_seed_changes_results():
    a = run_suite("lemma_326", _cfg(trials=5, seed=1, domain={"J": 6}))
    b = run_suite("lemma_326", _cfg(trials=5, seed=2, domain={"J": 6}))
    assert csv_text(a.rows) != csv_text(b.rows)


# --------------------------------------------------------------------------- probes


def test_identity_norm_is_one_on_constant():
    dom = Domain(1, 0, 6)
    P = Power(2.0)
    est = estimate_operator_norm(OperatorSpec("identity"), (P, None), (P, None), dom, trials=5)
    assert est.ratios[0] == 1.0
    assert est.value == pytest.approx(1.0, rel=1e-9)


def test_root_average_contracts_l2():
    dom = Domain(1, 0, 6)
    S = SparseFamily(dom, (0,), (root_cube(dom),))
    P = Power(2.0)
    est = estimate_operator_norm(OperatorSpec("sparse", family=S), (P, None), (P, None), dom, trials=30)
    assert max(est.ratios) <= 1 + 1e-9


def test_hilbert_with_a2_weight_bounded():
    dom = Domain(1, 0, 8)
    w = GridFunction(dom, np.abs(dom.centers()[..., 0]) ** 0.3)
    P = Power(2.0)
    est = estimate_operator_norm(OperatorSpec("czo"), (P, w), (P, w), dom, trials=20)
    assert math.isfinite(est.value) and est.value < 10


def test_unknown_operator_kind():
    with pytest.raises(TheoremError):
        OperatorSpec("fourier").apply_many([constant(Domain(1, 0, 2), 1.0)])


# --------------------------------------------------------------------------- domination


def test_domination_constant_symbol_gives_zero_ratio():
    dom = Domain(1, 0, 7)
    fs = domination_functions(dom, count=3)
    res = domination_ratio("czo", 1, fs, constant(dom, 2.0))
    assert res.sup_ratio == 0.0


def test_domination_indicator_ratio_finite_and_stable():
    sups = []
    for J in (8, 10):
        dom = Domain(1, 0, J)
        b = GridFunction(dom, np.abs(dom.centers()[..., 0]) ** 0.5)
        sups.append(domination_ratio("czo", 0, domination_functions(dom, count=1), b).sup_ratio)
    assert all(math.isfinite(s) and s > 0 for s in sups)
    assert stability_factor(sups) <= 2


def test_stability_factor():
    assert stability_factor([0.0, 0.0]) == 1.0
    assert stability_factor([1.0, 3.0, 1.5]) == 3.0
    assert stability_factor([1.0, 0.0]) == math.inf


# --------------------------------------------------------------------------- command line


def test_cli_norm_unit_box(capsys, tmp_path):
    code = main(["norm", "--psi", "power", "--p", "2", "--f", "1", "--out-dir", str(tmp_path)])
    assert code == 0
    assert capsys.readouterr().out.strip() == "1.0"
    assert json.loads((tmp_path / "norm.summary.json").read_text())["status"] == "PASS"


def test_cli_verify_writes_csv_and_is_reproducible(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"version": 1, "trials": 10, "domain": {"J": 6}}))
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "lemma_326", "--config", str(cfg), "--out-dir", str(out1)]) == 0
    assert main(["verify", "lemma_326", "--config", str(cfg), "--out-dir", str(out2)]) == 0
    assert (out1 / "lemma_326.csv").read_bytes() == (out2 / "lemma_326.csv").read_bytes()
    s1 = json.loads((out1 / "lemma_326.summary.json").read_text())
    assert s1["status"] == "PASS"


def test_cli_malformed_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"version": 1, "trials": "many"}')
    assert main(["verify", "lemma_326", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2
    assert "trials" in capsys.readouterr().err
    summary = json.loads((tmp_path / "verify.summary.json").read_text())
    assert summary["status"] == "ERROR" and summary["exit_code"] == 2


def test_cli_unknown_suite_exits_2(tmp_path):
    assert main(["verify", "no_such_suite", "--out-dir", str(tmp_path)]) == 2


def test_cli_check_failure_exits_1(tmp_path):
    assert main(["weights", "--w", "abs(x1)^1.5", "--sweep", "6", "8", "10", "--out-dir", str(tmp_path)]) == 1
    assert main(["sparse", "--f", "abs(x1)^(-0.5)", "--J", "6", "--threshold", "1", "--out-dir", str(tmp_path)]) == 2


def test_cli_sparse_save_and_load(tmp_path, capsys):
    fam = tmp_path / "s.json"
    assert main(["sparse", "--f", "abs(x1)^(-0.5)", "--J", "8", "--augment", "x1", "--save", str(fam), "--out-dir", str(tmp_path)]) == 0
    first = capsys.readouterr().out
    assert main(["sparse", "--load", str(fam), "--out-dir", str(tmp_path)]) == 0
    assert capsys.readouterr().out == first


def test_cli_dominate_and_report(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"version": 1, "J_sweep": [6, 7], "params": {"functions": 2}}))
    assert main(["dominate", "--config", str(cfg), "--m", "0", "1", "--out-dir", str(tmp_path)]) == 0
    csv = tmp_path / "domination_czo.csv"
    assert main(["report", "--inputs", str(csv), "--out-dir", str(tmp_path / "rep")]) == 0
    svg = tmp_path / "rep" / "domination_czo.svg"
    assert svg.read_text().lstrip().startswith("<?xml")
    first = svg.read_bytes()
    assert main(["report", "--inputs", str(csv), "--out-dir", str(tmp_path / "rep")]) == 0
    assert svg.read_bytes() == first
