import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

import riskint

DATA = Path(os.environ.get("RISKINT_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))
MODEL = "z1,z2,z1*z2,age,male,urban,z1*age"


def saturated_cohort():
    text = "y,z1,z2\n1,0,0\n0,0,0\n0,0,0\n1,1,0\n1,1,0\n0,1,0\n1,0,1\n0,0,1\n"
    text += "1,1,1\n1,1,1\n1,1,1\n1,1,1\n0,1,1\n"
    return riskint.parse_cohort_csv(text)


def test_saturated_fit_and_effects():
    c = saturated_cohort()
    spec = riskint.ModelSpec.parse("z1,z2,z1*z2", c.covariate_names)
    fit = riskint.fit_cohort(c, spec)
    assert fit.converged
    assert fit.pi_hat[0] == pytest.approx(math.log(0.5), abs=1e-6)
    te1, te2, inter = riskint.effect_triple(fit.pi_hat, spec, riskint.StandardizationSet(c))
    assert te1 == pytest.approx(2 / 3 - 1 / 3, abs=1e-8)
    assert te2 == pytest.approx(1 / 2 - 1 / 3, abs=1e-8)
    assert inter == pytest.approx(4 / 5 - 2 / 3 - 1 / 2 + 1 / 3, abs=1e-8)
    again = riskint.FitResult.from_json(fit.to_json())
    assert again.identity == fit.identity


def test_errors_carry_kind():
    with pytest.raises(riskint.Error) as info:
        riskint.parse_cohort_csv("y,z1,z2\n1,0,2\n")
    assert info.value.kind == "NonBinaryValue"
    assert info.value.details["column"] == "z2"


def test_distribution_and_reports():
    c = riskint.load_cohort(DATA / "fixture_cohort.csv")
    spec = riskint.ModelSpec.parse(MODEL, c.covariate_names)
    fit = riskint.load_fit(DATA / "fixture_fit.json")
    d = riskint.effect_distribution(fit, spec, riskint.StandardizationSet(c), 2000, 11)
    assert len(d) == 2000
    d2 = riskint.effect_distribution(fit, spec, riskint.StandardizationSet(c), 2000, 11, threads=3)
    assert d.to_csv() == d2.to_csv()
    ints = np.array(d.values("int"))
    m = riskint.marginal_report(d, "int")
    assert m["ci95"][0] <= m["ci50"][0] <= m["ci50"][1] <= m["ci95"][1]
    t = riskint.tercile_report(d, "te1")
    assert sum(s["count"] for s in t["strata"]) == 2000
    e = riskint.confidence_ellipse(np.column_stack([d.values("te1"), ints]), 0.05)
    assert e.quantile == -2 * math.log(0.05)
    assert e.contains(e.center)


def test_quantile_and_chi2():
    assert riskint.quantile(list(range(1, 101)), 0.25) == pytest.approx(25.75)
    assert riskint.chi2_upper_tail(5.991, 2) == pytest.approx(math.exp(-5.991 / 2))


def test_report_bundle(tmp_path):
    written = riskint.report(
        DATA / "fixture_cohort.csv", tmp_path, 3, fit_json=DATA / "fixture_fit.json", model=MODEL, draws=300
    )
    names = {Path(p).name for p in written}
    assert {"draws.csv", "marginal_int.json", "terciles_te1.json", "ellipse_te1_int.csv"} <= names
    marginal = json.loads((tmp_path / "marginal_int.json").read_text())
    assert marginal["provenance"]["seed"] == 3
