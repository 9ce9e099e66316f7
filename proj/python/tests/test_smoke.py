import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

import petc

CONFIG = Path(os.environ.get("PETC_CONFIG_DIR", Path(__file__).resolve().parents[2] / "configs")) / "case_study.json"


def case_params(n_out):
    p = petc.EtmParams()
    p.gamma = math.sqrt(n_out / 0.1 + 0.05)
    p.mu = 0.95 * (1 - 0.1 * n_out)
    p.eps = 0.5
    p.lam = 0.2
    p.n_out = n_out
    p.phi0_init = 5.0
    p.phi1_init = 2.0
    p.tau_masp = 0.01
    p.d_min = 0.001
    return p


def test_design_report():
    rep = petc.design(CONFIG)
    assert rep["certified"]
    verdicts = {c["n_out"]: c["aggregate"]["verdict"] for c in rep["reference_comparison"]}
    assert verdicts == {2: "match", 3: "match"}


def test_design_agent_closed_form():
    p = case_params(2)
    k = math.sqrt(p.mu * p.eps)
    expected = k / p.gamma * (math.atan(p.phi0_init / k) - math.atan(p.lam * p.phi1_init / k))
    d = petc.design_agent(p)
    assert d["certified"]
    assert abs(d["tau_max_bound"] - expected) < 1e-8
    phi = np.asarray(petc.integrate_phi(p, 0, 0.05))
    tau = np.arange(phi.size) * 1e-5
    oracle = k * np.tan(np.arctan(p.phi0_init / k) - p.gamma * tau / k)
    assert np.max(np.abs(phi - oracle)) < 1e-8


def test_phi_derivative_example():
    p = petc.EtmParams()
    p.gamma, p.mu, p.eps, p.lam = 4.478, 0.38, 0.5, 0.2
    assert petc.phi_derivative(0, 5.0, p) == pytest.approx(-4.478 * (25 / 0.19 + 1), rel=1e-12)


def test_simulate_and_verify_roundtrip():
    res = petc.simulate(CONFIG, seed=3, horizon=2.0, verify=True, full_state=True)
    assert res.report is not None and res.report["passed"]
    t, x = res.flow_states()
    assert x.shape[1] == 8 and t[0] == 0.0 and t[-1] == pytest.approx(2.0)
    replay = petc.verify(CONFIG, res.trace_csv)
    assert replay["passed"]


def test_determinism_and_dict_config():
    cfg = json.loads(CONFIG.read_text())
    a = petc.simulate(cfg, seed=5, horizon=1.0)
    b = petc.simulate(CONFIG, seed=5, horizon=1.0)
    assert a.trace_csv == b.trace_csv


def test_curve_rows():
    rows = petc.curve(CONFIG, [0.1, 0.2, 0.3])
    assert {r["n_out"] for r in rows} == {2.0, 3.0}
    for r in rows:
        assert r["tau_max"] - 0.01 >= r["tau_mad"]


def test_bad_lambda_rejected():
    cfg = json.loads(CONFIG.read_text())
    cfg["etm"]["lambda"] = 1.5
    with pytest.raises(ValueError, match="lambda"):
        petc.design(cfg)
