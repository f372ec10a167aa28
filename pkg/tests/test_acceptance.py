import math

import numpy as np
import pytest

from config import suites
from core import diagnostics
from core.applications import build_fda, build_recovery, build_srm
from core.data_handler import gen_randn
from core.exceptions import DenominatorError, NonFiniteIterateError
from core.solver import SolverConfig, initial_point, run

pytestmark = pytest.mark.slow

SEEDS = range(10)
BUDGET = 1000


@pytest.mark.parametrize("variant", ["fadmm-d", "fadmm-q"])
def test_potential_is_non_increasing_on_fda(tall_dataset, variant):
    _, P = build_fda(tall_dataset, r=2, rho=1.0)
    x0, y0, z0 = initial_point(P, 0)
    trace = run(P, SolverConfig(max_iter=BUDGET, beta0=1000.0, variant=variant), x0, y0, z0)
    values = diagnostics.potential(P, trace)
    records = trace.step_records()
    checked = 0
    for t in range(1, len(values) - 1):
        if records[t].flag != "ok" or records[t + 1].flag != "ok":
            continue
        assert values[t + 1] <= values[t] + 1e-8 * max(1.0, abs(values[t])), f"t={t}"
        checked += 1
    assert checked >= 0.99 * (len(values) - 2)


@pytest.mark.parametrize("variant", ["fadmm-d", "fadmm-q"])
def test_residual_and_crit_decay_at_the_schedule_rate(tall_dataset, variant):
    _, P = build_fda(tall_dataset, r=2, rho=1.0)
    x0, y0, z0 = initial_point(P, 1)
    cfg = SolverConfig(max_iter=8000, beta0=100.0, variant=variant, record_diagnostics=True)
    trace = run(P, cfg, x0, y0, z0)
    records = trace.step_records()
    e_plus = [r.e_plus for r in records]

    short, long = diagnostics.ergodic_mean(e_plus[:1001]), diagnostics.ergodic_mean(e_plus)
    assert long / short <= 2.0 * 8.0 ** ((cfg.p - 1.0) / 2.0)

    window = [r for r in records if 100 <= r.t <= 8000]
    slope = diagnostics.loglog_slope([r.t for r in window], [r.crit for r in window])
    assert slope <= -0.2


def _final_objective(P, cfg, start):
    x0, y0, z0 = start
    try:
        return run(P, cfg, x0, y0, z0).final_objective
    except (DenominatorError, NonFiniteIterateError):
        return math.inf


def _assert_fadmm_leads(instances):
    wins_spgm = wins_spm = 0
    finals = {"fadmm-d": [], "spgm-d": []}
    for P, beta0, seed in instances:
        start = initial_point(P, seed)
        result = {v: _final_objective(P, SolverConfig(max_iter=BUDGET, beta0=beta0, variant=v), start)
                  for v in ("fadmm-d", "spgm-d", "spm")}
        tol = 1e-9 * max(1.0, abs(result["fadmm-d"]))
        wins_spgm += result["fadmm-d"] <= result["spgm-d"] + tol
        wins_spm += result["fadmm-d"] <= result["spm"] + tol
        finals["fadmm-d"].append(result["fadmm-d"])
        finals["spgm-d"].append(result["spgm-d"])
    count = len(instances)
    assert wins_spgm >= 0.7 * count and wins_spm >= 0.7 * count
    assert np.median(finals["fadmm-d"]) <= np.median(finals["spgm-d"]) + 1e-9


@pytest.mark.parametrize("rho", [10.0, 100.0])
def test_fadmm_leads_baselines_on_fda(rho):
    instances = []
    for seed in SEEDS:
        _, P = build_fda(gen_randn(60, 12, seed=seed), r=2, rho=rho)
        instances.append((P, suites.fda_beta0(rho), seed))
    _assert_fadmm_leads(instances)


@pytest.mark.parametrize("rho1, rho2", [(10.0, 1.0), (100.0, 100.0)])
def test_fadmm_leads_baselines_on_recovery(rho1, rho2):
    instances = []
    for seed in SEEDS:
        _, P = build_recovery(gen_randn(50, 20, seed=seed), rho1=rho1, rho2=rho2)
        instances.append((P, suites.recovery_beta0(rho1), seed))
    _assert_fadmm_leads(instances)


def test_fadmm_leads_baselines_on_srm():
    instances = []
    for seed in SEEDS:
        _, P = build_srm(gen_randn(40, 8, seed=seed), p_count=suites.srm_portfolios, seed=seed)
        instances.append((P, suites.srm_beta0, seed))
    _assert_fadmm_leads(instances)
