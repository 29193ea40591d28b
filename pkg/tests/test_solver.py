import math
import warnings

import numpy as np
import pytest

from zomd.estimators import EstimatorConfig, Family, GradientEstimate
from zomd.oracle import DomainError, NoiseChannel
from zomd.problems import make_problem, uniform_point
from zomd.rng import RngStream
from zomd.sampling import Scheme
from zomd.solver import (
    DualState,
    Schedule,
    make_schedule,
    md_step,
    run,
    trace_grid,
    tune_theorem2,
    tune_theorem3,
)

NONE = NoiseChannel("none")
SUBGRAD = EstimatorConfig(Family.SUBGRADIENT)


# -------------------------------------------------------------------- tuning

def test_nonsmooth_tuning_pinned_values():
    t = tune_theorem2(1.0, 10, 0.1)
    assert t.N == 1473655
    assert t.mu == pytest.approx(0.05)
    assert t.delta_max == pytest.approx(0.025)
    assert t.beta_const == pytest.approx(20.0)


def test_nonsmooth_tuning_formula():
    M, n, eps = 1.3, 7, 0.2
    t = tune_theorem2(M, n, eps)
    assert t.mu == pytest.approx(eps / (2 * M))
    assert t.delta_max == pytest.approx(eps / 4)
    assert t.N == math.ceil(64 * M * M * n * n * math.log(n) / eps**2)


def test_nonsmooth_tuning_high_probability_branch():
    M, n, eps, sigma = 1.0, 10, 0.1, 0.01
    t = tune_theorem2(M, n, eps, sigma=sigma)
    want = math.ceil(128 * M * M * n * n / eps**2
                     * (math.log(n) + 8 * math.log(1 / sigma)))
    assert t.N == want
    assert t.N > tune_theorem2(M, n, eps).N
    with pytest.raises(ValueError):
        tune_theorem2(M, n, eps, sigma=1.5)


def test_smooth_tuning_pinned_values():
    t = tune_theorem3(1.0, 1.0, 100, 0.01)
    assert t.mu == pytest.approx(0.040825, abs=1e-6)
    assert t.delta_max == pytest.approx(4.17e-4, abs=1e-6)
    assert tune_theorem3(1.0, 1.0, 10, 0.1).N == 42416


def test_smooth_tuning_formula_branches():
    M2, L2, n, eps = 2.0, 3.0, 16, 0.2
    for qbar, capf, dnorm in (("inf", 1.0 / math.sqrt(6 * n), math.sqrt(96 * n)),
                              ("2", math.sqrt(4.0 / (3 * n)), math.sqrt(12 * n))):
        t = tune_theorem3(M2, L2, n, eps, qbar=qbar)
        cap = (M2 / L2) * capf
        assert t.mu == pytest.approx(min(max(eps / (2 * M2),
                                             math.sqrt(eps / L2)), cap))
        assert t.delta_max == pytest.approx(M2 * t.mu / dnorm)
        assert t.N == math.ceil(80 * M2 * M2 * math.log(n) ** 2 / eps**2)
    assert t.beta_const == pytest.approx(M2 * math.sqrt(5.0))


def test_tuning_error_branches():
    with pytest.raises(ValueError):
        tune_theorem2(1.0, 10, 0.0)
    with pytest.raises(DomainError):
        tune_theorem2(1.0, 10, 5.0)  # mu would leave the neighborhood
    with pytest.raises(ValueError, match="[Tt]heorem.?2|nonsmooth"):
        tune_theorem3(1.0, math.inf, 10, 0.1)
    with pytest.raises(ValueError):
        tune_theorem3(1.0, 1.0, 10, 0.1, qbar="7")


# ----------------------------------------------------------------- schedules

def test_schedule_step_constants():
    lin = make_problem("linear", 10)
    s1 = make_schedule("thm1", lin)
    assert s1.beta_eff == pytest.approx(lin.M / math.sqrt(math.log(10)))
    s2 = make_schedule("thm2", lin, eps=0.2)
    assert s2.beta_eff == pytest.approx(2 * lin.M * 10 / math.sqrt(math.log(10)))
    assert s2.N == tune_theorem2(lin.M, 10, 0.2).N
    quad = make_problem("quad", 10)
    s3 = make_schedule("thm3", quad, eps=0.2)
    assert s3.beta_eff == pytest.approx(quad.M2 * math.sqrt(5.0))
    sm = make_schedule("manual", beta_const=0.7)
    assert sm.beta_eff == pytest.approx(0.7)
    assert sm.N is None and sm.mu is None


def test_schedule_requires_its_inputs():
    lin = make_problem("linear", 5)
    with pytest.raises(ValueError):
        make_schedule("thm2", lin)  # needs eps
    with pytest.raises(ValueError):
        make_schedule("manual")  # needs beta_const
    with pytest.raises(ValueError):
        make_schedule("thm3", make_problem("distl1", 5), eps=0.1)  # L2 infinite
    with pytest.raises(ValueError):
        make_schedule("simplex", lin)


# ------------------------------------------------------------------ md_step

def test_first_iterate_is_uniform():
    st = DualState.fresh(6, 1.0)
    np.testing.assert_allclose(st.primal(), uniform_point(6), atol=1e-15)


def test_zero_gradients_keep_the_uniform_point():
    st = DualState.fresh(4, 0.8)
    for _ in range(5):
        x = md_step(st, np.zeros(4))
    np.testing.assert_allclose(x, uniform_point(4), atol=1e-15)


def test_md_step_closed_form():
    # with s = (0, b ln 3) and effective step b at the next iterate,
    # the weights are (1, 1/3) normalized
    b = 0.7
    st = DualState.fresh(2, b / math.sqrt(2.0))
    st.s[:] = (0.0, b * math.log(3.0))
    x = md_step(st, np.zeros(2))
    np.testing.assert_allclose(x, [0.75, 0.25], atol=1e-12)


def test_md_step_accepts_estimates_and_checks_finiteness():
    st = DualState.fresh(3, 1.0)
    est = GradientEstimate(np.array([1.0, 0.0, 0.0]), Scheme.L2_SPHERE, 1.0)
    x = md_step(st, est)
    assert x[0] < x[1] == pytest.approx(x[2])
    with pytest.raises(ValueError):
        md_step(st, np.array([np.nan, 0.0, 0.0]))
    with pytest.raises(ValueError):
        md_step(st, np.array([np.inf, 0.0, 0.0]))


def test_md_step_ignores_constant_shifts():
    a = DualState.fresh(5, 0.3)
    b = DualState.fresh(5, 0.3)
    rngu = RngStream(77)
    x = y = None
    for _ in range(200):
        g = 2.0 * rngu.uniforms(5) - 1.0
        c = 10.0 * (2.0 * rngu.uniforms(1)[0] - 1.0)
        x = md_step(a, g)
        y = md_step(b, g + c)
    np.testing.assert_allclose(x, y, atol=1e-12)


def test_primal_is_always_feasible():
    st = DualState.fresh(4, 0.05)
    rngu = RngStream(78)
    for _ in range(500):
        x = md_step(st, 2.0 * rngu.uniforms(4) - 1.0)
        assert abs(x.sum() - 1.0) < 1e-12
        assert x.min() >= 0.0


# ---------------------------------------------------------------------- runs

def test_single_step_run_reports_the_uniform_start():
    prob = make_problem("linear", 7)
    rep = run(prob, NONE, SUBGRAD, make_schedule("thm1", prob), 1, RngStream(0))
    np.testing.assert_allclose(rep.x_bar, uniform_point(7), atol=1e-15)
    assert rep.final_gap == pytest.approx(prob.f(uniform_point(7)) - prob.f_star)


def test_iteration_count_must_be_positive():
    prob = make_problem("linear", 4)
    sched = make_schedule("thm1", prob)
    with pytest.raises(ValueError):
        run(prob, NONE, SUBGRAD, sched, 0, RngStream(0))
    with pytest.raises(ValueError):
        run(prob, NONE, SUBGRAD, sched, None, RngStream(0))  # thm1 has no N


def test_run_uses_schedule_iteration_count():
    prob = make_problem("distl1", 4)
    sched = make_schedule("thm2", prob, eps=0.5)
    cfg = EstimatorConfig(Family.SMOOTHED_TWO_POINT, Scheme.L1_SPHERE,
                          mu=sched.mu)
    rep = run(prob, NoiseChannel("sign", sched.delta_max), cfg, sched, None,
              RngStream(1))
    assert rep.oracle_calls == 2 * sched.N
    assert rep.gap_trace[-1][0] == sched.N


def test_oracle_call_accounting_by_family():
    prob = make_problem("quad", 5)
    sched = make_schedule("manual", beta_const=1.0)
    for cfg, calls in ((SUBGRAD, 0),
                       (EstimatorConfig(Family.DIRECTIONAL_EXACT,
                                        Scheme.L2_SPHERE), 0),
                       (EstimatorConfig(Family.Z_SCHEME, Scheme.RADEMACHER), 0),
                       (EstimatorConfig(Family.SMOOTHED_TWO_POINT,
                                        Scheme.L2_SPHERE, mu=0.1), 400),
                       (EstimatorConfig(Family.Z_FINITE_DIFF, Scheme.RADEMACHER,
                                        tau=0.05), 400)):
        rep = run(prob, NONE, cfg, sched, 200, RngStream(2))
        assert rep.oracle_calls == calls, cfg


def test_gap_traces_are_consistent():
    prob = make_problem("quad", 6)
    sched = make_schedule("thm1", prob)
    rep = run(prob, NONE, SUBGRAD, sched, 4096, RngStream(3))
    ts = [t for t, _ in rep.gap_trace]
    assert ts == sorted(ts) and ts[-1] == 4096
    for (t1, g), (_, j) in zip(rep.gap_trace, rep.jensen_trace):
        assert g >= -1e-9
        assert g <= j + 1e-9  # averaging never hurts on a convex objective


def test_feasibility_stats_reported():
    prob = make_problem("linear", 5)
    rep = run(prob, NoiseChannel("sign", 0.01),
              EstimatorConfig(Family.SMOOTHED_TWO_POINT, Scheme.L1_SPHERE,
                              mu=0.2),
              make_schedule("thm1", prob), 20000, RngStream(4))
    assert rep.max_sum_dev <= 1e-12
    assert rep.min_coord >= 0.0


def test_mass_concentrates_on_the_best_vertex():
    prob = make_problem("linear", 6)  # argmin is coordinate 0
    rep = run(prob, NONE, SUBGRAD, make_schedule("thm1", prob), 20000,
              RngStream(5))
    assert int(np.argmax(rep.x_bar)) == 0
    assert rep.x_bar[0] > 0.9


def test_rate_ratio_shows_square_root_scaling():
    c = np.linspace(0.0, 0.05, 10)
    prob = make_problem("linear", 10, c=c, noise=0.5)
    sched = make_schedule("thm1", prob)
    means = {}
    for N in (2000, 8000):
        gaps = [run(prob, NONE, SUBGRAD, sched, N, RngStream(s)).final_gap
                for s in range(50)]
        means[N] = float(np.mean(gaps))
    ratio = means[2000] / means[8000]
    assert 1.6 <= ratio <= 2.6


def test_overdriven_noise_warns_but_runs():
    prob = make_problem("distl1", 4)
    sched = make_schedule("thm2", prob, eps=0.4)
    cfg = EstimatorConfig(Family.SMOOTHED_TWO_POINT, Scheme.L1_SPHERE,
                          mu=sched.mu)
    loud = NoiseChannel("sign", 10 * sched.delta_max)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = run(prob, loud, cfg, sched, 500, RngStream(6))
    assert any("delta" in str(w.message) for w in caught)
    assert rep.warnings
    assert rep.gap_trace[-1][0] == 500


def test_estimator_step_must_reach_only_admissible_points():
    prob = make_problem("linear", 9)
    sched = make_schedule("manual", beta_const=1.0)
    # an l2-sphere direction has unit length, so mu just under mu0 is fine
    ok = EstimatorConfig(Family.SMOOTHED_TWO_POINT, Scheme.L2_SPHERE, mu=0.99)
    run(prob, NONE, ok, sched, 10, RngStream(7))
    # a rademacher direction has l2 length sqrt(n): tau must shrink accordingly
    bad = EstimatorConfig(Family.Z_FINITE_DIFF, Scheme.RADEMACHER, tau=0.99)
    with pytest.raises(DomainError):
        run(prob, NONE, bad, sched, 10, RngStream(8))


def test_mu_mismatch_with_schedule_is_reported():
    prob = make_problem("distl1", 5)
    sched = make_schedule("thm2", prob, eps=0.4)
    cfg = EstimatorConfig(Family.SMOOTHED_TWO_POINT, Scheme.L1_SPHERE, mu=0.01)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = run(prob, NONE, cfg, sched, 100, RngStream(9))
    assert any("mu" in str(w.message) for w in caught)
    assert rep.warnings


def test_run_accepts_plain_integer_seed():
    prob = make_problem("linear", 4)
    sched = make_schedule("thm1", prob)
    a = run(prob, NONE, SUBGRAD, sched, 100, 42)
    b = run(prob, NONE, SUBGRAD, sched, 100, RngStream(42))
    np.testing.assert_array_equal(a.x_bar, b.x_bar)


def test_runs_are_seed_deterministic():
    prob = make_problem("quad", 5)
    sched = make_schedule("thm1", prob)
    cfg = EstimatorConfig(Family.SMOOTHED_TWO_POINT, Scheme.L2_SPHERE, mu=0.2)
    chan = NoiseChannel("uniform", 0.01)
    a = run(prob, chan, cfg, sched, 3000, RngStream(11))
    b = run(prob, chan, cfg, sched, 3000, RngStream(11))
    np.testing.assert_array_equal(a.x_bar, b.x_bar)
    assert a.gap_trace == b.gap_trace
    c = run(prob, chan, cfg, sched, 3000, RngStream(12))
    assert not np.array_equal(a.x_bar, c.x_bar)


def test_trace_grid_shape():
    g = trace_grid(1000)
    assert g[0] == 1
    assert g[-1] == 1000
    assert all(int(v) == v for v in g)
    assert list(g) == sorted(set(g.tolist()))


def test_config_echo_in_report():
    prob = make_problem("linear", 4)
    sched = make_schedule("thm1", prob)
    rep = run(prob, NONE, SUBGRAD, sched, 50, RngStream(13))
    assert rep.config["n"] == 4
    assert rep.config["N"] == 50
    assert rep.config["schedule"] == "thm1"
