import math

import numpy as np
import pytest

from proxlr import MCPLoss, NumericalFailureError, ParameterError, PreconditionError, \
    SCADLoss, SeparableLoss, SolverConfig, SpectralSet, make_instance, solve_proposed
from proxlr.operators import operator_norm
from proxlr.pvs import TRACE_COLUMNS, backtrack_step, smoothing_schedule, stationarity_measure


def envelope_lipschitz(loss, mu):
    """Lipschitz constant of the envelope gradient of a weakly convex loss."""
    return max(1.0 / mu, loss.eta / (1.0 - mu * loss.eta))


@pytest.fixture(scope="module")
def desk_run():
    obs, truth = make_instance(10, 12, 2, 0.8, 0.2, seed=11)
    g = SeparableLoss(SCADLoss(3.0), obs.m)
    s = SpectralSet(2, 1.0, 10, 12)
    cfg = SolverConfig(max_time_s=10, keep_iterates=True)
    x, trace = solve_proposed(obs, g, s, cfg)
    return obs, g, s, cfg, x, trace


def test_schedule_examples():
    cfg = SolverConfig(eta_sched=0.5, alpha=3)
    assert smoothing_schedule(cfg, 1) == pytest.approx(1.0)
    assert smoothing_schedule(cfg, 8) == pytest.approx(0.5)
    mus = [smoothing_schedule(cfg, n) for n in range(1, 2000)]
    assert all(a > b for a, b in zip(mus, mus[1:]))
    assert mus[-1] < 0.08


def test_schedule_modulus_resolution():
    assert SolverConfig().resolved_eta(SeparableLoss("l1")) == 1.0
    assert SolverConfig().resolved_eta(SeparableLoss("scad:3")) == pytest.approx(0.5)
    assert SolverConfig(eta_sched=2.0).resolved_eta(SeparableLoss("scad:3")) == 2.0
    with pytest.raises(ParameterError):
        smoothing_schedule(SolverConfig(), 1)


def test_config_validation():
    for bad in ({"c": 0.5}, {"rho": 1.0}, {"gamma_tilde": 0}, {"alpha": 0.5},
                {"init": "svd"}, {"max_iters": 0}):
        with pytest.raises(ParameterError):
            SolverConfig(**bad)


def test_eta_sched_below_loss_modulus_rejected(small_instance):
    obs, _ = small_instance
    with pytest.raises(ParameterError):
        solve_proposed(obs, "scad:3", SpectralSet(2, 1.0, 8, 6), SolverConfig(eta_sched=0.1))


def test_exact_start_has_zero_cost(exact_instance):
    obs, truth = exact_instance
    s = SpectralSet(2, 0.1, *obs.shape)
    x, trace = solve_proposed(obs, "l1", s, x_init=truth.x_star)
    assert trace.raw_cost[-1] == 0.0
    np.testing.assert_allclose(x, truth.x_star, atol=1e-12)
    assert trace.termination_reason == "RelTol"


def test_infeasible_start_rejected(small_instance):
    obs, _ = small_instance
    with pytest.raises(PreconditionError):
        solve_proposed(obs, "l1", SpectralSet(1, 1.0, 8, 6), x_init=np.eye(8, 6))


def test_trace_invariants(desk_run):
    obs, g, s, cfg, x, trace = desk_run
    eta = cfg.resolved_eta(g)
    mu1 = smoothing_schedule(cfg, 1, eta)
    arr = trace.as_arrays()
    np.testing.assert_allclose(arr["mu"], mu1 * arr["n"] ** (-1 / cfg.alpha), rtol=1e-14)
    np.testing.assert_array_equal(arr["gamma"], cfg.rho ** arr["backtracks"] * cfg.gamma_tilde)
    assert np.all(arr["F_next"] <= arr["F_n"])
    running = np.minimum.accumulate(arr["measure"])
    assert np.all(np.diff(running) <= 0)
    for it in trace.iterates:
        assert s.contains(it, 1e-8 * max(1.0, np.linalg.norm(it, 2)))
    assert len(trace.iterates) == len(trace) + 1
    np.testing.assert_array_equal(trace.iterates[-1], x)


def test_sufficient_decrease_post_hoc(desk_run):
    obs, g, s, cfg, x, trace = desk_run
    for k in range(len(trace)):
        xn, xn1 = trace.iterates[k], trace.iterates[k + 1]
        mu, gamma = trace.mu[k], trace.gamma[k]
        f0 = g.envelope(obs.y - obs.operator.forward(xn), mu)
        f1 = g.envelope(obs.y - obs.operator.forward(xn1), mu)
        step = np.linalg.norm(xn - xn1)
        assert f1 <= f0 - cfg.c * gamma * (step / gamma) ** 2 + 1e-12 * abs(f0)


def test_backtracking_bound(desk_run):
    obs, g, s, cfg, x, trace = desk_run
    a2 = operator_norm(obs.operator) ** 2
    for mu, m in zip(trace.mu, trace.backtracks):
        lip = a2 * envelope_lipschitz(g.scalar, mu)
        bound = math.ceil(math.log((1 - 2 * cfg.c) / (cfg.gamma_tilde * lip), cfg.rho)) + 1
        assert m <= bound


def test_small_step_accepted_immediately(small_instance):
    obs, _ = small_instance
    g = SeparableLoss(MCPLoss(3.0))
    s = SpectralSet(2, 1.0, *obs.shape)
    eta = g.eta
    mu = 1 / (2 * eta)
    lip = operator_norm(obs.operator) ** 2 * envelope_lipschitz(g.scalar, mu)
    cfg = SolverConfig(gamma_tilde=(1 - 2 * 2.0 ** -13) / lip)
    x0 = s.project(obs.operator.adjoint(obs.y) / obs.m)
    _, gamma, m = backtrack_step(x0, 1, cfg, obs, g, s)
    assert m == 0 and gamma == cfg.gamma_tilde


def test_stationary_point_is_fixed(exact_instance):
    obs, truth = exact_instance
    s = SpectralSet(2, 0.1, *obs.shape)
    x_next, gamma, m = backtrack_step(truth.x_star, 1, SolverConfig(), obs, "scad:3", s)
    np.testing.assert_array_equal(x_next, truth.x_star)
    assert m == 0
    assert stationarity_measure(truth.x_star, 1.0, obs, "scad:3", 0.5, s) == pytest.approx(
        0.0, abs=1e-10)


def test_measure_positive_away_from_stationarity(small_instance):
    obs, _ = small_instance
    s = SpectralSet(2, 1.0, *obs.shape)
    x = s.random_member(0)
    assert stationarity_measure(x, 0.01, obs, "scad:3", 0.5, s) > 0


def test_measure_matches_logged_first_step(desk_run):
    obs, g, s, cfg, x, trace = desk_run
    m1 = stationarity_measure(trace.iterates[0], trace.gamma[0], obs, g, trace.mu[0], s)
    assert m1 == pytest.approx(trace.measure[0], rel=1e-10)


def test_termination_reasons(small_instance):
    obs, _ = small_instance
    s = SpectralSet(2, 1.0, *obs.shape)
    _, tr = solve_proposed(obs, "l1", s, SolverConfig(max_iters=3))
    assert tr.termination_reason == "IterLimit" and len(tr) == 3
    _, tr = solve_proposed(obs, "l1", s, SolverConfig(max_time_s=1e-9))
    assert tr.termination_reason == "TimeLimit" and len(tr) == 1


def test_random_init_runs(small_instance):
    obs, _ = small_instance
    s = SpectralSet(2, 1.0, *obs.shape)
    cfg = SolverConfig(init="random", random_state=4, max_iters=50)
    x, tr = solve_proposed(obs, "mcp:3", s, cfg)
    assert s.contains(x)
    assert tr.raw_cost[-1] <= tr.initial_raw_cost


def test_trace_csv(desk_run):
    trace = desk_run[-1]
    text = trace.to_csv()
    lines = text.strip().splitlines()
    assert lines[0].split(",") == list(TRACE_COLUMNS)
    assert len(lines) == len(trace) + 1


def test_backtracking_failure_is_reported(small_instance, monkeypatch):
    obs, _ = small_instance
    s = SpectralSet(2, 1.0, *obs.shape)
    # A wrong-signed gradient never yields decrease; rho = 0.9 keeps the
    # trial steps above round-off for all allowed backtracks.
    monkeypatch.setattr("proxlr.pvs._Objective.grad_from_outer",
                        lambda self, dz: (self.flat.T @ dz).reshape(self.shape))
    with pytest.raises(NumericalFailureError):
        solve_proposed(obs, "l1", s, SolverConfig(rho=0.9))
