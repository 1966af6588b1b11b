"""Projected variable smoothing for weakly convex losses over a spectral set.

The nonsmooth objective ``x -> g(y - A(x))`` is replaced at iteration ``n``
by its Moreau-smoothed surrogate ``F_n = g^{mu_n}(y - A(.))`` with
``mu_n = (2 eta)^{-1} n^{-1/alpha}``. One projected gradient step is then
taken on ``F_n`` with an Armijo-type backtracking stepsize
``gamma_n = rho**m * gamma_tilde`` where ``m`` is the first exponent for which

    F_n(x) <= F_n(x_n) - c * gamma * ||(x_n - x) / gamma||**2

holds at ``x = P_C(x_n - gamma * grad F_n(x_n))``.
"""

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_matrix, check_scalar
from .exceptions import NumericalFailureError, ParameterError, PreconditionError
from .geometry import SpectralSet
from .losses import SeparableLoss

__all__ = [
    "SolverConfig",
    "SolverTrace",
    "smoothing_schedule",
    "backtrack_step",
    "stationarity_measure",
    "default_initial_point",
    "solve_proposed",
    "TRACE_COLUMNS",
]

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("n", "mu", "gamma", "backtracks", "F_n", "raw_cost", "measure",
                 "elapsed_s", "F_next")

MAX_BACKTRACKS = 100


@dataclass
class SolverConfig:
    """Hyperparameters of the projected variable smoothing iteration.

    ``eta_sched`` is the modulus used in the smoothing schedule. Leave it as
    ``None`` to take the loss's own modulus, or 1.0 for a convex loss whose
    modulus is zero.
    """

    c: float = 2.0 ** -13
    rho: float = 0.5
    gamma_tilde: float = 1.0
    alpha: float = 3.0
    eta_sched: float = None
    tol_rel: float = 1e-9
    max_time_s: float = 60.0
    max_iters: int = 200_000
    init: str = "spectral"
    random_state: int = None
    keep_iterates: bool = False

    def __post_init__(self):
        check_scalar(self.c, "c", lo=0.0, hi=0.5, lo_open=True, hi_open=True)
        check_scalar(self.rho, "rho", lo=0.0, hi=1.0, lo_open=True, hi_open=True)
        check_scalar(self.gamma_tilde, "gamma_tilde", lo=0.0, lo_open=True)
        check_scalar(self.alpha, "alpha", lo=1.0)
        if self.eta_sched is not None:
            check_scalar(self.eta_sched, "eta_sched", lo=0.0, lo_open=True)
        check_scalar(self.tol_rel, "tol_rel", lo=0.0, lo_open=True)
        check_scalar(self.max_time_s, "max_time_s", lo=0.0, lo_open=True)
        check_scalar(self.max_iters, "max_iters", lo=1, integer=True)
        if self.init not in INIT_METHODS:
            raise ParameterError(f"init must be one of {sorted(INIT_METHODS)}, got {self.init!r}")

    def resolved_eta(self, loss):
        """Schedule modulus: explicit `eta_sched`, else the loss's, else 1."""
        if self.eta_sched is not None:
            return float(self.eta_sched)
        return float(loss.eta) if loss.eta > 0 else 1.0


@dataclass
class SolverTrace:
    """Per-iteration diagnostics of a solver run.

    Row ``k`` describes the step from ``x_n`` to ``x_{n+1}`` with ``n = k+1``:
    ``F_n`` and ``F_next`` are the smoothed objective at the two points,
    ``raw_cost`` is ``g(y - A(x_{n+1}))`` and ``measure`` is
    ``||x_n - x_{n+1}|| / gamma_n``.
    """

    n: list = field(default_factory=list)
    mu: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    backtracks: list = field(default_factory=list)
    F_n: list = field(default_factory=list)
    raw_cost: list = field(default_factory=list)
    measure: list = field(default_factory=list)
    elapsed_s: list = field(default_factory=list)
    F_next: list = field(default_factory=list)
    termination_reason: str = None
    initial_raw_cost: float = None
    iterates: list = field(default_factory=list, repr=False)
    best_measure_iterate: np.ndarray = field(default=None, repr=False)
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.n)

    def append(self, **row):
        for name in TRACE_COLUMNS:
            getattr(self, name).append(row[name])

    def as_arrays(self):
        return {name: np.asarray(getattr(self, name)) for name in TRACE_COLUMNS}

    def to_csv(self, path_or_buf=None, columns=TRACE_COLUMNS):
        """Write the trace as CSV; return the text when no target is given."""
        buf = io.StringIO() if path_or_buf is None else None
        fh = buf if buf is not None else (
            open(path_or_buf, "w", newline="") if isinstance(path_or_buf, str) else path_or_buf)
        try:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in zip(*(getattr(self, c) for c in columns)):
                writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
        finally:
            if isinstance(path_or_buf, str):
                fh.close()
        return buf.getvalue() if buf is not None else None


def smoothing_schedule(cfg, n, eta=None):
    """Smoothing parameter ``mu_n = (2 eta)^{-1} n^{-1/alpha}``."""
    eta = cfg.eta_sched if eta is None else eta
    if eta is None:
        raise ParameterError("no schedule modulus given")
    check_scalar(n, "n", lo=1, integer=True)
    return 1.0 / (2.0 * eta) * n ** (-1.0 / cfg.alpha)


class _Objective:
    """Smoothed and raw costs of ``x -> g(y - A x)`` with cached products."""

    def __init__(self, obs, g):
        self.flat = obs.operator.flat
        self.y = obs.y
        self.shape = obs.operator.shape
        self.g = g

    def residual(self, x):
        return self.y - self.flat @ x.ravel()

    def smoothed(self, z, mu):
        return self.g.envelope_and_grad(z, mu)

    def smoothed_value(self, z, mu):
        return self.g.envelope(z, mu)

    def raw(self, z):
        return self.g.value(z)

    def grad_from_outer(self, dz):
        return -(self.flat.T @ dz).reshape(self.shape)


def _backtrack(obj, spectral_set, x, fx, grad, mu, cfg):
    """Backtracking search; returns (x_next, z_next, f_next, gamma, m)."""
    scale = np.linalg.norm(x)
    for m in range(MAX_BACKTRACKS):
        gamma = cfg.rho ** m * cfg.gamma_tilde
        cand = spectral_set.project(x - gamma * grad)
        step = np.linalg.norm(x - cand)
        if step <= 1e-15 * scale:
            # Unchanged to machine precision: both sides of the test coincide.
            return x, None, fx, gamma, m
        z = obj.residual(cand)
        f = obj.smoothed_value(z, mu)
        if f <= fx - cfg.c * gamma * (step / gamma) ** 2:
            return cand, z, f, gamma, m
    raise NumericalFailureError(
        f"backtracking exceeded {MAX_BACKTRACKS} steps (mu={mu:.3e}); "
        "check the gradient and projection")


def backtrack_step(x_n, n, cfg, obs, g, spectral_set):
    """One outer iteration from `x_n`.

    Returns
    -------
    x_next : ndarray
        Accepted point ``P_C(x_n - gamma_n grad F_n(x_n))``.
    gamma : float
        Accepted stepsize ``rho**m * gamma_tilde``.
    m : int
        Number of rejected trial steps before acceptance.
    """
    g = g if isinstance(g, SeparableLoss) else SeparableLoss(g)
    mu = smoothing_schedule(cfg, n, cfg.resolved_eta(g))
    obj = _Objective(obs, g)
    z = obj.residual(check_matrix(x_n, obs.shape))
    fx, dz = obj.smoothed(z, mu)
    x_next, _, _, gamma, m = _backtrack(obj, spectral_set, x_n, fx, obj.grad_from_outer(dz),
                                        mu, cfg)
    return x_next, gamma, m


def stationarity_measure(x, gamma, obs, g, mu, spectral_set):
    """Gradient-mapping measure ``||x - P_C(x - gamma grad F(x))|| / gamma``.

    ``F`` is the smoothed cost ``g^mu(y - A(.))``. The value is zero exactly
    when `x` is a fixed point of the projected gradient map at `gamma`.
    """
    check_scalar(gamma, "gamma", lo=0.0, lo_open=True)
    g = g if isinstance(g, SeparableLoss) else SeparableLoss(g)
    obj = _Objective(obs, g)
    _, dz = obj.smoothed(obj.residual(check_matrix(x, obs.shape)), mu)
    p = spectral_set.project(x - gamma * obj.grad_from_outer(dz))
    return float(np.linalg.norm(x - p) / gamma)


def _spectral_init(obs, spectral_set, cfg):
    return spectral_set.project(obs.operator.adjoint(obs.y) / obs.m)


def _random_init(obs, spectral_set, cfg):
    return spectral_set.random_member(cfg.random_state)


INIT_METHODS = {
    "spectral": _spectral_init,
    "random": _random_init,
}


def default_initial_point(obs, spectral_set, cfg):
    return INIT_METHODS[cfg.init](obs, spectral_set, cfg)


def solve_proposed(obs, g, spectral_set, cfg=None, x_init=None):
    """Run projected variable smoothing until a stopping rule fires.

    Parameters
    ----------
    obs : Observation
    g : SeparableLoss or ScalarLoss or str
        Loss applied to the residual ``y - A(x)``.
    spectral_set : SpectralSet
        Feasible set; every iterate is a member.
    cfg : SolverConfig, optional
    x_init : ndarray, optional
        Feasible starting point; defaults to the method named by ``cfg.init``.

    Returns
    -------
    x_hat : ndarray of shape (n1, n2)
        Final iterate.
    trace : SolverTrace

    Notes
    -----
    The run stops when the relative change of the raw cost
    ``g(y - A(x_n))`` between consecutive iterates drops below
    ``cfg.tol_rel``, when ``cfg.max_time_s`` elapses (checked between
    iterations) or after ``cfg.max_iters`` iterations.
    """
    cfg = SolverConfig() if cfg is None else cfg
    g = g if isinstance(g, SeparableLoss) else SeparableLoss(g, obs.m)
    if spectral_set.shape != tuple(obs.shape):
        raise ParameterError(f"set shape {spectral_set.shape} != operator shape {obs.shape}")
    eta = cfg.resolved_eta(g)
    if g.eta > 0 and eta < g.eta:
        raise ParameterError(f"eta_sched={eta} smaller than loss modulus {g.eta}")

    t0 = time.perf_counter()
    if x_init is None:
        x = default_initial_point(obs, spectral_set, cfg)
    else:
        x = check_matrix(x_init, obs.shape, name="x_init").copy()
        tol = 1e-8 * max(1.0, np.linalg.norm(x, 2))
        if not spectral_set.contains(x, tol):
            raise PreconditionError("x_init is not a member of the spectral set")

    obj = _Objective(obs, g)
    trace = SolverTrace()
    z = obj.residual(x)
    cost = obj.raw(z)
    trace.initial_raw_cost = cost
    best_measure = math.inf
    if cfg.keep_iterates:
        trace.iterates.append(x.copy())

    n = 1
    reason = "IterLimit"
    while True:
        mu = smoothing_schedule(cfg, n, eta)
        fx, dz = obj.smoothed(z, mu)
        grad = obj.grad_from_outer(dz)
        x_next, z_next, f_next, gamma, m = _backtrack(obj, spectral_set, x, fx, grad, mu, cfg)
        if z_next is None:
            z_next = z
        measure = float(np.linalg.norm(x - x_next) / gamma)
        new_cost = obj.raw(z_next)
        if measure < best_measure:
            best_measure = measure
            trace.best_measure_iterate = x
        elapsed = time.perf_counter() - t0
        trace.append(n=n, mu=mu, gamma=gamma, backtracks=m, F_n=fx, raw_cost=new_cost,
                     measure=measure, elapsed_s=elapsed, F_next=f_next)
        x, z = x_next, z_next
        if cfg.keep_iterates:
            trace.iterates.append(x.copy())

        if cost == 0.0 or abs(new_cost - cost) < cfg.tol_rel * abs(cost):
            reason = "RelTol"
            break
        cost = new_cost
        if elapsed >= cfg.max_time_s:
            reason = "TimeLimit"
            break
        if n >= cfg.max_iters:
            reason = "IterLimit"
            break
        n += 1

    trace.termination_reason = reason
    logger.debug("solve_proposed stopped after %d iterations: %s", n, reason)
    return x, trace

