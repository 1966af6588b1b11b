"""Comparison solvers built on the convex l1 data fit.

* :func:`factored_subgradient` minimises the balanced factorisation model
  ``||y - A(U V^T)||_1 + lam ||U^T U - V^T V||_F`` with a subgradient method
  and geometrically decaying stepsizes.
* :func:`nuclear_dca` minimises
  ``||y - A(X)||_1 + lam (||X||_nuc - beta ||X||_F)`` by a DC algorithm whose
  convex subproblems are solved with ADMM.
"""

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._validation import check_scalar
from .exceptions import ParameterError
from .geometry import nuclear_norm, singular_value_threshold, truncated_rank_project

__all__ = [
    "FactoredModelConfig",
    "NuclearModelConfig",
    "BaselineTrace",
    "factored_cost",
    "factored_subgradient",
    "nuclear_objective",
    "nuclear_weight",
    "NormalEquationSolver",
    "admm_subproblem",
    "nuclear_dca",
]

logger = logging.getLogger(__name__)


@dataclass
class BaselineTrace:
    """Per-iteration log shared by the baseline solvers.

    ``cost`` holds the model objective at each iterate; ``incumbent`` is the
    best cost seen so far (equal to ``cost`` for monotone methods) and
    ``inner_iters`` counts ADMM iterations (zero for the subgradient method).
    """

    n: list = field(default_factory=list)
    step: list = field(default_factory=list)
    cost: list = field(default_factory=list)
    incumbent: list = field(default_factory=list)
    inner_iters: list = field(default_factory=list)
    elapsed_s: list = field(default_factory=list)
    termination_reason: str = None
    warnings: list = field(default_factory=list)

    COLUMNS = ("n", "step", "cost", "incumbent", "inner_iters", "elapsed_s")

    def __len__(self):
        return len(self.n)

    def append(self, **row):
        for name in self.COLUMNS:
            getattr(self, name).append(row[name])

    def to_csv(self, path_or_buf=None):
        buf = io.StringIO() if path_or_buf is None else None
        fh = buf if buf is not None else (
            open(path_or_buf, "w", newline="") if isinstance(path_or_buf, str) else path_or_buf)
        try:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            for row in zip(*(getattr(self, c) for c in self.COLUMNS)):
                writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
        finally:
            if isinstance(path_or_buf, str):
                fh.close()
        return buf.getvalue() if buf is not None else None


# -- factored l1 model -------------------------------------------------------

@dataclass
class FactoredModelConfig:
    """Settings for the subgradient method on the balanced factored model.

    With ``normalize=True`` the data term is averaged over the ``m``
    measurements, which puts the subgradient on the scale the geometric
    stepsizes ``step_base * step_decay**n`` are designed for.
    """

    rank: int = 5
    lam: float = 1.0
    step_base: float = 1.0
    step_decay: float = 0.95
    max_time_s: float = 60.0
    tol_rel: float = 1e-9
    max_iters: int = 100_000
    init: str = "spectral"
    init_scale: float = None
    normalize: bool = True
    random_state: int = None

    LAMBDA_GRID = (1e-2, 1e-1, 1.0, 2.0, 5.0)
    STEP_BASE_GRID = (1.0, 2.0)

    def __post_init__(self):
        check_scalar(self.rank, "rank", lo=1, integer=True)
        check_scalar(self.lam, "lam", lo=0.0)
        check_scalar(self.step_base, "step_base", lo=0.0, lo_open=True)
        check_scalar(self.step_decay, "step_decay", lo=0.0, hi=1.0, lo_open=True, hi_open=True)
        check_scalar(self.max_time_s, "max_time_s", lo=0.0, lo_open=True)
        check_scalar(self.tol_rel, "tol_rel", lo=0.0, lo_open=True)
        check_scalar(self.max_iters, "max_iters", lo=1, integer=True)
        if self.init not in ("spectral", "gaussian"):
            raise ParameterError("init must be 'spectral' or 'gaussian'")


def factored_cost(obs, u, v, lam, normalize=False):
    """Objective of the balanced factored model at ``(u, v)``."""
    fit = np.sum(np.abs(obs.y - obs.operator.flat @ (u @ v.T).ravel()))
    if normalize:
        fit /= obs.m
    return float(fit + lam * np.linalg.norm(u.T @ u - v.T @ v))


def factored_subgradient_at(obs, u, v, lam, normalize=False):
    """One element of the subdifferential of the factored cost.

    The sign of a zero residual is taken as 0 and the balance term is
    dropped when ``U^T U = V^T V``.
    """
    r = obs.operator.flat @ (u @ v.T).ravel() - obs.y
    s = obs.operator.adjoint(np.sign(r))
    if normalize:
        s /= obs.m
    gu = s @ v
    gv = s.T @ u
    d = u.T @ u - v.T @ v
    dn = np.linalg.norm(d)
    if lam > 0 and dn > 0:
        gu += 2.0 * lam * (u @ d) / dn
        gv -= 2.0 * lam * (v @ d) / dn
    return gu, gv


def _factored_init(obs, cfg):
    n1, n2 = obs.shape
    r = cfg.rank
    if cfg.init == "spectral":
        u, s, vt = np.linalg.svd(obs.operator.adjoint(obs.y) / obs.m, full_matrices=False)
        root = np.sqrt(s[:r])
        return u[:, :r] * root, vt[:r].T * root
    scale = cfg.init_scale
    if scale is None:
        scale = math.sqrt(np.linalg.norm(obs.operator.adjoint(obs.y))) / math.sqrt(obs.m * r)
    rng = np.random.default_rng(cfg.random_state)
    return scale * rng.standard_normal((n1, r)), scale * rng.standard_normal((n2, r))


def factored_subgradient(obs, cfg=None, init=None):
    """Subgradient method on the balanced factored l1 model.

    Returns
    -------
    x_hat : ndarray
        ``U V^T`` at the iterate with the lowest cost seen.
    trace : BaselineTrace
    """
    cfg = FactoredModelConfig() if cfg is None else cfg
    t0 = time.perf_counter()
    u, v = _factored_init(obs, cfg) if init is None else (np.array(init[0]), np.array(init[1]))
    trace = BaselineTrace()
    cost = factored_cost(obs, u, v, cfg.lam, cfg.normalize)
    best = (cost, u @ v.T)
    reason = "IterLimit"
    for n in range(1, cfg.max_iters + 1):
        step = cfg.step_base * cfg.step_decay ** n
        gu, gv = factored_subgradient_at(obs, u, v, cfg.lam, cfg.normalize)
        u, v = u - step * gu, v - step * gv
        with np.errstate(over="ignore", invalid="ignore"):
            new_cost = factored_cost(obs, u, v, cfg.lam, cfg.normalize)
        if not np.isfinite(new_cost):
            trace.warnings.append(f"cost diverged at iteration {n}")
            reason = "Diverged"
            break
        if new_cost < best[0]:
            best = (new_cost, u @ v.T)
        elapsed = time.perf_counter() - t0
        trace.append(n=n, step=step, cost=new_cost, incumbent=best[0], inner_iters=0,
                     elapsed_s=elapsed)
        if cost == 0.0 or abs(new_cost - cost) < cfg.tol_rel * abs(cost):
            reason = "RelTol"
            break
        cost = new_cost
        if elapsed >= cfg.max_time_s:
            reason = "TimeLimit"
            break
    trace.termination_reason = reason
    return best[1], trace


# -- nuclear-minus-Frobenius model --------------------------------------------

def nuclear_weight(t, m, n1, n2):
    """Regularisation weight ``t * sqrt(m * n2 * log(n1 + n2))``."""
    return t * math.sqrt(m * n2 * math.log(n1 + n2))


@dataclass
class NuclearModelConfig:
    """Settings for DCA with ADMM on the nuclear-minus-Frobenius model."""

    t_weight: float = 0.1
    beta: float = 0.5
    admm_penalty: float = 1.0
    admm_max_iters: int = 500
    admm_tol: float = 1e-6
    dca_max_iters: int = 1000
    max_time_s: float = 60.0
    tol_rel: float = 1e-9

    T_GRID = (0.1, 0.5)
    BETA_GRID = (0.1, 0.5, 0.9)

    def __post_init__(self):
        check_scalar(self.t_weight, "t_weight", lo=0.0)
        check_scalar(self.beta, "beta", lo=0.0, hi=1.0, lo_open=True, hi_open=True)
        check_scalar(self.admm_penalty, "admm_penalty", lo=0.0, lo_open=True)
        check_scalar(self.admm_max_iters, "admm_max_iters", lo=1, integer=True)
        check_scalar(self.admm_tol, "admm_tol", lo=0.0, lo_open=True)
        check_scalar(self.dca_max_iters, "dca_max_iters", lo=1, integer=True)
        check_scalar(self.max_time_s, "max_time_s", lo=0.0, lo_open=True)
        check_scalar(self.tol_rel, "tol_rel", lo=0.0, lo_open=True)


def nuclear_objective(obs, x, lam, beta):
    fit = np.sum(np.abs(obs.y - obs.operator.flat @ x.ravel()))
    return float(fit + lam * (nuclear_norm(x) - beta * np.linalg.norm(x)))


class NormalEquationSolver:
    """Solve ``(A^T A + I) x = b`` with a cached Cholesky factorisation.

    The smaller of the two Gram systems is factorised: ``A^T A + I`` when
    ``n1*n2 <= m``, otherwise ``I + A A^T`` through the Woodbury identity.
    """

    def __init__(self, operator):
        a = operator.flat
        self.a = a
        self.shape = operator.shape
        m, n = a.shape
        self.primal = n <= m
        gram = a.T @ a if self.primal else a @ a.T
        gram[np.diag_indices_from(gram)] += 1.0
        self.factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)

    def solve(self, b):
        b = b.ravel()
        if self.primal:
            x = scipy.linalg.cho_solve(self.factor, b, check_finite=False)
        else:
            x = b - self.a.T @ scipy.linalg.cho_solve(self.factor, self.a @ b,
                                                      check_finite=False)
        return x.reshape(self.shape)


def admm_subproblem(obs, lam, linear, penalty, x0=None, max_iters=500, tol=1e-6,
                    solver=None, deadline=None, state=None):
    """ADMM for ``min_X ||y - A X||_1 + lam ||X||_nuc - <linear, X>``.

    Splitting ``z = A X`` and ``S = X`` with scaled duals ``u, v``; the
    z-step soft-thresholds the residual, the S-step soft-thresholds singular
    values at ``lam / penalty`` and the X-step solves the normal equations
    ``penalty (A^T A + I) X = linear + penalty (A^T (z - u) + S - v)``.

    Returns
    -------
    x : ndarray
    info : dict
        ``iters``, ``converged``, the residual histories ``primal`` and
        ``dual``, and ``state`` (warm-start variables for a later call).
    """
    op = obs.operator
    a, y = op.flat, obs.y
    solver = NormalEquationSolver(op) if solver is None else solver
    if state is not None:
        x, z, s, u, v = (np.array(w) for w in state)
    else:
        x = np.zeros(op.shape) if x0 is None else np.array(x0, dtype=np.float64)
        z = a @ x.ravel()
        s = x.copy()
        u = np.zeros_like(z)
        v = np.zeros_like(x)
    primal_hist, dual_hist = [], []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        x = solver.solve(linear / penalty + (a.T @ (z - u)).reshape(op.shape) + s - v)
        ax = a @ x.ravel()
        w = y - (ax + u)
        z_old, s_old = z, s
        z = y - np.sign(w) * np.maximum(np.abs(w) - 1.0 / penalty, 0.0)
        s = singular_value_threshold(x + v, lam / penalty)
        rz, rs = ax - z, x - s
        u = u + rz
        v = v + rs
        primal = math.sqrt(np.dot(rz, rz) + np.sum(rs * rs))
        dual = penalty * np.linalg.norm((a.T @ (z - z_old)).reshape(op.shape) + (s - s_old))
        primal_hist.append(primal)
        dual_hist.append(dual)
        scale_p = max(1.0, math.sqrt(np.dot(ax, ax) + np.sum(x * x)),
                      math.sqrt(np.dot(z, z) + np.sum(s * s)))
        scale_d = max(1.0, penalty * np.linalg.norm((a.T @ u).reshape(op.shape) + v))
        if primal <= tol * scale_p and dual <= tol * scale_d:
            converged = True
            break
        if deadline is not None and time.perf_counter() >= deadline:
            break
    return s, {"iters": it, "converged": converged, "primal": primal_hist,
               "dual": dual_hist, "state": (x, z, s, u, v)}


def nuclear_dca(obs, cfg=None):
    """DC algorithm on ``||y - A X||_1 + lam (||X||_nuc - beta ||X||_F)``.

    The concave part ``-lam beta ||X||_F`` is linearised at ``X_k`` through
    ``W_k = X_k / ||X_k||_F`` (zero when ``X_k = 0``) and the convex
    remainder is minimised by :func:`admm_subproblem`, warm-started from the
    previous ADMM state. The final iterate is returned.
    """
    cfg = NuclearModelConfig() if cfg is None else cfg
    t0 = time.perf_counter()
    deadline = t0 + cfg.max_time_s
    n1, n2 = obs.shape
    lam = nuclear_weight(cfg.t_weight, obs.m, n1, n2)
    penalty = cfg.admm_penalty
    solver = NormalEquationSolver(obs.operator)
    x = truncated_rank_project(obs.operator.adjoint(obs.y) / obs.m, min(n1, n2))
    trace = BaselineTrace()
    cost = nuclear_objective(obs, x, lam, cfg.beta)
    state = None
    reason = "IterLimit"
    for k in range(1, cfg.dca_max_iters + 1):
        nx = np.linalg.norm(x)
        w = x / nx if nx > 0 else np.zeros_like(x)
        x_new, info = admm_subproblem(obs, lam, lam * cfg.beta * w, penalty, x0=x,
                                      max_iters=cfg.admm_max_iters, tol=cfg.admm_tol,
                                      solver=solver, deadline=deadline, state=state)
        state = info["state"]
        if not info["converged"]:
            trace.warnings.append(f"ADMM stopped unconverged at DCA iteration {k} "
                                  f"after {info['iters']} iterations")
        new_cost = nuclear_objective(obs, x_new, lam, cfg.beta)
        elapsed = time.perf_counter() - t0
        trace.append(n=k, step=lam, cost=new_cost, incumbent=min(new_cost, cost),
                     inner_iters=info["iters"], elapsed_s=elapsed)
        x = x_new
        if cost == 0.0 or abs(new_cost - cost) < cfg.tol_rel * abs(cost):
            reason = "RelTol"
            break
        cost = new_cost
        if elapsed >= cfg.max_time_s:
            reason = "TimeLimit"
            break
    trace.termination_reason = reason
    return x, trace
