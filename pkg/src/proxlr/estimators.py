"""Scikit-learn compatible estimators for robust low-rank matrix recovery.

Each estimator treats the sensing matrices as the design: ``fit(X, y)``
takes ``X`` of shape ``(m, n1, n2)`` (or a :class:`SensingOperator`) and the
measurements ``y`` of shape ``(m,)``, stores the recovered low-rank matrix
in ``coef_`` and predicts ``<A_i, coef_>`` for new sensing matrices.

Examples
--------
>>> from proxlr import ProjectedVariableSmoothing, make_instance
>>> obs, truth = make_instance(8, 6, 1, 0.9, 0.0, seed=0)
>>> est = ProjectedVariableSmoothing(rank=1, loss="scad:3", max_time=5).fit(
...     obs.operator, obs.y)
>>> est.coef_.shape
(8, 6)
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_sensing_array, check_vector
from .baselines import FactoredModelConfig, NuclearModelConfig, factored_subgradient, nuclear_dca
from .exceptions import DimensionError
from .geometry import SpectralSet
from .losses import SeparableLoss, parse_loss
from .operators import Observation, SensingOperator
from .pvs import SolverConfig, solve_proposed

__all__ = [
    "ProjectedVariableSmoothing",
    "FactoredSubgradient",
    "NuclearDCA",
]


def _as_operator(X):
    if isinstance(X, SensingOperator):
        return X
    return SensingOperator(check_sensing_array(X))


class _LowRankRegressor(RegressorMixin, BaseEstimator):
    """Shared validation and prediction for the low-rank estimators."""

    def _validate_fit(self, X, y):
        op = _as_operator(X)
        y = check_vector(y, name="y")
        if y.shape[0] != op.m:
            raise DimensionError(f"X holds {op.m} sensing matrices but y has length {y.shape[0]}")
        self.n_features_in_ = op.n1 * op.n2
        self.matrix_shape_ = op.shape
        return Observation(y, op)

    def predict(self, X):
        """Apply the recovered matrix to new sensing matrices.

        Parameters
        ----------
        X : array-like of shape (m, n1, n2) or SensingOperator

        Returns
        -------
        y_pred : ndarray of shape (m,)
        """
        check_is_fitted(self, "coef_")
        op = _as_operator(X)
        if op.shape != self.matrix_shape_:
            raise DimensionError(f"sensing matrices have shape {op.shape}, "
                                 f"estimator was fitted on {self.matrix_shape_}")
        return op.forward(self.coef_)

    def _more_tags(self):
        return {"requires_y": True}


class ProjectedVariableSmoothing(_LowRankRegressor):
    """Weakly convex robust loss minimised over a prox-regular low-rank set.

    Parameters
    ----------
    rank : int, default=5
        Rank cap of the feasible set.
    sigma : float, default=1.0
        Lower bound on the nonzero singular values of the estimate.
    loss : str or ScalarLoss, default="scad:2.5"
        ``'l1'``, ``'scad:<theta>'`` or ``'mcp:<theta>'``.
    c, rho, gamma_tilde, alpha : float
        Sufficient-decrease constant, backtracking factor, initial stepsize
        and smoothing-decay exponent.
    eta_sched : float, optional
        Modulus in the smoothing schedule; defaults to the loss's own
        modulus, or 1 for the convex l1 loss.
    tol : float, default=1e-9
        Relative change of the loss value that stops the iteration.
    max_time : float, default=60
        Wall-clock budget in seconds.
    max_iter : int, default=200000
    init : {'spectral', 'random'}, default='spectral'
        Starting point when ``fit`` gets no `x_init`.
    random_state : int, optional
        Seed for ``init='random'``.

    Attributes
    ----------
    coef_ : ndarray of shape (n1, n2)
        Recovered low-rank matrix.
    trace_ : SolverTrace
    n_iter_ : int
    termination_reason_ : str
    """

    def __init__(self, rank=5, sigma=1.0, loss="scad:2.5", *, c=2.0 ** -13, rho=0.5,
                 gamma_tilde=1.0, alpha=3.0, eta_sched=None, tol=1e-9, max_time=60.0,
                 max_iter=200_000, init="spectral", random_state=None):
        self.rank = rank
        self.sigma = sigma
        self.loss = loss
        self.c = c
        self.rho = rho
        self.gamma_tilde = gamma_tilde
        self.alpha = alpha
        self.eta_sched = eta_sched
        self.tol = tol
        self.max_time = max_time
        self.max_iter = max_iter
        self.init = init
        self.random_state = random_state

    def _config(self, keep_iterates=False):
        return SolverConfig(c=self.c, rho=self.rho, gamma_tilde=self.gamma_tilde,
                            alpha=self.alpha, eta_sched=self.eta_sched, tol_rel=self.tol,
                            max_time_s=self.max_time, max_iters=self.max_iter, init=self.init,
                            random_state=self.random_state, keep_iterates=keep_iterates)

    def fit(self, X, y, x_init=None):
        """Recover the low-rank matrix from measurements `y`.

        Parameters
        ----------
        X : array-like of shape (m, n1, n2) or SensingOperator
        y : array-like of shape (m,)
        x_init : ndarray of shape (n1, n2), optional
            Feasible starting point.

        Returns
        -------
        self
        """
        obs = self._validate_fit(X, y)
        n1, n2 = obs.shape
        self.loss_ = SeparableLoss(parse_loss(self.loss), obs.m)
        self.spectral_set_ = SpectralSet(self.rank, float(self.sigma), n1, n2)
        self.coef_, self.trace_ = solve_proposed(obs, self.loss_, self.spectral_set_,
                                                 self._config(), x_init=x_init)
        self.n_iter_ = len(self.trace_)
        self.termination_reason_ = self.trace_.termination_reason
        return self

    def cost(self, X, y):
        """Unsmoothed loss ``sum_i l(y_i - <A_i, coef_>)``."""
        return self.loss_.value(check_vector(y, name="y") - self.predict(X))


class FactoredSubgradient(_LowRankRegressor):
    """Subgradient method on the balanced factored l1 model.

    Parameters
    ----------
    rank : int, default=5
    lam : float, default=1.0
        Weight of the balance term ``||U^T U - V^T V||_F``.
    step_base, step_decay : float
        Stepsize at iteration ``n`` is ``step_base * step_decay**n``.
    tol, max_time, max_iter
        Stopping rules as in :class:`ProjectedVariableSmoothing`.
    init : {'spectral', 'gaussian'}, default='spectral'
    normalize : bool, default=True
        Average the data term over the measurements.
    random_state : int, optional
        Seed for ``init='gaussian'``.
    """

    def __init__(self, rank=5, lam=1.0, *, step_base=1.0, step_decay=0.95, tol=1e-9,
                 max_time=60.0, max_iter=100_000, init="spectral", normalize=True,
                 random_state=None):
        self.rank = rank
        self.lam = lam
        self.step_base = step_base
        self.step_decay = step_decay
        self.tol = tol
        self.max_time = max_time
        self.max_iter = max_iter
        self.init = init
        self.normalize = normalize
        self.random_state = random_state

    def fit(self, X, y):
        obs = self._validate_fit(X, y)
        cfg = FactoredModelConfig(rank=self.rank, lam=self.lam, step_base=self.step_base,
                                  step_decay=self.step_decay, max_time_s=self.max_time,
                                  tol_rel=self.tol, max_iters=self.max_iter, init=self.init,
                                  normalize=self.normalize, random_state=self.random_state)
        self.coef_, self.trace_ = factored_subgradient(obs, cfg)
        self.n_iter_ = len(self.trace_)
        self.termination_reason_ = self.trace_.termination_reason
        return self

    def cost(self, X, y):
        return float(np.sum(np.abs(check_vector(y, name="y") - self.predict(X))))


class NuclearDCA(_LowRankRegressor):
    """DC algorithm on the l1 fit with a nuclear-minus-Frobenius penalty.

    Parameters
    ----------
    t_weight : float, default=0.1
        The penalty weight is ``t_weight * sqrt(m * n2 * log(n1 + n2))``.
    beta : float, default=0.5
        Weight of the subtracted Frobenius norm, in (0, 1).
    admm_penalty : float, default=1.0
    admm_max_iter : int, default=500
    admm_tol : float, default=1e-6
    max_dca_iter : int, default=1000
    tol, max_time
        Outer stopping rules.
    """

    def __init__(self, t_weight=0.1, beta=0.5, *, admm_penalty=1.0, admm_max_iter=500,
                 admm_tol=1e-6, max_dca_iter=1000, tol=1e-9, max_time=60.0):
        self.t_weight = t_weight
        self.beta = beta
        self.admm_penalty = admm_penalty
        self.admm_max_iter = admm_max_iter
        self.admm_tol = admm_tol
        self.max_dca_iter = max_dca_iter
        self.tol = tol
        self.max_time = max_time

    def fit(self, X, y):
        obs = self._validate_fit(X, y)
        cfg = NuclearModelConfig(t_weight=self.t_weight, beta=self.beta,
                                 admm_penalty=self.admm_penalty,
                                 admm_max_iters=self.admm_max_iter, admm_tol=self.admm_tol,
                                 dca_max_iters=self.max_dca_iter, max_time_s=self.max_time,
                                 tol_rel=self.tol)
        self.coef_, self.trace_ = nuclear_dca(obs, cfg)
        self.n_iter_ = len(self.trace_)
        self.termination_reason_ = self.trace_.termination_reason
        return self

    def cost(self, X, y):
        return float(np.sum(np.abs(check_vector(y, name="y") - self.predict(X))))
