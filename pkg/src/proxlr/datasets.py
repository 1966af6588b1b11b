"""Synthetic robust low-rank recovery instances.

``X* = U* V*^T`` with standard normal factors, standard normal sensing
matrices, Gaussian noise on the inliers and gross outliers replacing a
random subset of the measurements. Randomness is drawn from independent
streams keyed by ``(seed, trial, stream)`` so an instance never depends on
which solver consumes it or on the order trials are run in.
"""

import numpy as np

from ._validation import check_scalar
from .exceptions import ParameterError
from .operators import GroundTruth, Observation, SensingOperator

__all__ = ["make_instance", "trial_rng", "OUTLIER_KINDS"]

OUTLIER_KINDS = ("uniform", "cauchy")

_STREAM_FACTORS, _STREAM_SENSING, _STREAM_NOISE, _STREAM_OUTLIERS = range(4)


def trial_rng(seed, trial, stream):
    """Generator for one (seed, trial, stream) triple."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial), int(stream)]))


def cauchy_outliers(omega, size, rng):
    """``omega * tan(pi u / 2)`` with ``u ~ U(-1, 1)``, i.e. Cauchy with scale `omega`."""
    u = rng.uniform(-1.0, 1.0, size)
    return omega * np.tan(0.5 * np.pi * u)


def make_instance(n1, n2, r, p_m, p_out, outlier_kind="uniform", noise_var=1e-6,
                  seed=0, trial=0):
    """Draw one corrupted measurement problem.

    Parameters
    ----------
    n1, n2, r : int
        Matrix shape and rank of the planted matrix.
    p_m : float in (0, 1]
        Sampling ratio; ``m = round(p_m * n1 * n2)``.
    p_out : float in [0, 1)
        Outlier ratio; ``round(p_out * m)`` measurements are replaced.
    outlier_kind : {'uniform', 'cauchy'}
        Uniform outliers are drawn from ``[-Omega, Omega]``, Cauchy ones as
        ``Omega * tan(pi u / 2)``, where ``Omega = max_i |A_i(X*)|``.
    noise_var : float
        Variance of the Gaussian noise on inliers.

    Returns
    -------
    obs : Observation
    truth : GroundTruth
    """
    for name, val in (("n1", n1), ("n2", n2), ("r", r)):
        check_scalar(val, name, lo=1, integer=True)
    if r > min(n1, n2):
        raise ParameterError(f"rank {r} exceeds min(n1, n2)")
    check_scalar(p_m, "p_m", lo=0.0, hi=1.0, lo_open=True)
    check_scalar(p_out, "p_out", lo=0.0, hi=1.0, hi_open=True)
    check_scalar(noise_var, "noise_var", lo=0.0)
    if outlier_kind not in OUTLIER_KINDS:
        raise ParameterError(f"outlier_kind must be one of {OUTLIER_KINDS}")
    m = int(round(p_m * n1 * n2))
    if m < 1:
        raise ParameterError("p_m * n1 * n2 rounds to zero measurements")
    k = int(round(p_out * m))

    rng = trial_rng(seed, trial, _STREAM_FACTORS)
    u_star = rng.standard_normal((n1, r))
    v_star = rng.standard_normal((n2, r))
    x_star = u_star @ v_star.T

    mats = trial_rng(seed, trial, _STREAM_SENSING).standard_normal((m, n1, n2))
    op = SensingOperator(mats)
    clean = op.forward(x_star)

    noise = np.sqrt(noise_var) * trial_rng(seed, trial, _STREAM_NOISE).standard_normal(m)

    rng = trial_rng(seed, trial, _STREAM_OUTLIERS)
    outlier_idx = np.sort(rng.choice(m, size=k, replace=False))
    omega = float(np.max(np.abs(clean)))
    if outlier_kind == "uniform":
        xi = rng.uniform(-omega, omega, k)
    else:
        xi = cauchy_outliers(omega, k, rng)

    inlier_mask = np.ones(m, dtype=bool)
    inlier_mask[outlier_idx] = False
    noise[~inlier_mask] = 0.0
    y = clean + noise
    y[outlier_idx] = xi

    truth = GroundTruth(x_star=x_star, rank_r=r, inlier_idx=np.flatnonzero(inlier_mask),
                        outlier_idx=outlier_idx, noise=noise, outliers=xi,
                        factors=(u_star, v_star))
    return Observation(y, op), truth
