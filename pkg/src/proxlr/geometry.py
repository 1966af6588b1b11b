"""Spectral constraint sets for low-rank recovery.

The solver's feasible set holds every nonzero matrix of rank at most ``r``
whose nonzero singular values are all at least ``sigma``. Forbidding the
band ``(0, sigma)`` makes the set prox-regular, so its metric projection is
single valued near the set, unlike the plain rank ball. The projection
acts on singular values only.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_matrix, check_scalar
from .exceptions import DegenerateInputError, ParameterError

__all__ = [
    "SpectralSet",
    "contains",
    "project",
    "truncated_rank_project",
    "singular_value_threshold",
    "nuclear_norm",
]


def _svd(x):
    return np.linalg.svd(x, full_matrices=False)


def _spectral_map(s, r, sigma):
    """Nearest admissible spectrum for singular values `s` (descending)."""
    p = np.where(s >= sigma, s, np.where(s >= 0.5 * sigma, sigma, 0.0))
    p[r:] = 0.0
    if not np.any(p):
        p[0] = sigma
    return p


@dataclass(frozen=True)
class SpectralSet:
    """Matrices with ``1 <= rank <= r`` and nonzero singular values ``>= sigma``.

    Parameters
    ----------
    r : int
        Rank cap, ``1 <= r <= min(n1, n2)``.
    sigma : float
        Floor for the nonzero singular values.
    n1, n2 : int
        Ambient matrix shape.
    """

    r: int
    sigma: float
    n1: int
    n2: int

    def __post_init__(self):
        check_scalar(self.n1, "n1", lo=1, integer=True)
        check_scalar(self.n2, "n2", lo=1, integer=True)
        check_scalar(self.r, "r", lo=1, hi=min(self.n1, self.n2), integer=True)
        check_scalar(self.sigma, "sigma", lo=0.0, lo_open=True)

    @property
    def shape(self):
        return (self.n1, self.n2)

    def contains(self, x, tol=None):
        """Membership test with tolerance band `tol`.

        The default band is ``1e-9 * max(1, sigma_1(x))``.
        """
        x = check_matrix(x, self.shape)
        s = np.linalg.svd(x, compute_uv=False)
        if tol is None:
            tol = 1e-9 * max(1.0, s[0] if s.size else 0.0)
        nonzero = s > tol
        rank = int(np.count_nonzero(nonzero))
        if not 1 <= rank <= self.r:
            return False
        return bool(np.all(s[nonzero] >= self.sigma - tol))

    def project(self, x, return_svd=False):
        """Metric projection onto the set.

        Singular values at or above ``sigma`` are kept, those in
        ``[sigma/2, sigma)`` are lifted to ``sigma`` and smaller ones are
        dropped; only the ``r`` leading values survive. When nothing
        survives, the leading value is set to ``sigma`` because the zero
        matrix is excluded. The tie ``s = sigma/2`` resolves to ``sigma``.

        Raises
        ------
        DegenerateInputError
            If `x` is exactly zero, where every rank-one matrix of norm
            ``sigma`` is a nearest point.
        """
        x = check_matrix(x, self.shape)
        u, s, vt = _svd(x)
        if s[0] == 0.0:
            raise DegenerateInputError("projection of the zero matrix is not unique")
        p = _spectral_map(s, self.r, self.sigma)
        k = int(np.count_nonzero(p))
        out = (u[:, :k] * p[:k]) @ vt[:k]
        if return_svd:
            return out, (u[:, :k], p[:k], vt[:k])
        return out

    def random_member(self, random_state=None, scale=None):
        """Draw a member with Haar-random singular vectors.

        The rank is uniform on ``1..r`` and the nonzero singular values are
        ``sigma`` plus an exponential draw with mean `scale` (default
        ``sigma``).
        """
        rng = np.random.default_rng(random_state)
        scale = self.sigma if scale is None else scale
        k = int(rng.integers(1, self.r + 1))
        q1, _ = np.linalg.qr(rng.standard_normal((self.n1, self.n1)))
        q2, _ = np.linalg.qr(rng.standard_normal((self.n2, self.n2)))
        s = self.sigma + rng.exponential(scale, size=k)
        return (q1[:, :k] * s) @ q2[:, :k].T


def contains(spectral_set, x, tol=None):
    return spectral_set.contains(x, tol)


def project(spectral_set, x):
    return spectral_set.project(x)


def truncated_rank_project(x, r):
    """Best Frobenius approximation of rank at most `r` (top-r SVD)."""
    x = check_matrix(x)
    check_scalar(r, "r", lo=1, integer=True)
    if r >= min(x.shape):
        return x.copy()
    u, s, vt = _svd(x)
    return (u[:, :r] * s[:r]) @ vt[:r]


def singular_value_threshold(x, level):
    """Proximity map of ``level * ||.||_nuc``: soft-threshold the spectrum."""
    x = check_matrix(x)
    if level < 0:
        raise ParameterError("threshold level must be nonnegative")
    u, s, vt = _svd(x)
    s = np.maximum(s - level, 0.0)
    k = int(np.count_nonzero(s))
    return (u[:, :k] * s[:k]) @ vt[:k]


def nuclear_norm(x):
    return float(np.sum(np.linalg.svd(x, compute_uv=False)))
