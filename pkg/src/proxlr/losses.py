"""Weakly convex scalar losses, their proximity maps and Moreau envelopes.

Every loss ``l`` here is even, nonnegative, vanishes at zero and is
``eta``-weakly convex, i.e. ``l + (eta/2) t**2`` is convex. For a step
``0 < mu < 1/eta`` the proximity map

    prox_{mu l}(t) = argmin_u  l(u) + (u - t)**2 / (2 mu)

is single valued and the Moreau envelope ``l^mu`` is differentiable with
gradient ``(t - prox_{mu l}(t)) / mu``. A separable loss
``g(z) = sum_i l(z_i)`` inherits all of this coordinatewise.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_scalar
from .exceptions import ParameterError

__all__ = [
    "ScalarLoss",
    "AbsoluteLoss",
    "SCADLoss",
    "MCPLoss",
    "SeparableLoss",
    "parse_loss",
    "loss_eval",
    "loss_prox",
    "envelope_eval",
    "envelope_grad",
    "composite_grad",
]


class ScalarLoss:
    """Interface for a scalar loss with a closed-form proximity map."""

    eta = 0.0

    def __call__(self, t):
        return self.value(t)

    def value(self, t):
        raise NotImplementedError

    def prox(self, t, mu):
        raise NotImplementedError

    def check_mu(self, mu):
        """Raise ParameterError unless ``0 < mu < 1/eta``."""
        check_scalar(mu, "mu", lo=0.0, lo_open=True)
        if self.eta > 0 and mu * self.eta >= 1.0:
            raise ParameterError(f"mu={mu!r} must be below 1/eta={1.0 / self.eta!r} for {self}")
        return mu

    @property
    def spec(self):
        """Short string accepted by :func:`parse_loss`."""
        raise NotImplementedError


@dataclass(frozen=True)
class AbsoluteLoss(ScalarLoss):
    """``l(t) = |t|``; convex, so ``eta = 0``."""

    @property
    def eta(self):
        return 0.0

    def value(self, t):
        return np.abs(t)

    def prox(self, t, mu):
        t = np.asarray(t, dtype=np.float64)
        return np.sign(t) * np.maximum(np.abs(t) - mu, 0.0)

    @property
    def spec(self):
        return "l1"


@dataclass(frozen=True)
class SCADLoss(ScalarLoss):
    """Smoothly clipped absolute deviation with unit threshold.

    ``|t|`` on ``|t| <= 1``, a concave quadratic on ``1 < |t| <= theta``
    and the constant ``(theta + 1)/2`` beyond ``theta``. Weakly convex with
    modulus ``1/(theta - 1)``.
    """

    theta: float = 3.7

    def __post_init__(self):
        check_scalar(self.theta, "theta", lo=2.0, lo_open=True)

    @property
    def eta(self):
        return 1.0 / (self.theta - 1.0)

    def value(self, t):
        th = self.theta
        a = np.abs(np.asarray(t, dtype=np.float64))
        mid = (-a * a + 2.0 * th * a - 1.0) / (2.0 * (th - 1.0))
        return np.where(a <= 1.0, a, np.where(a <= th, mid, 0.5 * (th + 1.0)))

    def prox(self, t, mu):
        # Piecewise minimiser, continuous at the knots mu, 1 + mu and theta.
        th = self.theta
        t = np.asarray(t, dtype=np.float64)
        a = np.abs(t)
        mid = ((th - 1.0) * a - mu * th) / (th - 1.0 - mu)
        out = np.where(a <= 1.0 + mu, np.maximum(a - mu, 0.0), np.where(a <= th, mid, a))
        return np.sign(t) * out

    @property
    def spec(self):
        return f"scad:{self.theta:g}"


@dataclass(frozen=True)
class MCPLoss(ScalarLoss):
    """Minimax concave penalty, ``|t| - t**2/(2 theta)`` saturating at ``theta/2``."""

    theta: float = 3.0

    def __post_init__(self):
        check_scalar(self.theta, "theta", lo=0.0, lo_open=True)

    @property
    def eta(self):
        return 1.0 / self.theta

    def value(self, t):
        th = self.theta
        a = np.abs(np.asarray(t, dtype=np.float64))
        return np.where(a <= th, a - a * a / (2.0 * th), 0.5 * th)

    def prox(self, t, mu):
        th = self.theta
        t = np.asarray(t, dtype=np.float64)
        a = np.abs(t)
        out = np.where(a <= th, th * np.maximum(a - mu, 0.0) / (th - mu), a)
        return np.sign(t) * out

    @property
    def spec(self):
        return f"mcp:{self.theta:g}"


def parse_loss(spec):
    """Build a loss from ``'l1'``, ``'scad:<theta>'`` or ``'mcp:<theta>'``."""
    if isinstance(spec, ScalarLoss):
        return spec
    name, _, arg = str(spec).strip().lower().partition(":")
    try:
        if name in ("l1", "abs", "absolute"):
            if arg:
                raise ParameterError("l1 takes no parameter")
            return AbsoluteLoss()
        if name == "scad":
            return SCADLoss(float(arg)) if arg else SCADLoss()
        if name == "mcp":
            return MCPLoss(float(arg)) if arg else MCPLoss()
    except ValueError as exc:
        raise ParameterError(f"bad loss specification {spec!r}: {exc}") from exc
    raise ParameterError(f"unknown loss {spec!r}; expected l1, scad:<theta> or mcp:<theta>")


class SeparableLoss:
    """``g(z) = sum_i l(z_i)`` on vectors of length `dim`.

    The weak-convexity modulus of ``g`` equals that of the scalar loss.
    """

    def __init__(self, scalar, dim=None):
        self.scalar = parse_loss(scalar)
        if dim is not None:
            check_scalar(dim, "dim", lo=1, integer=True)
        self.dim = dim

    @property
    def eta(self):
        return self.scalar.eta

    def __repr__(self):
        return f"SeparableLoss({self.scalar!r}, dim={self.dim})"

    def value(self, z):
        return float(np.sum(self.scalar.value(z)))

    def prox(self, z, mu):
        self.scalar.check_mu(mu)
        return self.scalar.prox(z, mu)

    def envelope(self, z, mu):
        """Moreau envelope value ``g^mu(z)``."""
        return self.envelope_and_grad(z, mu)[0]

    def envelope_grad(self, z, mu):
        z = np.asarray(z, dtype=np.float64)
        return (z - self.prox(z, mu)) / mu

    def envelope_and_grad(self, z, mu):
        """Envelope value and gradient from a single prox evaluation."""
        z = np.asarray(z, dtype=np.float64)
        p = self.prox(z, mu)
        d = z - p
        val = float(np.sum(self.scalar.value(p)) + np.dot(d, d) / (2.0 * mu))
        return val, d / mu


def _as_separable(g):
    return g if isinstance(g, SeparableLoss) else SeparableLoss(g)


def loss_eval(loss, t):
    return parse_loss(loss).value(t)


def loss_prox(loss, mu, t):
    loss = parse_loss(loss)
    loss.check_mu(mu)
    return loss.prox(t, mu)


def envelope_eval(g, mu, z):
    return _as_separable(g).envelope(z, mu)


def envelope_grad(g, mu, z):
    return _as_separable(g).envelope_grad(z, mu)


def composite_grad(obs, g, mu, x):
    """Gradient of ``x -> g^mu(y - A(x))``, namely ``-A*(grad g^mu(y - A(x)))``."""
    z = obs.y - obs.operator.forward(x)
    return -obs.operator.adjoint(_as_separable(g).envelope_grad(z, mu))
