"""Dense linear sensing operators and the residual map y - A(X).

A sensing operator is a stack of ``m`` real ``n1 x n2`` matrices ``A_i``;
it acts on a matrix ``X`` by Frobenius inner products,
``A(X)[i] = <A_i, X>``, and its adjoint sends ``v`` to ``sum_i v[i] A_i``.
Both maps are evaluated as one matrix-vector product against the
``(m, n1*n2)`` row-major view of the stack.

Instances are read-only after construction so that a single operator can
be shared between concurrent solver runs.
"""

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_matrix, check_sensing_array, check_vector
from .exceptions import DimensionError

__all__ = [
    "SensingOperator",
    "Observation",
    "GroundTruth",
    "apply_forward",
    "apply_adjoint",
    "residual_map",
    "residual_adjoint",
    "operator_norm",
    "save_observation",
    "load_observation",
]

_MAGIC = b"PXLR"
_VERSION = 1
_HEADER = struct.Struct("<4sIQQQ")


def _freeze(a):
    a.setflags(write=False)
    return a


class SensingOperator:
    """Linear map ``X -> [<A_1, X>, ..., <A_m, X>]``.

    Parameters
    ----------
    mats : array-like of shape (m, n1, n2)
        Matrix forms of the measurement functionals. A single 2-D matrix is
        accepted as ``m = 1``.

    Attributes
    ----------
    mats : ndarray of shape (m, n1, n2)
        Read-only copy of the sensing matrices.
    flat : ndarray of shape (m, n1 * n2)
        Row-major view used for the forward and adjoint products.
    """

    def __init__(self, mats):
        mats = check_sensing_array(mats)
        if not mats.flags.owndata or mats.flags.writeable:
            mats = mats.copy()
        self.mats = _freeze(mats)
        self.flat = _freeze(self.mats.reshape(self.m, -1))

    @property
    def m(self):
        return self.mats.shape[0]

    @property
    def n1(self):
        return self.mats.shape[1]

    @property
    def n2(self):
        return self.mats.shape[2]

    @property
    def shape(self):
        """Shape ``(n1, n2)`` of the matrices the operator acts on."""
        return self.mats.shape[1:]

    def forward(self, x):
        x = check_matrix(x, self.shape)
        return self.flat @ x.ravel()

    def adjoint(self, v):
        v = check_vector(v, self.m)
        return (self.flat.T @ v).reshape(self.shape)

    def __repr__(self):
        return f"SensingOperator(m={self.m}, n1={self.n1}, n2={self.n2})"

    def __eq__(self, other):
        if not isinstance(other, SensingOperator):
            return NotImplemented
        return self.mats.shape == other.mats.shape and np.array_equal(self.mats, other.mats)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Observation:
    """Measurement vector ``y`` paired with the operator that produced it."""

    y: np.ndarray
    operator: SensingOperator

    def __post_init__(self):
        y = check_vector(self.y, name="y").copy()
        if y.shape[0] != self.operator.m:
            raise DimensionError(f"len(y)={y.shape[0]} does not match operator m={self.operator.m}")
        object.__setattr__(self, "y", _freeze(y))

    @property
    def m(self):
        return self.operator.m

    @property
    def shape(self):
        return self.operator.shape


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Planted low-rank matrix together with the corruption pattern."""

    x_star: np.ndarray
    rank_r: int
    inlier_idx: np.ndarray
    outlier_idx: np.ndarray
    noise: np.ndarray
    outliers: np.ndarray
    factors: tuple = field(default=None, repr=False)

    def __post_init__(self):
        m = len(self.noise)
        inl = np.asarray(self.inlier_idx, dtype=np.int64)
        out = np.asarray(self.outlier_idx, dtype=np.int64)
        if len(np.intersect1d(inl, out)) or len(inl) + len(out) != m:
            raise ValueError("inlier and outlier indices must partition range(m)")
        if len(self.outliers) != len(out):
            raise DimensionError("one outlier value is required per outlier index")
        object.__setattr__(self, "inlier_idx", _freeze(inl))
        object.__setattr__(self, "outlier_idx", _freeze(out))


def apply_forward(op, x):
    """Evaluate ``A(x)``; entry ``i`` is the Frobenius product ``<A_i, x>``."""
    return op.forward(x)


def apply_adjoint(op, v):
    """Evaluate ``A*(v) = sum_i v[i] A_i``."""
    return op.adjoint(v)


def residual_map(obs, x):
    """Return ``y - A(x)``."""
    return obs.y - obs.operator.forward(x)


def residual_adjoint(obs, w):
    """Adjoint of the derivative of the residual map, ``w -> -A*(w)``."""
    return -obs.operator.adjoint(w)


def operator_norm(op, n_iter=500, tol=1e-12, random_state=0):
    """Spectral norm of ``A`` by power iteration on ``A* A``."""
    rng = np.random.default_rng(random_state)
    v = rng.standard_normal(op.n1 * op.n2)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(n_iter):
        w = op.flat.T @ (op.flat @ v)
        lam_new = np.linalg.norm(w)
        if lam_new == 0.0:
            return 0.0
        v = w / lam_new
        if abs(lam_new - lam) <= tol * lam_new:
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(lam))


# -- fixtures ---------------------------------------------------------------

def _observation_to_dict(obs):
    op = obs.operator
    return {
        "format": "proxlr-observation",
        "version": _VERSION,
        "n1": op.n1,
        "n2": op.n2,
        "m": op.m,
        "mats": op.flat.ravel().tolist(),
        "y": obs.y.tolist(),
    }


def _observation_from_dict(d):
    n1, n2, m = int(d["n1"]), int(d["n2"]), int(d["m"])
    mats = np.asarray(d["mats"], dtype=np.float64)
    if mats.size != m * n1 * n2:
        raise DimensionError(f"payload holds {mats.size} values, header implies {m * n1 * n2}")
    return Observation(np.asarray(d["y"], dtype=np.float64),
                       SensingOperator(mats.reshape(m, n1, n2)))


def _observation_to_bytes(obs):
    op = obs.operator
    buf = io.BytesIO()
    buf.write(_HEADER.pack(_MAGIC, _VERSION, op.n1, op.n2, op.m))
    buf.write(op.mats.astype("<f8").tobytes(order="C"))
    buf.write(obs.y.astype("<f8").tobytes())
    return buf.getvalue()


def _observation_from_bytes(raw):
    magic, version, n1, n2, m = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError("not a proxlr observation file")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != m * n1 * n2 + m:
        raise DimensionError(f"payload holds {body.size} values, header implies {m * n1 * n2 + m}")
    mats = body[: m * n1 * n2].reshape(m, n1, n2)
    return Observation(body[m * n1 * n2:].astype(np.float64), SensingOperator(mats))


def save_observation(obs, path, extra=None):
    """Write an observation fixture.

    ``.json`` paths get a JSON document with header fields ``n1, n2, m`` and
    row-major payloads; any other suffix gets the little-endian binary
    layout (magic, version, n1, n2, m, matrices, y). ``extra`` is merged into
    the JSON document and ignored for binary output.
    """
    path = str(path)
    if path.endswith(".json"):
        d = _observation_to_dict(obs)
        if extra:
            d.update(extra)
        with open(path, "w") as fh:
            json.dump(d, fh)
    else:
        with open(path, "wb") as fh:
            fh.write(_observation_to_bytes(obs))


def load_observation(path):
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            return _observation_from_dict(json.load(fh))
    with open(path, "rb") as fh:
        return _observation_from_bytes(fh.read())
