"""Synthetic benchmark harness.

An :class:`ExperimentSpec` fixes the data model and one solver setting.
:func:`run_experiment` draws ``trials`` independent instances, runs the
solver on each and returns an :class:`ExperimentReport` with per-trial
records and means. Reports are written as a CSV with one row per trial, a
timing sidecar and a JSON summary.

The CSV holds only quantities that are a function of the spec and seed, so
two runs of a spec that terminates on its tolerance or iteration cap write
byte-identical files. Wall-clock runtime goes to the sidecar and summary.
"""

import csv
import hashlib
import io
import itertools
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from ._validation import check_matrix, check_scalar
from .baselines import FactoredModelConfig, NuclearModelConfig, factored_subgradient, nuclear_dca
from .datasets import OUTLIER_KINDS, make_instance
from .exceptions import DimensionError, ParameterError
from .geometry import SpectralSet
from .losses import SeparableLoss, parse_loss
from .pvs import SolverConfig, solve_proposed

__all__ = [
    "ExperimentSpec",
    "TrialRecord",
    "ExperimentReport",
    "generate_instance",
    "compute_rmse",
    "run_trial",
    "run_experiment",
    "expand_grid",
    "run_grid",
    "MODELS",
    "SCHEMA_VERSION",
    "CSV_COLUMNS",
]

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MODELS = ("proposed", "factored", "nuclear")
CSV_COLUMNS = ("schema_version", "spec_hash", "method", "p_m", "p_out", "outliers", "trial",
               "rmse", "final_cost", "n_iter", "termination_reason", "status")
TIMING_COLUMNS = ("spec_hash", "method", "trial", "runtime_s")

THETA_GRID = (2.5, 2.7, 2.9, 3.1)


@dataclass(frozen=True)
class ExperimentSpec:
    """Data model plus one solver setting.

    ``loss`` is only read for ``model='proposed'``; ``lam``, ``step_base``
    and ``step_decay`` only for ``'factored'``; ``t_weight`` and ``beta``
    only for ``'nuclear'``. ``max_iters`` caps the outer iterations (DCA
    steps for the nuclear model); ``None`` keeps each solver's default.
    A binding wall-clock cap makes results depend on machine speed, so pin
    ``max_iters`` below it when byte-identical reports are needed.
    """

    n1: int = 40
    n2: int = 50
    rank: int = 5
    p_m: float = 0.5
    p_out: float = 0.5
    outliers: str = "uniform"
    noise_var: float = 1e-6
    model: str = "proposed"
    loss: str = "scad:2.5"
    lam: float = 1.0
    step_base: float = 1.0
    step_decay: float = 0.95
    t_weight: float = 0.1
    beta: float = 0.5
    sigma: float = 1.0
    trials: int = 10
    seed: int = 42
    max_time_s: float = 60.0
    tol_rel: float = 1e-9
    max_iters: int = None

    def __post_init__(self):
        for name in ("n1", "n2", "rank"):
            check_scalar(getattr(self, name), name, lo=1, integer=True)
        if self.rank > min(self.n1, self.n2):
            raise ParameterError("rank exceeds min(n1, n2)")
        check_scalar(self.p_m, "p_m", lo=0.0, hi=1.0, lo_open=True)
        check_scalar(self.p_out, "p_out", lo=0.0, hi=1.0, hi_open=True)
        check_scalar(self.noise_var, "noise_var", lo=0.0)
        check_scalar(self.sigma, "sigma", lo=0.0, lo_open=True)
        check_scalar(self.trials, "trials", lo=1, integer=True)
        check_scalar(self.seed, "seed", lo=0, hi=2 ** 64 - 1, integer=True)
        check_scalar(self.max_time_s, "max_time_s", lo=0.0, lo_open=True)
        check_scalar(self.tol_rel, "tol_rel", lo=0.0, lo_open=True)
        if self.max_iters is not None:
            check_scalar(self.max_iters, "max_iters", lo=1, integer=True)
        if self.outliers not in OUTLIER_KINDS:
            raise ParameterError(f"outliers must be one of {OUTLIER_KINDS}")
        if self.model not in MODELS:
            raise ParameterError(f"model must be one of {MODELS}")
        if self.model == "proposed":
            parse_loss(self.loss)
        elif self.model == "factored":
            FactoredModelConfig(rank=self.rank, lam=self.lam, step_base=self.step_base,
                                step_decay=self.step_decay)
        else:
            NuclearModelConfig(t_weight=self.t_weight, beta=self.beta)

    @property
    def method_id(self):
        if self.model == "proposed":
            return f"proposed-{parse_loss(self.loss).spec}"
        if self.model == "factored":
            return f"factored(lam={self.lam:g},step={self.step_base:g}x{self.step_decay:g})"
        return f"nuclear(t={self.t_weight:g},beta={self.beta:g})"

    def to_dict(self):
        return asdict(self)

    @property
    def spec_hash(self):
        """First 16 hex digits of the SHA-256 of the canonical JSON form."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class TrialRecord:
    spec_hash: str
    method: str
    trial: int
    rmse: float
    runtime_s: float
    final_cost: float
    n_iter: int
    termination_reason: str
    status: str = "ok"
    error: str = ""


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    records: list = field(default_factory=list)

    @property
    def failures(self):
        return [r for r in self.records if r.status != "ok"]

    def _ok(self, attr):
        vals = [getattr(r, attr) for r in self.records if r.status == "ok"]
        return float(np.mean(vals)) if vals else math.nan

    @property
    def mean_rmse(self):
        return self._ok("rmse")

    @property
    def mean_runtime(self):
        return self._ok("runtime_s")

    def csv_rows(self):
        s = self.spec
        for r in self.records:
            yield {
                "schema_version": SCHEMA_VERSION,
                "spec_hash": r.spec_hash,
                "method": r.method,
                "p_m": repr(float(s.p_m)),
                "p_out": repr(float(s.p_out)),
                "outliers": s.outliers,
                "trial": r.trial,
                "rmse": repr(float(r.rmse)),
                "final_cost": repr(float(r.final_cost)),
                "n_iter": r.n_iter,
                "termination_reason": r.termination_reason,
                "status": r.status,
            }

    def summary(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "spec": self.spec.to_dict(),
            "spec_hash": self.spec.spec_hash,
            "method": self.spec.method_id,
            "trials": len(self.records),
            "failures": len(self.failures),
            "mean_rmse": self.mean_rmse,
            "mean_runtime_s": self.mean_runtime,
        }


def generate_instance(spec, trial):
    """Observation and ground truth for trial `trial` of `spec`."""
    return make_instance(spec.n1, spec.n2, spec.rank, spec.p_m, spec.p_out,
                         outlier_kind=spec.outliers, noise_var=spec.noise_var,
                         seed=spec.seed, trial=trial)


def compute_rmse(x_hat, truth):
    """``||x_hat - X*||_F / sqrt(n1 n2)``."""
    x_star = truth.x_star if hasattr(truth, "x_star") else truth
    x_hat = check_matrix(x_hat, name="x_hat")
    if x_hat.shape != x_star.shape:
        raise DimensionError(f"x_hat has shape {x_hat.shape}, truth has {x_star.shape}")
    return float(np.linalg.norm(x_hat - x_star) / math.sqrt(x_star.size))


def _solve(spec, obs):
    """Run the spec'd solver; returns ``(x, final_cost, n_iter, reason)``."""
    cap = {} if spec.max_iters is None else {"max_iters": spec.max_iters}
    if spec.model == "proposed":
        g = SeparableLoss(parse_loss(spec.loss), obs.m)
        cfg = SolverConfig(tol_rel=spec.tol_rel, max_time_s=spec.max_time_s, **cap)
        x, tr = solve_proposed(obs, g, SpectralSet(spec.rank, spec.sigma, spec.n1, spec.n2), cfg)
        cost = tr.raw_cost[-1] if len(tr) else tr.initial_raw_cost
        return x, cost, len(tr), tr.termination_reason
    if spec.model == "factored":
        cfg = FactoredModelConfig(rank=spec.rank, lam=spec.lam, step_base=spec.step_base,
                                  step_decay=spec.step_decay, max_time_s=spec.max_time_s,
                                  tol_rel=spec.tol_rel, **cap)
        x, tr = factored_subgradient(obs, cfg)
    else:
        cap = {} if spec.max_iters is None else {"dca_max_iters": spec.max_iters}
        cfg = NuclearModelConfig(t_weight=spec.t_weight, beta=spec.beta,
                                 max_time_s=spec.max_time_s, tol_rel=spec.tol_rel, **cap)
        x, tr = nuclear_dca(obs, cfg)
    return x, min(tr.cost), len(tr), tr.termination_reason


def run_trial(spec, trial):
    """Generate one instance, solve it and score it.

    Solver exceptions are caught and returned as a record with
    ``status='failed'`` so a batch never aborts on a single trial.
    """
    obs, truth = generate_instance(spec, trial)
    t0 = time.perf_counter()
    try:
        x, cost, n_iter, reason = _solve(spec, obs)
    except Exception as exc:  # recorded, not fatal to the batch
        logger.warning("trial %d of %s failed: %s", trial, spec.method_id, exc)
        return TrialRecord(spec.spec_hash, spec.method_id, trial, math.nan,
                           time.perf_counter() - t0, math.nan, 0, "Error", status="failed",
                           error=f"{type(exc).__name__}: {exc}")
    runtime = time.perf_counter() - t0
    return TrialRecord(spec.spec_hash, spec.method_id, trial, compute_rmse(x, truth), runtime,
                       float(cost), int(n_iter), reason)


def run_experiment(spec, n_jobs=1):
    """Run all trials of `spec`; `n_jobs` follows the joblib convention."""
    if n_jobs == 1:
        records = [run_trial(spec, k) for k in range(spec.trials)]
    else:
        records = Parallel(n_jobs=n_jobs)(delayed(run_trial)(spec, k) for k in range(spec.trials))
    return ExperimentReport(spec, sorted(records, key=lambda r: r.trial))


# -- hyperparameter grids ----------------------------------------------------

def expand_grid(spec):
    """Settings of `spec` over the published hyperparameter grid of its model.

    Proposed SCAD and MCP sweep ``theta``; l1 has nothing to sweep. The
    factored model sweeps ``lam`` and ``step_base``, the nuclear model
    ``t_weight`` and ``beta``.
    """
    if spec.model == "proposed":
        kind = spec.loss.split(":")[0].strip().lower()
        if kind == "l1":
            return [spec]
        return [replace(spec, loss=f"{kind}:{th:g}") for th in THETA_GRID]
    if spec.model == "factored":
        return [replace(spec, lam=lam, step_base=sb) for lam, sb in
                itertools.product(FactoredModelConfig.LAMBDA_GRID,
                                  FactoredModelConfig.STEP_BASE_GRID)]
    return [replace(spec, t_weight=t, beta=b) for t, b in
            itertools.product(NuclearModelConfig.T_GRID, NuclearModelConfig.BETA_GRID)]


def run_grid(spec, n_jobs=1):
    """Run every grid point of `spec`.

    Returns the list of reports and the one with the lowest mean RMSE. The
    best-over-grid choice uses the ground truth, so it is an upper bound on
    what any data-driven selection rule could achieve.
    """
    reports = [run_experiment(s, n_jobs=n_jobs) for s in expand_grid(spec)]
    best = min(reports, key=lambda r: (math.isnan(r.mean_rmse), r.mean_rmse))
    return reports, best


# -- report writing ----------------------------------------------------------

def _write_csv(fh, columns, rows):
    writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def report_csv(reports):
    """CSV text for one or more reports, with the fixed column set."""
    buf = io.StringIO()
    _write_csv(buf, CSV_COLUMNS, (row for rep in reports for row in rep.csv_rows()))
    return buf.getvalue()


def timing_csv(reports):
    buf = io.StringIO()
    rows = ({"spec_hash": r.spec_hash, "method": r.method, "trial": r.trial,
             "runtime_s": repr(float(r.runtime_s))} for rep in reports for r in rep.records)
    _write_csv(buf, TIMING_COLUMNS, rows)
    return buf.getvalue()


def write_reports(reports, path, best=None):
    """Write ``path`` (CSV), ``<stem>.timing.csv`` and ``<stem>.json``.

    Returns the three paths written.
    """
    path = str(path)
    stem = path[:-4] if path.endswith(".csv") else path
    with open(path, "w", newline="") as fh:
        fh.write(report_csv(reports))
    timing_path = stem + ".timing.csv"
    with open(timing_path, "w", newline="") as fh:
        fh.write(timing_csv(reports))
    summary = {"schema_version": SCHEMA_VERSION, "settings": [r.summary() for r in reports]}
    if best is not None:
        summary["best"] = best.summary()
    json_path = stem + ".json"
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return path, timing_path, json_path
