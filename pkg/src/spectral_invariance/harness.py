"""Convergence experiments: n-sweeps over repeated trials, slope fits, the fig1 experiment.

A trial is (curve, n, r).  Its seed is mix_seed(master_seed, curve name, n, r),
so results do not depend on scheduling or on how many workers run them.
Aggregation always walks trials in (curve, n, r) order.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import CoefficientOracle
from .divergences import (
    SpectralKernel,
    linf_error,
    mmd_vs_oracle,
    sobolev_ipm_vs_oracle,
)
from .errors import ConfigError, SpectralError
from .estimators import EstimatorSpec
from .groups import GroupAction, invariant_projector, quotient_dim
from .seeds import mix_seed
from .spectrum import FOUR_PI_SQ, SpectrumSlice, enumerate_spectrum

METRIC_KINDS = ("sobolev", "mmd", "l2", "linf", "w1_upper")
CURVE_CSV_HEADER = ["estimator", "n", "mean", "stderr", "slope", "slope_stderr"]


@dataclass(frozen=True)
class MetricSpec:
    kind: str
    param: float | None = None

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ConfigError(f"unknown metric {self.kind!r}; choose from {METRIC_KINDS}")
        if self.kind in ("sobolev", "mmd") and self.param is None:
            raise ConfigError(f"metric {self.kind} needs a parameter")

    @property
    def label(self) -> str:
        if self.kind == "sobolev":
            return f"D_{self.param:g}"
        if self.kind == "mmd":
            return f"MMD (heat, beta={self.param:g})"
        return {"l2": "L2", "linf": "Linf", "w1_upper": "D_1 (W1 bound)"}[self.kind]

    def evaluate(self, fld, oracle: CoefficientOracle) -> float:
        if self.kind == "sobolev":
            return sobolev_ipm_vs_oracle(fld, oracle, self.param).value
        if self.kind == "w1_upper":
            return sobolev_ipm_vs_oracle(fld, oracle, 1.0).value
        if self.kind == "l2":
            return sobolev_ipm_vs_oracle(fld, oracle, 0.0).value
        if self.kind == "mmd":
            return mmd_vs_oracle(fld, oracle, SpectralKernel.heat(self.param)).value
        return linf_error(fld, oracle, 8 * fld.slice.max_abs_freq + 1).value


@dataclass(frozen=True)
class CurveSpec:
    """One estimator curve; ``distribution`` overrides the experiment default."""

    name: str
    estimator: EstimatorSpec
    distribution: CoefficientOracle | None = None
    predicted_slope: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    distribution: CoefficientOracle
    group: GroupAction
    curves: tuple[CurveSpec, ...]
    metric: MetricSpec
    n_grid: tuple[int, ...]
    repetitions: int
    master_seed: int
    slice_m_max: int
    burn_in: int = 0
    workers: int = 1
    output_dir: str = "."

    def __post_init__(self):
        ns = list(self.n_grid)
        if not ns or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
            raise ConfigError("n_grid must be strictly increasing positive integers")
        if self.repetitions < 3:
            raise ConfigError("repetitions must be >= 3")
        if not self.curves:
            raise ConfigError("at least one estimator curve is required")
        names = [c.name for c in self.curves]
        if len(set(names)) != len(names):
            raise ConfigError("curve names must be unique")
        if self.slice_m_max < 1:
            raise ConfigError("slice_m_max must be >= 1")
        if self.burn_in < 0 or len(ns) - self.burn_in < 1:
            raise ConfigError("burn_in leaves no points")
        for c in self.curves:
            dist = c.distribution or self.distribution
            if getattr(dist, "dim", self.group.dim) != self.group.dim or c.estimator.group.dim != self.group.dim:
                raise ConfigError(f"curve {c.name}: dimensions disagree with the group action")
            if c.estimator.kind == "heat_smoothed" and quotient_dim(c.estimator.group) < 3:
                raise ConfigError(f"curve {c.name}: heat_smoothed needs quotient dimension >= 3")

    @property
    def lambda_max(self) -> float:
        return FOUR_PI_SQ * self.slice_m_max

    def oracle_for(self, curve: CurveSpec) -> CoefficientOracle:
        return curve.distribution or self.distribution


@dataclass(frozen=True, eq=False)
class ConvergenceCurve:
    name: str
    estimator: str
    ns: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    trials: np.ndarray = field(repr=False)
    slope: float = math.nan
    slope_stderr: float = math.nan
    predicted_slope: float | None = None
    burn_in: int = 0

    def rows(self) -> list[list]:
        return [[self.name, int(n), repr(float(m)), repr(float(se)), repr(self.slope), repr(self.slope_stderr)]
                for n, m, se in zip(self.ns, self.means, self.stderrs)]


def fit_slope(curve_or_ns, means=None, burn_in: int = 0) -> tuple[float, float]:
    """OLS slope of log(mean) against log(n) and its standard error."""
    if means is None:
        ns, means, burn_in = curve_or_ns.ns, curve_or_ns.means, max(burn_in, curve_or_ns.burn_in)
    else:
        ns = curve_or_ns
    x = np.log(np.asarray(ns, dtype=float)[burn_in:])
    y = np.log(np.asarray(means, dtype=float)[burn_in:])
    if len(x) < 3:
        raise ValueError(f"slope fit needs >= 3 points after burn-in, got {len(x)}")
    xc = x - x.mean()
    slope = float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))
    resid = y - y.mean() - slope * xc
    stderr = float(math.sqrt(np.dot(resid, resid) / (len(x) - 2) / np.dot(xc, xc)))
    return slope, stderr


# ---- trial execution -------------------------------------------------------

class _Context:
    """Per-process cache of the slice and projectors for one configuration."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.slice: SpectrumSlice = enumerate_spectrum(config.group.dim, config.lambda_max)
        self.projectors = {}
        for c in config.curves:
            if c.estimator.kind in ("invariant", "truncated_invariant", "heat_smoothed"):
                self.projectors[c.name] = invariant_projector(c.estimator.group, self.slice)

    def run(self, task: tuple[int, int, int]) -> float:
        ci, n, r = task
        cfg = self.config
        curve = cfg.curves[ci]
        oracle = cfg.oracle_for(curve)
        seed = mix_seed(cfg.master_seed, curve.name, n, r)
        try:
            samples = oracle.sample(n, seed)
            fld = curve.estimator.estimate(samples, self.slice, self.projectors.get(curve.name))
            return cfg.metric.evaluate(fld, oracle)
        except SpectralError as exc:
            raise type(exc)(f"{curve.name}, n={n}, trial {r}: {exc}") from exc


_WORKER: _Context | None = None


def _init_worker(config: ExperimentConfig) -> None:
    global _WORKER
    _WORKER = _Context(config)


def _worker_run(task):
    return _WORKER.run(task)


def resolve_workers(workers: int | None) -> int:
    if workers is None or workers <= 0:
        env = os.environ.get("SPECTRAL_INVARIANCE_THREADS")
        workers = int(env) if env else 1
    return max(1, workers)


def run_trials(config: ExperimentConfig, workers: int | None = None) -> np.ndarray:
    """Array of shape (curves, len(n_grid), repetitions)."""
    tasks = [(ci, n, r) for ci in range(len(config.curves)) for n in config.n_grid
             for r in range(config.repetitions)]
    workers = resolve_workers(workers if workers is not None else config.workers)
    if workers == 1:
        ctx = _Context(config)
        values = [ctx.run(t) for t in tasks]
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(config,)) as pool:
            values = list(pool.map(_worker_run, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    return np.asarray(values, dtype=float).reshape(len(config.curves), len(config.n_grid), config.repetitions)


def run_convergence(config: ExperimentConfig, workers: int | None = None) -> list[ConvergenceCurve]:
    trials = run_trials(config, workers)
    ns = np.asarray(config.n_grid)
    curves = []
    for ci, spec in enumerate(config.curves):
        t = trials[ci]
        means = np.array([math.fsum(row) / len(row) for row in t])
        stderrs = t.std(axis=1, ddof=1) / math.sqrt(config.repetitions)
        slope, slope_se = (math.nan, math.nan)
        if len(ns) - config.burn_in >= 3:
            slope, slope_se = fit_slope(ns, means, config.burn_in)
        curves.append(ConvergenceCurve(spec.name, spec.estimator.kind, ns, means, stderrs, t, slope, slope_se,
                                       spec.predicted_slope, config.burn_in))
    return curves


def curves_to_csv(curves: list[ConvergenceCurve]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CURVE_CSV_HEADER)
    for c in curves:
        writer.writerows(c.rows())
    return out.getvalue()


def write_csv(text: str, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


# ---- predicted exponents ---------------------------------------------------

def predicted_exponent(metric: MetricSpec, s: float, q: int) -> float:
    """kappa_G for the truncated estimator, so that E[D] ~ n^-kappa."""
    if metric.kind == "sobolev":
        alpha = metric.param
        if alpha > q / 2:
            return 0.5
        return (s + alpha) / (2 * s + q)
    if metric.kind == "w1_upper":
        return (s + 1) / (2 * s + q)
    if metric.kind == "l2":
        return s / (2 * s + q)
    if metric.kind == "linf":
        if s <= q / 2:
            raise ValueError("the Linf rate needs s > d/2")
        return (s - q / 2) / (2 * s + q)
    return 0.5


def head_sobolev_norm_sq(oracle: CoefficientOracle, slc: SpectrumSlice, s: float) -> float:
    """c_0^2 + sum of lambda^s c^2 over the slice."""
    c = oracle.coefficients(slc)
    lam = np.where(slc.eigenvalues > 0, slc.eigenvalues, 1.0)
    return float(np.sum(c * c * lam ** s))


__all__ = [
    "CURVE_CSV_HEADER",
    "ConvergenceCurve",
    "CurveSpec",
    "ExperimentConfig",
    "MetricSpec",
    "curves_to_csv",
    "fit_slope",
    "head_sobolev_norm_sq",
    "predicted_exponent",
    "run_convergence",
    "run_trials",
    "write_csv",
]
