"""Sobolev IPMs, MMD, L2 / Linf errors and the W1 surrogate in coefficient space.

For two probability measures on T^d with real coefficients a, b,

    D_alpha(mu, nu)^2 = sum_{lambda > 0} (a_l - b_l)^2 / lambda_l^alpha
    MMD_K(mu, nu)^2   = sum_{lambda > 0} xi_l (a_l - b_l)^2

and D_1 upper-bounds the 1-Wasserstein distance.  Comparisons against a
coefficient oracle add the analytic tail beyond the slice, summed over squared
norms with a certified remainder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .distributions import RADIAL_BUDGET, CoefficientOracle, reconstruct_on_grid
from .errors import DimensionMismatch, GridTooCoarse, NonConvergentTail
from .estimators import CoefficientField
from .spectrum import FOUR_PI_SQ, lattice_counts

MASS_TOL = 1e-12


@dataclass(frozen=True)
class SpectralKernel:
    """Spectral weights xi over frequencies.

    ``heat``: xi(v) = exp(-beta |v|^2) with beta in frequency units.
    ``sobolev``: xi(v) = lambda(v)^-alpha.
    ``table``: explicit per-element weights for one slice.
    The constant mode always gets weight 0.
    """

    kind: str
    param: float = 1.0
    table: tuple[float, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("heat", "sobolev", "table"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "table":
            if self.table is None or any(w < 0 for w in self.table):
                raise ValueError("table kernels need nonnegative weights")
        elif self.param <= 0 and self.kind == "heat":
            raise ValueError("heat kernel needs beta > 0")
        elif self.param < 0:
            raise ValueError("sobolev kernel needs alpha >= 0")

    @classmethod
    def heat(cls, beta: float) -> "SpectralKernel":
        return cls("heat", float(beta))

    @classmethod
    def sobolev(cls, alpha: float) -> "SpectralKernel":
        return cls("sobolev", float(alpha))

    def radial(self, m: np.ndarray) -> np.ndarray:
        """xi as a function of the squared norm |v|^2 (m > 0)."""
        m = np.asarray(m, dtype=float)
        if self.kind == "heat":
            return np.exp(-self.param * m)
        if self.kind == "sobolev":
            return (FOUR_PI_SQ * m) ** (-self.param)
        raise ValueError("table kernels have no radial form")

    def weights(self, slc) -> np.ndarray:
        if self.kind == "table":
            w = np.asarray(self.table, dtype=float)
            if w.shape != (len(slc),):
                raise DimensionMismatch("kernel table does not match slice")
            w = w.copy()
        else:
            sq = slc.square_norms
            w = np.zeros(len(slc))
            w[sq > 0] = self.radial(sq[sq > 0])
        w[0] = 0.0
        return w


@dataclass(frozen=True, eq=False)
class DivergenceResult:
    """value = sqrt(head + midpoint of the squared-tail interval)."""

    metric: str
    param: float | None
    head: float
    tail_lo: float = 0.0
    tail_hi: float = 0.0
    eigenvalues: np.ndarray | None = field(default=None, repr=False)
    contributions: np.ndarray | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        return math.sqrt(max(self.head + 0.5 * (self.tail_lo + self.tail_hi), 0.0))

    @property
    def squared(self) -> float:
        return self.head + 0.5 * (self.tail_lo + self.tail_hi)

    @property
    def tail_bound(self) -> float:
        return self.tail_hi - self.tail_lo

    @property
    def breakdown(self) -> tuple[np.ndarray, np.ndarray]:
        """(distinct eigenvalues, squared contribution at each)."""
        if self.eigenvalues is None:
            return np.zeros(0), np.zeros(0)
        lam, inv = np.unique(self.eigenvalues, return_inverse=True)
        return lam, np.bincount(inv, weights=self.contributions)

    def __float__(self) -> float:
        return self.value

    def to_row(self) -> list:
        return [self.metric, "" if self.param is None else repr(float(self.param)),
                repr(self.value), repr(self.tail_lo), repr(self.tail_hi)]


CSV_HEADER = ["metric", "param", "value", "tail_lo", "tail_hi"]


def _check_pair(a: CoefficientField, b: CoefficientField) -> None:
    if a.slice is not b.slice and a.slice != b.slice:
        raise DimensionMismatch("fields live on different slices")
    if abs(a.values[0] - b.values[0]) > MASS_TOL:
        raise ValueError(f"total masses differ: {a.values[0]} vs {b.values[0]}")


def _weighted_head(diff: np.ndarray, weights: np.ndarray, slc, metric: str, param) -> DivergenceResult:
    contrib = weights * diff * diff
    return DivergenceResult(metric, param, float(contrib.sum()), eigenvalues=slc.eigenvalues, contributions=contrib)


def _sobolev_weights(slc, alpha: float) -> np.ndarray:
    w = np.zeros(len(slc))
    pos = slc.eigenvalues > 0
    w[pos] = slc.eigenvalues[pos] ** (-alpha)
    return w


def sobolev_ipm(a: CoefficientField, b: CoefficientField, alpha: float) -> DivergenceResult:
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    _check_pair(a, b)
    return _weighted_head(a.values - b.values, _sobolev_weights(a.slice, alpha), a.slice, "sobolev", alpha)


def w1_upper(a: CoefficientField, b: CoefficientField) -> DivergenceResult:
    """D_1, which bounds W_1 from above; it is not W_1 itself."""
    res = sobolev_ipm(a, b, 1.0)
    return DivergenceResult("w1_upper", 1.0, res.head, eigenvalues=res.eigenvalues,
                            contributions=res.contributions, meta={"bound": "W1 <= D1"})


@lru_cache(maxsize=256)
def _oracle_tail(oracle: CoefficientOracle, m0: int, kernel: SpectralKernel, rel_tol: float,
                 budget: int) -> tuple[float, float]:
    """Squared tail sum over |v|^2 > m0 of xi(v) |c_v|^2 as (lower, upper)."""
    if not oracle.has_tail_bounds:
        raise NonConvergentTail(f"{type(oracle).__name__} provides no tail bounds")
    m_max = max(4 * m0, 256)
    while True:
        w = oracle.radial_weights(m_max)
        ms = np.arange(m0 + 1, m_max + 1)
        mid = float(np.sum(w[m0 + 1:] * kernel.radial(ms)))
        beyond = float(kernel.radial(m_max + 1)) * oracle.mass_beyond(m_max)
        if beyond <= rel_tol * mid or beyond <= 1e-300:
            return mid, mid + beyond
        if math.isinf(beyond):
            raise NonConvergentTail("oracle coefficient mass beyond the slice is not summable")
        m_max *= 4
        if m_max > budget:
            raise NonConvergentTail(
                f"tail remainder {beyond:.3g} still above {rel_tol:g} x {mid:.3g} at |v|^2 <= {m_max // 4}")


def _vs_oracle(fld: CoefficientField, oracle: CoefficientOracle, kernel: SpectralKernel, rel_tol: float,
               metric: str, param, budget: int) -> DivergenceResult:
    c = oracle.coefficients(fld.slice)
    if abs(fld.values[0] - c[0]) > MASS_TOL:
        raise ValueError(f"total masses differ: {fld.values[0]} vs {c[0]}")
    head = _weighted_head(fld.values - c, kernel.weights(fld.slice), fld.slice, metric, param)
    lo, hi = _oracle_tail(oracle, fld.slice.m_max, kernel, rel_tol, budget)
    return DivergenceResult(metric, param, head.head, lo, hi, head.eigenvalues, head.contributions)


def sobolev_ipm_vs_oracle(fld: CoefficientField, oracle: CoefficientOracle, alpha: float,
                          rel_tol: float = 1e-6, budget: int = RADIAL_BUDGET) -> DivergenceResult:
    """D_alpha between a field and the exact measure: slice head plus analytic tail."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return _vs_oracle(fld, oracle, SpectralKernel.sobolev(alpha), rel_tol, "sobolev", alpha, budget)


def _heat_tail_bound(slc, beta: float) -> float:
    """4 x sum of exp(-beta |v|^2) over complex modes outside the slice."""
    from .quantities import theta

    counts = lattice_counts(slc.dim, slc.m_max)
    inside = float(np.sum(counts * np.exp(-beta * np.arange(len(counts)))))
    return 4.0 * max(theta(beta) ** slc.dim - inside, 0.0)


def mmd(a: CoefficientField, b: CoefficientField, kernel: SpectralKernel) -> DivergenceResult:
    """Kernel distance sqrt(sum xi (a - b)^2) over the slice.

    For heat kernels the interval [0, tail_hi] bounds what the modes beyond the
    slice could add for probability measures (|c_v(mu) - c_v(nu)| <= 2).
    """
    _check_pair(a, b)
    res = _weighted_head(a.values - b.values, kernel.weights(a.slice), a.slice, "mmd", kernel.param)
    if kernel.kind == "heat":
        return DivergenceResult("mmd", kernel.param, res.head, 0.0, _heat_tail_bound(a.slice, kernel.param),
                                res.eigenvalues, res.contributions)
    return res


def mmd_vs_oracle(fld: CoefficientField, oracle: CoefficientOracle, kernel: SpectralKernel,
                  rel_tol: float = 1e-6, budget: int = RADIAL_BUDGET) -> DivergenceResult:
    return _vs_oracle(fld, oracle, kernel, rel_tol, "mmd", kernel.param, budget)


def l2_error(fld: CoefficientField, other, rel_tol: float = 1e-6) -> DivergenceResult:
    """L2 distance between densities (the alpha = 0 Sobolev IPM)."""
    if isinstance(other, CoefficientField):
        res = sobolev_ipm(fld, other, 0.0)
    else:
        res = sobolev_ipm_vs_oracle(fld, other, 0.0, rel_tol)
    return DivergenceResult("l2", None, res.head, res.tail_lo, res.tail_hi, res.eigenvalues, res.contributions)


@dataclass(frozen=True)
class LinfResult:
    """Grid maximum of |field density - oracle density|.

    ``value`` is a lower bound on the true sup.  ``slack`` multiplies the grid
    maximum of the band-limited part into an upper bound via Bernstein's
    inequality (inf when the grid is too coarse for the bound to apply).
    """

    value: float
    slack: float
    grid_per_axis: int

    def __float__(self) -> float:
        return self.value


def linf_error(fld: CoefficientField, oracle: CoefficientOracle, grid_per_axis: int) -> LinfResult:
    f_max = fld.slice.max_abs_freq
    if grid_per_axis < 8 * f_max + 1:
        raise GridTooCoarse(f"grid_per_axis {grid_per_axis} < 8 * {f_max} + 1")
    ours = reconstruct_on_grid(fld.slice, fld.values, grid_per_axis)
    theirs = oracle.density_grid(grid_per_axis)
    d = fld.slice.dim
    ratio = math.pi * d * f_max / grid_per_axis
    slack = 1.0 / (1.0 - ratio) if ratio < 1 else math.inf
    return LinfResult(float(np.max(np.abs(ours - theirs))), slack, grid_per_axis)


__all__ = [
    "CSV_HEADER",
    "DivergenceResult",
    "LinfResult",
    "SpectralKernel",
    "l2_error",
    "linf_error",
    "mmd",
    "mmd_vs_oracle",
    "sobolev_ipm",
    "sobolev_ipm_vs_oracle",
    "w1_upper",
]
