"""Samplable reference distributions on T^d with closed-form Fourier coefficients.

Complex coefficients follow c_v = E[exp(-2 pi i <v, X>)], so that the density
is sum_v c_v exp(2 pi i <v, x>).  In the real basis the cosine coefficient of a
canonical v is sqrt(2) Re c_v and the sine coefficient is -sqrt(2) Im c_v.

Worked example (one axis, one summand, width a): c_1 = exp(-i pi a) sinc(a),
so the cosine coefficient is sqrt(2) cos(pi a) sinc(a) and the sine coefficient
is sqrt(2) sin(pi a) sinc(a).  For a = 1/2 that is (2/pi, 2/pi): the density
of U[0, 1/2] leans towards sin(2 pi x) > 0, as it should.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch, NonConvergentTail
from .spectrum import (
    DEFAULT_BUDGET,
    FOUR_PI_SQ,
    BasisElement,
    SpectrumSlice,
    _ball_points,
    ball_count_estimate,
    canonical_mask,
    complex_to_real,
    radial_convolve,
    real_to_complex,
)

_DIRECT_TERMS = 200_000
# largest squared norm reached by adaptive radial tail sums
RADIAL_BUDGET = 2 ** 20


class CoefficientOracle(ABC):
    """Exact Fourier coefficients of a probability measure on T^d."""

    dim: int
    has_tail_bounds: bool = False

    @abstractmethod
    def complex_coefficients(self, freqs: np.ndarray) -> np.ndarray:
        """c_v for each row of ``freqs``."""

    def coefficient(self, element: BasisElement) -> float:
        if element.dim != self.dim:
            raise DimensionMismatch(f"element dimension {element.dim} != {self.dim}")
        c = self.complex_coefficients(np.array([element.freq]))[0]
        if element.kind == "constant":
            return float(c.real)
        if element.kind == "cosine":
            return math.sqrt(2) * float(c.real)
        return -math.sqrt(2) * float(c.imag)

    def coefficients(self, slc: SpectrumSlice) -> np.ndarray:
        """Real-basis coefficients over a whole slice."""
        if slc.dim != self.dim:
            raise DimensionMismatch(f"slice dimension {slc.dim} != {self.dim}")
        return _slice_coefficients(self, slc)

    def radial_weights(self, m_max: int) -> np.ndarray:
        """w[m] = sum of |c_v|^2 over lattice points with |v|^2 = m, m = 0..m_max."""
        return _enumerated_radial_weights(self, m_max)

    def mass_beyond(self, m_max: int) -> float:
        """Upper bound on sum of |c_v|^2 over |v|^2 > m_max."""
        return math.inf

    def weighted_tail_bound(self, m_max: int, power: float) -> float:
        """Upper bound on sum over |v|^2 > m_max of |v|^(2 power) |c_v|^2 (power > 0)."""
        return math.inf

    def density_grid(self, grid_per_axis: int) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no pointwise density")


@lru_cache(maxsize=64)
def _slice_coefficients(oracle: CoefficientOracle, slc: SpectrumSlice) -> np.ndarray:
    out = np.empty(len(slc))
    out[0] = oracle.complex_coefficients(np.zeros((1, slc.dim), dtype=np.int64))[0].real
    out[1:] = complex_to_real(oracle.complex_coefficients(slc.canonical_freqs))
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def _enumerated_radial_weights(oracle: CoefficientOracle, m_max: int) -> np.ndarray:
    if ball_count_estimate(oracle.dim, m_max) > 4 * DEFAULT_BUDGET:
        raise BudgetExceeded(f"enumerating |v|^2 <= {m_max} in dimension {oracle.dim}")
    pts = _ball_points(oracle.dim, m_max)
    c = oracle.complex_coefficients(pts)
    sq = np.einsum("ij,ij->i", pts, pts)
    out = np.bincount(sq, weights=np.abs(c) ** 2, minlength=m_max + 1)
    out.setflags(write=False)
    return out


def _per_axis(value, dim: int, name: str) -> tuple:
    if isinstance(value, (list, tuple)):
        if len(value) != dim:
            raise ValueError(f"{name} needs {dim} entries")
        return tuple(value)
    return (value,) * dim


@dataclass(frozen=True)
class BoxSumSpec(CoefficientOracle):
    """Product of wrapped sums of uniforms.

    On each ordinary axis X_j = (U_1 + ... + U_m) mod 1 with U_k ~ U[0, a].
    Axes listed in ``invariant_tail`` are uniform on [0, 1).  A ``fold`` q > 1
    replaces X_j by (X_j + J) / q with J uniform on {0, ..., q-1}, which makes
    the axis invariant under shifts by 1/q.
    """

    dim: int
    summands: int | tuple[int, ...] = 1
    width: float | tuple[float, ...] = 1.0
    invariant_tail: tuple[int, ...] = ()
    fold: int | tuple[int, ...] = 1
    has_tail_bounds: bool = field(default=True, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        m = tuple(int(v) for v in _per_axis(self.summands, self.dim, "summands"))
        a = tuple(float(v) for v in _per_axis(self.width, self.dim, "width"))
        q = tuple(int(v) for v in _per_axis(self.fold, self.dim, "fold"))
        tail = tuple(sorted(set(int(t) for t in self.invariant_tail)))
        if any(v < 1 for v in m):
            raise ValueError("summands must be >= 1")
        if any(not 0 < v <= 1 for v in a):
            raise ValueError("width must lie in (0, 1]")
        if any(v < 1 for v in q):
            raise ValueError("fold must be >= 1")
        if any(t < 0 or t >= self.dim for t in tail):
            raise ValueError("invariant_tail axis out of range")
        object.__setattr__(self, "summands", m)
        object.__setattr__(self, "width", a)
        object.__setattr__(self, "fold", q)
        object.__setattr__(self, "invariant_tail", tail)

    @classmethod
    def uniform(cls, dim: int) -> "BoxSumSpec":
        return cls(dim)

    def _is_uniform_axis(self, j: int) -> bool:
        return j in self.invariant_tail or self.width[j] == 1.0

    # -- coefficients -------------------------------------------------------

    def axis_coefficients(self, j: int, ks: np.ndarray) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        if self._is_uniform_axis(j):
            return (ks == 0).astype(complex)
        m, a, q = self.summands[j], self.width[j], self.fold[j]
        on = ks % q == 0
        t = np.where(on, ks // q, 0)
        c = (np.exp(-1j * math.pi * a * t) * np.sinc(a * t)) ** m
        return np.where(on, c, 0.0)

    def axis_power(self, j: int, ks: np.ndarray) -> np.ndarray:
        """|c_j(k)|^2, computed without complex arithmetic."""
        ks = np.asarray(ks, dtype=np.int64)
        if self._is_uniform_axis(j):
            return (ks == 0).astype(float)
        m, a, q = self.summands[j], self.width[j], self.fold[j]
        on = ks % q == 0
        return np.where(on, np.sinc(a * (ks // q)) ** (2 * m), 0.0)

    def complex_coefficients(self, freqs: np.ndarray) -> np.ndarray:
        freqs = np.atleast_2d(np.asarray(freqs, dtype=np.int64))
        if freqs.shape[1] != self.dim:
            raise DimensionMismatch(f"frequencies have dimension {freqs.shape[1]}, expected {self.dim}")
        out = np.ones(len(freqs), dtype=complex)
        for j in range(self.dim):
            out *= self.axis_coefficients(j, freqs[:, j])
        return out

    # -- one-dimensional sums ---------------------------------------------

    def _axis_tail_moment(self, j: int, power: float, k_min: int) -> float:
        """Upper bound on sum over |k| > k_min of |k|^power |c_j(k)|^2."""
        if self._is_uniform_axis(j):
            return 0.0
        return _tail_moment(self.summands[j], self.width[j], self.fold[j], float(power), int(k_min))

    def _axis_total(self, j: int) -> float:
        return 1.0 + self._axis_tail_moment(j, 0.0, 0)

    # -- radial sums --------------------------------------------------------

    def radial_weights(self, m_max: int) -> np.ndarray:
        return _box_radial_weights(self, m_max)

    def total_mass(self) -> float:
        """sum over all v of |c_v|^2 = integral of the squared density."""
        return math.prod(self._axis_total(j) for j in range(self.dim))

    def mass_beyond(self, m_max: int) -> float:
        w = self.radial_weights(m_max)
        totals = [self._axis_total(j) for j in range(self.dim)]
        total = math.prod(totals)
        exact = max(total - float(w.sum()), 0.0) + 1e-13 * total
        k = math.isqrt(m_max // self.dim)
        union = 0.0
        for j in range(self.dim):
            others = math.prod(totals[:j] + totals[j + 1:])
            union += self._axis_tail_moment(j, 0.0, k) * others
        return min(exact, union)

    def weighted_tail_bound(self, m_max: int, power: float) -> float:
        # (sum_j v_j^2)^s <= d^max(s-1, 0) sum_j |v_j|^2s, and |v|^2 > M forces
        # some |v_i| > sqrt(M/d); a union bound over i then factorises.
        d = self.dim
        k = math.isqrt(m_max // d)
        totals = [self._axis_total(j) for j in range(d)]
        tails = [self._axis_tail_moment(j, 0.0, k) for j in range(d)]
        bound = 0.0
        for j in range(d):
            if self._is_uniform_axis(j):
                continue
            moment = self._axis_tail_moment(j, 2 * power, 0)
            for i in range(d):
                rest = math.prod(totals[l] for l in range(d) if l not in (i, j))
                if i == j:
                    term = self._axis_tail_moment(j, 2 * power, k) * rest
                else:
                    term = moment * tails[i] * rest if tails[i] > 0 else 0.0
                bound += term
        return d ** max(power - 1.0, 0.0) * bound

    # -- sampling and densities ------------------------------------------

    def sample(self, n: int, seed: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = np.random.default_rng(seed)
        out = np.empty((n, self.dim))
        for j in range(self.dim):
            if j in self.invariant_tail:
                out[:, j] = rng.random(n)
                continue
            m, a, q = self.summands[j], self.width[j], self.fold[j]
            y = np.mod(a * rng.random((n, m)).sum(axis=1), 1.0)
            if q > 1:
                y = (y + rng.integers(0, q, size=n)) / q
            out[:, j] = y
        return out

    def axis_density(self, j: int, x: np.ndarray) -> np.ndarray:
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        if j in self.invariant_tail:
            return np.ones_like(x)
        m, a, q = self.summands[j], self.width[j], self.fold[j]
        return wrapped_irwin_hall_pdf(np.mod(q * x, 1.0), m, a)

    def axis_cdf(self, j: int, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if j in self.invariant_tail:
            return np.clip(x, 0.0, 1.0)
        m, a, q = self.summands[j], self.width[j], self.fold[j]
        qx = q * x
        whole = np.floor(qx)
        return (whole + wrapped_irwin_hall_cdf(qx - whole, m, a)) / q

    def density_at(self, x) -> float | np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x.reshape(1, -1) if single else x
        if pts.shape[1] != self.dim:
            raise DimensionMismatch(f"point has dimension {pts.shape[1]}, expected {self.dim}")
        out = np.ones(len(pts))
        for j in range(self.dim):
            out *= self.axis_density(j, pts[:, j])
        return float(out[0]) if single else out

    def density_grid(self, grid_per_axis: int) -> np.ndarray:
        g = np.arange(grid_per_axis) / grid_per_axis
        out = np.ones(())
        for j in range(self.dim):
            out = np.multiply.outer(out, self.axis_density(j, g))
        return out

    def to_dict(self) -> dict:
        return {
            "type": "boxsum",
            "dim": self.dim,
            "summands": list(self.summands),
            "width": list(self.width),
            "invariant_tail": list(self.invariant_tail),
            "fold": list(self.fold),
        }


@lru_cache(maxsize=1024)
def _tail_moment(m: int, a: float, q: int, power: float, k_min: int) -> float:
    expo = 2 * m - power
    if expo <= 1:
        return math.inf
    t0 = k_min // q + 1
    t = np.arange(t0, t0 + _DIRECT_TERMS, dtype=float)
    direct = float(np.sum((q * t) ** power * np.sinc(a * t) ** (2 * m)))
    t_end = t0 + _DIRECT_TERMS - 1
    # sinc(a t)^2m <= (pi a t)^-2m; the remainder is bounded by an integral
    rest = q ** power * (math.pi * a) ** (-2 * m) * t_end ** (1 - expo) / (expo - 1)
    return 2.0 * (direct + rest)


@lru_cache(maxsize=64)
def _box_radial_weights(spec: BoxSumSpec, m_max: int) -> np.ndarray:
    k_max = math.isqrt(m_max)
    ks = np.arange(-k_max, k_max + 1)
    axes = []
    for j in range(spec.dim):
        w = spec.axis_power(j, ks)
        nz = w != 0
        axes.append((ks[nz], w[nz]))
    out = radial_convolve(axes, m_max)
    out.setflags(write=False)
    return out


def _irwin_hall_terms(t: np.ndarray, m: int, power: int) -> np.ndarray:
    out = np.zeros_like(t)
    for k in range(m + 1):
        shifted = t - k
        out += np.where(shifted > 0, (-1) ** k * math.comb(m, k) * np.maximum(shifted, 0.0) ** power, 0.0)
    return out


def wrapped_irwin_hall_pdf(x: np.ndarray, m: int, a: float) -> np.ndarray:
    """Density of (a * sum of m U[0,1]) mod 1 at x in [0, 1)."""
    if not 1 <= m <= 12:
        raise ValueError("closed-form density supports 1 <= m <= 12")
    x = np.asarray(x, dtype=float)
    if a == 1.0:
        return np.ones_like(x)
    out = np.zeros_like(x)
    for j in range(int(math.ceil(m * a)) + 1):
        t = (x + j) / a
        inside = (t >= 0) & (t < m)
        if m == 1:
            val = np.where(inside, 1.0, 0.0)
        else:
            val = np.where(inside, _irwin_hall_terms(np.where(inside, t, 0.0), m, m - 1), 0.0) / math.factorial(m - 1)
        out += val / a
    return np.maximum(out, 0.0)


def wrapped_irwin_hall_cdf(x: np.ndarray, m: int, a: float) -> np.ndarray:
    """P((a * sum of m U[0,1]) mod 1 <= x) for x in [0, 1]."""
    x = np.asarray(x, dtype=float)
    if a == 1.0:
        return np.clip(x, 0.0, 1.0)

    def cdf(s):
        t = np.clip(s / a, 0.0, m)
        return np.clip(_irwin_hall_terms(t, m, m) / math.factorial(m), 0.0, 1.0)

    out = np.zeros_like(x)
    for j in range(int(math.ceil(m * a)) + 1):
        out += cdf(x + j) - cdf(np.full_like(x, float(j)))
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class DiracMixture(CoefficientOracle):
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(atoms) != len(weights):
            raise ValueError("one weight per atom")
        if (weights < 0).any() or not math.isclose(weights.sum(), 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError("weights must be nonnegative and sum to one")
        object.__setattr__(self, "atoms", np.mod(atoms, 1.0))
        object.__setattr__(self, "weights", weights)

    @classmethod
    def single(cls, point: Sequence[float]) -> "DiracMixture":
        return cls(np.atleast_2d(point), np.ones(1))

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def complex_coefficients(self, freqs: np.ndarray) -> np.ndarray:
        freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
        if freqs.shape[1] != self.dim:
            raise DimensionMismatch(f"frequencies have dimension {freqs.shape[1]}, expected {self.dim}")
        phase = np.exp(-2j * math.pi * (freqs @ self.atoms.T))
        return phase @ self.weights

    def sample(self, n: int, seed: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(self.weights), size=n, p=self.weights)
        return self.atoms[idx].copy()


@dataclass(frozen=True, eq=False)
class FieldOracle(CoefficientOracle):
    """A band-limited signed measure given by real coefficients on a slice."""

    slice: SpectrumSlice
    values: np.ndarray
    has_tail_bounds: bool = field(default=True, init=False, repr=False)

    @classmethod
    def from_field(cls, fld) -> "FieldOracle":
        return cls(fld.slice, np.asarray(fld.values, dtype=float))

    @property
    def dim(self) -> int:
        return self.slice.dim

    def complex_coefficients(self, freqs: np.ndarray) -> np.ndarray:
        freqs = np.atleast_2d(np.asarray(freqs, dtype=np.int64))
        out = np.zeros(len(freqs), dtype=complex)
        zero = ~freqs.any(axis=1)
        out[zero] = self.values[0]
        canon = canonical_mask(freqs)
        flip = ~canon & ~zero
        rep = np.where(flip[:, None], -freqs, freqs)
        pos = self.slice.lookup(rep)
        hit = (pos >= 0) & ~zero
        c = real_to_complex(self.values)
        vals = c[(pos[hit] - 1) // 2]
        out[hit] = np.where(flip[hit], np.conj(vals), vals)
        return out

    def radial_weights(self, m_max: int) -> np.ndarray:
        sq = self.slice.square_norms
        power = np.zeros(len(self.values))
        power[0] = self.values[0] ** 2
        # a real cos/sin pair carries |c_v|^2 + |c_-v|^2 = cos^2 + sin^2
        power[1:] = self.values[1:] ** 2
        keep = sq <= m_max
        return np.bincount(sq[keep], weights=power[keep], minlength=m_max + 1)[: m_max + 1]

    def mass_beyond(self, m_max: int) -> float:
        sq = self.slice.square_norms
        return float(np.sum(self.values[sq > m_max] ** 2))

    def weighted_tail_bound(self, m_max: int, power: float) -> float:
        sq = self.slice.square_norms
        beyond = sq > m_max
        return float(np.sum(sq[beyond] ** power * self.values[beyond] ** 2))

    def density_grid(self, grid_per_axis: int) -> np.ndarray:
        return reconstruct_on_grid(self.slice, self.values, grid_per_axis)


def reconstruct_on_grid(slc: SpectrumSlice, values: np.ndarray, grid_per_axis: int) -> np.ndarray:
    """Evaluate sum_e values[e] phi_e on the uniform grid (k / G)^d by inverse FFT."""
    G = grid_per_axis
    if 2 * slc.max_abs_freq >= G:
        raise ValueError("grid too coarse to represent the slice")
    spec = np.zeros((G,) * slc.dim, dtype=complex)
    c = real_to_complex(np.asarray(values, dtype=float))
    canon = slc.canonical_freqs
    spec[(0,) * slc.dim] = values[0]
    spec[tuple((canon % G).T)] = c
    spec[tuple((-canon % G).T)] = np.conj(c)
    return (np.fft.ifftn(spec) * G ** slc.dim).real


# -- module-level API -----------------------------------------------------


def sample(spec, n: int, seed: int) -> np.ndarray:
    return spec.sample(n, seed)


def coefficient(spec: CoefficientOracle, element: BasisElement) -> float:
    return spec.coefficient(element)


def density_at(spec: BoxSumSpec, x):
    return spec.density_at(x)


def sobolev_norm(
    spec: CoefficientOracle,
    s: float,
    rel_tol: float = 1e-6,
    budget: int = RADIAL_BUDGET,
) -> tuple[float, float]:
    """Squared H^s norm c_0^2 + sum lambda^s c^2 as (head sum, tail bound).

    The true value lies in [head, head + tail].  Raises NonConvergentTail when
    the certified tail cannot be pushed below rel_tol * head within the budget,
    which is the numerical signature of a density outside H^s.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    if not spec.has_tail_bounds:
        raise NonConvergentTail(f"{type(spec).__name__} provides no tail bounds")
    m_max = 256
    while True:
        w = spec.radial_weights(m_max)
        m = np.arange(m_max + 1, dtype=float)
        head = float(w[0] + np.sum(w[1:] * (FOUR_PI_SQ * m[1:]) ** s))
        if s == 0:
            tail = spec.mass_beyond(m_max)
        else:
            tail = FOUR_PI_SQ ** s * spec.weighted_tail_bound(m_max, s)
        if tail <= rel_tol * head:
            return head, tail
        if math.isinf(tail):
            raise NonConvergentTail(f"H^{s} norm diverges: coefficient moments are not summable")
        m_max *= 4
        if m_max > budget:
            raise NonConvergentTail(f"H^{s} tail bound {tail:.3g} above tolerance at |v|^2 <= {m_max // 4}")


def effective_regularity(spec: CoefficientOracle, lam_lo: float = 1e3, lam_hi: float = 1e5) -> float:
    """Sobolev exponent read off the decay of the coefficient tail mass.

    Fits log(sum over lambda_v > L of |c_v|^2) against log L on [lam_lo, lam_hi];
    the tail of an H^s density decays like L^-s, so the negated slope estimates s.
    """
    m_lo = int(lam_lo / FOUR_PI_SQ)
    m_hi = int(lam_hi / FOUR_PI_SQ)
    w = spec.radial_weights(m_hi)
    beyond = spec.mass_beyond(m_hi)
    tails = np.cumsum(w[::-1])[::-1] + beyond
    ms = np.unique(np.geomspace(max(m_lo, 1), m_hi - 1, 40).astype(int))
    tail_vals = tails[ms + 1]
    keep = tail_vals > 0
    slope = np.polyfit(np.log(FOUR_PI_SQ * ms[keep]), np.log(tail_vals[keep]), 1)[0]
    return float(-slope)


PRESETS = {
    "uniform": lambda dim=1: BoxSumSpec.uniform(dim),
    "fig1-noninv": lambda: BoxSumSpec(6, summands=3, width=1 / 3),
    "fig1-inv": lambda: BoxSumSpec(6, summands=4, width=0.25, invariant_tail=(4, 5)),
}


def preset(name: str, **kwargs) -> BoxSumSpec:
    try:
        return PRESETS[name](**kwargs)
    except KeyError:
        raise KeyError(f"unknown distribution preset {name!r}; choose from {sorted(PRESETS)}") from None


def from_dict(data: dict) -> CoefficientOracle:
    kind = data.get("type", "boxsum")
    if "preset" in data:
        extra = {k: v for k, v in data.items() if k not in ("preset", "type")}
        return preset(data["preset"], **extra)
    if kind == "boxsum":
        return BoxSumSpec(
            int(data["dim"]),
            summands=_tuple_or_scalar(data.get("summands", 1)),
            width=_tuple_or_scalar(data.get("width", 1.0)),
            invariant_tail=tuple(data.get("invariant_tail", ())),
            fold=_tuple_or_scalar(data.get("fold", 1)),
        )
    if kind == "dirac":
        return DiracMixture(np.asarray(data["atoms"], dtype=float), np.asarray(data["weights"], dtype=float))
    raise ValueError(f"unknown distribution type {kind!r}")


def _tuple_or_scalar(v):
    return tuple(v) if isinstance(v, (list, tuple)) else v
