"""Real Laplace-Beltrami eigenbasis of the unit-volume flat torus T^d = [0, 1)^d.

Eigenfunctions are indexed by lattice frequencies v in Z^d with eigenvalue
4 pi^2 |v|^2.  We use the real orthonormal form

    constant  -> 1
    cosine(v) -> sqrt(2) cos(2 pi <v, x>)
    sine(v)   -> sqrt(2) sin(2 pi <v, x>)

where v runs over canonical representatives (first nonzero entry positive).
A slice stores its elements as flat arrays: index 0 is the constant, and the
cosine/sine pair of the k-th canonical frequency sits at 2k+1, 2k+2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch

FOUR_PI_SQ = 4.0 * math.pi ** 2
SQRT2 = math.sqrt(2.0)
DEFAULT_BUDGET = 10 ** 7

CONSTANT, COSINE, SINE = 0, 1, 2
KIND_NAMES = ("constant", "cosine", "sine")


def _kind_code(kind: str | int) -> int:
    if isinstance(kind, (int, np.integer)):
        return int(kind)
    return KIND_NAMES.index(kind)


def is_canonical(freq: Sequence[int]) -> bool:
    for v in freq:
        if v != 0:
            return v > 0
    return False


@dataclass(frozen=True)
class BasisElement:
    freq: tuple[int, ...]
    kind: str

    def __post_init__(self):
        freq = tuple(int(v) for v in self.freq)
        object.__setattr__(self, "freq", freq)
        if len(freq) < 1:
            raise ValueError("frequency must have at least one entry")
        if self.kind not in KIND_NAMES:
            raise ValueError(f"unknown kind {self.kind!r}")
        zero = not any(freq)
        if zero != (self.kind == "constant"):
            raise ValueError("constant kind is reserved for the zero frequency")
        if not zero and not is_canonical(freq):
            raise ValueError(f"frequency {freq} is not canonical (first nonzero entry must be positive)")

    @property
    def dim(self) -> int:
        return len(self.freq)

    @property
    def eigenvalue(self) -> float:
        return eigenvalue(self.freq)


def eigenvalue(freq: Sequence[int]) -> float:
    """4 pi^2 |v|^2."""
    return FOUR_PI_SQ * float(sum(int(v) * int(v) for v in freq))


def max_square_norm(lambda_max: float) -> int:
    """Largest integer m with 4 pi^2 m <= lambda_max (ties resolved towards inclusion)."""
    if lambda_max < 0:
        raise ValueError("lambda_max must be nonnegative")
    return int(math.floor(lambda_max / FOUR_PI_SQ * (1.0 + 1e-12) + 1e-12))


def radial_convolve(axes: Sequence[tuple[np.ndarray, np.ndarray]], m_max: int) -> np.ndarray:
    """Sum weights over lattice points grouped by squared norm.

    ``axes[j] = (ks, ws)`` lists the allowed integer frequencies on axis j and a
    weight per frequency.  Returns ``w`` with ``w[m] = sum over v with |v|^2 = m
    of prod_j ws_j(v_j)`` for m = 0..m_max.  Each axis is folded in as a sparse
    shift-and-add, so the cost is O(m_max * sqrt(m_max)) per axis.
    """
    out = None
    for ks, ws in axes:
        ks = np.asarray(ks, dtype=np.int64)
        ws = np.asarray(ws, dtype=float)
        sq = ks * ks
        keep = sq <= m_max
        sq, ws = sq[keep], ws[keep]
        # merge +k and -k (and any repeats) onto the same squared index
        order = np.argsort(sq, kind="stable")
        sq, ws = sq[order], ws[order]
        uniq, start = np.unique(sq, return_index=True)
        wsum = np.add.reduceat(ws, start) if len(ws) else ws
        acc = np.zeros(m_max + 1)
        if out is None:
            acc[uniq] = wsum
        else:
            for s, w in zip(uniq, wsum):
                if w != 0.0:
                    acc[s:] += w * out[: m_max + 1 - s]
        out = acc
    if out is None:
        out = np.zeros(m_max + 1)
        out[0] = 1.0
    return out


def lattice_counts(dim: int, m_max: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """r_d(m) = #{v in Z^d : |v|^2 = m} for m = 0..m_max."""
    if m_max + 1 > budget:
        raise BudgetExceeded(f"squared-norm range {m_max} exceeds budget {budget}")
    k_max = math.isqrt(m_max)
    ks = np.arange(-k_max, k_max + 1)
    return radial_convolve([(ks, np.ones(len(ks)))] * dim, m_max)


def ball_count_estimate(dim: int, m_max: int) -> float:
    """Upper estimate of lattice points in the ball |v|^2 <= m_max."""
    r = math.sqrt(m_max) + 0.5 * math.sqrt(dim)
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * r ** dim


def weyl_count(dim: int, lam: float, budget: int = DEFAULT_BUDGET) -> int:
    """Number of lattice points v in Z^d with 4 pi^2 |v|^2 <= lam (complex-mode count)."""
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    m_max = max_square_norm(lam)
    return int(round(lattice_counts(dim, m_max, budget).sum()))


def _ball_points(dim: int, m_max: int) -> np.ndarray:
    """All v in Z^d with |v|^2 <= m_max, built axis by axis with pruning."""
    k_max = math.isqrt(m_max)
    ks = np.arange(-k_max, k_max + 1, dtype=np.int64)
    pts = np.zeros((1, 0), dtype=np.int64)
    norms = np.zeros(1, dtype=np.int64)
    for _ in range(dim):
        new_norms = norms[:, None] + (ks * ks)[None, :]
        rows, cols = np.nonzero(new_norms <= m_max)
        pts = np.concatenate([pts[rows], ks[cols, None]], axis=1)
        norms = new_norms[rows, cols]
    return pts


def canonical_mask(freqs: np.ndarray) -> np.ndarray:
    """True where the first nonzero entry of a row is positive."""
    freqs = np.atleast_2d(freqs)
    nz = freqs != 0
    any_nz = nz.any(axis=1)
    first = np.argmax(nz, axis=1)
    lead = freqs[np.arange(len(freqs)), first]
    return any_nz & (lead > 0)


@dataclass(frozen=True, eq=False)
class SpectrumSlice:
    """Eigenvalue-sorted real basis elements with lambda <= lambda_max."""

    dim: int
    lambda_max: float
    freqs: np.ndarray = field(repr=False)
    kinds: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.kinds)

    @property
    def m_max(self) -> int:
        return max_square_norm(self.lambda_max)

    @property
    def square_norms(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.freqs, self.freqs)

    @property
    def canonical_freqs(self) -> np.ndarray:
        """Nonzero canonical frequencies, one row per cosine/sine pair."""
        return self.freqs[1::2]

    @property
    def max_abs_freq(self) -> int:
        return int(np.abs(self.freqs).max()) if len(self.freqs) else 0

    @cached_property
    def elements(self) -> tuple[BasisElement, ...]:
        return tuple(
            BasisElement(tuple(int(v) for v in f), KIND_NAMES[k])
            for f, k in zip(self.freqs, self.kinds)
        )

    @cached_property
    def _key_index(self) -> dict:
        return {(tuple(int(v) for v in f), int(k)): i for i, (f, k) in enumerate(zip(self.freqs, self.kinds))}

    def index(self, element: BasisElement) -> int:
        try:
            return self._key_index[(element.freq, _kind_code(element.kind))]
        except KeyError:
            raise KeyError(f"{element} not in slice") from None

    def lookup(self, freqs: np.ndarray) -> np.ndarray:
        """Index of the cosine element for each canonical frequency row (-1 if absent)."""
        freqs = np.atleast_2d(np.asarray(freqs, dtype=np.int64))
        base = 2 * max(self.max_abs_freq, int(np.abs(freqs).max(initial=0))) + 1
        weights = base ** np.arange(self.dim, dtype=np.int64)[::-1]
        own = (self.canonical_freqs + base // 2) @ weights
        order = np.argsort(own)
        keys = (freqs + base // 2) @ weights
        pos = np.searchsorted(own, keys, sorter=order)
        pos = np.clip(pos, 0, max(len(own) - 1, 0))
        if len(own) == 0:
            return np.full(len(freqs), -1)
        found = own[order[pos]] == keys
        return np.where(found, 2 * order[pos] + 1, -1)

    def __eq__(self, other):
        if not isinstance(other, SpectrumSlice):
            return NotImplemented
        return (
            self is other
            or (self.dim == other.dim and len(self) == len(other) and np.array_equal(self.freqs, other.freqs)
                and np.array_equal(self.kinds, other.kinds))
        )

    __hash__ = object.__hash__


def enumerate_spectrum(dim: int, lambda_max: float, budget: int = DEFAULT_BUDGET) -> SpectrumSlice:
    """All canonical basis elements with eigenvalue <= lambda_max.

    Ordered by eigenvalue, then lexicographically by frequency, cosine before sine.
    """
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    m_max = max_square_norm(lambda_max)
    if ball_count_estimate(dim, m_max) > 4 * budget:
        raise BudgetExceeded(f"lattice ball |v|^2 <= {m_max} in dimension {dim} exceeds budget {budget}")
    n_points = weyl_count(dim, lambda_max, budget=max(budget, m_max + 1))
    if n_points > budget:
        raise BudgetExceeded(f"{n_points} lattice points exceed budget {budget}")
    pts = _ball_points(dim, m_max)
    pts = pts[canonical_mask(pts)]
    sq = np.einsum("ij,ij->i", pts, pts)
    order = np.lexsort(tuple(pts[:, j] for j in range(dim - 1, -1, -1)) + (sq,))
    pts = pts[order]
    n_canon = len(pts)
    freqs = np.zeros((2 * n_canon + 1, dim), dtype=np.int64)
    freqs[1::2] = pts
    freqs[2::2] = pts
    kinds = np.empty(2 * n_canon + 1, dtype=np.int8)
    kinds[0] = CONSTANT
    kinds[1::2] = COSINE
    kinds[2::2] = SINE
    eig = FOUR_PI_SQ * np.einsum("ij,ij->i", freqs, freqs).astype(float)
    for arr in (freqs, kinds, eig):
        arr.setflags(write=False)
    return SpectrumSlice(dim, float(lambda_max), freqs, kinds, eig)


def _as_points(points, dim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1) if dim == 1 else pts.reshape(1, -1)
    if pts.shape[1] != dim:
        raise DimensionMismatch(f"points have dimension {pts.shape[1]}, expected {dim}")
    return pts


def evaluate_basis(element: BasisElement, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (element.dim,):
        raise DimensionMismatch(f"point has dimension {x.size}, expected {element.dim}")
    if element.kind == "constant":
        return 1.0
    phase = 2.0 * math.pi * float(np.dot(element.freq, x))
    return SQRT2 * (math.cos(phase) if element.kind == "cosine" else math.sin(phase))


def phase_products(freqs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """exp(2 pi i <v, x>) for every (point, frequency row), via per-axis tables.

    Trig work is O(points * d * F); the per-frequency cost is d complex products.
    """
    n, dim = points.shape
    out = np.ones((n, len(freqs)), dtype=complex)
    for j in range(dim):
        col = freqs[:, j]
        f_max = int(np.abs(col).max(initial=0))
        if f_max == 0:
            continue
        ks = np.arange(-f_max, f_max + 1)
        table = np.exp(2j * math.pi * points[:, j, None] * ks[None, :])
        out *= table[:, col + f_max]
    return out


PHASE_BLOCK = 1 << 21  # complex entries per chunk of a phase table


def _row_chunk(width: int) -> int:
    return max(64, PHASE_BLOCK // max(width, 1))


def phase_sums(freqs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Sum over points of exp(2 pi i <v, x>) for each frequency row.

    When the frequencies factor well over a split of the axes into two halves,
    the sum is a matrix product of the two half-phase tables followed by a
    gather; otherwise the full phase table is accumulated in row chunks.  The
    path and the chunking depend only on the frequencies, so the reduction order
    is fixed for a given slice.
    """
    freqs = np.asarray(freqs, dtype=np.int64)
    n, dim = points.shape
    if len(freqs) == 0:
        return np.zeros(0, dtype=complex)
    if dim >= 2:
        h = dim // 2
        ua, ia = np.unique(freqs[:, :h], axis=0, return_inverse=True)
        ub, ib = np.unique(freqs[:, h:], axis=0, return_inverse=True)
        if len(ua) * len(ub) <= 16 * len(freqs):
            total = np.zeros((len(ua), len(ub)), dtype=complex)
            step = _row_chunk(max(len(ua), len(ub)))
            for start in range(0, n, step):
                block = points[start:start + step]
                total += phase_products(ua, block[:, :h]).T @ phase_products(ub, block[:, h:])
            return total[ia.ravel(), ib.ravel()]
    acc = np.zeros(len(freqs), dtype=complex)
    step = _row_chunk(len(freqs))
    for start in range(0, n, step):
        acc += phase_products(freqs, points[start:start + step]).sum(axis=0)
    return acc


def evaluate_all(slc: SpectrumSlice, points) -> np.ndarray:
    """Matrix of basis values, rows = points, columns = slice elements."""
    pts = _as_points(points, slc.dim)
    z = phase_products(slc.canonical_freqs, pts)
    out = np.empty((len(pts), len(slc)))
    out[:, 0] = 1.0
    out[:, 1::2] = SQRT2 * z.real
    out[:, 2::2] = SQRT2 * z.imag
    return out


def complex_to_real(coeffs: np.ndarray) -> np.ndarray:
    """Map complex coefficients of canonical modes to (cos, sin) real-basis pairs.

    A density sum_v c_v exp(2 pi i <v, x>) has cosine coefficient sqrt(2) Re c_v
    and sine coefficient -sqrt(2) Im c_v.
    """
    out = np.empty(2 * len(coeffs))
    out[0::2] = SQRT2 * coeffs.real
    out[1::2] = -SQRT2 * coeffs.imag
    return out


def real_to_complex(values: np.ndarray) -> np.ndarray:
    """Inverse of :func:`complex_to_real` for the nonconstant part of a field."""
    return (values[1::2] - 1j * values[2::2]) / SQRT2
