"""Isometric group actions on T^d and their invariant spectral subspaces.

Four families are supported, all with exactly computable invariant subspaces:

* ``trivial``: the identity group.
* ``continuous_shift``: x_j -> x_j + t_j (mod 1) for every j in ``axes``; a
  frequency is invariant iff it vanishes on those axes.
* ``cyclic_shift``: x_j -> x_j + k / m_j on ``axes``; invariant iff m_j | v_j.
* ``permutation``: cyclic relabelling of the coordinates in ``axes``; not
  diagonal in the Fourier basis, handled by orbit averaging.

Axis indices are 0-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch, UnsupportedAction
from .spectrum import (
    DEFAULT_BUDGET,
    FOUR_PI_SQ,
    SpectrumSlice,
    _ball_points,
    ball_count_estimate,
    canonical_mask,
    max_square_norm,
    radial_convolve,
)

KINDS = ("trivial", "continuous_shift", "cyclic_shift", "permutation")
DIAGONAL_KINDS = ("trivial", "continuous_shift", "cyclic_shift")


@dataclass(frozen=True)
class GroupAction:
    kind: str
    dim: int
    axes: tuple[int, ...] = ()
    orders: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("ambient dimension must be >= 1")
        axes = tuple(int(a) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        if any(a < 0 or a >= self.dim for a in axes):
            raise ValueError(f"axes {axes} out of range for dimension {self.dim}")
        if len(set(axes)) != len(axes):
            raise ValueError("axes must be distinct")
        if self.kind == "trivial":
            if axes:
                raise ValueError("trivial action takes no axes")
        elif self.kind == "permutation":
            if len(axes) < 2:
                raise ValueError("permutation cycle needs at least two axes")
        elif not axes:
            raise ValueError(f"{self.kind} needs a nonempty axis set")
        if self.kind == "continuous_shift":
            # keep the set sorted; order carries no meaning here
            object.__setattr__(self, "axes", tuple(sorted(axes)))
        if self.kind == "cyclic_shift":
            orders = tuple(int(m) for m in self.orders)
            if len(orders) == 1 and len(axes) > 1:
                orders = orders * len(axes)
            if len(orders) != len(axes) or any(m < 2 for m in orders):
                raise ValueError("cyclic_shift needs one order >= 2 per axis")
            object.__setattr__(self, "orders", orders)
        elif self.orders:
            raise ValueError(f"{self.kind} takes no orders")

    @classmethod
    def trivial(cls, dim: int) -> "GroupAction":
        return cls("trivial", dim)

    @classmethod
    def continuous_shift(cls, dim: int, axes: Sequence[int]) -> "GroupAction":
        return cls("continuous_shift", dim, tuple(axes))

    @classmethod
    def cyclic_shift(cls, dim: int, axes: Sequence[int], order) -> "GroupAction":
        orders = (order,) if isinstance(order, int) else tuple(order)
        return cls("cyclic_shift", dim, tuple(axes), orders)

    @classmethod
    def permutation(cls, dim: int, cycle: Sequence[int]) -> "GroupAction":
        return cls("permutation", dim, tuple(cycle))

    @property
    def is_diagonal(self) -> bool:
        return self.kind in DIAGONAL_KINDS

    @property
    def order(self) -> float:
        """Number of group elements (inf for continuous shifts)."""
        if self.kind == "trivial":
            return 1
        if self.kind == "continuous_shift":
            return math.inf
        if self.kind == "cyclic_shift":
            return math.prod(self.orders)
        return len(self.axes)

    def axis_steps(self) -> list[int | None]:
        """Per-axis lattice step of invariant frequencies (None = frequency forced to 0)."""
        steps: list[int | None] = [1] * self.dim
        if self.kind == "continuous_shift":
            for a in self.axes:
                steps[a] = None
        elif self.kind == "cyclic_shift":
            for a, m in zip(self.axes, self.orders):
                steps[a] = m
        elif self.kind == "permutation":
            raise UnsupportedAction("permutation actions are not diagonal")
        return steps

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim}
        if self.axes:
            out["axes"] = list(self.axes)
        if self.orders:
            out["orders"] = list(self.orders)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "GroupAction":
        return cls(data["kind"], int(data["dim"]), tuple(data.get("axes", ())), tuple(data.get("orders", ())))


def quotient_dim(group: GroupAction) -> int:
    if group.kind == "continuous_shift":
        return group.dim - len(group.axes)
    return group.dim


def quotient_vol(group: GroupAction) -> float:
    """Volume of T^d / G with T^d normalised to volume one.

    The permutation value 1/L counts a generic |G|-fold cover; orbifold
    strata are not modelled.
    """
    if group.kind == "cyclic_shift":
        return 1.0 / math.prod(group.orders)
    if group.kind == "permutation":
        return 1.0 / len(group.axes)
    return 1.0


def is_invariant_frequency(group: GroupAction, freq: Sequence[int]) -> bool:
    freq = tuple(int(v) for v in freq)
    if len(freq) != group.dim:
        raise DimensionMismatch(f"frequency has dimension {len(freq)}, expected {group.dim}")
    if group.kind == "permutation":
        raise UnsupportedAction("use invariant_projector for permutation actions")
    return bool(invariant_mask(group, np.array([freq]))[0])


def invariant_mask(group: GroupAction, freqs: np.ndarray) -> np.ndarray:
    freqs = np.atleast_2d(freqs)
    keep = np.ones(len(freqs), dtype=bool)
    for j, step in enumerate(group.axis_steps()):
        if step is None:
            keep &= freqs[:, j] == 0
        elif step > 1:
            keep &= freqs[:, j] % step == 0
    return keep


def _cycle_perm(group: GroupAction, power: int) -> np.ndarray:
    """Coordinate permutation for the power-th group element: v'[perm[i]] = v[i]."""
    perm = np.arange(group.dim)
    cyc = group.axes
    L = len(cyc)
    for i, a in enumerate(cyc):
        perm[a] = cyc[(i + power) % L]
    return perm


def _permute_freqs(freqs: np.ndarray, perm: np.ndarray) -> np.ndarray:
    out = np.empty_like(freqs)
    out[:, perm] = freqs
    return out


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector onto the invariant part of a slice.

    Diagonal actions carry a keep ``mask``.  Permutation actions carry, for each
    group element, the index each element is sent to and the sign picked up
    when the image frequency is brought back to its canonical representative.
    """

    slice: SpectrumSlice
    group: GroupAction
    mask: np.ndarray | None = None
    images: tuple[np.ndarray, ...] = field(default=(), repr=False)
    signs: tuple[np.ndarray, ...] = field(default=(), repr=False)

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != len(self.slice):
            raise DimensionMismatch("coefficient vector does not match projector slice")
        if self.mask is not None:
            return np.where(self.mask, values, 0.0)
        acc = np.zeros_like(values)
        tmp = np.empty_like(values)
        for idx, sgn in zip(self.images, self.signs):
            tmp[..., idx] = sgn * values
            acc += tmp
        return acc / len(self.images)

    __call__ = apply

    def matrix(self) -> np.ndarray:
        return self.apply(np.eye(len(self.slice)))

    @property
    def rank(self) -> int:
        if self.mask is not None:
            return int(self.mask.sum())
        return int(round(np.trace(self.matrix())))


def invariant_projector(group: GroupAction, slc: SpectrumSlice) -> Projector:
    if slc.dim != group.dim:
        raise DimensionMismatch(f"slice dimension {slc.dim} != group dimension {group.dim}")
    if group.is_diagonal:
        mask = invariant_mask(group, slc.freqs)
        mask.setflags(write=False)
        return Projector(slc, group, mask=mask)
    canon = slc.canonical_freqs
    images, signs = [], []
    for power in range(len(group.axes)):
        img = _permute_freqs(canon, _cycle_perm(group, power))
        flip = ~canonical_mask(img)
        img[flip] *= -1
        pos = slc.lookup(img)
        if (pos < 0).any():
            raise ValueError("slice is not closed under the permutation action")
        idx = np.empty(len(slc), dtype=np.int64)
        sgn = np.ones(len(slc))
        idx[0] = 0
        idx[1::2] = pos
        idx[2::2] = pos + 1
        sgn[2::2] = np.where(flip, -1.0, 1.0)
        images.append(idx)
        signs.append(sgn)
    return Projector(slc, group, images=tuple(images), signs=tuple(signs))


def _axis_lattices(group: GroupAction, m_max: int) -> list[tuple[np.ndarray, np.ndarray]]:
    k_max = math.isqrt(m_max)
    axes = []
    for step in group.axis_steps():
        if step is None:
            ks = np.array([0])
        else:
            ks = np.arange(-(k_max // step), k_max // step + 1) * step
        axes.append((ks, np.ones(len(ks))))
    return axes


def invariant_radial_counts(group: GroupAction, m_max: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Number of invariant complex modes at each squared norm m = 0..m_max.

    For permutation actions this counts orbits of lattice points.
    """
    if m_max + 1 > budget:
        raise BudgetExceeded(f"squared-norm range {m_max} exceeds budget {budget}")
    if group.is_diagonal:
        return radial_convolve(_axis_lattices(group, m_max), m_max)
    if ball_count_estimate(group.dim, m_max) > 4 * budget:
        raise BudgetExceeded(f"orbit enumeration up to |v|^2 = {m_max} exceeds budget {budget}")
    pts = _ball_points(group.dim, m_max)
    if len(pts) > budget:
        raise BudgetExceeded(f"{len(pts)} lattice points exceed budget {budget}")
    base = 2 * math.isqrt(m_max) + 1
    weights = base ** np.arange(group.dim, dtype=np.int64)
    keys = [((_permute_freqs(pts, _cycle_perm(group, p)) + base // 2) @ weights) for p in range(len(group.axes))]
    rep = np.min(np.stack(keys), axis=0)
    sq = np.einsum("ij,ij->i", pts, pts)
    _, first = np.unique(rep, return_index=True)
    return np.bincount(sq[first], minlength=m_max + 1).astype(float)


def invariant_multiplicity(group: GroupAction, lam: float) -> int:
    """Number of invariant complex modes with eigenvalue exactly ``lam``."""
    m = max_square_norm(lam)
    if not math.isclose(FOUR_PI_SQ * m, lam, rel_tol=1e-9, abs_tol=1e-12):
        return 0
    return int(round(invariant_radial_counts(group, m)[m]))


def weyl_count_invariant(group: GroupAction, lam: float, budget: int = DEFAULT_BUDGET) -> int:
    """Invariant complex modes with eigenvalue <= lam (constant mode included)."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return int(round(invariant_radial_counts(group, max_square_norm(lam), budget).sum()))


def weyl_leading_coefficient(group: GroupAction) -> float:
    """omega_q / (2 pi)^q * vol(T^d / G) with q the quotient dimension."""
    q = quotient_dim(group)
    omega = math.pi ** (q / 2) / math.gamma(q / 2 + 1)
    return omega / (2 * math.pi) ** q * quotient_vol(group)


def orbit_average(group: GroupAction, points: np.ndarray) -> np.ndarray:
    """All images of each point under a finite group, stacked (|G| * n rows).

    Used to build explicit data augmentation for finite groups.
    """
    points = np.asarray(points, dtype=float)
    if group.kind == "trivial":
        return points.copy()
    if group.kind == "continuous_shift":
        raise UnsupportedAction("continuous groups have no finite orbit")
    if group.kind == "permutation":
        return np.concatenate([points[:, _cycle_perm(group, p)] for p in range(len(group.axes))])
    shifts = np.array(np.meshgrid(*[np.arange(m) / m for m in group.orders], indexing="ij")).reshape(len(group.axes), -1).T
    out = []
    for s in shifts:
        img = points.copy()
        img[:, list(group.axes)] = (img[:, list(group.axes)] + s) % 1.0
        out.append(img)
    return np.concatenate(out)


__all__ = [
    "GroupAction",
    "Projector",
    "invariant_mask",
    "invariant_multiplicity",
    "invariant_projector",
    "invariant_radial_counts",
    "is_invariant_frequency",
    "orbit_average",
    "quotient_dim",
    "quotient_vol",
    "weyl_count_invariant",
    "weyl_leading_coefficient",
]
