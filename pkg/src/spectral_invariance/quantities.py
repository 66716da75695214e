"""Spectral gain functionals: Z(alpha; G), Theta_beta, tr(K_beta; G), Weyl fits.

Conventions.  T^d = [0, 1)^d, eigenvalues 4 pi^2 |v|^2, heat weights
exp(-beta |v|^2) in frequency units.  On the circle of circumference 2 pi the
eigenvalues are k^2, so a zeta value quoted there converts by a factor
(4 pi^2)^-alpha:  Z_here(alpha; G) = (4 pi^2)^-alpha * 2 |G|^(-2 alpha) zeta(2 alpha).
Heat traces need no conversion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RegimeError
from .groups import (
    GroupAction,
    invariant_radial_counts,
    quotient_dim,
    quotient_vol,
    weyl_count_invariant,
    weyl_leading_coefficient,
)
from .spectrum import FOUR_PI_SQ, max_square_norm

# B_2k / (2k)! for k = 1..8
_BERNOULLI_OVER_FACT = [
    1 / 6 / 2,
    -1 / 30 / 24,
    1 / 42 / 720,
    -1 / 30 / 40320,
    5 / 66 / 3628800,
    -691 / 2730 / 479001600,
    7 / 6 / 87178291200,
    -3617 / 510 / 20922789888000,
]


def riemann_zeta(s: float, n_terms: int = 12) -> float:
    """Riemann zeta for real s > 1 by Euler-Maclaurin summation (~1e-15 relative)."""
    if s <= 1:
        raise ValueError("riemann_zeta needs s > 1")
    N = n_terms
    head = math.fsum(k ** (-s) for k in range(1, N))
    tail = N ** (1 - s) / (s - 1) + 0.5 * N ** (-s)
    rising = s  # s (s+1) ... (s + 2k - 2)
    for k, coef in enumerate(_BERNOULLI_OVER_FACT, start=1):
        tail += coef * rising * N ** (-s - 2 * k + 1)
        rising *= (s + 2 * k - 1) * (s + 2 * k)
    return head + tail


@dataclass(frozen=True)
class SpectralSumResult:
    value: float
    method: str
    tail_bound: float = 0.0

    def __float__(self) -> float:
        return self.value


def _is_circle_family(group: GroupAction) -> bool:
    """Quotient is one-dimensional with a single (possibly cyclic) free axis."""
    if not group.is_diagonal or quotient_dim(group) != 1:
        return False
    if group.kind == "cyclic_shift":
        return group.dim == 1
    return True


def _circle_order(group: GroupAction) -> int:
    return group.orders[0] if group.kind == "cyclic_shift" else 1


def zeta(group: GroupAction, alpha: float, rel_tol: float = 1e-9, closed_form: bool = True,
         budget: int = 2 ** 22) -> SpectralSumResult:
    """Z(alpha; G) = sum over nonzero invariant eigenvalues of m(lambda; G) lambda^-alpha."""
    q = quotient_dim(group)
    if 2 * alpha <= q:
        raise RegimeError(f"Z(alpha; G) diverges for 2 alpha = {2 * alpha} <= quotient dim {q}")
    if closed_form and _is_circle_family(group):
        m = _circle_order(group)
        value = 2.0 * FOUR_PI_SQ ** (-alpha) * m ** (-2 * alpha) * riemann_zeta(2 * alpha)
        return SpectralSumResult(value, "closed_form", 0.0)
    return _zeta_numeric(group, alpha, rel_tol, budget)


def _lattice_cell(group: GroupAction) -> tuple[float, float]:
    """(cell volume, half cell diagonal) of the invariant frequency lattice."""
    if not group.is_diagonal:
        return 1.0, 0.5 * math.sqrt(group.dim)
    steps = [s for s in group.axis_steps() if s is not None]
    return float(math.prod(steps)), 0.5 * math.sqrt(sum(s * s for s in steps))


def _power_tail(q: int, h: float, sign: int, m: float, alpha: float) -> float:
    """Integral over t > m of (sqrt t + sign h)^q t^(-alpha-1), expanded binomially."""
    return sum(math.comb(q, j) * (sign * h) ** (q - j) * m ** (j / 2 - alpha) / (alpha - j / 2)
               for j in range(q + 1))


def _zeta_numeric(group: GroupAction, alpha: float, rel_tol: float, budget: int) -> SpectralSumResult:
    """Radial head sum plus an Abel-summation tail.

    Beyond the head the counting function N(t) is replaced by its Weyl leading
    term for the estimate, and by the lattice-cell sandwich
    omega (sqrt t -/+ h)^q / cell for the certified interval.
    """
    q = quotient_dim(group)
    cell, h = _lattice_cell(group)
    omega = math.pi ** (q / 2) / math.gamma(q / 2 + 1)
    # orbit counts of a permutation lie between points / L and points
    shrink = 1.0 / group.order if not group.is_diagonal else 1.0
    scale = FOUR_PI_SQ ** (-alpha)
    lead = weyl_leading_coefficient(group) * FOUR_PI_SQ ** (q / 2)
    m_max = 1024
    while True:
        counts = invariant_radial_counts(group, m_max, budget=budget)
        ms = np.arange(1, m_max + 1, dtype=float)
        head = math.fsum(counts[1:] * (FOUR_PI_SQ * ms) ** (-alpha))
        boundary = float(counts.sum()) * scale * m_max ** (-alpha)
        estimate = alpha * scale * lead * m_max ** (q / 2 - alpha) / (alpha - q / 2) - boundary
        hi = alpha * scale * omega / cell * _power_tail(q, h, 1, m_max, alpha) - boundary
        lo = alpha * scale * shrink * omega / cell * _power_tail(q, h, -1, m_max, alpha) - boundary
        bound = max(hi - estimate, estimate - max(lo, 0.0), 0.0)
        value = head + estimate
        if bound <= rel_tol * value or 4 * m_max + 1 > budget:
            return SpectralSumResult(value, "truncated_with_tail", bound)
        m_max *= 4


def theta(beta: float) -> float:
    """Theta_beta = sum over v in Z of exp(-beta v^2)."""
    if beta <= 0:
        raise ValueError("theta needs beta > 0")
    total = 0.0
    k = 1
    while True:
        term = math.exp(-beta * k * k)
        if term < 1e-17:
            break
        total += term
        k += 1
    return 1.0 + 2.0 * total


def trace_heat(group: GroupAction, beta: float) -> SpectralSumResult:
    """tr(K_beta; G) = sum over nonzero invariant modes of exp(-beta |v|^2).

    Diagonal actions factorise into one-dimensional theta sums: a free axis
    gives Theta_beta, a continuously shifted axis gives 1, an axis with a
    cyclic shift of order m gives Theta_{beta m^2}.
    """
    if beta <= 0:
        raise ValueError("trace_heat needs beta > 0")
    if not group.is_diagonal:
        return trace_heat_lattice(group, beta)
    prod = 1.0
    for step in group.axis_steps():
        if step is not None:
            prod *= theta(beta * step * step)
    return SpectralSumResult(prod - 1.0, "closed_form", 0.0)


def trace_heat_lattice(group: GroupAction, beta: float, tol: float = 1e-15) -> SpectralSumResult:
    """Direct lattice summation of the invariant heat trace, with a theta-function tail bound."""
    m_max = max(16, int(math.ceil(-math.log(tol) / beta)))
    counts = invariant_radial_counts(group, m_max)
    ms = np.arange(m_max + 1)
    value = float(np.sum(counts[1:] * np.exp(-beta * ms[1:])))
    all_counts = invariant_radial_counts(GroupAction.trivial(group.dim), m_max)
    inside = float(np.sum(all_counts * np.exp(-beta * ms)))
    bound = max(theta(beta) ** group.dim - inside, 0.0)
    return SpectralSumResult(value, "truncated_with_tail", bound)


@dataclass(frozen=True)
class WeylFit:
    slope: float
    prefactor: float
    slope_stderr: float
    intercept_stderr: float
    nominal_prefactor: float

    def __iter__(self):
        return iter((self.slope, self.prefactor, self.slope_stderr))


def weyl_fit(group: GroupAction, lambda_grid) -> WeylFit:
    """Least-squares fit log N(lambda; G) = slope log lambda + log prefactor.

    ``nominal_prefactor`` is the geometric mean of N / lambda^(q/2) with the
    slope pinned at half the quotient dimension.
    """
    lam = np.asarray(lambda_grid, dtype=float)
    if len(lam) < 3 or lam.min() <= 0 or lam.max() / lam.min() < 100:
        raise ValueError("weyl_fit needs >= 3 positive eigenvalues spanning two decades")
    m_top = max_square_norm(lam.max())
    counts = np.cumsum(invariant_radial_counts(group, m_top))
    n_lam = np.array([counts[max_square_norm(x)] for x in lam])
    x, y = np.log(lam), np.log(n_lam)
    (slope, intercept), cov = np.polyfit(x, y, 1, cov=True)
    q = quotient_dim(group)
    nominal = float(np.exp(np.mean(y - 0.5 * q * x)))
    return WeylFit(float(slope), float(np.exp(intercept)), float(math.sqrt(cov[0, 0])),
                   float(math.sqrt(cov[1, 1])), nominal)


def effective_sample_gain(group: GroupAction, beta: float) -> float:
    """tr(K_beta; {id}) / tr(K_beta; G)."""
    return trace_heat(GroupAction.trivial(group.dim), beta).value / trace_heat(group, beta).value


__all__ = [
    "SpectralSumResult",
    "WeylFit",
    "effective_sample_gain",
    "quotient_vol",
    "riemann_zeta",
    "theta",
    "trace_heat",
    "trace_heat_lattice",
    "weyl_count_invariant",
    "weyl_fit",
    "zeta",
]
