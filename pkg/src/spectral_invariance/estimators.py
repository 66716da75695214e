"""Coefficient-space estimators built from samples.

Every estimator is a :class:`CoefficientField` over a fixed slice: the plain
empirical field, its invariant projection, the truncated invariant field, the
heat-smoothed field, and the exact full-augmentation baseline.  Fields stay
signed; no projection onto probability measures is attempted.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, RegimeError
from .groups import GroupAction, Projector, invariant_projector, quotient_dim, quotient_vol
from .spectrum import KIND_NAMES, SQRT2, SpectrumSlice, phase_sums

ESTIMATOR_KINDS = ("empirical", "invariant", "truncated_invariant", "heat_smoothed", "augmented")


@dataclass(frozen=True, eq=False)
class CoefficientField:
    slice: SpectrumSlice
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.slice),):
            raise DimensionMismatch(f"{values.shape[0]} values for a slice of {len(self.slice)} elements")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray, **meta) -> "CoefficientField":
        return replace(self, values=values, meta={**self.meta, **meta})

    def to_csv(self, stream=None) -> str:
        """Rows (kind, freq_0..freq_{d-1}, lambda, value)."""
        out = stream or io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        d = self.slice.dim
        writer.writerow(["kind"] + [f"freq_{j}" for j in range(d)] + ["lambda", "value"])
        for f, k, lam, v in zip(self.slice.freqs, self.slice.kinds, self.slice.eigenvalues, self.values):
            writer.writerow([KIND_NAMES[k], *(int(x) for x in f), repr(float(lam)), repr(float(v))])
        return out.getvalue() if stream is None else ""


def _check_samples(samples, slc: SpectrumSlice) -> np.ndarray:
    pts = np.asarray(samples, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1) if slc.dim == 1 else pts.reshape(1, -1)
    if len(pts) == 0:
        raise ValueError("empirical coefficients need at least one sample")
    if pts.shape[1] != slc.dim:
        raise DimensionMismatch(f"samples have dimension {pts.shape[1]}, expected {slc.dim}")
    return pts


def empirical_coefficients(samples, slc: SpectrumSlice, active: np.ndarray | None = None) -> CoefficientField:
    """Mean of each basis function over the samples.

    ``active`` optionally restricts the work to a boolean subset of elements
    (cosine/sine partners must agree); inactive entries are returned as 0.
    The reduction order depends only on the slice, so the result does not
    depend on how trials are scheduled.
    """
    pts = _check_samples(samples, slc)
    canon = slc.canonical_freqs
    pair_active = np.ones(len(canon), dtype=bool) if active is None else np.asarray(active)[1::2]
    freqs = canon[pair_active]
    acc = phase_sums(freqs, pts) / len(pts)
    values = np.zeros(len(slc))
    values[0] = 1.0
    cos_idx = 1 + 2 * np.flatnonzero(pair_active)
    values[cos_idx] = SQRT2 * acc.real
    values[cos_idx + 1] = SQRT2 * acc.imag
    return CoefficientField(slc, values, {"kind": "empirical", "n": len(pts)})


def project_invariant(fld: CoefficientField, projector: Projector) -> CoefficientField:
    if projector.slice is not fld.slice and projector.slice != fld.slice:
        raise DimensionMismatch("projector and field live on different slices")
    return fld.with_values(projector.apply(fld.values), kind="invariant", group=projector.group.to_dict())


def truncate(fld: CoefficientField, cutoff: float) -> CoefficientField:
    """Zero every element with eigenvalue >= cutoff (the constant always survives)."""
    if cutoff > fld.slice.lambda_max * (1 + 1e-12):
        raise ValueError(f"cutoff {cutoff} exceeds slice lambda_max {fld.slice.lambda_max}")
    keep = fld.slice.eigenvalues < cutoff
    keep[0] = True
    kind = "truncated_invariant" if fld.meta.get("kind") in ("invariant", "augmented") else "truncated"
    return fld.with_values(np.where(keep, fld.values, 0.0), kind=kind, cutoff=float(cutoff))


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def optimal_cutoff(s: float, alpha: float, d_eff: int, vol_q: float, n: int, sobolev_norm_sq: float) -> float:
    """Bias-variance balancing eigenvalue cutoff for the truncated estimator.

    For alpha < d/2 the variance of the head grows like (d/2n) C lambda^(d/2 - alpha)
    with C = omega_d (2 pi)^-d vol(M/G); at alpha = d/2 it grows like
    (alpha/n) C log(lambda).  Both branches balance it against the bias
    lambda^-(s + alpha) |f|^2_{H^s}.
    """
    if min(vol_q, n, sobolev_norm_sq) <= 0 or s < 0 or alpha < 0 or d_eff < 1:
        raise ValueError("optimal_cutoff needs positive inputs")
    weyl = unit_ball_volume(d_eff) / (2 * math.pi) ** d_eff * vol_q
    if math.isclose(alpha, d_eff / 2):
        rate = alpha / n
    elif alpha < d_eff / 2:
        rate = d_eff / (2 * n)
    else:
        raise RegimeError(f"alpha = {alpha} >= d/2 = {d_eff / 2}: kernel regime, no finite cutoff")
    return ((s + alpha) * sobolev_norm_sq / (rate * weyl)) ** (1.0 / (s + d_eff / 2))


def heat_smooth(fld: CoefficientField, sigma: float) -> CoefficientField:
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    damp = np.exp(-sigma * fld.slice.eigenvalues)
    return fld.with_values(damp * fld.values, kind="heat_smoothed", sigma=float(sigma))


def optimal_sigma(d_eff: int, vol_q: float, n: int) -> float:
    """Heat time minimising sqrt(sigma) + sqrt(vol/n) sigma^((2-d)/4)."""
    if d_eff < 3:
        raise RegimeError(f"heat smoothing rule needs quotient dimension >= 3, got {d_eff}")
    return ((1 - d_eff / 2) ** 2 * vol_q / n) ** (2.0 / d_eff)


def augmentation_baseline(samples, slc: SpectrumSlice, group: GroupAction) -> CoefficientField:
    """Empirical measure averaged over the whole group, in closed form.

    Identical to projecting the empirical field; the result keeps every
    invariant element up to the slice cutoff.
    """
    proj = invariant_projector(group, slc)
    active = proj.mask if proj.mask is not None else None
    fld = empirical_coefficients(samples, slc, active=active)
    out = project_invariant(fld, proj)
    return out.with_values(out.values, kind="augmented")


@dataclass(frozen=True)
class EstimatorSpec:
    """How to turn samples into a coefficient field.

    ``cutoff`` is an explicit eigenvalue or ``"rule_of_thumb"``; the rule needs
    ``s``, ``alpha`` and ``sobolev_norm_sq``.  ``sigma`` is explicit or
    ``"rule_of_thumb"``.
    """

    kind: str
    group: GroupAction
    cutoff: float | str | None = None
    sigma: float | str | None = None
    s: float | None = None
    alpha: float | None = None
    sobolev_norm_sq: float | None = None

    def __post_init__(self):
        if self.kind not in ESTIMATOR_KINDS:
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.kind == "truncated_invariant" and self.cutoff is None:
            raise ValueError("truncated_invariant needs a cutoff policy")
        if self.cutoff == "rule_of_thumb" and None in (self.s, self.alpha, self.sobolev_norm_sq):
            raise ValueError("rule-of-thumb cutoff needs s, alpha and sobolev_norm_sq")
        if self.kind == "heat_smoothed":
            if self.sigma is None:
                raise ValueError("heat_smoothed needs a bandwidth policy")
            if self.sigma == "rule_of_thumb" and quotient_dim(self.group) < 3:
                raise RegimeError("heat_smoothed rule of thumb needs quotient dimension >= 3")

    def resolve_cutoff(self, n: int) -> float | None:
        if self.cutoff is None:
            return None
        if self.cutoff == "rule_of_thumb":
            return optimal_cutoff(self.s, self.alpha, quotient_dim(self.group), quotient_vol(self.group), n,
                                  self.sobolev_norm_sq)
        return float(self.cutoff)

    def resolve_sigma(self, n: int) -> float | None:
        if self.sigma is None:
            return None
        if self.sigma == "rule_of_thumb":
            return optimal_sigma(quotient_dim(self.group), quotient_vol(self.group), n)
        return float(self.sigma)

    def estimate(self, samples, slc: SpectrumSlice, projector: Projector | None = None) -> CoefficientField:
        n = len(samples)
        if self.kind == "empirical":
            return empirical_coefficients(samples, slc)
        if self.kind == "augmented":
            return augmentation_baseline(samples, slc, self.group)
        proj = projector if projector is not None else invariant_projector(self.group, slc)
        active = proj.mask.copy() if proj.mask is not None else np.ones(len(slc), dtype=bool)
        requested = self.resolve_cutoff(n) if self.kind == "truncated_invariant" else None
        cutoff = None if requested is None else min(requested, slc.lambda_max)
        if cutoff is not None:
            if proj.mask is not None:
                active &= slc.eigenvalues < cutoff
        fld = empirical_coefficients(samples, slc, active=active if proj.mask is not None else None)
        fld = project_invariant(fld, proj)
        if cutoff is not None:
            fld = truncate(fld, cutoff)
            fld = fld.with_values(fld.values, requested_cutoff=float(requested))
        if self.kind == "heat_smoothed":
            fld = heat_smooth(fld, self.resolve_sigma(n))
        return fld


def estimate(spec: EstimatorSpec, samples, slc: SpectrumSlice) -> CoefficientField:
    return spec.estimate(samples, slc)


__all__ = [
    "CoefficientField",
    "ESTIMATOR_KINDS",
    "EstimatorSpec",
    "augmentation_baseline",
    "empirical_coefficients",
    "estimate",
    "heat_smooth",
    "optimal_cutoff",
    "optimal_sigma",
    "project_invariant",
    "truncate",
]
