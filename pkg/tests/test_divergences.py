import math

import numpy as np
import pytest

from spectral_invariance.distributions import BoxSumSpec, DiracMixture, FieldOracle, reconstruct_on_grid
from spectral_invariance.divergences import (
    SpectralKernel,
    l2_error,
    linf_error,
    mmd,
    mmd_vs_oracle,
    sobolev_ipm,
    sobolev_ipm_vs_oracle,
    w1_upper,
)
from spectral_invariance.errors import DimensionMismatch, GridTooCoarse
from spectral_invariance.estimators import CoefficientField, empirical_coefficients, truncate
from spectral_invariance.spectrum import FOUR_PI_SQ, BasisElement, enumerate_spectrum, evaluate_all

T1 = enumerate_spectrum(1, FOUR_PI_SQ * 64)


def field_of(oracle, slc):
    return CoefficientField(slc, oracle.coefficients(slc))


def uniform_and_cos(slc=T1):
    u = field_of(BoxSumSpec.uniform(1), slc)
    values = u.values.copy()
    values[slc.index(BasisElement((1,), "cosine"))] = 1 / math.sqrt(2)
    return u, CoefficientField(slc, values)


def random_fields(slc, k, seed, scale=0.3):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(k):
        v = scale * rng.normal(size=len(slc)) / (1 + slc.eigenvalues / FOUR_PI_SQ)
        v[0] = 1.0
        out.append(CoefficientField(slc, v))
    return out


class TestSobolev:
    def test_examples(self):
        u, c = uniform_and_cos()
        assert sobolev_ipm(u, u, 1.0).value == 0.0
        assert sobolev_ipm(u, c, 1.0).value == pytest.approx(0.112540, abs=1e-6)
        assert w1_upper(u, c).value == pytest.approx(0.112540, abs=1e-6)
        assert w1_upper(u, c).meta["bound"] == "W1 <= D1"
        assert sobolev_ipm(u, c, 0.0).value == pytest.approx(1 / math.sqrt(2))
        assert l2_error(u, c).value == pytest.approx(0.707107, abs=1e-6)
        assert l2_error(u, u).value == 0.0

    def test_errors(self):
        u, c = uniform_and_cos()
        with pytest.raises(DimensionMismatch):
            sobolev_ipm(u, field_of(BoxSumSpec.uniform(1), enumerate_spectrum(1, FOUR_PI_SQ)), 1.0)
        bad = CoefficientField(T1, np.concatenate([[1.1], c.values[1:]]))
        with pytest.raises(ValueError):
            sobolev_ipm(u, bad, 1.0)

    def test_axioms(self):
        slc = enumerate_spectrum(2, FOUR_PI_SQ * 10)
        for seed in range(10):
            a, b, c = random_fields(slc, 3, seed)
            for alpha in (0.0, 1.0):
                ab, ba = sobolev_ipm(a, b, alpha).value, sobolev_ipm(b, a, alpha).value
                assert ab == ba
                assert ab <= sobolev_ipm(a, c, alpha).value + sobolev_ipm(c, b, alpha).value + 1e-12

    def test_monotone_in_alpha(self):
        slc = enumerate_spectrum(2, FOUR_PI_SQ * 10)
        for seed in range(5):
            a, b = random_fields(slc, 2, 100 + seed)
            vals = [sobolev_ipm(a, b, al).value for al in (0, 0.5, 1, 2)]
            assert vals == sorted(vals, reverse=True)

    def test_quadrature_l2(self):
        slc = enumerate_spectrum(2, FOUR_PI_SQ * 8)
        a, b = random_fields(slc, 2, 7)
        g = 4 * slc.max_abs_freq + 1
        diff = reconstruct_on_grid(slc, a.values - b.values, g)
        assert sobolev_ipm(a, b, 0.0).value == pytest.approx(math.sqrt(np.mean(diff ** 2)), abs=1e-10)

    def test_breakdown_sums_to_head(self):
        u, c = uniform_and_cos()
        lam, contrib = sobolev_ipm(u, c, 1.0).breakdown
        assert contrib.sum() == pytest.approx(0.5 / FOUR_PI_SQ, abs=1e-15)
        assert np.all(np.diff(lam) > 0)


class TestVsOracle:
    def test_uniform_zero(self):
        u = BoxSumSpec.uniform(2)
        res = sobolev_ipm_vs_oracle(field_of(u, enumerate_spectrum(2, FOUR_PI_SQ * 4)), u, 1.0)
        assert res.value == 0.0 and res.tail_hi == 0.0

    def test_truncated_oracle_self_consistency(self):
        spec = BoxSumSpec(1, 3, 1 / 3)
        cutoff = FOUR_PI_SQ * 30
        fld = truncate(field_of(spec, T1), cutoff)
        res = sobolev_ipm_vs_oracle(fld, spec, 1.0, rel_tol=1e-9)
        ks = np.arange(1, 200_000)
        terms = 2 * spec.axis_power(0, ks) / (FOUR_PI_SQ * ks ** 2)
        direct = float(np.sum(terms[FOUR_PI_SQ * ks ** 2 >= cutoff]))
        assert res.squared == pytest.approx(direct, rel=1e-8)
        l2 = l2_error(fld, spec, rel_tol=1e-9)
        assert l2.squared == pytest.approx(float(np.sum(2 * spec.axis_power(0, ks)[ks >= 6])), rel=1e-8)

    def test_refinement(self):
        # the same field embedded in a slice ten times larger, scored against the fine oracle field
        spec = BoxSumSpec(1, 3, 1 / 3)
        fld = empirical_coefficients(spec.sample(4096, 1), T1)
        coarse = sobolev_ipm_vs_oracle(fld, spec, 1.0)
        fine_slc = enumerate_spectrum(1, T1.lambda_max * 10)
        padded = np.zeros(len(fine_slc))
        padded[[fine_slc.index(e) for e in T1.elements]] = fld.values
        fine = sobolev_ipm(CoefficientField(fine_slc, padded), field_of(spec, fine_slc), 1.0)
        assert coarse.head + coarse.tail_lo >= fine.head
        beyond = sobolev_ipm_vs_oracle(field_of(spec, fine_slc), spec, 1.0)
        assert fine.head + beyond.tail_lo == pytest.approx(coarse.head + coarse.tail_lo, rel=1e-9)


class TestMMD:
    def test_dirac_pair(self):
        slc = enumerate_spectrum(1, FOUR_PI_SQ * 100)
        a = field_of(DiracMixture.single((0.0,)), slc)
        b = field_of(DiracMixture.single((0.5,)), slc)
        expected = math.sqrt(8 * sum(math.exp(-v * v) for v in range(1, 20, 2)))
        res = mmd(a, b, SpectralKernel.heat(1.0))
        assert res.head == pytest.approx(expected ** 2, abs=1e-12)
        assert mmd(a, a, SpectralKernel.heat(1.0)).head == 0.0

    def test_kernel_double_sum(self):
        slc = enumerate_spectrum(2, FOUR_PI_SQ * 9)
        rng = np.random.default_rng(3)
        x, y = rng.random((4, 2)), rng.random((3, 2))
        wx, wy = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(3))
        kern = SpectralKernel.heat(0.3)
        xi = kern.weights(slc)

        def K(p, q):
            return (evaluate_all(slc, p) * xi) @ evaluate_all(slc, q).T

        direct = wx @ K(x, x) @ wx + wy @ K(y, y) @ wy - 2 * wx @ K(x, y) @ wy
        res = mmd(field_of(DiracMixture(x, wx), slc), field_of(DiracMixture(y, wy), slc), kern)
        assert res.head == pytest.approx(direct, abs=1e-10)

    def test_heat_tail_interval(self):
        slc = enumerate_spectrum(1, FOUR_PI_SQ * 4)
        a = field_of(DiracMixture.single((0.0,)), slc)
        b = field_of(DiracMixture.single((0.5,)), slc)
        res = mmd(a, b, SpectralKernel.heat(1.0))
        full = 8 * sum(math.exp(-v * v) for v in range(1, 20, 2))
        assert res.head <= full <= res.head + res.tail_hi

    def test_vs_oracle(self):
        u = BoxSumSpec.uniform(2)
        slc = enumerate_spectrum(2, FOUR_PI_SQ * 16)
        fld = empirical_coefficients(u.sample(50, 0), slc)
        assert mmd_vs_oracle(fld, u, SpectralKernel.heat(1.0)).head == pytest.approx(
            mmd(fld, field_of(u, slc), SpectralKernel.heat(1.0)).head)

    def test_kernel_validation(self):
        with pytest.raises(ValueError):
            SpectralKernel.heat(0.0)
        with pytest.raises(ValueError):
            SpectralKernel.sobolev(-1.0)


class TestW1Surrogate:
    def test_partial_sums_converge(self):
        vals = []
        for k in (5, 20, 80, 320):
            slc = enumerate_spectrum(1, FOUR_PI_SQ * k * k)
            vals.append(w1_upper(field_of(DiracMixture.single((0.0,)), slc),
                                 field_of(DiracMixture.single((0.5,)), slc)).value)
        assert vals == sorted(vals)
        # squared limit: 8 / (4 pi^2) times the odd-harmonic sum pi^2 / 8 = 1/4
        assert vals[-1] < 0.5
        assert vals[-1] == pytest.approx(0.5, abs=2e-3)


class TestLinf:
    def test_examples(self):
        u, c = uniform_and_cos()
        spec = BoxSumSpec(1, 2, 0.5)
        trunc = truncate(field_of(spec, T1), T1.lambda_max)
        band = FieldOracle.from_field(trunc)
        assert linf_error(trunc, band, 8 * 8 + 1).value < 1e-12
        res = linf_error(u, FieldOracle.from_field(c), 8 * 8 + 1)
        assert res.value == pytest.approx(1.0, abs=1e-10)
        assert res.slack >= 1.0

    def test_grid_refinement_never_decreases(self):
        spec = BoxSumSpec(1, 2, 0.5)
        fld = empirical_coefficients(spec.sample(100, 2), T1)
        a = linf_error(fld, spec, 65).value
        assert linf_error(fld, spec, 130).value >= a

    def test_grid_too_coarse(self):
        u, c = uniform_and_cos()
        with pytest.raises(GridTooCoarse):
            linf_error(u, BoxSumSpec.uniform(1), 16)
