import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectral_invariance.distributions import BoxSumSpec
from spectral_invariance.errors import DimensionMismatch, UnsupportedAction
from spectral_invariance.estimators import empirical_coefficients
from spectral_invariance.groups import (
    GroupAction,
    invariant_multiplicity,
    invariant_projector,
    is_invariant_frequency,
    orbit_average,
    quotient_dim,
    quotient_vol,
    weyl_count_invariant,
)
from spectral_invariance.quantities import weyl_fit
from spectral_invariance.spectrum import FOUR_PI_SQ, BasisElement, enumerate_spectrum, weyl_count

# axes are 0-based throughout
SHIFT_LAST_TWO = GroupAction.continuous_shift(6, [4, 5])
PERM2 = GroupAction.permutation(2, [0, 1])


def test_quotient_dim():
    assert quotient_dim(GroupAction.trivial(3)) == 3
    assert quotient_dim(SHIFT_LAST_TWO) == 4
    assert quotient_dim(GroupAction.cyclic_shift(1, [0], 4)) == 1
    assert quotient_dim(GroupAction.permutation(3, [0, 1, 2])) == 3


def test_quotient_vol():
    assert quotient_vol(GroupAction.trivial(2)) == 1.0
    assert quotient_vol(GroupAction.cyclic_shift(2, [0], 4)) == 0.25
    assert quotient_vol(GroupAction.continuous_shift(3, [0])) == 1.0
    assert quotient_vol(GroupAction.permutation(3, [0, 1, 2])) == pytest.approx(1 / 3)


def test_validation():
    with pytest.raises(ValueError):
        GroupAction.continuous_shift(2, [2])
    with pytest.raises(ValueError):
        GroupAction.continuous_shift(2, [])
    with pytest.raises(ValueError):
        GroupAction.cyclic_shift(1, [0], 1)
    with pytest.raises(ValueError):
        GroupAction.permutation(3, [1])
    g = GroupAction.cyclic_shift(3, [0, 2], [2, 5])
    assert GroupAction.from_dict(g.to_dict()) == g


def test_is_invariant_frequency():
    g = GroupAction.continuous_shift(4, [0, 1])
    assert is_invariant_frequency(g, (0, 0, 3, 1))
    assert not is_invariant_frequency(g, (1, 0, 0, 0))
    c = GroupAction.cyclic_shift(1, [0], 4)
    assert not is_invariant_frequency(c, (6,))
    assert is_invariant_frequency(c, (8,))
    with pytest.raises(UnsupportedAction):
        is_invariant_frequency(PERM2, (1, 0))


class TestProjector:
    def test_trivial_identity(self):
        slc = enumerate_spectrum(2, FOUR_PI_SQ * 3)
        assert invariant_projector(GroupAction.trivial(2), slc).mask.all()

    def test_shift_mask(self):
        slc = enumerate_spectrum(2, FOUR_PI_SQ)
        p = invariant_projector(GroupAction.continuous_shift(2, [1]), slc)
        kept = [e for e, k in zip(slc.elements, p.mask) if k]
        assert kept == [BasisElement((0, 0), "constant"), BasisElement((1, 0), "cosine"),
                        BasisElement((1, 0), "sine")]

    def test_permutation_orbit_average(self):
        slc = enumerate_spectrum(2, FOUR_PI_SQ)
        p = invariant_projector(PERM2, slc)
        c = np.zeros(len(slc))
        c[slc.index(BasisElement((1, 0), "cosine"))] = 1.0
        out = p.apply(c)
        assert out[slc.index(BasisElement((1, 0), "cosine"))] == pytest.approx(0.5)
        assert out[slc.index(BasisElement((0, 1), "cosine"))] == pytest.approx(0.5)

    @pytest.mark.parametrize("group,dim,m", [
        (PERM2, 2, 10),
        (GroupAction.permutation(3, [0, 1, 2]), 3, 6),
        (GroupAction.permutation(3, [2, 0]), 3, 5),
        (GroupAction.cyclic_shift(2, [0], 3), 2, 10),
    ])
    def test_idempotent_symmetric_contractive(self, group, dim, m):
        slc = enumerate_spectrum(dim, FOUR_PI_SQ * m)
        P = invariant_projector(group, slc).matrix()
        assert np.max(np.abs(P @ P - P)) < 1e-14
        assert np.max(np.abs(P - P.T)) < 1e-14
        v = np.random.default_rng(0).normal(size=len(slc))
        assert np.linalg.norm(P @ v) <= np.linalg.norm(v) + 1e-12

    def test_permutation_projector_matches_augmentation(self):
        # projecting the empirical field equals the empirical field of the augmented sample
        g = GroupAction.permutation(3, [0, 1, 2])
        slc = enumerate_spectrum(3, FOUR_PI_SQ * 5)
        pts = np.random.default_rng(1).random((40, 3))
        proj = invariant_projector(g, slc).apply(empirical_coefficients(pts, slc).values)
        aug = empirical_coefficients(orbit_average(g, pts), slc).values
        assert np.max(np.abs(proj - aug)) < 1e-13

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            invariant_projector(GroupAction.trivial(3), enumerate_spectrum(2, FOUR_PI_SQ))

    def test_invariant_density_is_fixed_point(self):
        spec = BoxSumSpec(6, 2, 0.5, invariant_tail=(4, 5))
        slc = enumerate_spectrum(6, FOUR_PI_SQ * 3)
        c = spec.coefficients(slc)
        p = invariant_projector(SHIFT_LAST_TWO, slc)
        assert np.max(np.abs(p.apply(c) - c)) < 1e-12
        assert np.all(c[~p.mask] == 0.0)
        cyc = BoxSumSpec(1, 3, 0.25, fold=4)
        s1 = enumerate_spectrum(1, FOUR_PI_SQ * 100)
        c1 = cyc.coefficients(s1)
        assert np.max(np.abs(invariant_projector(GroupAction.cyclic_shift(1, [0], 4), s1).apply(c1) - c1)) < 1e-12


class TestMultiplicity:
    def test_examples(self):
        for k in (1, 2, 5):
            assert invariant_multiplicity(GroupAction.trivial(1), FOUR_PI_SQ * k * k) == 2
        c4 = GroupAction.cyclic_shift(1, [0], 4)
        assert invariant_multiplicity(c4, FOUR_PI_SQ * 16) == 2
        assert invariant_multiplicity(c4, FOUR_PI_SQ * 4) == 0
        assert invariant_multiplicity(GroupAction.continuous_shift(2, [0]), FOUR_PI_SQ) == 2

    def test_permutation_counts_orbits(self):
        # (1,0) and (0,1) form one orbit; so do (-1,0) and (0,-1)
        assert invariant_multiplicity(PERM2, FOUR_PI_SQ) == 2
        assert invariant_multiplicity(PERM2, 2 * FOUR_PI_SQ) == 3  # (1,1), (-1,-1), {(1,-1),(-1,1)}


class TestWeylInvariant:
    def test_trivial_matches_weyl_count(self):
        for lam in (0.0, 100.0, 1234.5):
            assert weyl_count_invariant(GroupAction.trivial(3), lam) == weyl_count(3, lam)

    def test_shift_reduces_to_lower_torus(self):
        for lam in (50.0, 500.0, 3000.0):
            assert weyl_count_invariant(SHIFT_LAST_TWO, lam) == weyl_count(4, lam)

    def test_cyclic_divisibility(self):
        for m, K in ((3, 10), (4, 17), (5, 5)):
            assert weyl_count_invariant(GroupAction.cyclic_shift(1, [0], m), FOUR_PI_SQ * K * K) == 2 * (K // m) + 1

    def test_containment(self):
        for g in (SHIFT_LAST_TWO, GroupAction.cyclic_shift(6, [0, 3], 3)):
            for lam in np.linspace(0, 800, 9):
                assert weyl_count_invariant(g, lam) <= weyl_count(6, lam)

    def test_slope_and_prefactor(self):
        fit = weyl_fit(SHIFT_LAST_TWO, np.geomspace(1e3, 1e5, 20))
        assert abs(fit.slope - 2.0) < 0.05
        lead = np.pi ** 2 / 2 / (2 * np.pi) ** 4
        assert abs(fit.nominal_prefactor / lead - 1) < 0.2


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(0, 3), st.integers(2, 5))
def test_cyclic_mask_matches_divisibility(dim, axis, order):
    axis = axis % dim
    g = GroupAction.cyclic_shift(dim, [axis], order)
    slc = enumerate_spectrum(dim, FOUR_PI_SQ * 6)
    mask = invariant_projector(g, slc).mask
    assert np.array_equal(mask, slc.freqs[:, axis] % order == 0)
