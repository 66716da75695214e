import math

import numpy as np
import pytest

from spectral_invariance.errors import RegimeError
from spectral_invariance.groups import GroupAction
from spectral_invariance.quantities import (
    effective_sample_gain,
    riemann_zeta,
    theta,
    trace_heat,
    trace_heat_lattice,
    weyl_fit,
    zeta,
)

TRIV1 = GroupAction.trivial(1)
CYC4 = GroupAction.cyclic_shift(1, [0], 4)
SHIFT1 = GroupAction.continuous_shift(2, [0])


def test_riemann_zeta():
    assert riemann_zeta(2) == pytest.approx(math.pi ** 2 / 6, abs=1e-13)
    assert riemann_zeta(4) == pytest.approx(math.pi ** 4 / 90, abs=1e-13)
    assert riemann_zeta(3) == pytest.approx(1.2020569031595942, abs=1e-13)


class TestZeta:
    def test_closed_forms(self):
        r = zeta(TRIV1, 1.0)
        assert r.value == pytest.approx(1 / 12, abs=1e-12)
        assert r.method == "closed_form" and r.tail_bound == 0.0
        assert zeta(CYC4, 1.0).value == pytest.approx(1 / 192, abs=1e-12)

    @pytest.mark.parametrize("group,exact", [(TRIV1, 1 / 12), (CYC4, 1 / 192)])
    def test_numeric_agrees(self, group, exact):
        r = zeta(group, 1.0, rel_tol=1e-6, closed_form=False)
        assert r.method == "truncated_with_tail"
        assert abs(r.value - exact) <= max(r.tail_bound, 1e-6 * exact)

    def test_numeric_higher_dimension(self):
        # T^2 at alpha = 2 against a brute-force lattice sum with an integral tail
        r = zeta(GroupAction.trivial(2), 2.0, rel_tol=1e-6, closed_form=False)
        k = np.arange(-400, 401)
        m = (k[:, None] ** 2 + k[None, :] ** 2).astype(float)
        m = m[(m > 0) & (m <= 400 ** 2)]
        brute = float(np.sum((4 * math.pi ** 2 * m) ** -2.0))
        tail = math.pi / (4 * math.pi ** 2) ** 2 / 400 ** 2
        assert r.value == pytest.approx(brute + tail, rel=1e-5)

    def test_regime(self):
        with pytest.raises(RegimeError):
            zeta(GroupAction.trivial(2), 1.0)
        with pytest.raises(RegimeError):
            zeta(TRIV1, 0.5)

    def test_group_monotone_and_decreasing(self):
        for a in (1.0, 1.5, 3.0):
            assert zeta(CYC4, a).value <= zeta(TRIV1, a).value
        vals = [zeta(TRIV1, a).value for a in (0.75, 1.0, 2.0, 4.0)]
        assert vals == sorted(vals, reverse=True)
        sub = zeta(GroupAction.continuous_shift(3, [0]), 2.0, rel_tol=1e-5).value
        assert sub <= zeta(GroupAction.trivial(3), 2.0, rel_tol=1e-5).value


class TestTheta:
    def test_examples(self):
        assert theta(1.0) == pytest.approx(1.7726372048, abs=1e-9)
        assert theta(40.0) == pytest.approx(1 + 2 * math.exp(-40.0), abs=1e-15)
        grid = np.linspace(0.05, 10, 50)
        vals = [theta(b) for b in grid]
        assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            theta(0.0)


class TestTraceHeat:
    def test_examples(self):
        assert trace_heat(SHIFT1, 1.0).value == pytest.approx(theta(1.0) - 1, abs=1e-10)
        assert trace_heat(GroupAction.trivial(2), 1.0).value == pytest.approx(2.1422427, abs=1e-7)
        assert effective_sample_gain(SHIFT1, 1.0) == pytest.approx(2.77264, abs=1e-5)

    @pytest.mark.parametrize("group", [
        SHIFT1,
        GroupAction.trivial(3),
        GroupAction.cyclic_shift(2, [1], 3),
        GroupAction.permutation(3, [0, 1, 2]),
    ])
    def test_lattice_cross_check(self, group):
        for beta in (0.1, 1.0):
            closed, lattice = trace_heat(group, beta), trace_heat_lattice(group, beta)
            assert closed.value == pytest.approx(lattice.value, abs=1e-10 + lattice.tail_bound)

    def test_group_monotone(self):
        for beta in (0.01, 0.5, 2.0):
            base = trace_heat(GroupAction.trivial(3), beta).value
            for g in (GroupAction.continuous_shift(3, [2]), GroupAction.cyclic_shift(3, [0, 1], 2),
                      GroupAction.permutation(3, [0, 1])):
                assert trace_heat(g, beta).value <= base


class TestWeylFit:
    def test_trivial_t2(self):
        fit = weyl_fit(GroupAction.trivial(2), np.geomspace(1e3, 1e5, 30))
        assert abs(fit.slope - 1.0) < 0.05
        assert fit.nominal_prefactor == pytest.approx(1 / (4 * math.pi), rel=0.05)

    def test_shift_t6(self):
        fit = weyl_fit(GroupAction.continuous_shift(6, [0, 1]), np.geomspace(1e3, 1e5, 20))
        assert abs(fit.slope - 2.0) < 0.05

    def test_cyclic_prefactor_scales(self):
        grid = np.geomspace(1e4, 1e7, 30)
        base = weyl_fit(TRIV1, grid).nominal_prefactor
        for m in (2, 5):
            fit = weyl_fit(GroupAction.cyclic_shift(1, [0], m), grid)
            assert fit.nominal_prefactor * m == pytest.approx(base, rel=0.05)

    def test_degenerate_grid(self):
        with pytest.raises(ValueError):
            weyl_fit(TRIV1, [1e3, 2e3, 5e3])
        with pytest.raises(ValueError):
            weyl_fit(TRIV1, [1e3, 1e5])
