from __future__ import annotations

import math

import numpy as np
import pytest

from hybridcavity import gaussian
from hybridcavity.constants import LAMBDA_ZPL, N_DIAMOND
from hybridcavity.errors import NoConvergence, UnstableCavity

LAM, N = LAMBDA_ZPL, N_DIAMOND
UM = 1e-6


def abcd_eigenmode(t_d, t_a, roc, lam=LAM, n=N):
    """Waist on the plane mirror and spot on the curved mirror from the
    round-trip ray-transfer matrix (reduced angles, planar diamond surface)."""

    def prop(d):
        return np.array([[1.0, d], [0.0, 1.0]])

    mirror = np.array([[1.0, 0.0], [-2.0 / roc, 1.0]])
    rt = prop(t_d / n) @ prop(t_a) @ mirror @ prop(t_a) @ prop(t_d / n)
    A, B, C, D = rt.ravel()
    m = (A + D) / 2
    assert abs(m) < 1
    inv_q = (D - A) / (2 * B) - 1j * math.sqrt(1 - m * m) / abs(B)
    q = 1 / inv_q
    w0 = math.sqrt(-lam / (math.pi * (1 / q).imag))
    qm = q + t_a + t_d / n
    w_m = math.sqrt(-lam / (math.pi * (1 / qm).imag))
    return w0, w_m


class TestDimple:
    def test_gaussian_dimple_diameter(self):
        d = gaussian.DimpleGeometry.from_roc_depth(25 * UM, 0.3 * UM)
        assert d.diameter == pytest.approx(7.746 * UM, abs=1e-3 * UM)

    def test_curvature_of_gaussian_profile(self):
        d = gaussian.DimpleGeometry.from_roc_depth(20 * UM, 0.4 * UM)
        # z(r) = depth exp(-r^2/a^2) has central curvature 2 depth / a^2
        a = d.diameter / 2
        assert 1 / (2 * d.depth / a**2) == pytest.approx(d.roc)

    def test_min_air_gap_from_tilt(self):
        d = gaussian.DimpleGeometry.from_roc_depth(25 * UM, 0.3 * UM, 125 * UM, math.radians(3.7))
        assert d.tilt_gap == pytest.approx(62.5 * UM * math.sin(math.radians(3.7)))
        assert d.min_air_gap == pytest.approx(0.3 * UM + d.tilt_gap)
        assert 3.5 * UM < d.tilt_gap < 4.5 * UM

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            gaussian.DimpleGeometry.from_roc_depth(0, 0.3 * UM)


class TestAnalytic:
    def test_reference_geometry(self):
        m = gaussian.solve_modes_analytic(4 * UM, 2 * UM, 25 * UM)
        assert m.reduced_length == pytest.approx(3.660 * UM, abs=1e-3 * UM)
        assert m.w0_d == pytest.approx(1.3386 * UM, abs=1e-4 * UM)
        assert m.w0_a == m.w0_d
        assert m.dz_a == pytest.approx(2.3402 * UM, abs=1e-4 * UM)
        assert 0 <= m.dz_a < m.t_d

    @pytest.mark.parametrize("t_d,t_a,roc", [(4, 2, 25), (1, 4, 15), (3, 1, 30), (0, 2, 20)])
    def test_matches_abcd_eigenmode(self, t_d, t_a, roc):
        m = gaussian.solve_modes_analytic(t_d * UM, t_a * UM, roc * UM)
        w0, w_m = abcd_eigenmode(t_d * UM, t_a * UM, roc * UM)
        assert m.w0_d == pytest.approx(w0, rel=1e-10)
        assert m.w_m == pytest.approx(w_m, rel=1e-10)

    def test_bare_cavity(self):
        m = gaussian.solve_modes_analytic(0.0, 3 * UM, 20 * UM)
        expected = math.sqrt(LAM / math.pi) * (3 * UM * 17 * UM) ** 0.25
        assert m.w0_d == pytest.approx(expected)
        assert m.dz_a == 0

    def test_rayleigh_lengths(self):
        m = gaussian.solve_modes_analytic(4 * UM, 2 * UM, 25 * UM)
        assert m.z0_a == pytest.approx(m.z0_d / N)

    def test_g0(self):
        m = gaussian.solve_modes_analytic(4 * UM, 2 * UM, 20 * UM)
        assert m.g0 == pytest.approx((math.pi * m.w0_d**2 / 4) / (LAM / N) ** 2)
        assert m.g0 == pytest.approx(17.627, abs=1e-3)

    def test_unstable(self):
        with pytest.raises(UnstableCavity):
            gaussian.solve_modes_analytic(4 * UM, 24 * UM, 25 * UM)
        with pytest.raises(UnstableCavity):
            gaussian.solve_modes_numeric(4 * UM, 24 * UM, 25 * UM)
        with pytest.raises(UnstableCavity):
            gaussian.solve_modes_analytic(4 * UM, 2 * UM, -25 * UM)


class TestNumeric:
    @pytest.mark.parametrize("t_d,t_a,roc", [(4, 2, 25), (1, 1, 15), (4, 4, 30), (2.5, 3.3, 18)])
    def test_matches_analytic(self, t_d, t_a, roc):
        a = gaussian.solve_modes_analytic(t_d * UM, t_a * UM, roc * UM)
        n = gaussian.solve_modes_numeric(t_d * UM, t_a * UM, roc * UM)
        assert n.w0_d == pytest.approx(a.w0_d, rel=1e-9)
        assert n.w0_a == pytest.approx(a.w0_a, rel=1e-9)
        assert n.dz_a == pytest.approx(a.dz_a, rel=1e-8, abs=1e-15)
        assert n.w_m == pytest.approx(a.w_m, rel=1e-9)

    def test_bare_cavity_exact(self):
        a = gaussian.solve_modes_analytic(0.0, 2 * UM, 20 * UM)
        n = gaussian.solve_modes_numeric(0.0, 2 * UM, 20 * UM)
        assert n.w0_d == pytest.approx(a.w0_d, rel=1e-10)

    def test_satisfies_matching_conditions(self):
        m = gaussian.solve_modes_numeric(3 * UM, 2 * UM, 22 * UM)

        def radius(z, z0):
            return z + z0**2 / z

        R_d = radius(m.t_d, m.z0_d)
        R_a = radius(m.t_d - m.dz_a, m.z0_a)
        assert N * R_a == pytest.approx(R_d, rel=1e-9)
        assert radius(m.t_d + m.t_a - m.dz_a, m.z0_a) == pytest.approx(m.roc, rel=1e-9)
        w_d = m.w0_d * math.hypot(1, m.t_d / m.z0_d)
        w_a = m.w0_a * math.hypot(1, (m.t_d - m.dz_a) / m.z0_a)
        assert w_d == pytest.approx(w_a, rel=1e-9)

    def test_no_convergence_carries_diagnostics(self):
        with pytest.raises(NoConvergence) as info:
            gaussian.solve_modes_numeric(4 * UM, 2 * UM, 25 * UM, xtol=1e-300)
        assert "residual" in info.value.diagnostics or "message" in info.value.diagnostics


class TestTrends:
    def test_air_gap_matters_more(self):
        roc = 25 * UM
        gap = [gaussian.solve_modes_numeric(4 * UM, t * UM, roc).w0_d for t in (1, 4)]
        thick = [gaussian.solve_modes_numeric(t * UM, 2 * UM, roc).w0_d for t in (1, 4)]
        assert gap[1] - gap[0] > thick[1] - thick[0] > 0

    def test_derivative_ratio(self):
        roc, h = 25 * UM, 1e-10

        def w(td, ta):
            return gaussian.solve_modes_analytic(td, ta, roc).w0_d

        d_td = (w(3 * UM + h, 2 * UM) - w(3 * UM - h, 2 * UM)) / (2 * h)
        d_ta = (w(3 * UM, 2 * UM + h) - w(3 * UM, 2 * UM - h)) / (2 * h)
        assert d_td / d_ta == pytest.approx(1 / N, rel=1e-5)


class TestLosses:
    def test_clipping_negligible(self):
        d = gaussian.DimpleGeometry.from_roc_depth(25 * UM, 0.3 * UM)
        for t_a in (1.0, 1.5, 2.0):
            raw, eff = gaussian.clipping_losses(gaussian.solve_modes_analytic(4 * UM, t_a * UM, 25 * UM), d)
            assert raw < 10e-6
        m = gaussian.solve_modes_analytic(4 * UM, 2 * UM, 25 * UM)
        raw, eff = gaussian.clipping_losses(m, d, 1 / N)
        assert raw == pytest.approx(math.exp(-2 * (d.diameter / 2 / m.w_m) ** 2))
        assert eff == pytest.approx(raw / N)

    def test_clipping_grows_with_gap(self):
        d = gaussian.DimpleGeometry.from_roc_depth(25 * UM, 0.3 * UM)
        vals = [gaussian.clipping_losses(gaussian.solve_modes_analytic(4 * UM, t * UM, 25 * UM), d)[0] for t in (2, 10, 18)]
        assert vals[0] < vals[1] < vals[2]

    def test_fiber_mode_matching(self):
        m = gaussian.solve_modes_analytic(4 * UM, 2 * UM, 20 * UM)
        eps = gaussian.fiber_mode_matching(m, 2.5 * UM)
        assert eps == pytest.approx(0.5, abs=0.1)
        assert eps == pytest.approx(0.5636, abs=1e-4)
        assert gaussian.fiber_mode_matching(m, math.inf) == 0.0
        assert gaussian.fiber_mode_matching(m, 1.0) < 1e-8

    def test_identical_modes_overlap_fully(self):
        assert gaussian.gaussian_overlap(2 * UM, 2 * UM, 0.0, LAM) == pytest.approx(1.0)

    def test_mode_volume(self):
        m = gaussian.solve_modes_analytic(4 * UM, 2 * UM, 20 * UM)
        L = 4.7 * UM
        assert gaussian.mode_volume(m, L) == pytest.approx(m.g0 * (LAM / N) ** 2 * L)
