from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.optimize import curve_fit
from scipy.signal import argrelextrema

from conftest import resonant_stack
from hybridcavity import hybrid, tmm
from hybridcavity.constants import C, LAMBDA_ZPL, N_DIAMOND, NU_ZPL
from hybridcavity.errors import NoResonanceInWindow
from hybridcavity.tmm import Layer, LayerStack

LAM = LAMBDA_ZPL


def bare_cavity(length, T1, T2, n=1.0):
    """Air (or uniform-medium) cavity between two lumped mirrors."""
    m1 = tmm.lumped_mirror(T1, n)
    m2 = tmm.lumped_mirror(T2, n)
    return LayerStack.from_layers([*reversed(m1.layers), Layer(n, length, "gap"), *m2.layers])


class TestTypes:
    def test_layer_rejects_unphysical(self):
        with pytest.raises(ValueError):
            Layer(0.9, 1e-6)
        with pytest.raises(ValueError):
            Layer(1.5, -1e-9)

    def test_interfaces_follow_layers(self):
        stack = LayerStack.from_layers([Layer(1.5, 1e-7), Layer(2.0, 1e-7)], 1.0, 2.41, {0: 1e-9})
        assert len(stack.interfaces) == 1
        assert stack.interfaces[0].left_index == 1.5
        assert stack.interfaces[0].right_index == 2.0
        assert stack.interfaces[0].rms_roughness == 1e-9


class TestFresnel:
    def test_smooth_air_to_diamond(self):
        rho, tau, rho_rev, tau_rev = tmm.fresnel_rough(1.0, 2.41, 0.0, LAM)
        assert rho == pytest.approx(-0.4135, abs=1e-4)
        assert tau == pytest.approx(0.5865, abs=1e-4)
        assert rho_rev == pytest.approx(0.4135, abs=1e-4)
        assert tau_rev == pytest.approx(2 * 2.41 / 3.41)

    def test_direction_reversal_flips_sign(self):
        rho, *_ = tmm.fresnel_rough(2.41, 1.0, 0.0, LAM)
        assert rho == pytest.approx(0.4135, abs=1e-4)

    def test_rough_damping_matches_exponentials(self):
        sigma = 0.25e-9
        rho0, tau0, *_ = tmm.fresnel_rough(2.41, 1.0, 0.0, LAM)
        rho, tau, *_ = tmm.fresnel_rough(2.41, 1.0, sigma, LAM)
        # independent evaluation of the two damping factors
        d_rho = math.exp(-2.0 * (2.0 * math.pi * sigma * 2.41 / LAM) ** 2)
        d_tau = math.exp(-0.5 * (2.0 * math.pi * sigma * 1.41 / LAM) ** 2)
        assert abs(rho) < abs(rho0)
        assert 1 - abs(rho / rho0) == pytest.approx(1 - d_rho, rel=1e-12)
        assert 1 - abs(rho / rho0) == pytest.approx(7.0627e-5, rel=1e-3)
        assert abs(tau / tau0) == pytest.approx(d_tau, rel=1e-14)


class TestReflectivity:
    def test_single_interface(self):
        stack = LayerStack.from_layers([], 1.0, N_DIAMOND)
        assert tmm.reflectivity(stack, NU_ZPL) == pytest.approx(((N_DIAMOND - 1) / (N_DIAMOND + 1)) ** 2)
        assert tmm.reflectivity(stack, NU_ZPL) == pytest.approx(0.1710, abs=1e-4)

    def test_empty_stack_is_transparent(self):
        stack = LayerStack.from_layers([])
        assert tmm.reflectivity(stack, NU_ZPL) == 0.0
        assert tmm.transmission(stack, NU_ZPL) == pytest.approx(1.0)

    def test_vectorised_matches_scalar(self, dbr):
        f = NU_ZPL * np.linspace(0.8, 1.2, 7)
        vec = tmm.reflectivity(dbr, f)
        assert np.allclose(vec, [tmm.reflectivity(dbr, x) for x in f], rtol=0, atol=1e-14)

    def test_energy_conservation_dbr(self, dbr):
        f = NU_ZPL * np.linspace(0.5, 1.5, 101)
        stack = dbr.with_embedding(1.0, N_DIAMOND)
        assert np.max(np.abs(tmm.reflectivity(stack, f) + tmm.transmission(stack, f) - 1)) < 1e-9

    def test_rough_interface_loses_energy(self, dbr):
        _, stack = resonant_stack(hybrid.DIAMOND_LIKE, dbr, sigma=0.5e-9)
        f = NU_ZPL + np.linspace(-5e9, 5e9, 11)
        assert np.all(tmm.reflectivity(stack, f) + tmm.transmission(stack, f) < 1)


class TestBuilders:
    def test_dbr_layout(self):
        m = tmm.build_dbr(3, 2.14, 1.48, LAM, "high")
        idx = [layer.refractive_index for layer in m.layers]
        assert idx == [2.14, 1.48, 2.14, 1.48, 2.14, 1.48, 2.14]
        for layer in m.layers:
            assert layer.refractive_index * layer.thickness == pytest.approx(LAM / 4)
        low = tmm.build_dbr(1, 2.14, 1.48, LAM, "low")
        assert [x.refractive_index for x in low.layers] == [1.48, 2.14, 1.48]

    def test_dbr_rejects_bad_input(self):
        with pytest.raises(ValueError):
            tmm.build_dbr(0)
        with pytest.raises(ValueError):
            tmm.build_dbr(2, 0.8, 1.48)
        with pytest.raises(ValueError):
            tmm.build_dbr(2, termination="middle")

    def test_degenerate_dbr_is_bare_interface(self):
        m = tmm.build_dbr(1, N_DIAMOND, N_DIAMOND, LAM)
        T = tmm.mirror_transmission(m, 1.0, N_DIAMOND, LAM)
        assert T == pytest.approx(1 - ((N_DIAMOND - 1) / (N_DIAMOND + 1)) ** 2, rel=1e-12)

    def test_dbr_transmission_into_air_and_diamond(self, dbr):
        # frozen values of the 23-layer mirror used by the thickness-sweep fixtures
        assert tmm.mirror_transmission(dbr, 1.0) == pytest.approx(261.7e-6, rel=1e-3)
        assert tmm.mirror_transmission(dbr, N_DIAMOND) == pytest.approx(630.6e-6, rel=1e-3)

    @pytest.mark.parametrize("T", [1e-5, 3e-4, 0.05, 0.5])
    @pytest.mark.parametrize("n_c", [1.0, N_DIAMOND])
    def test_lumped_mirror_hits_target(self, T, n_c):
        m = tmm.lumped_mirror(T, n_c, 1.0, LAM)
        assert tmm.mirror_transmission(m, n_c, 1.0, LAM) == pytest.approx(T, rel=1e-10)

    def test_build_cavity_order_and_roughness(self, dbr):
        stack = tmm.build_cavity(4e-6, 2e-6, dbr, dbr, N_DIAMOND, 0.3e-9)
        names = [layer.name for layer in stack.layers]
        gap, dia = names.index("air_gap"), names.index("diamond")
        assert dia == gap + 1
        rough = [i for i, it in enumerate(stack.interfaces) if it.rms_roughness > 0]
        assert rough == [gap]

    def test_build_cavity_with_ar_coating(self, dbr):
        stack = tmm.build_cavity(4e-6, 2e-6, dbr, dbr, N_DIAMOND, 0.3e-9, ar_index=1.55)
        ar = stack.find("ar_coating")
        assert stack.layers[ar].thickness == pytest.approx(LAM / (4 * 1.55))
        assert stack.interfaces[ar - 1].rms_roughness == 0.3e-9
        assert stack.interfaces[ar].rms_roughness == 0.3e-9


class TestLinewidth:
    def test_finesse_8000(self):
        L = 10 * LAM / 2
        stack = bare_cavity(L, 400e-6, 400e-6)
        f0 = 10 * C / (2 * L)
        res = tmm.linewidth_numeric(stack, f0, 200e9)
        prof = tmm.field_profile(stack, res.f_res)
        fsr = C / (2 * tmm.energy_distribution_length(prof, "gap"))
        assert fsr / res.fwhm == pytest.approx(2 * math.pi / 800e-6, rel=2e-3)
        assert 2 * math.pi / 800e-6 == pytest.approx(7854, rel=1e-3)

    def test_doubling_transmission_doubles_width(self):
        L = 10 * LAM / 2
        f0 = 10 * C / (2 * L)
        w1 = tmm.linewidth_numeric(bare_cavity(L, 300e-6, 500e-6), f0, 200e9).fwhm
        w2 = tmm.linewidth_numeric(bare_cavity(L, 600e-6, 1000e-6), f0, 400e9).fwhm
        assert w2 / w1 == pytest.approx(2.0, rel=0.05)

    def test_impedance_matched_dip_reaches_zero(self):
        L = 8 * LAM / 2
        res = tmm.linewidth_numeric(bare_cavity(L, 1e-3, 1e-3), 8 * C / (2 * L), 200e9)
        assert res.r_min < 1e-8

    def test_resonance_at_zpl(self, dbr):
        _, stack = resonant_stack(hybrid.DIAMOND_LIKE, dbr)
        res = tmm.linewidth_numeric(stack, NU_ZPL, 50e9)
        assert res.f_res == pytest.approx(470.4e12, rel=1e-3)
        assert abs(res.f_res - NU_ZPL) < 1e3

    def test_no_dip_raises(self, dbr):
        stack = dbr.with_embedding(1.0, 1.0)
        with pytest.raises(NoResonanceInWindow):
            tmm.linewidth_numeric(stack, NU_ZPL, 1e9)

    def test_dip_is_lorentzian(self):
        L = 12 * LAM / 2
        stack = bare_cavity(L, 200e-6, 800e-6)
        res = tmm.linewidth_numeric(stack, 12 * C / (2 * L), 100e9)
        assert 2 * math.pi / 1e-3 > 1000
        x = np.linspace(-1.0, 1.0, 201)
        R = tmm.reflectivity(stack, res.f_res + x * res.fwhm)

        def lorentz(x, base, depth, x0, gamma):
            return base - depth / (1 + ((x - x0) / gamma) ** 2)

        p, _ = curve_fit(lorentz, x, R, p0=[1, 1 - res.r_min, 0, 0.5])
        resid = np.max(np.abs(R - lorentz(x, *p)))
        assert resid < 0.01 * p[1]


class TestFieldProfile:
    def test_grid_limits(self, dbr):
        _, stack = resonant_stack(hybrid.DIAMOND_LIKE, dbr)
        with pytest.raises(ValueError):
            tmm.field_profile(stack, NU_ZPL, LAM / (10 * 2.41))
        prof = tmm.field_profile(stack, NU_ZPL)
        assert np.all(np.diff(prof.z_grid) >= 0)
        assert np.max(np.diff(prof.z_grid)) <= LAM / (40 * 2.41) * (1 + 1e-9)

    def test_field_continuous_across_smooth_interfaces(self, dbr):
        _, stack = resonant_stack(hybrid.AIR_LIKE, dbr)
        prof = tmm.field_profile(stack, NU_ZPL)
        for j in range(len(stack.layers) - 1):
            _, e_left = prof.layer_points(j)
            _, e_right = prof.layer_points(j + 1)
            assert abs(e_left[-1] - e_right[0]) < 1e-9 * np.max(np.abs(prof.complex_field))

    def test_max_field_bounds_grid(self, dbr):
        _, stack = resonant_stack(hybrid.DIAMOND_LIKE, dbr)
        prof = tmm.field_profile(stack, NU_ZPL)
        _, e = prof.layer_points("diamond")
        assert prof.max_field("diamond") >= np.max(np.abs(e))
        assert prof.max_field("diamond") == pytest.approx(np.max(np.abs(e)), rel=1e-3)

    def _interface_field(self, stack, prof):
        z, e = prof.layer_points("diamond")
        return abs(e[0]), prof.max_field("diamond")

    def test_diamond_like_has_antinode_at_interface(self, dbr):
        _, stack = resonant_stack(hybrid.DIAMOND_LIKE, dbr)
        prof = tmm.field_profile(stack, tmm.linewidth_numeric(stack, NU_ZPL, 50e9).f_res)
        at_surface, peak = self._interface_field(stack, prof)
        assert at_surface / peak > 0.999

    def test_air_like_has_node_at_interface(self, dbr):
        _, stack = resonant_stack(hybrid.AIR_LIKE, dbr)
        prof = tmm.field_profile(stack, tmm.linewidth_numeric(stack, NU_ZPL, 50e9).f_res)
        at_surface, peak = self._interface_field(stack, prof)
        assert at_surface / peak < 1e-3

    def test_half_wave_cavity_single_antinode(self):
        stack = bare_cavity(LAM / 2, 1e-3, 1e-3)
        res = tmm.linewidth_numeric(stack, C / LAM, 500e9)
        prof = tmm.field_profile(stack, res.f_res)
        z, e = prof.layer_points("gap")
        a = np.abs(e)
        peaks = argrelextrema(a, np.greater)[0]
        assert len(peaks) == 1
        assert z[peaks[0]] - z[0] == pytest.approx(LAM / 4, abs=LAM / 200)


class TestEnergyLength:
    def test_bare_cavity_equals_length(self):
        L = 6 * LAM / 2
        stack = bare_cavity(L, 1e-4, 1e-4)
        prof = tmm.field_profile(stack, tmm.linewidth_numeric(stack, 6 * C / (2 * L), 100e9).f_res)
        assert tmm.energy_distribution_length(prof, "gap") == pytest.approx(L, rel=2e-3)

    def test_air_like_longer_than_diamond_like(self, dbr):
        lengths = {}
        for mode in (hybrid.AIR_LIKE, hybrid.DIAMOND_LIKE):
            _, stack = resonant_stack(mode, dbr)
            lengths[mode] = tmm.energy_distribution_length(tmm.field_profile(stack, NU_ZPL))
        assert lengths[hybrid.AIR_LIKE] > lengths[hybrid.DIAMOND_LIKE]

    @pytest.mark.parametrize("mode", [hybrid.DIAMOND_LIKE, hybrid.AIR_LIKE])
    def test_linewidth_formula_with_numeric_length(self, dbr, mode):
        cav, stack = resonant_stack(mode, dbr)
        res = tmm.linewidth_numeric(stack, NU_ZPL, 50e9)
        leff = tmm.energy_distribution_length(tmm.field_profile(stack, res.f_res))
        T_a, T_d = tmm.mirror_transmission(dbr, 1.0), tmm.mirror_transmission(dbr, N_DIAMOND)
        eff = hybrid.effective_mirror_losses(cav, T_a, T_d)
        assert hybrid.linewidth(leff, eff) == pytest.approx(res.fwhm, rel=0.02)

    def test_grid_convergence(self, dbr):
        _, stack = resonant_stack(hybrid.DIAMOND_LIKE, dbr)
        coarse = tmm.energy_distribution_length(tmm.field_profile(stack, NU_ZPL))
        fine = tmm.energy_distribution_length(tmm.field_profile(stack, NU_ZPL, LAM / (400 * 2.41)))
        assert coarse == pytest.approx(fine, rel=1e-3)

    def test_penetration_of_quarter_wave_mirror(self, dbr):
        expected = hybrid.dbr_penetration_length()
        assert tmm.mirror_penetration_length(dbr, 1.0) == pytest.approx(expected, rel=1e-3)
        assert tmm.mirror_penetration_length(dbr, N_DIAMOND) == pytest.approx(expected, rel=1e-3)
