"""Coupled Gaussian beams in a plane-concave cavity with a diamond membrane.

The plane mirror sits at ``z = 0`` and carries the waist of the diamond beam.
The diamond surface at ``z = t_d`` is planar; the air beam has its waist at
``z = dz_a`` and its wavefront matches the dimple curvature at
``z = t_d + t_a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .constants import LAMBDA_ZPL, N_DIAMOND
from .errors import NoConvergence, UnstableCavity

SILICA_INDEX = 1.45
DEFAULT_FIBER_MFR = 2.5e-6


@dataclass(frozen=True)
class DimpleGeometry:
    """Gaussian-profile dimple ``z(r) = depth * exp(-r^2 / (diameter/2)^2)``.

    ``diameter`` is the full 1/e width; the central curvature is then
    ``roc = (diameter/2)^2 / (2 depth)``.
    """

    roc: float
    depth: float
    diameter: float
    fiber_diameter: float = 125e-6
    tilt: float = 0.0

    @classmethod
    def from_roc_depth(cls, roc: float, depth: float, fiber_diameter: float = 125e-6, tilt: float = 0.0):
        if roc <= 0 or depth <= 0:
            raise ValueError("roc and depth must be positive")
        return cls(roc, depth, 2.0 * math.sqrt(2.0 * roc * depth), fiber_diameter, tilt)

    @property
    def tilt_gap(self) -> float:
        """Extra mirror separation forced by tilting a fiber of finite diameter."""
        return 0.5 * self.fiber_diameter * math.sin(self.tilt)

    @property
    def min_air_gap(self) -> float:
        return self.depth + self.tilt_gap


@dataclass(frozen=True)
class ModeSolution:
    w0_d: float
    w0_a: float
    dz_a: float
    t_d: float
    t_a: float
    roc: float
    lambda0: float = LAMBDA_ZPL
    n_d: float = N_DIAMOND

    @property
    def z0_d(self) -> float:
        return math.pi * self.n_d * self.w0_d**2 / self.lambda0

    @property
    def z0_a(self) -> float:
        return math.pi * self.w0_a**2 / self.lambda0

    @property
    def reduced_length(self) -> float:
        """Air-equivalent length ``t_a + t_d / n_d``."""
        return self.t_a + self.t_d / self.n_d

    @property
    def w_m(self) -> float:
        """1/e^2 beam radius on the curved mirror."""
        z = self.t_d + self.t_a - self.dz_a
        return self.w0_a * math.sqrt(1.0 + (z / self.z0_a) ** 2)

    @property
    def g0(self) -> float:
        return (math.pi * self.w0_d**2 / 4.0) / (self.lambda0 / self.n_d) ** 2


def _check_inputs(t_d, t_a, roc, n_d):
    if t_d < 0 or t_a <= 0:
        raise ValueError("need t_d >= 0 and t_a > 0")
    if roc <= 0:
        raise UnstableCavity("radius of curvature must be positive")
    lp = t_a + t_d / n_d
    if lp >= roc:
        raise UnstableCavity(f"t_a + t_d/n_d = {lp:.4g} m is not below ROC = {roc:.4g} m")
    return lp


def _plano_concave_waist(length, roc, lambda0):
    return math.sqrt(lambda0 / math.pi) * (length * (roc - length)) ** 0.25


def solve_modes_analytic(
    t_d: float, t_a: float, roc: float, lambda0: float = LAMBDA_ZPL, n_d: float = N_DIAMOND
) -> ModeSolution:
    """Closed-form coupled-beam solution.

    Refraction at a planar surface maps the diamond beam onto an air beam
    with the same waist, seemingly located ``t_d (1 - 1/n_d)`` from the
    plane mirror, so the cavity behaves like a bare plane-concave cavity of
    length ``t_a + t_d / n_d``.
    """
    lp = _check_inputs(t_d, t_a, roc, n_d)
    w0 = _plano_concave_waist(lp, roc, lambda0)
    return ModeSolution(w0, w0, t_d * (1.0 - 1.0 / n_d), t_d, t_a, roc, lambda0, n_d)


def _width(w0, z, z0):
    return w0 * np.sqrt(1.0 + (z / z0) ** 2)


def _curvature(z, z0):
    """Inverse wavefront radius ``1/R(z)`` of a Gaussian beam."""
    return z / (z * z + z0 * z0)


def solve_modes_numeric(
    t_d: float,
    t_a: float,
    roc: float,
    lambda0: float = LAMBDA_ZPL,
    n_d: float = N_DIAMOND,
    xtol: float = 1e-13,
) -> ModeSolution:
    """Solve the three matching conditions for ``(w0_d, w0_a, dz_a)``.

    Conditions: equal widths at the diamond surface, ``n_d R_a = R_d`` there,
    and ``R_a = ROC`` on the curved mirror. Solved in micrometres starting
    from a bare cavity of the full physical length.
    """
    _check_inputs(t_d, t_a, roc, n_d)
    um = 1e6
    td, ta, R, lam = t_d * um, t_a * um, roc * um, lambda0 * um

    def residual(x):
        w0d, w0a, dz = x
        z0d = math.pi * n_d * w0d**2 / lam
        z0a = math.pi * w0a**2 / lam
        za = td - dz
        return [
            _width(w0d, td, z0d) - _width(w0a, za, z0a),
            R * (_curvature(za, z0a) - n_d * _curvature(td, z0d)),
            R * _curvature(za + ta, z0a) - 1.0,
        ]

    guess_len = min(ta + td, 0.9 * R)
    w_guess = _plano_concave_waist(guess_len, R, lam)
    sol = optimize.root(residual, [w_guess, w_guess, 0.0], method="hybr", options={"xtol": xtol})
    res = np.abs(residual(sol.x))
    if not sol.success or not np.all(np.isfinite(sol.x)) or res.max() > 1e-9:
        raise NoConvergence(
            "coupled-beam equations did not converge",
            {"message": sol.message, "x_um": list(sol.x), "residual": list(res), "nfev": sol.nfev},
        )
    w0d, w0a, dz = sol.x
    return ModeSolution(abs(w0d) / um, abs(w0a) / um, dz / um, t_d, t_a, roc, lambda0, n_d)


def clipping_losses(mode: ModeSolution, dimple: DimpleGeometry, relative_intensity: float = 1.0):
    """Round-trip loss from the beam spilling over the dimple edge.

    Returns ``(raw, effective)``; the effective value is weighted by the
    relative intensity in air like any other air-side loss.
    """
    if mode.w_m == 0:
        return 0.0, 0.0
    raw = math.exp(-2.0 * (0.5 * dimple.diameter / mode.w_m) ** 2)
    return raw, relative_intensity * raw


def gaussian_overlap(w1: float, w2: float, curvature_mismatch: float, lambda0: float, n: float = 1.0) -> float:
    """Power coupling between two coaxial Gaussian beams in the same plane.

    ``curvature_mismatch`` is ``1/R1 - 1/R2`` inside a medium of index ``n``.
    """
    size = (w1 / w2 + w2 / w1) ** 2
    phase = (math.pi * n * w1 * w2 * curvature_mismatch / lambda0) ** 2
    return 4.0 / (size + phase)


def fiber_mode_matching(
    mode: ModeSolution, fiber_mfr: float = DEFAULT_FIBER_MFR, n_fiber: float = SILICA_INDEX
) -> float:
    """Overlap of the cavity mode leaving through the dimple with the
    flat-phase fundamental mode of the fiber.

    A wavefront matching the dimple keeps its radius on refraction into the
    fiber, so the mismatch is ``1/ROC`` in glass.
    """
    if fiber_mfr <= 0:
        raise ValueError("fiber mode-field radius must be positive")
    if math.isinf(fiber_mfr):
        return 0.0
    return gaussian_overlap(mode.w_m, fiber_mfr, 1.0 / mode.roc, mode.lambda0, n_fiber)


def mode_volume(mode: ModeSolution, energy_len: float) -> float:
    return math.pi * mode.w0_d**2 / 4.0 * energy_len
