"""Figures of merit: Purcell enhancement, ZPL branching, vibrations and outcoupling.

Emission into the ZPL follows from the Purcell factor ``F_p = 3 xi / (g0 L)``
where ``L`` are the effective round-trip losses. Cavity-length vibrations are
treated quasi-statically: a Gaussian distribution of length offsets detunes
the cavity, and the Lorentzian cavity response reduces ``F_p`` accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import gaussian, hybrid
from ._search import golden_section, grid_bracket
from .constants import BETA0_NV, C, LAMBDA_ZPL, N_DIAMOND, NU_ZPL
from .errors import InvalidBudget


@dataclass(frozen=True)
class EmitterParams:
    """``psb_linewidth`` is informational; phonon-sideband enhancement is neglected."""

    beta0: float = BETA0_NV
    xi: float = 1.0
    zpl_frequency: float = NU_ZPL
    psb_linewidth: float = 30e12

    def __post_init__(self):
        if not 0.0 < self.beta0 < 1.0:
            raise ValueError("beta0 must lie in (0, 1)")
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError("xi must lie in [0, 1]")


MAX_QUADRATURE = 351
QUADRATURE_RTOL = 1e-4
GAUSS_CUTOFF = 12.0  # standard deviations; the tail beyond is below 1e-32


@dataclass(frozen=True)
class VibrationSpec:
    """RMS of a Gaussian cavity-length offset and the Gauss-Hermite order."""

    sigma_vib: float = 0.1e-9
    quadrature_points: int = 41

    def __post_init__(self):
        if self.sigma_vib < 0:
            raise ValueError("sigma_vib must be non-negative")
        # numpy's Gauss-Hermite weights underflow beyond ~360 nodes
        if not 21 <= self.quadrature_points <= MAX_QUADRATURE or self.quadrature_points % 2 == 0:
            raise ValueError(f"quadrature_points must be odd and in [21, {MAX_QUADRATURE}]")


@dataclass(frozen=True)
class FigureOfMerit:
    purcell: float
    branching: float
    branching_avg: float
    eta_out: float
    detected_zpl_prob: float
    finesse: float
    linewidth: float
    eff_losses: float


def purcell_factor(g0: float, eff_losses: float, xi: float = 1.0) -> float:
    if g0 <= 0 or eff_losses <= 0:
        raise ValueError("g0 and eff_losses must be positive")
    return 3.0 * xi / (g0 * eff_losses)


def purcell_factor_from_linewidth(
    linewidth: float, volume: float, lambda0: float = LAMBDA_ZPL, n_d: float = N_DIAMOND, xi: float = 1.0
) -> float:
    """Purcell factor from a linewidth (Hz) and mode volume (m^3)."""
    return xi * 3.0 * C * lambda0**2 / (4.0 * math.pi * n_d**3) / (linewidth * volume)


def branching_ratio(Fp, beta0: float = BETA0_NV):
    """Fraction of emission into the cavity-enhanced ZPL."""
    x = beta0 * np.asarray(Fp, dtype=float)
    out = x / (x + 1.0)
    return float(out) if out.ndim == 0 else out


def detuned_purcell(Fp_res, detuning, linewidth: float):
    """Lorentzian cavity response: ``F_p / (1 + (2 delta / linewidth)^2)``."""
    if linewidth <= 0:
        raise ValueError("linewidth must be positive")
    out = Fp_res / (1.0 + (2.0 * np.asarray(detuning, dtype=float) / linewidth) ** 2)
    return float(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=16)
def _gauss_hermite(points: int):
    x, w = np.polynomial.hermite_e.hermegauss(points)
    return x, w / w.sum()


def averaged_branching(
    Fp_res: float, linewidth: float, sensitivity: float, vib: VibrationSpec, beta0: float = BETA0_NV
) -> float:
    """``<beta>`` over Gaussian length offsets; ``sensitivity`` is ``|d nu / d L|``.

    Gauss-Hermite with ``vib.quadrature_points`` nodes is cross-checked
    against roughly twice as many; when they disagree by more than
    ``QUADRATURE_RTOL`` (a Lorentzian much narrower than the vibration
    spread) the integral is redone adaptively.
    """
    if vib.sigma_vib == 0 or sensitivity == 0:
        return branching_ratio(Fp_res, beta0)
    spread = sensitivity * vib.sigma_vib

    def beta(x):
        return branching_ratio(detuned_purcell(Fp_res, spread * x, linewidth), beta0)

    estimates = []
    for n in (vib.quadrature_points, min(2 * vib.quadrature_points - 1, MAX_QUADRATURE)):
        x, w = _gauss_hermite(n)
        estimates.append(float(np.dot(w, beta(x))))
    coarse, fine = estimates
    if abs(coarse - fine) <= QUADRATURE_RTOL * abs(fine):
        return coarse
    # the integrand is even in x; split at the cavity half width
    half_width = 0.5 * linewidth * math.sqrt(1.0 + beta0 * Fp_res) / spread
    value, _ = integrate.quad(
        lambda x: beta(x) * math.exp(-0.5 * x * x),
        0.0,
        GAUSS_CUTOFF,
        points=[min(half_width, GAUSS_CUTOFF / 2)],
        epsabs=0.0,
        epsrel=1e-10,
        limit=200,
    )
    return 2.0 * value / math.sqrt(2.0 * math.pi)


def vibration_averaged_emission(
    cavity: hybrid.HybridCavity,
    mode: gaussian.ModeSolution,
    eff_losses: float,
    emitter: EmitterParams = EmitterParams(),
    vib: VibrationSpec = VibrationSpec(),
    energy_len: float | None = None,
) -> float:
    """Mean ZPL branching ratio of an emitter in a vibrating cavity.

    The linewidth comes from the closed-form energy length unless
    ``energy_len`` is given. Raises :class:`UnclassifiedMode` for cavities
    whose vibration sensitivity is undefined.
    """
    Fp = purcell_factor(mode.g0, eff_losses, emitter.xi)
    sens = hybrid.vibration_sensitivity(cavity) if vib.sigma_vib > 0 else 0.0
    lw = hybrid.cavity_linewidth(cavity, eff_losses, energy_len)
    return averaged_branching(Fp, lw, sens, vib, emitter.beta0)


def outcoupling_efficiency(T_o: float, eff_losses: float, mode_matching: float = 1.0) -> float:
    """Share of cavity decay leaving through the outcoupler into the target mode."""
    if T_o <= 0 or eff_losses <= 0:
        raise InvalidBudget("T_o and eff_losses must be positive")
    if T_o > eff_losses * (1.0 + 1e-12):
        raise InvalidBudget(f"T_o = {T_o:.4g} exceeds the total effective losses {eff_losses:.4g}")
    return min(T_o / eff_losses, 1.0) * mode_matching


@dataclass(frozen=True)
class CavityDesign:
    """A complete cavity with the plane (diamond-side) mirror as outcoupler.

    ``mirror_air`` lumps every loss at the curved mirror; ``diamond_parasitic``
    is the plane mirror's scatter and absorption, to which the outcoupler
    transmission ``T_o`` is added.
    """

    cavity: hybrid.HybridCavity
    roc: float
    mirror_air: float
    diamond_parasitic: float
    sigma_da: float = 0.0
    extra_unwanted: float = 0.0
    dimple: gaussian.DimpleGeometry | None = None
    mode_matching: float = 1.0
    emitter: EmitterParams = field(default_factory=EmitterParams)
    solver: str = "analytic"

    @classmethod
    def resonant(cls, t_d: float, mode: str | None, min_air_gap: float, roc: float, **kwargs) -> "CavityDesign":
        """Snap ``t_d`` to the nearest pure ``mode`` and tune the air gap onto
        resonance (``mode=None`` keeps ``t_d`` as given)."""
        lambda0 = kwargs.pop("lambda0", LAMBDA_ZPL)
        n_d = kwargs.pop("n_d", N_DIAMOND)
        ar = kwargs.pop("ar_coated", False)
        if mode is not None:
            t_d = hybrid.snap_thickness(t_d, mode, lambda0, n_d)
        cav = hybrid.HybridCavity.resonant(t_d, lambda0, n_d, min_air_gap=min_air_gap, ar_coated=ar)
        return cls(cav, roc, **kwargs)

    def modes(self) -> gaussian.ModeSolution:
        c = self.cavity
        solve = gaussian.solve_modes_numeric if self.solver == "numeric" else gaussian.solve_modes_analytic
        return _cached_modes(solve, c.t_d, c.t_a, self.roc, c.lambda0, c.n_d)

    def clipping(self) -> float:
        if self.dimple is None:
            return 0.0
        return gaussian.clipping_losses(self.modes(), self.dimple)[0]

    def unwanted_losses(self) -> float:
        return hybrid.unwanted_losses(
            self.cavity, self.mirror_air, self.diamond_parasitic, self.sigma_da, self.clipping(), self.extra_unwanted
        )

    def effective_losses(self, T_o: float) -> float:
        return self.unwanted_losses() + T_o

    def evaluate(self, T_o: float, vib: VibrationSpec = VibrationSpec()) -> FigureOfMerit:
        mode = self.modes()
        eff = self.effective_losses(T_o)
        Fp = purcell_factor(mode.g0, eff, self.emitter.xi)
        lw = hybrid.cavity_linewidth(self.cavity, eff)
        avg = vibration_averaged_emission(self.cavity, mode, eff, self.emitter, vib)
        eta = outcoupling_efficiency(T_o, eff, self.mode_matching)
        return FigureOfMerit(
            purcell=Fp,
            branching=branching_ratio(Fp, self.emitter.beta0),
            branching_avg=avg,
            eta_out=eta,
            detected_zpl_prob=avg * eta,
            finesse=hybrid.finesse(eff),
            linewidth=lw,
            eff_losses=eff,
        )

    def with_mode(self, mode: str, min_air_gap: float) -> "CavityDesign":
        c = self.cavity
        t_d = hybrid.snap_thickness(c.t_d, mode, c.lambda0, c.n_d)
        cav = hybrid.HybridCavity.resonant(t_d, c.lambda0, c.n_d, min_air_gap=min_air_gap)
        return replace(self, cavity=cav)


@lru_cache(maxsize=256)
def _cached_modes(solve, t_d, t_a, roc, lambda0, n_d):
    return solve(t_d, t_a, roc, lambda0, n_d)


@dataclass(frozen=True)
class OutcouplerOptimum:
    T_opt: float
    detected: float
    at_boundary: bool
    figure: FigureOfMerit


def optimize_outcoupler(
    design: CavityDesign,
    vib: VibrationSpec = VibrationSpec(),
    T_range: tuple[float, float] = (1e-5, 2e-2),
    grid_points: int = 61,
    log_tol: float = 1e-5,
) -> OutcouplerOptimum:
    """Maximise the detected ZPL probability over the outcoupler transmission.

    A logarithmic grid brackets the optimum and golden-section search on
    ``log T_o`` refines it. ``at_boundary`` flags optima on either end of
    ``T_range``.
    """
    lo, hi = T_range
    if not 0 < lo < hi <= 0.1:
        raise ValueError("T_range must satisfy 0 < lo < hi <= 0.1 (1e5 ppm)")

    def cost(logT):
        return -design.evaluate(math.exp(logT), vib).detected_zpl_prob

    grid = np.linspace(math.log(lo), math.log(hi), grid_points)
    values = [cost(x) for x in grid]
    i_lo, best, i_hi = grid_bracket(values)
    if best in (0, grid_points - 1):
        logT, f = grid[best], values[best]
        at_boundary = True
    else:
        logT, f = golden_section(cost, grid[i_lo], grid[i_hi], log_tol)
        if values[best] < f:
            logT, f = grid[best], values[best]
        at_boundary = False
    T_opt = math.exp(logT)
    return OutcouplerOptimum(T_opt, -f, at_boundary, design.evaluate(T_opt, vib))
