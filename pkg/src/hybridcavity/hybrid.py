"""Closed-form description of a diamond membrane inside an open microcavity.

The phase accumulated across the membrane, ``phi = 2 pi n_d t_d / lambda0``,
fixes how the standing wave is shared between diamond and air. With
``sin^2(phi) = 1`` the field has an antinode at the diamond surface and lives
mostly in the diamond (diamond-like mode); with ``sin(phi) = 0`` the surface
sits at a node and the field is pushed into the air gap (air-like mode).

All losses are dimensionless round-trip fractions; multiply by ``1e6`` for ppm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import C, LAMBDA_ZPL, N_DIAMOND, N_SIO2, N_TA2O5
from .errors import NegativeGap, UnclassifiedMode

DIAMOND_LIKE = "diamond-like"
AIR_LIKE = "air-like"


@dataclass(frozen=True)
class HybridCavity:
    t_d: float
    t_a: float
    lambda0: float = LAMBDA_ZPL
    n_d: float = N_DIAMOND
    m: int | None = None
    ar_coated: bool = False

    def __post_init__(self):
        if self.t_d < 0 or self.t_a < 0:
            raise ValueError("thicknesses must be non-negative")

    @classmethod
    def resonant(
        cls,
        t_d: float,
        lambda0: float = LAMBDA_ZPL,
        n_d: float = N_DIAMOND,
        m: int | None = None,
        min_air_gap: float = 0.0,
        ar_coated: bool = False,
    ) -> "HybridCavity":
        """Cavity whose air gap puts the fundamental mode on resonance at
        ``lambda0``. Without an explicit ``m`` the smallest order giving
        ``t_a >= min_air_gap`` is used."""
        if m is None:
            m = minimal_mode_order(t_d, lambda0, n_d, min_air_gap, ar_coated)
        t_a = resonant_air_gap(t_d, lambda0, n_d, m, ar_coated)
        return cls(t_d, t_a, lambda0, n_d, m, ar_coated)

    @property
    def phase(self) -> float:
        return 2.0 * math.pi * self.n_d * self.t_d / self.lambda0

    @property
    def frequency(self) -> float:
        return C / self.lambda0


def _gap_offset(t_d, lambda0, n_d, ar_coated):
    """Resonant air gap modulo ``lambda0 / 2``, in ``(-lambda0/4, lambda0/4]``."""
    if ar_coated:
        # single cavity of optical length t_a + lambda0/4 + n_d t_d
        half = lambda0 / 2.0
        return (-n_d * t_d) % half - half / 2.0
    phi = 2.0 * math.pi * n_d * t_d / lambda0
    cos_phi = math.cos(phi)
    if abs(cos_phi) < 1e-12:
        # removable singularity: tan -> +inf from below
        angle = -math.pi / 2.0
    else:
        angle = math.atan(-math.tan(phi) / n_d)
    return lambda0 / (2.0 * math.pi) * angle


def resonant_air_gap(
    t_d: float, lambda0: float = LAMBDA_ZPL, n_d: float = N_DIAMOND, m: int = 1, ar_coated: bool = False
) -> float:
    """Air gap satisfying the coupled diamond-air resonance condition.

    ``t_a = lambda0/(2 pi) * arctan(-tan(phi) / n_d) + m lambda0 / 2`` on the
    principal arctan branch. Raises :class:`NegativeGap` when ``m`` is too small.
    """
    t_a = _gap_offset(t_d, lambda0, n_d, ar_coated) + m * lambda0 / 2.0
    if t_a <= 0:
        raise NegativeGap(f"mode order m={m} gives a non-positive air gap ({t_a:.4g} m)")
    return t_a


def minimal_mode_order(
    t_d: float, lambda0: float = LAMBDA_ZPL, n_d: float = N_DIAMOND, min_air_gap: float = 0.0,
    ar_coated: bool = False,
) -> int:
    offset = _gap_offset(t_d, lambda0, n_d, ar_coated)
    m = max(0, math.ceil((min_air_gap - offset) / (lambda0 / 2.0)))
    if offset + m * lambda0 / 2.0 <= 0:
        m += 1
    return m


def relative_intensity(cavity: HybridCavity) -> float:
    """Peak intensity in air relative to diamond, ``E_a^2 / (n_d E_d^2)``.

    Ranges over ``[1/n_d, n_d]``; identically 1 for an ideal AR coating.
    """
    if cavity.ar_coated or cavity.t_d == 0:
        return 1.0
    s2 = math.sin(cavity.phase) ** 2
    return s2 / cavity.n_d + cavity.n_d * (1.0 - s2)


def mode_character(cavity: HybridCavity) -> float:
    """``+1`` for a diamond-like mode, ``-1`` for an air-like mode, continuous between."""
    return -math.cos(2.0 * cavity.phase)


def classify_mode(cavity: HybridCavity, threshold: float = 0.9) -> str | None:
    mc = mode_character(cavity)
    if mc >= threshold:
        return DIAMOND_LIKE
    if mc <= -threshold:
        return AIR_LIKE
    return None


def snap_thickness(t_d: float, mode: str, lambda0: float = LAMBDA_ZPL, n_d: float = N_DIAMOND) -> float:
    """Nearest diamond thickness supporting a pure diamond-like or air-like mode."""
    quarter = lambda0 / (4.0 * n_d)
    k = round(t_d / quarter)
    if mode == DIAMOND_LIKE:
        if k % 2 == 0:
            k += 1 if t_d >= k * quarter else -1
    elif mode == AIR_LIKE:
        if k % 2 == 1:
            k += 1 if t_d >= k * quarter else -1
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return max(k, 0) * quarter


# --------------------------------------------------------------------------
# losses


def effective_mirror_losses(cavity: HybridCavity, L_Ma: float, L_Md: float) -> float:
    """Mirror losses per effective round trip; the air-side mirror is weighted
    by the relative intensity in air."""
    return relative_intensity(cavity) * L_Ma + L_Md


def effective_scatter_losses(cavity: HybridCavity, sigma_da: float) -> float:
    """Scattering at a rough diamond-air interface, to second order in
    ``4 pi sigma / lambda0``."""
    if sigma_da == 0:
        return 0.0
    if cavity.ar_coated:
        raise ValueError("no closed form for scattering at an AR-coated surface; use the transfer-matrix model")
    n = cavity.n_d
    kappa = 4.0 * math.pi * sigma_da / cavity.lambda0
    return math.sin(cavity.phase) ** 2 * (1.0 + n) / n * (1.0 - n) ** 2 * kappa**2


@dataclass(frozen=True)
class LossBudget:
    """Round-trip loss channels (fractions). ``scatter_da`` is already the
    effective value; ``clipping`` is raw and gets weighted like the air mirror."""

    mirror_air: float
    mirror_diamond: float
    scatter_da: float
    clipping: float
    extra_unwanted: float
    relative_intensity: float

    def __post_init__(self):
        for name in ("mirror_air", "mirror_diamond", "scatter_da", "clipping", "extra_unwanted"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def mirror_effective(self) -> float:
        return self.relative_intensity * self.mirror_air + self.mirror_diamond

    @property
    def clipping_effective(self) -> float:
        return self.relative_intensity * self.clipping

    @property
    def effective_total(self) -> float:
        return self.mirror_effective + self.scatter_da + self.clipping_effective + self.extra_unwanted

    def as_ppm(self) -> dict:
        return {
            "mirror_air": self.mirror_air * 1e6,
            "mirror_diamond": self.mirror_diamond * 1e6,
            "scatter_da": self.scatter_da * 1e6,
            "clipping": self.clipping * 1e6,
            "extra_unwanted": self.extra_unwanted * 1e6,
            "effective_total": self.effective_total * 1e6,
        }


def loss_budget(
    cavity: HybridCavity,
    mirror_air: float,
    mirror_diamond: float,
    sigma_da: float = 0.0,
    clipping: float = 0.0,
    extra: float = 0.0,
) -> LossBudget:
    return LossBudget(
        mirror_air,
        mirror_diamond,
        effective_scatter_losses(cavity, sigma_da),
        clipping,
        extra,
        relative_intensity(cavity),
    )


def unwanted_losses(
    cavity: HybridCavity,
    mirror_air: float,
    diamond_parasitic: float,
    sigma_da: float = 0.0,
    clipping: float = 0.0,
    extra: float = 0.0,
) -> float:
    """Effective losses that do not leave through the outcoupling (plane) mirror.

    ``mirror_air`` is everything lost at the curved mirror (transmission,
    scatter, absorption); ``diamond_parasitic`` is the plane mirror's scatter
    and absorption without its useful transmission.
    """
    return loss_budget(cavity, mirror_air, diamond_parasitic, sigma_da, clipping, extra).effective_total


def _scatter_prefactor(sigma_da, n_d, lambda0):
    return (4.0 * math.pi * sigma_da / lambda0) ** 2 * (n_d + 1.0) * (n_d - 1.0) ** 2 / n_d


def tradeoff_prefers_diamond_like(
    sigma_da: float, L_Ma: float, n_d: float = N_DIAMOND, lambda0: float = LAMBDA_ZPL
) -> bool:
    """True when a diamond-like mode has lower total losses than an air-like one."""
    return _scatter_prefactor(sigma_da, n_d, lambda0) < (n_d - 1.0 / n_d) * L_Ma


def tradeoff_boundary(sigma_da: float, n_d: float = N_DIAMOND, lambda0: float = LAMBDA_ZPL) -> float:
    """Air-side mirror loss at which both mode types have equal total losses."""
    return _scatter_prefactor(sigma_da, n_d, lambda0) / (n_d - 1.0 / n_d)


# --------------------------------------------------------------------------
# lengths, linewidth, vibrations


def dbr_penetration_length(n_high: float = N_TA2O5, n_low: float = N_SIO2, lambda0: float = LAMBDA_ZPL) -> float:
    """Field-energy penetration into a quarter-wave Bragg mirror, expressed as
    an equivalent length of the adjacent medium."""
    return lambda0 / (4.0 * (n_high - n_low))


def energy_length(
    cavity: HybridCavity,
    penetration_air: float | None = None,
    penetration_diamond: float | None = None,
) -> float:
    """Energy-distribution length of a resonant cavity with ideal-phase mirrors.

    Both mirrors are assumed to put a node at their surface; their field
    penetration is added as an equivalent length. Defaults to Ta2O5/SiO2
    quarter-wave mirrors.
    """
    pen = dbr_penetration_length(lambda0=cavity.lambda0)
    pen_a = pen if penetration_air is None else penetration_air
    pen_d = pen if penetration_diamond is None else penetration_diamond
    n = cavity.n_d
    k = 2.0 * math.pi / cavity.lambda0
    if cavity.ar_coated:
        # uniform standing wave: optical length in units of diamond length
        t_ar = cavity.lambda0 / (4.0 * math.sqrt(n))
        return pen_d + cavity.t_d + (t_ar * math.sqrt(n) + cavity.t_a + pen_a) / n
    air = cavity.t_a - math.sin(2.0 * k * cavity.t_a) / (2.0 * k) + pen_a
    if cavity.t_d == 0:
        # bare cavity: air is the reference medium
        return air + pen_d
    diamond = cavity.t_d - math.sin(2.0 * cavity.phase) / (2.0 * k * n)
    total = diamond + pen_d + relative_intensity(cavity) / n * air
    # membranes thinner than a quarter wave never reach the standing-wave peak
    if cavity.phase < math.pi / 2.0:
        total /= math.sin(cavity.phase) ** 2
    return total


def linewidth(energy_len: float, eff_losses: float, n_d: float = N_DIAMOND) -> float:
    """Cavity FWHM (Hz) from the effective round trip: FSR of the effective
    length divided by the finesse ``2 pi / losses``."""
    return C / (2.0 * n_d * energy_len) / (2.0 * math.pi / eff_losses)


def cavity_linewidth(cavity: HybridCavity, eff_losses: float, energy_len: float | None = None) -> float:
    """Closed-form FWHM (Hz) of a resonant cavity with quarter-wave mirrors."""
    if energy_len is None:
        energy_len = energy_length(cavity)
    n_ref = cavity.n_d if cavity.t_d > 0 else 1.0
    return linewidth(energy_len, eff_losses, n_ref)


def finesse(eff_losses: float) -> float:
    return 2.0 * math.pi / eff_losses


def resonance_sensitivity(
    t_d: float, t_a: float, mode: str, lambda0: float = LAMBDA_ZPL, n_d: float = N_DIAMOND
) -> float:
    """``|d nu / d t_a|`` (Hz/m) at a pure diamond-like or air-like mode."""
    L = t_a + n_d * t_d
    sign = {AIR_LIKE: 1.0, DIAMOND_LIKE: -1.0}[mode]
    return C / (L * lambda0) * (1.0 + sign * (n_d - 1.0) / (n_d + 1.0) * 2.0 * n_d * t_d / L)


def vibration_sensitivity(cavity: HybridCavity, threshold: float = 0.9) -> float:
    """Resonance shift per unit air-gap change, ``|d nu / d t_a|`` in Hz/m.

    Defined for bare and AR-coated cavities (shift ``nu / L`` with the
    optical length) and near the two pure mode types; anything in between
    raises :class:`UnclassifiedMode`.
    """
    nu = cavity.frequency
    if cavity.t_d == 0:
        return nu / cavity.t_a
    if cavity.ar_coated:
        return nu / (cavity.t_a + cavity.n_d * cavity.t_d + cavity.lambda0 / 2.0)
    mode = classify_mode(cavity, threshold)
    if mode is None:
        raise UnclassifiedMode(
            f"mode character {mode_character(cavity):+.3f} is neither diamond-like nor air-like"
        )
    return resonance_sensitivity(cavity.t_d, cavity.t_a, mode, cavity.lambda0, cavity.n_d)
