"""One-dimensional transfer-matrix engine for layered stacks at normal incidence.

Conventions
-----------
Fields are written as forward (``+z``) and backward amplitudes. The transfer
matrix ``M`` maps the amplitudes just right of the last boundary onto those
just left of the first one, ``(E+, E-)_in = M (E+, E-)_out``, so that
``r = M[1,0] / M[0,0]`` and ``t = 1 / M[0,0]``. Light is injected from the
``n_in`` side. Rough interfaces use damped Fresnel coefficients
(scalar-scattering form), which makes the interface matrix non-unitary and
removes power from the coherent beam.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import bisect

from ._search import golden_section, grid_bracket
from .constants import C, LAMBDA_ZPL, N_AIR, N_DIAMOND, N_SIO2, N_TA2O5
from .errors import NoResonanceInWindow


@dataclass(frozen=True)
class Layer:
    refractive_index: float
    thickness: float
    name: str = ""

    def __post_init__(self):
        if not self.refractive_index >= 1.0:
            raise ValueError(f"refractive index must be >= 1, got {self.refractive_index}")
        if not self.thickness >= 0.0:
            raise ValueError(f"thickness must be >= 0, got {self.thickness}")


@dataclass(frozen=True)
class Interface:
    left_index: float
    right_index: float
    rms_roughness: float = 0.0

    def __post_init__(self):
        if not self.rms_roughness >= 0.0:
            raise ValueError("rms roughness must be >= 0")


@dataclass(frozen=True)
class LayerStack:
    """Finite layers between two semi-infinite embedding media.

    ``interfaces`` holds the ``len(layers) - 1`` interior boundaries; the two
    boundaries with the embedding media are always smooth.
    """

    layers: tuple[Layer, ...]
    interfaces: tuple[Interface, ...]
    n_in: float = N_AIR
    n_out: float = N_AIR

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "interfaces", tuple(self.interfaces))
        if self.n_in < 1.0 or self.n_out < 1.0:
            raise ValueError("embedding indices must be >= 1")
        if len(self.interfaces) != max(len(self.layers) - 1, 0):
            raise ValueError(
                f"{len(self.layers)} layers need {max(len(self.layers) - 1, 0)} interfaces, "
                f"got {len(self.interfaces)}"
            )
        for i, itf in enumerate(self.interfaces):
            left, right = self.layers[i], self.layers[i + 1]
            if (itf.left_index, itf.right_index) != (left.refractive_index, right.refractive_index):
                raise ValueError(f"interface {i} indices do not match the adjacent layers")

    @classmethod
    def from_layers(
        cls,
        layers: Sequence[Layer],
        n_in: float = N_AIR,
        n_out: float = N_AIR,
        roughness: Mapping[int, float] | None = None,
    ) -> "LayerStack":
        """Build a stack; ``roughness`` maps interior interface ``i`` (between
        layers ``i`` and ``i + 1``) to its RMS roughness."""
        layers = tuple(layers)
        roughness = dict(roughness or {})
        interfaces = tuple(
            Interface(a.refractive_index, b.refractive_index, roughness.pop(i, 0.0))
            for i, (a, b) in enumerate(zip(layers[:-1], layers[1:]))
        )
        if roughness:
            raise ValueError(f"roughness given for non-existent interfaces {sorted(roughness)}")
        return cls(layers, interfaces, n_in, n_out)

    def reversed(self) -> "LayerStack":
        interfaces = tuple(
            Interface(i.right_index, i.left_index, i.rms_roughness) for i in reversed(self.interfaces)
        )
        return LayerStack(tuple(reversed(self.layers)), interfaces, self.n_out, self.n_in)

    def with_embedding(self, n_in: float, n_out: float) -> "LayerStack":
        return LayerStack(self.layers, self.interfaces, n_in, n_out)

    def find(self, name: str) -> int:
        for i, layer in enumerate(self.layers):
            if layer.name == name:
                return i
        raise KeyError(name)

    @property
    def total_thickness(self) -> float:
        return float(sum(layer.thickness for layer in self.layers))

    @cached_property
    def edges(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([layer.thickness for layer in self.layers])])

    @cached_property
    def _boundaries(self):
        # (n1, n2, sigma) for every boundary, exterior ones included
        idx = [self.n_in] + [layer.refractive_index for layer in self.layers] + [self.n_out]
        sig = [0.0] + [i.rms_roughness for i in self.interfaces] + [0.0]
        if not self.layers:
            sig = [0.0]
        return [(idx[j], idx[j + 1], sig[j]) for j in range(len(idx) - 1)]


def fresnel_rough(n1, n2, sigma, lambda0):
    """Normal-incidence amplitude coefficients of a rough ``n1 -> n2`` interface.

    Returns ``(rho, tau, rho_rev, tau_rev)``: reflection and transmission for
    light arriving from ``n1``, then for light arriving from ``n2``. Each
    reflection coefficient is damped by ``exp(-2 (2 pi sigma n / lambda0)^2)``
    using the index of the incidence side; both transmission coefficients by
    ``exp(-(2 pi sigma (n1 - n2) / lambda0)^2 / 2)``.
    """
    rho = (n1 - n2) / (n1 + n2)
    tau = 2.0 * n1 / (n1 + n2)
    rho_rev = -rho
    tau_rev = 2.0 * n2 / (n1 + n2)
    if sigma:
        exp = np.exp if isinstance(lambda0, np.ndarray) else math.exp
        a = 2.0 * math.pi * sigma / lambda0
        rho = rho * exp(-2.0 * (a * n1) ** 2)
        rho_rev = rho_rev * exp(-2.0 * (a * n2) ** 2)
        damp = exp(-0.5 * (a * (n1 - n2)) ** 2)
        tau = tau * damp
        tau_rev = tau_rev * damp
    if isinstance(lambda0, np.ndarray):
        return tuple(np.asarray(x, dtype=complex) for x in (rho, tau, rho_rev, tau_rev))
    return complex(rho), complex(tau), complex(rho_rev), complex(tau_rev)


def _interface(n1, n2, sigma, wavelength):
    r12, t12, r21, t21 = fresnel_rough(n1, n2, sigma, wavelength)
    return 1.0 / t12, -r21 / t12, r12 / t12, (t12 * t21 - r12 * r21) / t12


def transfer_matrix(stack: LayerStack, frequency):
    """Entries ``(m00, m01, m10, m11)`` of the stack matrix; vectorised over
    ``frequency`` when it is an array."""
    vector = isinstance(frequency, np.ndarray)
    exp = np.exp if vector else cmath.exp
    wavelength = C / frequency
    k0 = 2.0 * math.pi / wavelength
    m00, m01, m10, m11 = 1.0 + 0j, 0j, 0j, 1.0 + 0j
    for j, (n1, n2, sigma) in enumerate(stack._boundaries):
        d00, d01, d10, d11 = _interface(n1, n2, sigma, wavelength)
        m00, m01, m10, m11 = (
            m00 * d00 + m01 * d10,
            m00 * d01 + m01 * d11,
            m10 * d00 + m11 * d10,
            m10 * d01 + m11 * d11,
        )
        if j < len(stack.layers):
            ph = exp(1j * k0 * n2 * stack.layers[j].thickness)
            m00, m01, m10, m11 = m00 / ph, m01 * ph, m10 / ph, m11 * ph
    return m00, m01, m10, m11


def spectrum(stack: LayerStack, frequency):
    """Power reflectivity and transmissivity ``(R, T)`` at normal incidence."""
    m00, _, m10, _ = transfer_matrix(stack, frequency)
    R = abs(m10 / m00) ** 2
    T = stack.n_out / stack.n_in * abs(1.0 / m00) ** 2
    return R, T


def reflectivity(stack: LayerStack, frequency):
    m00, _, m10, _ = transfer_matrix(stack, frequency)
    return abs(m10 / m00) ** 2


def transmission(stack: LayerStack, frequency):
    return spectrum(stack, frequency)[1]


# --------------------------------------------------------------------------
# building blocks


def build_dbr(
    pairs: int,
    n_high: float = N_TA2O5,
    n_low: float = N_SIO2,
    lambda0: float = LAMBDA_ZPL,
    termination: str = "high",
) -> LayerStack:
    """Quarter-wave Bragg mirror with ``2 * pairs + 1`` layers.

    Both outer layers are of the ``termination`` material. Layers are listed
    starting from the side that faces the cavity; embedding media default to
    vacuum and are normally replaced when the mirror is placed in a cavity.
    """
    if pairs < 1:
        raise ValueError("a Bragg mirror needs at least one pair")
    if n_high < 1.0 or n_low < 1.0:
        raise ValueError("non-physical refractive index (< 1)")
    if termination not in ("high", "low"):
        raise ValueError("termination must be 'high' or 'low'")
    outer, inner = (n_high, n_low) if termination == "high" else (n_low, n_high)
    seq = [outer] + [n for _ in range(pairs) for n in (inner, outer)]
    layers = [Layer(n, lambda0 / (4.0 * n), f"dbr_{i}") for i, n in enumerate(seq)]
    return LayerStack.from_layers(layers)


def lumped_mirror(
    transmission: float, n_cavity: float, n_exterior: float = N_AIR, lambda0: float = LAMBDA_ZPL
) -> LayerStack:
    """Single quarter-wave layer whose index is chosen to give ``transmission``
    between ``n_cavity`` and ``n_exterior`` at ``lambda0`` (node at the
    cavity-side surface, like a high-terminated Bragg mirror)."""
    if not 0.0 < transmission <= 1.0:
        raise ValueError("transmission must lie in (0, 1]")
    u = (2.0 - transmission + 2.0 * math.sqrt(1.0 - transmission)) / transmission
    n_m = math.sqrt(u * n_cavity * n_exterior)
    return LayerStack.from_layers([Layer(n_m, lambda0 / (4.0 * n_m), "lumped_mirror")])


def mirror_transmission(
    mirror: LayerStack, n_cavity: float, n_exterior: float = N_AIR, lambda0: float = LAMBDA_ZPL
) -> float:
    """Power transmission of a mirror interfaced with ``n_cavity`` on its
    cavity-facing side."""
    return float(transmission(mirror.with_embedding(n_cavity, n_exterior), C / lambda0))


def build_cavity(
    t_d: float,
    t_a: float,
    mirror_air: LayerStack,
    mirror_diamond: LayerStack,
    n_d: float = N_DIAMOND,
    sigma_da: float = 0.0,
    ar_index: float | None = None,
    lambda0: float = LAMBDA_ZPL,
    exterior: tuple[float, float] = (N_AIR, N_AIR),
) -> LayerStack:
    """Assemble curved-side mirror | air gap | [AR coating] | diamond | plane mirror.

    Both mirrors are given cavity-facing layer first. Light is injected from the
    exterior of the air-side mirror. With an AR coating both of its interfaces
    carry ``sigma_da`` (a conformal coating follows the diamond surface).
    """
    layers = list(reversed(mirror_air.layers))
    roughness = {}
    layers.append(Layer(N_AIR, t_a, "air_gap"))
    if ar_index is not None:
        roughness[len(layers) - 1] = sigma_da
        layers.append(Layer(ar_index, lambda0 / (4.0 * ar_index), "ar_coating"))
    if t_d > 0:
        roughness[len(layers) - 1] = sigma_da
        layers.append(Layer(n_d, t_d, "diamond"))
    layers.extend(mirror_diamond.layers)
    return LayerStack.from_layers(layers, exterior[0], exterior[1], roughness)


# --------------------------------------------------------------------------
# resonances


@dataclass(frozen=True)
class Resonance:
    fwhm: float
    f_res: float
    r_min: float
    r_baseline: float


def linewidth_numeric(
    stack: LayerStack, f_center: float, scan_halfwidth: float, points: int = 2001
) -> Resonance:
    """Locate a reflection dip and measure its full width at half depth.

    A uniform scan brackets the minimum, golden-section search refines it and
    bisection finds both half-depth crossings. The baseline is the larger of
    the two window-edge reflectivities.
    """
    detuning = np.linspace(-scan_halfwidth, scan_halfwidth, points)
    R = reflectivity(stack, f_center + detuning)
    lo, best, hi = grid_bracket(list(R))
    baseline = float(max(R[0], R[-1]))
    if best in (0, points - 1) or R[best] >= min(R[0], R[-1]):
        raise NoResonanceInWindow(
            f"no reflection dip within +-{scan_halfwidth:.4g} Hz of {f_center:.6g} Hz"
        )

    def refl(x):
        return reflectivity(stack, f_center + x)

    step = detuning[1] - detuning[0]
    x_min, r_min = golden_section(refl, detuning[lo], detuning[hi], xtol=1e-6 * step)
    r_min = float(min(r_min, R[best]))
    half = 0.5 * (baseline + r_min)

    def crossing(indices):
        for j in indices:
            if R[j] >= half:
                return detuning[j]
        raise NoResonanceInWindow("dip wider than the scan window")

    left = crossing(range(best, -1, -1))
    right = crossing(range(best, points))
    xtol = 1e-9 * step
    f_left = bisect(lambda x: refl(x) - half, left, x_min, xtol=xtol)
    f_right = bisect(lambda x: refl(x) - half, x_min, right, xtol=xtol)
    return Resonance(float(f_right - f_left), float(f_center + x_min), r_min, baseline)


# --------------------------------------------------------------------------
# field profiles


@dataclass(frozen=True)
class FieldProfile:
    """Standing-wave field through the finite layers of a stack.

    ``amplitudes[j]`` holds the forward and backward amplitudes at the left
    edge of layer ``j``; grid points at shared boundaries appear once per
    adjacent layer.
    """

    z_grid: np.ndarray
    complex_field: np.ndarray
    permittivity_weight: np.ndarray
    layer_id: np.ndarray
    amplitudes: np.ndarray
    stack: LayerStack = field(repr=False)
    frequency: float = 0.0

    def layer_index(self, layer) -> int:
        return self.stack.find(layer) if isinstance(layer, str) else int(layer)

    def layer_points(self, layer):
        mask = self.layer_id == self.layer_index(layer)
        return self.z_grid[mask], self.complex_field[mask]

    def max_field(self, layer) -> float:
        """Exact maximum of ``|E|`` inside a layer (not limited by the grid)."""
        j = self.layer_index(layer)
        A, B = self.amplitudes[j]
        lay = self.stack.layers[j]
        span = 2.0 * math.pi * self.frequency / C * lay.refractive_index * lay.thickness
        a, b = abs(A), abs(B)
        if 2.0 * span >= 2.0 * math.pi:
            return a + b
        psi = cmath.phase(A * B.conjugate())
        candidates = [0.0, span]
        theta = (-psi % (2.0 * math.pi)) / 2.0
        for t in (theta, theta + math.pi):
            if t <= span:
                candidates.append(t)
        return max(abs(A * cmath.exp(1j * t) + B * cmath.exp(-1j * t)) for t in candidates)


def _layer_amplitudes(stack: LayerStack, frequency: float) -> np.ndarray:
    wavelength = C / frequency
    k0 = 2.0 * math.pi / wavelength
    bounds = stack._boundaries
    fwd, bwd = 1.0 + 0j, 0j
    amps = np.zeros((len(stack.layers), 2), dtype=complex)
    for j in range(len(bounds) - 1, -1, -1):
        d00, d01, d10, d11 = _interface(*bounds[j], wavelength)
        fwd, bwd = d00 * fwd + d01 * bwd, d10 * fwd + d11 * bwd
        if j > 0:
            layer = stack.layers[j - 1]
            ph = cmath.exp(1j * k0 * layer.refractive_index * layer.thickness)
            fwd, bwd = fwd / ph, bwd * ph
            amps[j - 1] = fwd, bwd
    # fwd now holds m00 (the incident amplitude for unit transmitted field)
    return amps / fwd


def field_profile(stack: LayerStack, frequency: float, grid_step: float | None = None) -> FieldProfile:
    """Complex field ``E(z)`` for unit incident amplitude from the ``n_in`` side.

    ``z = 0`` is the left edge of the first layer. The default grid step is
    ``lambda / (40 n_max)``; coarser than 20 points per material wavelength
    is rejected.
    """
    wavelength = C / frequency
    n_max = max([layer.refractive_index for layer in stack.layers] + [1.0])
    limit = wavelength / (20.0 * n_max)
    if grid_step is None:
        grid_step = wavelength / (40.0 * n_max)
    if grid_step > limit * (1 + 1e-12):
        raise ValueError(f"grid step {grid_step:.3g} m under-resolves the field (max {limit:.3g} m)")
    k0 = 2.0 * math.pi / wavelength
    amps = _layer_amplitudes(stack, frequency)
    zs, es, eps, ids = [], [], [], []
    for j, layer in enumerate(stack.layers):
        nseg = max(2, math.ceil(layer.thickness / grid_step))
        nseg += nseg % 2
        local = np.linspace(0.0, layer.thickness, nseg + 1)
        A, B = amps[j]
        phase = 1j * k0 * layer.refractive_index * local
        zs.append(stack.edges[j] + local)
        es.append(A * np.exp(phase) + B * np.exp(-phase))
        eps.append(np.full(local.size, layer.refractive_index**2))
        ids.append(np.full(local.size, j))
    cat = (lambda xs, dt: np.concatenate(xs) if xs else np.zeros(0, dtype=dt))
    return FieldProfile(
        cat(zs, float), cat(es, complex), cat(eps, float), cat(ids, int), amps, stack, frequency
    )


def energy_distribution_length(profile: FieldProfile, reference=None) -> float:
    """Field-energy-weighted length normalised to the peak energy density of
    the reference layer.

    ``reference`` is a layer index or name; by default the layer named
    ``"diamond"`` is used, otherwise the thickest layer. The integral covers
    every finite layer, so mirror penetration is included.
    """
    stack = profile.stack
    if reference is None:
        try:
            reference = stack.find("diamond")
        except KeyError:
            reference = int(np.argmax([layer.thickness for layer in stack.layers]))
    ref = profile.layer_index(reference)
    total = sum(_layer_energy(profile, j) for j in range(len(stack.layers)))
    n_ref = stack.layers[ref].refractive_index
    return float(total / (n_ref**2 * profile.max_field(ref) ** 2 / 2.0))


def _layer_energy(profile: FieldProfile, j: int) -> float:
    mask = profile.layer_id == j
    z = profile.z_grid[mask]
    if z.size < 2 or z[-1] <= z[0]:
        return 0.0
    return float(simpson(profile.permittivity_weight[mask] * np.abs(profile.complex_field[mask]) ** 2, x=z))


def mirror_penetration_length(
    mirror: LayerStack, n_cavity: float, n_exterior: float = N_AIR, lambda0: float = LAMBDA_ZPL
) -> float:
    """Field energy stored inside a mirror, as an equivalent length of the
    cavity medium at its peak energy density (``lambda0 / (4 (n_H - n_L))``
    for a high-terminated quarter-wave Bragg mirror)."""
    spacer = Layer(n_cavity, lambda0 / (2.0 * n_cavity), "spacer")
    stack = LayerStack.from_layers([spacer, *mirror.layers], n_cavity, n_exterior)
    profile = field_profile(stack, C / lambda0)
    stored = sum(_layer_energy(profile, j) for j in range(1, len(stack.layers)))
    return stored / (n_cavity**2 * profile.max_field(0) ** 2 / 2.0)


def relative_intensity_numeric(profile: FieldProfile, n_d: float = N_DIAMOND) -> float:
    """``E_max,air^2 / (n_d E_max,diamond^2)`` read off a cavity field profile."""
    return profile.max_field("air_gap") ** 2 / (n_d * profile.max_field("diamond") ** 2)
