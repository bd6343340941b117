"""Subcommand implementations. Each returns a :class:`SweepResult`."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

from .. import fom, gaussian, hybrid, tmm
from ..constants import C, PPM
from ..errors import NoConvergence, UnstableCavity
from .config import AIR_LIKE, DIAMOND_LIKE, ConfigError, RunConfig

UM, NM, GHZ = 1e-6, 1e-9, 1e9


@dataclass
class SweepResult:
    columns: list[str]
    rows: list[dict]
    metadata: dict = field(default_factory=dict)


def _map(fn, cfg, xs, jobs):
    args = [(cfg, x) for x in xs]
    if jobs <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, args, chunksize=max(1, len(args) // (4 * jobs))))


def _sweep_values(cfg: RunConfig, allowed: tuple[str, ...], default_var: str, default):
    s = cfg.sweep
    if s.variable is None:
        return default_var, [default]
    if s.variable not in allowed:
        raise cfg.error("sweep.variable", f"must be one of {', '.join(allowed)} for this command")
    return s.variable, s.values()


def _tag(sigma_nm: float) -> str:
    return f"sigma{sigma_nm:g}nm"


# --------------------------------------------------------------------------
# model construction from a config


def _lambda0(cfg):
    return cfg.cavity.lambda0_nm * NM


def _require_td(cfg, t_d_um):
    if t_d_um is None:
        raise cfg.error("cavity.t_d_um", "diamond thickness is required")
    return t_d_um


def build_cavity(cfg: RunConfig, t_d_um: float | None = None, t_a_um: float | None = None, mode=None):
    c = cfg.cavity
    lam = _lambda0(cfg)
    t_d = _require_td(cfg, c.t_d_um if t_d_um is None else t_d_um) * UM
    mode = c.mode if mode is None else mode
    if t_a_um is not None:
        return hybrid.HybridCavity(t_d, t_a_um * UM, lam, c.n_d, None, c.ar_coated)
    if isinstance(c.t_a_um, float):
        return hybrid.HybridCavity(t_d, c.t_a_um * UM, lam, c.n_d, None, c.ar_coated)
    if mode is not None:
        t_d = hybrid.snap_thickness(t_d, mode, lam, c.n_d)
    min_gap = (c.min_air_gap_um or 0.0) * UM
    return hybrid.HybridCavity.resonant(t_d, lam, c.n_d, c.m, min_gap, c.ar_coated)


def _mirror_stack(cfg: RunConfig, side: str, n_cavity: float):
    mi = cfg.mirrors
    pairs = getattr(mi, f"{side}_dbr_pairs")
    trans = getattr(mi, f"{side}_transmission_ppm")
    if pairs is not None:
        return tmm.build_dbr(pairs, mi.n_high, mi.n_low, _lambda0(cfg), mi.termination)
    if trans is not None:
        return tmm.lumped_mirror(trans * PPM, n_cavity, mi.exterior_index, _lambda0(cfg))
    raise cfg.error(
        f"mirrors.{side}_dbr_pairs", f"{side} mirror needs {side}_dbr_pairs or {side}_transmission_ppm"
    )


@lru_cache(maxsize=64)
def _mirror(cfg: RunConfig, side: str, n_cavity: float):
    """(stack, transmission, penetration) of one mirror facing ``n_cavity``."""
    stack = _mirror_stack(cfg, side, n_cavity)
    ext, lam = cfg.mirrors.exterior_index, _lambda0(cfg)
    return (
        stack,
        tmm.mirror_transmission(stack, n_cavity, ext, lam),
        tmm.mirror_penetration_length(stack, n_cavity, ext, lam),
    )


def _diamond_side_index(cfg, cavity):
    return cfg.cavity.n_d if cavity.t_d > 0 else 1.0


def dimple_geometry(cfg: RunConfig) -> gaussian.DimpleGeometry | None:
    d = cfg.dimple
    tilt = math.radians(d.tilt_deg)
    if d.depth_um is not None:
        return gaussian.DimpleGeometry.from_roc_depth(d.roc_um * UM, d.depth_um * UM, d.fiber_diameter_um * UM, tilt)
    if d.diameter_um is not None:
        diameter = d.diameter_um * UM
        depth = (diameter / 2.0) ** 2 / (2.0 * d.roc_um * UM)
        return gaussian.DimpleGeometry(d.roc_um * UM, depth, diameter, d.fiber_diameter_um * UM, tilt)
    return None


def _stack_for(cfg, cavity, sigma_nm):
    c = cfg.cavity
    ar_index = (c.ar_index or math.sqrt(c.n_d)) if c.ar_coated else None
    ext = cfg.mirrors.exterior_index
    return tmm.build_cavity(
        cavity.t_d,
        cavity.t_a,
        _mirror(cfg, "air", 1.0)[0],
        _mirror(cfg, "diamond", _diamond_side_index(cfg, cavity))[0],
        c.n_d,
        sigma_nm * NM,
        ar_index,
        cavity.lambda0,
        (ext, ext),
    )


def _find_resonance(cfg, stack, lw_guess):
    halfwidth = cfg.profile.scan_halfwidth_ghz
    halfwidth = halfwidth * GHZ if halfwidth else max(40.0 * lw_guess, 20.0 * GHZ)
    return tmm.linewidth_numeric(stack, C / _lambda0(cfg), halfwidth)


# --------------------------------------------------------------------------
# sweep-thickness


def _thickness_row(args):
    cfg, t_d_um = args
    c = cfg.cavity
    cav = build_cavity(cfg, t_d_um)
    n_ref = _diamond_side_index(cfg, cav)
    _, T_a, pen_a = _mirror(cfg, "air", 1.0)
    _, T_d, pen_d = _mirror(cfg, "diamond", n_ref)
    mode = gaussian.solve_modes_analytic(cav.t_d, cav.t_a, cfg.dimple.roc_um * UM, cav.lambda0, c.n_d)
    rel = hybrid.relative_intensity(cav)
    leff_cf = hybrid.energy_length(cav, pen_a, pen_d)
    par_a, par_d = cfg.mirrors.air_parasitic_ppm * PPM, cfg.mirrors.diamond_parasitic_ppm * PPM
    row = {
        "t_d_um": cav.t_d / UM,
        "t_a_um": cav.t_a / UM,
        "mode_order": cav.m,
        "mode_character": hybrid.mode_character(cav),
        "relative_intensity": rel,
        "w0_d_um": mode.w0_d / UM,
        "g0": mode.g0,
        "energy_length_closed_um": leff_cf / UM,
    }
    mirror_eff = hybrid.effective_mirror_losses(cav, T_a + par_a, T_d + par_d)
    for sigma in c.sigma_da_nm:
        tag = _tag(sigma)
        try:
            eff = mirror_eff + hybrid.effective_scatter_losses(cav, sigma * NM)
            lw_cf = hybrid.cavity_linewidth(cav, eff, leff_cf)
            beta_cf = fom.branching_ratio(fom.purcell_factor(mode.g0, eff, cfg.emitter.xi), cfg.emitter.beta0)
        except ValueError:
            eff = lw_cf = beta_cf = math.nan
        stack = _stack_for(cfg, cav, sigma)
        res = _find_resonance(cfg, stack, hybrid.cavity_linewidth(cav, mirror_eff, leff_cf))
        prof = tmm.field_profile(stack, res.f_res)
        leff = tmm.energy_distribution_length(prof, "diamond" if cav.t_d > 0 else "air_gap")
        rel_num = tmm.relative_intensity_numeric(prof, c.n_d) if cav.t_d > 0 else 1.0
        # lumped mirror scatter/absorption adds to the transfer-matrix width
        lw_num = res.fwhm + C * (rel_num * par_a + par_d) / (4.0 * math.pi * n_ref * leff)
        Fp = fom.purcell_factor_from_linewidth(
            lw_num, gaussian.mode_volume(mode, leff), cav.lambda0, n_ref, cfg.emitter.xi
        )
        row.update(
            {
                f"relative_intensity_numeric_{tag}": rel_num,
                f"energy_length_numeric_um_{tag}": leff / UM,
                f"f_res_offset_ghz_{tag}": (res.f_res - cav.frequency) / GHZ,
                f"linewidth_numeric_ghz_{tag}": lw_num / GHZ,
                f"linewidth_closed_ghz_{tag}": lw_cf / GHZ,
                f"eff_losses_closed_ppm_{tag}": eff / PPM,
                f"purcell_numeric_{tag}": Fp,
                f"beta_numeric_{tag}": fom.branching_ratio(Fp, cfg.emitter.beta0),
                f"beta_closed_{tag}": beta_cf,
            }
        )
    return row


def cmd_sweep_thickness(cfg: RunConfig, jobs: int = 1) -> SweepResult:
    var, xs = _sweep_values(cfg, ("t_d_um",), "t_d_um", cfg.cavity.t_d_um)
    _require_td(cfg, xs[0])
    _mirror(cfg, "air", 1.0)
    rows = _map(_thickness_row, cfg, xs, jobs)
    return SweepResult(list(rows[0]), rows)


# --------------------------------------------------------------------------
# losses


def _losses_row(args):
    cfg, (var, x) = args
    c = cfg.cavity
    lam = _lambda0(cfg)
    if var == "sigma_da_nm":
        return {"sigma_da_nm": x, "boundary_L_Ma_ppm": hybrid.tradeoff_boundary(x * NM, c.n_d, lam) / PPM}
    cav = build_cavity(cfg, x)
    _, T_a, _ = _mirror(cfg, "air", 1.0)
    _, T_d, _ = _mirror(cfg, "diamond", _diamond_side_index(cfg, cav))
    L_Ma = T_a + cfg.mirrors.air_parasitic_ppm * PPM
    L_Md = T_d + cfg.mirrors.diamond_parasitic_ppm * PPM
    mirror_eff = hybrid.effective_mirror_losses(cav, L_Ma, L_Md)
    row = {
        "t_d_um": cav.t_d / UM,
        "t_a_um": cav.t_a / UM,
        "relative_intensity": hybrid.relative_intensity(cav),
        "L_Ma_ppm": L_Ma / PPM,
        "L_Md_ppm": L_Md / PPM,
        "mirror_eff_ppm": mirror_eff / PPM,
    }
    for sigma in c.sigma_da_nm:
        try:
            scatter = hybrid.effective_scatter_losses(cav, sigma * NM)
        except ValueError:
            scatter = math.nan
        row[f"scatter_eff_ppm_{_tag(sigma)}"] = scatter / PPM
        row[f"total_eff_ppm_{_tag(sigma)}"] = (mirror_eff + scatter) / PPM
    return row


def cmd_losses(cfg: RunConfig, jobs: int = 1) -> SweepResult:
    var, xs = _sweep_values(cfg, ("t_d_um", "sigma_da_nm"), "t_d_um", cfg.cavity.t_d_um)
    if var == "t_d_um":
        _require_td(cfg, xs[0])
        _mirror(cfg, "air", 1.0)
    rows = _map(_losses_row, cfg, [(var, x) for x in xs], jobs)
    return SweepResult(list(rows[0]), rows)


# --------------------------------------------------------------------------
# modes


def _modes_row(args):
    cfg, (var, x) = args
    c = cfg.cavity
    t_d_um = x if var == "t_d_um" else c.t_d_um
    t_a_um = x if var == "t_a_um" else None
    cav = build_cavity(cfg, t_d_um, t_a_um)
    roc = cfg.dimple.roc_um * UM
    dimple = dimple_geometry(cfg)
    rel = hybrid.relative_intensity(cav)
    row = {"t_d_um": cav.t_d / UM, "t_a_um": cav.t_a / UM, "status": "ok"}
    names = ("w0_d_um", "w0_a_um", "dz_a_um", "w_m_um", "g0", "clipping_ppm", "clipping_eff_ppm")
    for solver, solve in (("analytic", gaussian.solve_modes_analytic), ("numeric", gaussian.solve_modes_numeric)):
        try:
            m = solve(cav.t_d, cav.t_a, roc, cav.lambda0, c.n_d)
        except UnstableCavity:
            row["status"] = "unstable"
            row.update({f"{n}_{solver}": math.nan for n in names})
            continue
        except NoConvergence:
            row["status"] = "no-convergence"
            row.update({f"{n}_{solver}": math.nan for n in names})
            continue
        raw, eff = gaussian.clipping_losses(m, dimple, rel) if dimple else (math.nan, math.nan)
        row.update(
            {
                f"w0_d_um_{solver}": m.w0_d / UM,
                f"w0_a_um_{solver}": m.w0_a / UM,
                f"dz_a_um_{solver}": m.dz_a / UM,
                f"w_m_um_{solver}": m.w_m / UM,
                f"g0_{solver}": m.g0,
                f"clipping_ppm_{solver}": raw / PPM,
                f"clipping_eff_ppm_{solver}": eff / PPM,
            }
        )
        if solver == "analytic":
            row["fiber_mode_matching"] = gaussian.fiber_mode_matching(m, cfg.dimple.fiber_mfr_um * UM, cfg.dimple.n_fiber)
    row.setdefault("fiber_mode_matching", math.nan)
    return row


def cmd_modes(cfg: RunConfig, jobs: int = 1) -> SweepResult:
    var, xs = _sweep_values(cfg, ("t_a_um", "t_d_um"), "t_d_um", cfg.cavity.t_d_um)
    _require_td(cfg, cfg.cavity.t_d_um if var == "t_a_um" else xs[0])
    rows = _map(_modes_row, cfg, [(var, x) for x in xs], jobs)
    columns = list(dict.fromkeys(k for r in rows for k in r))
    return SweepResult(columns, [{k: r.get(k, math.nan) for k in columns} for r in rows])


# --------------------------------------------------------------------------
# optimize


def build_design(cfg: RunConfig, mode: str) -> fom.CavityDesign:
    c, mi, o = cfg.cavity, cfg.mirrors, cfg.optimize
    if mi.diamond_dbr_pairs is not None or mi.diamond_transmission_ppm is not None:
        raise cfg.error("mirrors.diamond_transmission_ppm", "the diamond-side mirror is the optimised outcoupler; leave it unset")
    if len(c.sigma_da_nm) != 1:
        raise cfg.error("cavity.sigma_da_nm", "optimize takes a single roughness value")
    cav = build_cavity(cfg, mode=mode)
    _, T_a, _ = _mirror(cfg, "air", 1.0)
    return fom.CavityDesign(
        cavity=cav,
        roc=cfg.dimple.roc_um * UM,
        mirror_air=T_a + mi.air_parasitic_ppm * PPM,
        diamond_parasitic=mi.diamond_parasitic_ppm * PPM,
        sigma_da=c.sigma_da_nm[0] * NM,
        extra_unwanted=o.extra_unwanted_ppm * PPM,
        dimple=dimple_geometry(cfg),
        mode_matching=o.mode_matching,
        emitter=fom.EmitterParams(cfg.emitter.beta0, cfg.emitter.xi),
    )


def _optimize_row(args):
    cfg, (var, x) = args
    o = cfg.optimize
    vib_nm = x if var == "sigma_vib_nm" else cfg.vibration.sigma_vib_nm
    vib = fom.VibrationSpec(vib_nm * NM, cfg.vibration.quadrature_points)
    row = {var: x}
    for mode in o.modes:
        design = build_design(cfg, mode)
        key = "diamond_like" if mode == DIAMOND_LIKE else "air_like"
        if var == "T_o_ppm":
            fig = design.evaluate(x * PPM, vib)
            T, at_boundary = x * PPM, False
        else:
            opt = fom.optimize_outcoupler(design, vib, (o.T_min_ppm * PPM, o.T_max_ppm * PPM), o.grid_points)
            fig, T, at_boundary = opt.figure, opt.T_opt, opt.at_boundary
            row[f"T_opt_ppm_{key}"] = T / PPM
            row[f"at_boundary_{key}"] = at_boundary
        row.update(
            {
                f"unwanted_ppm_{key}": design.unwanted_losses() / PPM,
                f"eff_losses_ppm_{key}": fig.eff_losses / PPM,
                f"purcell_{key}": fig.purcell,
                f"beta_{key}": fig.branching,
                f"beta_avg_{key}": fig.branching_avg,
                f"eta_out_{key}": fig.eta_out,
                f"detected_{key}": fig.detected_zpl_prob,
                f"linewidth_ghz_{key}": fig.linewidth / GHZ,
            }
        )
    return row


def cmd_optimize(cfg: RunConfig, jobs: int = 1) -> SweepResult:
    var, xs = _sweep_values(cfg, ("sigma_vib_nm", "T_o_ppm"), "sigma_vib_nm", cfg.vibration.sigma_vib_nm)
    if var == "T_o_ppm" and min(xs) <= 0:
        raise cfg.error("sweep.start", "T_o must be positive")
    if var == "sigma_vib_nm" and min(xs) < 0:
        raise cfg.error("sweep.start", "vibration amplitude must be non-negative")
    for mode in cfg.optimize.modes:
        build_design(cfg, mode)
    rows = _map(_optimize_row, cfg, [(var, x) for x in xs], jobs)
    return SweepResult(list(rows[0]), rows)


# --------------------------------------------------------------------------
# field-profile


def cmd_field_profile(cfg: RunConfig, jobs: int = 1) -> SweepResult:
    c = cfg.cavity
    if len(c.sigma_da_nm) != 1:
        raise cfg.error("cavity.sigma_da_nm", "field-profile takes a single roughness value")
    if cfg.sweep.variable is not None:
        raise cfg.error("sweep.variable", "field-profile does not sweep")
    cav = build_cavity(cfg)
    stack = _stack_for(cfg, cav, c.sigma_da_nm[0])
    _, T_a, pen_a = _mirror(cfg, "air", 1.0)
    _, T_d, pen_d = _mirror(cfg, "diamond", _diamond_side_index(cfg, cav))
    lw_guess = hybrid.cavity_linewidth(cav, hybrid.effective_mirror_losses(cav, T_a, T_d), hybrid.energy_length(cav, pen_a, pen_d))
    res = _find_resonance(cfg, stack, lw_guess)
    step = cfg.profile.grid_step_nm * NM if cfg.profile.grid_step_nm else None
    prof = tmm.field_profile(stack, res.f_res, step)
    names = [layer.name for layer in stack.layers]
    rows = [
        {
            "z_um": z / UM,
            "abs_E": abs(e),
            "re_E": e.real,
            "im_E": e.imag,
            "n": math.sqrt(eps),
            "layer": names[j],
        }
        for z, e, eps, j in zip(prof.z_grid, prof.complex_field, prof.permittivity_weight, prof.layer_id)
    ]
    meta = {
        "t_d_um": cav.t_d / UM,
        "t_a_um": cav.t_a / UM,
        "f_res_thz": res.f_res / 1e12,
        "linewidth_ghz": res.fwhm / GHZ,
        "mode_character": hybrid.mode_character(cav),
        "layer_edges_um": [float(e / UM) for e in stack.edges],
        "layer_names": names,
    }
    if cav.t_d > 0:
        meta["energy_length_um"] = tmm.energy_distribution_length(prof) / UM
        meta["diamond_air_interface_um"] = float(stack.edges[stack.find("diamond")] / UM)
    return SweepResult(list(rows[0]), rows, meta)


COMMANDS = {
    "sweep-thickness": cmd_sweep_thickness,
    "losses": cmd_losses,
    "modes": cmd_modes,
    "optimize": cmd_optimize,
    "field-profile": cmd_field_profile,
}

__all__ = ["COMMANDS", "ConfigError", "SweepResult", "build_cavity", "build_design", "dimple_geometry", "AIR_LIKE"]
