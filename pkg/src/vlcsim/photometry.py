"""Illuminance on the communication floor and 300 lx compliance.

The floor map includes inter-reflected light: surface patches exchange flux
through the same cached transfer matrix the channel tracer uses, iterated to
convergence, and the evaluation plane gathers the converged exitances.  A
redirected luminaire contributes (1-f) of its flux through the Lambertian
terms; the redirected tranche is collimated at the receiver, so it adds no
areal illuminance of its own, but the flux it lands on the floor re-enters
the inter-reflection budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import (
    BeamMap, SECOND_ORDER_PITCH, _pair_transfer, uniform_beam_map,
)
from .scene import Luminaire, Scene, segment_visible_mask, visible_mask

DEFAULT_GRID_PITCH = 0.1
DEFAULT_PLANE_Z = 1.0        # the communication floor
COMPLIANCE_LUX = 300.0
DEFAULT_TARGET_MIN_LUX = 338.0

_RADIOSITY_PITCH = SECOND_ORDER_PITCH
_MAX_BOUNCES = 100
_CONVERGENCE = 1e-12


@dataclass
class Redirection:
    """Send `fraction` of one luminaire's flux into a floor cell."""

    lum_id: int
    fraction: float
    cell: Optional[tuple[float, float]] = None   # lower corner; default own cell
    beam_map: Optional[BeamMap] = None           # None means uniform

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("redirected fraction must lie in [0, 1]")


@dataclass
class IlluminanceMap:
    pitch: float
    plane_z: float
    x: np.ndarray          # grid-point x coordinates
    y: np.ndarray
    values: np.ndarray     # lux, shape (len(x), len(y))

    def min(self) -> float:
        return float(self.values.min())

    def to_csv(self, path: str) -> None:
        """Matrix form: one row per x grid line."""
        np.savetxt(path, self.values, delimiter=",", fmt="%.6f")

    def to_long_csv(self, path: str) -> None:
        """Plot-ready long form: x,y,lux."""
        with open(path, "w") as fh:
            fh.write("x,y,lux\n")
            for i, xv in enumerate(self.x):
                for j, yv in enumerate(self.y):
                    fh.write(f"{xv:.3f},{yv:.3f},{self.values[i, j]:.6f}\n")


# ---------------------------------------------------------------------------
# direct (first-flight) terms

def _lambertian_lux(points: np.ndarray, lum: Luminaire,
                    flux_scale: float = 1.0,
                    scene: Optional[Scene] = None) -> np.ndarray:
    """Direct illuminance of one luminaire on horizontal points (vectorized)."""
    n_s = lum.source_order
    total = np.zeros(len(points))
    flux_per_emitter = flux_scale * lum.flux_lm / 9.0
    i0 = (n_s + 1.0) * flux_per_emitter / (2.0 * np.pi)
    for pos in lum.emitter_positions():
        d_vec = points - pos[None, :]
        d2 = np.einsum("ij,ij->i", d_vec, d_vec)
        d = np.sqrt(d2)
        cos_phi = -d_vec[:, 2] / d          # emission angle off straight down
        cos_theta = cos_phi                  # horizontal evaluation plane
        e = np.where(cos_phi > 0, i0 * cos_phi ** n_s * cos_theta / d2, 0.0)
        if scene is not None and scene.occluders:
            e = np.where(visible_mask(pos, points, scene), e, 0.0)
        total += e
    return total


def _beam_lux(points: np.ndarray, lum: Luminaire,
              redirection: Redirection) -> np.ndarray:
    """Areal illuminance of the beam crossing the plane (direct-only model)."""
    cell = redirection.cell if redirection.cell is not None else lum.cell()
    bmap = redirection.beam_map or uniform_beam_map()
    flux = redirection.fraction * lum.flux_lm
    out = np.zeros(len(points))
    for k, p in enumerate(points):
        out[k] = flux * bmap.density_at(p[0] - cell[0], p[1] - cell[1])
    return out


def illuminance_at(point, luminaires: list[Luminaire],
                   redirection: Optional[Redirection] = None) -> float:
    """Direct-component illuminance (lux) at one point on the plane.

    Without a surrounding scene there is nothing to reflect, so this is the
    pure first-flight sum; a redirection dims its luminaire and adds the
    beam-map term over the target cell.
    """
    pts = np.asarray(point, dtype=float).reshape(1, 3)
    total = 0.0
    for lum in luminaires:
        scale = 1.0
        if redirection is not None and lum.lum_id == redirection.lum_id:
            scale = 1.0 - redirection.fraction
            total += float(_beam_lux(pts, lum, redirection)[0])
        total += float(_lambertian_lux(pts, lum, scale)[0])
    return total


# ---------------------------------------------------------------------------
# inter-reflection machinery

def _illum_transfer(scene: Scene) -> np.ndarray:
    """T[i, j]: exitance at patch i -> illuminance increment at patch j."""
    key = ("illum_transfer", _RADIOSITY_PITCH)
    if key in scene._cache:
        return scene._cache[key]
    w, _ = _pair_transfer(scene, _RADIOSITY_PITCH)
    elems = scene.elements(_RADIOSITY_PITCH)
    denom = elems.areas * elems.rho
    with np.errstate(divide="ignore", invalid="ignore"):
        t = w * elems.areas[:, None] / denom[None, :]
    t[:, denom <= 0.0] = 0.0
    scene._cache[key] = t
    return t


def _converged_illuminance(scene: Scene, e0: np.ndarray) -> np.ndarray:
    """Total patch illuminance from first-flight patch illuminance e0."""
    t = _illum_transfer(scene)
    rho = scene.elements(_RADIOSITY_PITCH).rho
    total = e0.copy()
    cur = e0
    for _ in range(_MAX_BOUNCES):
        cur = (rho * cur) @ t
        total += cur
        if cur.max() <= _CONVERGENCE * max(total.max(), 1e-300):
            break
    return total


def _patch_first_flight(scene: Scene, lum: Luminaire) -> np.ndarray:
    """Per-unit-flux first-flight illuminance on every surface patch."""
    elems = scene.elements(_RADIOSITY_PITCH)
    n_s = lum.source_order
    i0 = (n_s + 1.0) / 9.0 / (2.0 * np.pi)
    e = np.zeros(len(elems))
    for pos in lum.emitter_positions():
        d_vec = elems.centers - pos[None, :]
        d2 = np.einsum("ij,ij->i", d_vec, d_vec)
        d = np.sqrt(d2)
        cos_phi = -d_vec[:, 2] / d
        cos_theta = -np.einsum("ij,ij->i", d_vec, elems.normals) / d
        w = np.where((cos_phi > 0) & (cos_theta > 0),
                     i0 * cos_phi ** n_s * cos_theta / d2, 0.0)
        if scene.occluders:
            w = np.where(visible_mask(pos, elems.centers, scene), w, 0.0)
        e += w
    return e


def _plane_points(scene: Scene, pitch: float, plane_z: float):
    bx, by, _ = scene.bounds
    x = (np.arange(int(round(bx / pitch))) + 0.5) * pitch
    y = (np.arange(int(round(by / pitch))) + 0.5) * pitch
    gx, gy = np.meshgrid(x, y, indexing="ij")
    points = np.column_stack(
        [gx.ravel(), gy.ravel(), np.full(gx.size, plane_z)])
    return x, y, points


def _gather_to_plane(scene: Scene, points: np.ndarray, plane_z: float,
                     patch_e: np.ndarray) -> np.ndarray:
    """Illuminance on up-facing plane points from converged patch exitances."""
    elems = scene.elements(_RADIOSITY_PITCH)
    above = elems.centers[:, 2] > plane_z + 1e-9
    m = (elems.rho * patch_e)[above]
    centers = elems.centers[above]
    normals = elems.normals[above]
    areas = elems.areas[above]
    out = np.zeros(len(points))
    chunk = 400
    for k in range(0, len(centers), chunk):
        c = centers[k: k + chunk]
        d_vec = points[:, None, :] - c[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", d_vec, d_vec)
        d = np.sqrt(d2)
        cos_i = np.einsum("ijk,jk->ij", d_vec, normals[k: k + chunk]) / d
        cos_p = -d_vec[:, :, 2] / d
        w = (np.clip(cos_i, 0.0, None) * np.clip(cos_p, 0.0, None)
             / (np.pi * d2))
        if scene.occluders:
            npts, nc = len(points), len(c)
            starts = np.repeat(points, nc, axis=0)
            ends = np.tile(c, (npts, 1))
            vis = segment_visible_mask(starts, ends, scene)
            w = w * vis.reshape(npts, nc)
        out += w @ (m[k: k + chunk] * areas[k: k + chunk])
    return out


def _plane_cache(scene: Scene, pitch: float, plane_z: float) -> dict:
    """Per-unit-flux plane contribution of each luminaire, direct + bounced."""
    key = ("illum_plane", round(pitch, 9), round(plane_z, 9))
    if key in scene._cache:
        return scene._cache[key]
    x, y, points = _plane_points(scene, pitch, plane_z)
    contrib = {}
    for lum in scene.luminaires:
        unit = Luminaire(center=lum.center, power_w=lum.power_w,
                         flux_lm=1.0, source_order=lum.source_order,
                         lum_id=lum.lum_id)
        direct = _lambertian_lux(points, unit, scene=scene)
        bounced = _gather_to_plane(
            scene, points, plane_z,
            _converged_illuminance(scene, _patch_first_flight(scene, lum)))
        contrib[lum.lum_id] = direct + bounced
    scene._cache[key] = {"x": x, "y": y, "points": points,
                         "contrib": contrib}
    return scene._cache[key]


def _beam_addback(scene: Scene, lum: Luminaire, redirection: Redirection,
                  points: np.ndarray, plane_z: float) -> np.ndarray:
    """Plane illuminance, per lumen of redirected flux, from the beam's
    diffuse footprint on the physical floor (plus low-wall spill)."""
    cacheable = redirection.beam_map is None and redirection.cell is None
    key = ("illum_addback", lum.lum_id, round(plane_z, 9), len(points))
    if cacheable and key in scene._cache:
        return scene._cache[key]
    cell = redirection.cell if redirection.cell is not None else lum.cell()
    bmap = redirection.beam_map or uniform_beam_map()
    elems = scene.elements(_RADIOSITY_PITCH)
    floor = elems.centers[:, 2] < 1e-9
    lz = lum.center[2]
    scale = lz / (lz - plane_z)          # ray continues past the plane
    # floor point p came through plane point q on the same ray
    q = lum.center[None, :] + (elems.centers - lum.center[None, :]) / scale
    density = np.array([
        bmap.density_at(qq[0] - cell[0], qq[1] - cell[1]) if f else 0.0
        for qq, f in zip(q, floor)])
    deposit = density / (scale * scale)      # lux per lumen of beam flux
    if scene.occluders:
        deposit = np.where(
            visible_mask(lum.center, elems.centers, scene), deposit, 0.0)
    # flux clipped at the walls (or blocked) spills onto sub-plane surfaces
    landed = float((deposit * elems.areas).sum())
    residual = max(0.0, 1.0 - landed)
    low_wall = (~floor) & (elems.centers[:, 2] < plane_z)
    wall_area = elems.areas[low_wall].sum()
    if residual > 0 and wall_area > 0:
        deposit = deposit + np.where(low_wall, residual / wall_area, 0.0)
    out = _gather_to_plane(scene, points, plane_z,
                           _converged_illuminance(scene, deposit))
    if cacheable:
        scene._cache[key] = out
    return out


# ---------------------------------------------------------------------------
# public maps

def illuminance_map(scene: Scene, redirection: Optional[Redirection] = None,
                    pitch: float = DEFAULT_GRID_PITCH,
                    plane_z: float = DEFAULT_PLANE_Z,
                    reflections: bool = True) -> IlluminanceMap:
    if not reflections:
        return _direct_only_map(scene, redirection, pitch, plane_z)
    cache = _plane_cache(scene, pitch, plane_z)
    x, y, points = cache["x"], cache["y"], cache["points"]
    values = np.zeros(len(points))
    for lum in scene.luminaires:
        scale = 1.0
        if redirection is not None and lum.lum_id == redirection.lum_id:
            f = redirection.fraction
            scale = 1.0 - f
            values += (f * lum.flux_lm
                       * _beam_addback(scene, lum, redirection, points,
                                       plane_z))
        values += scale * lum.flux_lm * cache["contrib"][lum.lum_id]
    return IlluminanceMap(pitch=pitch, plane_z=plane_z, x=x, y=y,
                          values=values.reshape(len(x), len(y)))


def _direct_only_map(scene, redirection, pitch, plane_z) -> IlluminanceMap:
    x, y, points = _plane_points(scene, pitch, plane_z)
    values = np.zeros(len(points))
    for lum in scene.luminaires:
        scale = 1.0
        if redirection is not None and lum.lum_id == redirection.lum_id:
            scale = 1.0 - redirection.fraction
            values += _beam_lux(points, lum, redirection)
        values += _lambertian_lux(points, lum, scale, scene=scene)
    return IlluminanceMap(pitch=pitch, plane_z=plane_z, x=x, y=y,
                          values=values.reshape(len(x), len(y)))


def calibrate_flux(scene: Scene,
                   target_min_lux: float = DEFAULT_TARGET_MIN_LUX) -> float:
    """Per-luminaire flux that pins the no-redirection floor minimum.

    Illuminance is linear in flux, so this is a single scale solve.  The
    scene's luminaires are updated in place; the flux is also returned.
    """
    if target_min_lux < 0:
        raise ValueError("target minimum must be >= 0")
    for lum in scene.luminaires:
        lum.flux_lm = 1.0
    base_min = illuminance_map(scene).min()
    if base_min <= 0.0:
        raise ValueError("scene produces no floor illuminance; cannot calibrate")
    flux = target_min_lux / base_min
    for lum in scene.luminaires:
        lum.flux_lm = flux
    return flux


def compliance_min(scene: Scene, redirection: Optional[Redirection] = None,
                   ) -> tuple[float, bool]:
    """Floor minimum and its verdict against the 300 lx workplace standard."""
    mn = illuminance_map(scene, redirection).min()
    return mn, mn >= COMPLIANCE_LUX
