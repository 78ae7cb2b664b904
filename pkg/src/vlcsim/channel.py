"""Time-resolved impulse responses for one luminaire -> receiver link.

The tracer accumulates optical power into fixed-width time bins:
order 0 is the direct (LOS) path, order 1 bounces once off 5 cm reflector
elements, order 2 twice off the coarser 20 cm element set.  A luminaire can
optionally split its power between the plain wide Lambertian pattern and a
hologram-shaped beam aimed at its 2 m x 2 m floor cell.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .scene import (
    SPEED_OF_LIGHT,
    ElementSet,
    Luminaire,
    Receiver,
    Scene,
    segment_visible_mask,
    visible,
    visible_mask,
)

DEFAULT_DT = 10e-12          # 10 ps bins resolve GHz-scale bandwidths
FIRST_ORDER_PITCH = 0.05     # 5 cm elements for single bounces
SECOND_ORDER_PITCH = 0.20    # 20 cm elements for double bounces

_PAIR_CHUNK = 256            # rows per chunk when sweeping the pair matrix


@dataclass
class ImpulseResponse:
    """Received optical power per time bin (watts)."""

    dt: float
    bins: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"bin width must be > 0, got {self.dt}")
        self.bins = np.asarray(self.bins, dtype=float)

    @property
    def times(self) -> np.ndarray:
        """Bin-center times."""
        return self.t0 + (np.arange(len(self.bins)) + 0.5) * self.dt

    def total_power(self) -> float:
        return float(self.bins.sum())

    def trimmed(self) -> "ImpulseResponse":
        nz = np.flatnonzero(self.bins)
        n = int(nz[-1]) + 1 if len(nz) else 0
        return ImpulseResponse(dt=self.dt, bins=self.bins[:n].copy(), t0=self.t0)

    def to_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("t_seconds,power_watts\n")
            for t, p in zip(self.times, self.bins):
                fh.write(f"{t:.12e},{p:.12e}\n")

    def to_binary(self, path: str) -> None:
        """Little-endian float64 (t, power) pairs."""
        with open(path, "wb") as fh:
            for t, p in zip(self.times, self.bins):
                fh.write(struct.pack("<dd", t, p))


@dataclass
class BeamMap:
    """Normalized beam intensity over a 2 m x 2 m floor cell at z = 1 m.

    values[i, j] covers the pixel at cell-local coordinates
    (i + 0.5, j + 0.5) * cell_size / n; the array sums to 1.
    """

    values: np.ndarray
    cell_size: float = 2.0
    efficiency: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        total = self.values.sum()
        if total <= 0:
            raise ValueError("beam map has no energy")
        if abs(total - 1.0) > 1e-9:
            self.values = self.values / total

    @property
    def pixel_area(self) -> float:
        n = self.values.shape[0]
        return (self.cell_size / n) ** 2

    def density_at(self, x_local: float, y_local: float) -> float:
        """Fraction of beam power per m^2 at a cell-local point."""
        n = self.values.shape[0]
        if not (0.0 <= x_local <= self.cell_size and
                0.0 <= y_local <= self.cell_size):
            return 0.0
        i = min(int(x_local / self.cell_size * n), n - 1)
        j = min(int(y_local / self.cell_size * n), n - 1)
        return float(self.values[i, j]) / self.pixel_area


def uniform_beam_map(n: int = 64, cell_size: float = 2.0) -> BeamMap:
    return BeamMap(values=np.full((n, n), 1.0 / (n * n)), cell_size=cell_size)


@dataclass
class EmitterModel:
    """How a luminaire splits power between Lambertian glow and a shaped beam."""

    mode: str = "plain-lambertian"       # or "cgh-augmented"
    beam_fraction: float = 0.0
    beam_cell: Optional[tuple[float, float]] = None   # lower corner (x0, y0)
    beam_map: Optional[BeamMap] = None

    def __post_init__(self):
        if self.mode not in ("plain-lambertian", "cgh-augmented"):
            raise ValueError(f"unknown emitter mode {self.mode!r}")
        if not 0.0 <= self.beam_fraction <= 1.0:
            raise ValueError("beam fraction must lie in [0, 1]")
        if self.mode == "cgh-augmented" and self.beam_map is None:
            self.beam_map = uniform_beam_map()

    @property
    def lambertian_fraction(self) -> float:
        if self.mode == "plain-lambertian":
            return 1.0
        return 1.0 - self.beam_fraction


PLAIN_EMITTER = EmitterModel()


def cgh_emitter(beam_fraction: float, beam_cell: tuple[float, float],
                beam_map: Optional[BeamMap] = None) -> EmitterModel:
    return EmitterModel(mode="cgh-augmented", beam_fraction=beam_fraction,
                        beam_cell=beam_cell, beam_map=beam_map)


# ---------------------------------------------------------------------------
# LOS

def los_gain(emitter_pos, emitter_normal, n_s: float, receiver: Receiver,
             scene: Optional[Scene] = None):
    """Generalized-Lambertian LOS channel gain and its propagation delay."""
    emitter_pos = np.asarray(emitter_pos, dtype=float)
    emitter_normal = np.asarray(emitter_normal, dtype=float)
    d_vec = receiver.position - emitter_pos
    d = float(np.linalg.norm(d_vec))
    if d == 0.0:
        raise ValueError("emitter and receiver are co-located")
    delay = d / SPEED_OF_LIGHT
    cos_phi = float(np.dot(d_vec, emitter_normal)) / d
    cos_theta = float(np.dot(-d_vec, receiver.orientation)) / d
    if cos_phi <= 0.0 or cos_theta <= 0.0 or cos_theta < receiver.cos_fov:
        return 0.0, delay
    if scene is not None and not visible(emitter_pos, receiver.position, scene):
        return 0.0, delay
    gain = (receiver.area * (n_s + 1.0) / (2.0 * np.pi * d * d)
            * cos_phi ** n_s * cos_theta)
    return gain, delay


# ---------------------------------------------------------------------------
# Element transfer helpers (vectorized over an ElementSet)

def _source_to_elements(pos, normal, n_s, elems: ElementSet, scene: Scene):
    """Power fraction deposited on (and re-emitted by) each element, with delay.

    Returns (weight, distance); weight already includes dA and rho.
    """
    d_vec = elems.centers - pos[None, :]
    d = np.linalg.norm(d_vec, axis=1)
    d = np.maximum(d, 1e-12)
    cos_phi = (d_vec @ normal) / d
    cos_theta = -np.einsum("ij,ij->i", d_vec, elems.normals) / d
    w = np.where(
        (cos_phi > 0) & (cos_theta > 0),
        (n_s + 1.0) / (2.0 * np.pi * d * d)
        * np.maximum(cos_phi, 0.0) ** n_s * cos_theta
        * elems.areas * elems.rho,
        0.0,
    )
    if scene.occluders:
        w = np.where(visible_mask(pos, elems.centers, scene), w, 0.0)
    return w, d


def _elements_to_receiver(elems: ElementSet, receiver: Receiver, scene: Scene):
    """Lambertian (n = 1) transfer from each element to the receiver."""
    d_vec = receiver.position[None, :] - elems.centers
    d = np.linalg.norm(d_vec, axis=1)
    d = np.maximum(d, 1e-12)
    cos_phi = np.einsum("ij,ij->i", d_vec, elems.normals) / d
    cos_theta = -(d_vec @ receiver.orientation) / d
    w = np.where(
        (cos_phi > 0) & (cos_theta >= receiver.cos_fov),
        cos_phi * cos_theta / (np.pi * d * d) * receiver.area,
        0.0,
    )
    if scene.occluders:
        w = np.where(visible_mask(receiver.position, elems.centers, scene), w, 0.0)
    return w, d


def _pair_transfer(scene: Scene, pitch: float):
    """Cached element-to-element transfer matrix W and distance matrix D.

    W[i, j] moves re-emitted power at element i onto (and through) element j,
    including j's area, reflectivity, and mutual visibility.
    """
    key = ("pair_transfer", round(pitch, 9))
    if key in scene._cache:
        return scene._cache[key]
    elems = scene.elements(pitch)
    n = len(elems)
    w = np.empty((n, n))
    dist = np.empty((n, n))
    for lo in range(0, n, _PAIR_CHUNK):
        hi = min(lo + _PAIR_CHUNK, n)
        d_vec = elems.centers[None, :, :] - elems.centers[lo:hi, None, :]
        d = np.linalg.norm(d_vec, axis=2)
        np.maximum(d, 1e-12, out=d)
        cos_i = np.einsum("ijk,ik->ij", d_vec, elems.normals[lo:hi]) / d
        cos_j = -np.einsum("ijk,jk->ij", d_vec, elems.normals) / d
        blk = np.where(
            (cos_i > 0) & (cos_j > 0),
            cos_i * cos_j / (np.pi * d * d)
            * elems.areas[None, :] * elems.rho[None, :],
            0.0,
        )
        if scene.occluders:
            for r in range(lo, hi):
                vis = visible_mask(elems.centers[r], elems.centers, scene)
                blk[r - lo] = np.where(vis, blk[r - lo], 0.0)
        w[lo:hi] = blk
        dist[lo:hi] = d
    np.fill_diagonal(w, 0.0)
    scene._cache[key] = (w, dist)
    return scene._cache[key]


# ---------------------------------------------------------------------------
# Impulse response assembly

def _bin_count(scene: Scene, dt: float) -> int:
    diag = float(np.linalg.norm(scene.bounds))
    max_path = 3.0 * diag * 1.05
    return int(max_path / SPEED_OF_LIGHT / dt) + 2


def _add_scalar(bins, power, delay, dt):
    if power > 0:
        bins[int(delay / dt)] += power


def _beam_contributions(scene, luminaire, model, receiver, bins, dt, max_order):
    """Shaped-beam power: direct incidence plus one bounce off the floor cell."""
    beam_power = model.beam_fraction * luminaire.power_w
    if beam_power <= 0 or model.beam_map is None:
        return
    x0, y0 = model.beam_cell if model.beam_cell is not None else luminaire.cell()
    bmap = model.beam_map
    lum_pos = luminaire.center

    # (a) direct incidence on the receiver where it stands in the beam
    rx = receiver.position
    density = bmap.density_at(rx[0] - x0, rx[1] - y0)
    if density > 0:
        d_vec = rx - lum_pos
        d = float(np.linalg.norm(d_vec))
        cos_theta = float(np.dot(-d_vec, receiver.orientation)) / d
        if cos_theta >= receiver.cos_fov and visible(lum_pos, rx, scene):
            _add_scalar(bins, beam_power * density * receiver.area,
                        d / SPEED_OF_LIGHT, dt)

    if max_order < 1:
        return

    # (b) beam continues past the communication floor and scatters off the
    # physical floor (rho of the floor element it lands on)
    n = bmap.values.shape[0]
    step = bmap.cell_size / n
    coords = (np.arange(n) + 0.5) * step
    cx, cy = np.meshgrid(coords + x0, coords + y0, indexing="ij")
    cell_pts = np.column_stack([
        cx.ravel(), cy.ravel(), np.full(n * n, 1.0)])
    scale = lum_pos[2] / (lum_pos[2] - 1.0)   # extend ray from z=3 to z=0
    floor_pts = lum_pos[None, :] + (cell_pts - lum_pos[None, :]) * scale
    inside = (
        (floor_pts[:, 0] >= 0) & (floor_pts[:, 0] <= scene.bounds[0])
        & (floor_pts[:, 1] >= 0) & (floor_pts[:, 1] <= scene.bounds[1])
    )
    power = beam_power * bmap.values.ravel() * inside
    rho_floor = next((s.rho for s in scene.surfaces if s.name.startswith("floor")),
                     0.3)
    d1 = np.linalg.norm(floor_pts - lum_pos[None, :], axis=1)
    d_vec2 = receiver.position[None, :] - floor_pts
    d2 = np.linalg.norm(d_vec2, axis=1)
    d2 = np.maximum(d2, 1e-12)
    cos_phi = d_vec2[:, 2] / d2                       # floor normal is +z
    cos_theta = -(d_vec2 @ receiver.orientation) / d2
    w = np.where(
        (cos_phi > 0) & (cos_theta >= receiver.cos_fov),
        rho_floor * cos_phi * cos_theta / (np.pi * d2 * d2) * receiver.area,
        0.0,
    )
    if scene.occluders:
        lum_rep = np.tile(lum_pos, (len(floor_pts), 1))
        w = np.where(segment_visible_mask(lum_rep, floor_pts, scene), w, 0.0)
        w = np.where(visible_mask(receiver.position, floor_pts, scene), w, 0.0)
    p = power * w
    live = p > 0
    if np.any(live):
        counts = np.bincount(
            ((d1[live] + d2[live]) / SPEED_OF_LIGHT / dt).astype(np.int64),
            weights=p[live], minlength=len(bins))
        bins += counts[: len(bins)]


def impulse_response(scene: Scene, luminaire: Luminaire,
                     emitter_model: EmitterModel, receiver: Receiver,
                     max_order: int = 2, dt: float = DEFAULT_DT,
                     ) -> ImpulseResponse:
    """Trace one luminaire -> receiver link up to the requested bounce order."""
    if dt <= 0:
        raise ValueError(f"bin width must be > 0, got {dt}")
    if max_order not in (0, 1, 2):
        raise ValueError(f"max_order must be 0, 1 or 2, got {max_order}")

    bins = np.zeros(_bin_count(scene, dt))
    n_s = luminaire.source_order
    lam_frac = emitter_model.lambertian_fraction
    emitters = luminaire.emitter_positions()
    p_emit = lam_frac * luminaire.power_w / len(emitters)

    # order 0: direct LOS per emitter
    if p_emit > 0:
        for pos in emitters:
            gain, delay = los_gain(pos, luminaire.normal, n_s, receiver, scene)
            _add_scalar(bins, p_emit * gain, delay, dt)

    # order 1: one bounce off the fine element set
    if max_order >= 1 and p_emit > 0:
        elems1 = scene.elements(FIRST_ORDER_PITCH)
        w_er, d_er = _elements_to_receiver(elems1, receiver, scene)
        live = w_er > 0
        for pos in emitters:
            w_se, d_se = _source_to_elements(pos, luminaire.normal, n_s,
                                             elems1, scene)
            p = p_emit * w_se[live] * w_er[live]
            nz = p > 0
            if np.any(nz):
                delays = (d_se[live][nz] + d_er[live][nz]) / SPEED_OF_LIGHT
                counts = np.bincount((delays / dt).astype(np.int64),
                                     weights=p[nz], minlength=len(bins))
                bins += counts[: len(bins)]

    # order 2: two bounces on the coarse element set
    if max_order >= 2 and p_emit > 0:
        elems2 = scene.elements(SECOND_ORDER_PITCH)
        w12, d12 = _pair_transfer(scene, SECOND_ORDER_PITCH)
        w_er, d_er = _elements_to_receiver(elems2, receiver, scene)
        t_er = d_er / SPEED_OF_LIGHT
        for pos in emitters:
            w_se, d_se = _source_to_elements(pos, luminaire.normal, n_s,
                                             elems2, scene)
            a = p_emit * w_se
            t_se = d_se / SPEED_OF_LIGHT
            rows = np.flatnonzero(a > 0)
            cols = np.flatnonzero(w_er > 0)
            if len(rows) == 0 or len(cols) == 0:
                continue
            b = w_er[cols]
            t_b = t_er[cols]
            for lo in range(0, len(rows), _PAIR_CHUNK):
                r = rows[lo: lo + _PAIR_CHUNK]
                p = a[r, None] * w12[np.ix_(r, cols)] * b[None, :]
                delays = (t_se[r, None] + d12[np.ix_(r, cols)] / SPEED_OF_LIGHT
                          + t_b[None, :])
                pf = p.ravel()
                nz = pf > 0
                if np.any(nz):
                    counts = np.bincount(
                        (delays.ravel()[nz] / dt).astype(np.int64),
                        weights=pf[nz], minlength=len(bins))
                    bins += counts[: len(bins)]

    if emitter_model.mode == "cgh-augmented":
        _beam_contributions(scene, luminaire, emitter_model, receiver, bins,
                            dt, max_order)

    return ImpulseResponse(dt=dt, bins=bins).trimmed()


def received_power(ir: ImpulseResponse) -> float:
    return ir.total_power()
