"""Room geometry: surfaces, luminaires, receivers and reflector partitioning.

Coordinate frame: x across the room width (4 m), y along its length (8 m),
z up (3 m ceiling).  Luminaires sit on the ceiling facing down; receivers sit
on the communication floor (z = 1 m) facing up.  All positions are plain
numpy arrays of shape (3,).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

SPEED_OF_LIGHT = 2.998e8  # m/s

#: Lambertian order of a source with 70 deg half-power semi-angle.
DEFAULT_SOURCE_ORDER = -math.log(2.0) / math.log(math.cos(math.radians(70.0)))

DEFAULT_LUMINAIRE_POWER_W = 9.0       # 9 emitters at 1 W each
DEFAULT_LUMINAIRE_FLUX_LM = 4000.0    # placeholder, calibrated photometrically

DEFAULT_RECEIVER_AREA_M2 = 0.5e-6     # 0.5 mm^2 photosensitive area
DEFAULT_RECEIVER_FOV_DEG = 40.0

ROOM_BOUNDS = (4.0, 8.0, 3.0)

_EMITTER_PITCH = 0.02  # 3x3 emitter grid spacing inside a luminaire


class ConfigError(ValueError):
    """A scene configuration file or layout entry is malformed."""


def vec3(x, y, z) -> np.ndarray:
    v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite coordinates: {v}")
    return v


@dataclass(frozen=True)
class Surface:
    """Planar rectangle given by an origin corner and two orthogonal edges."""

    origin: np.ndarray
    u: np.ndarray
    v: np.ndarray
    normal: np.ndarray
    rho: float
    occluding: bool = False
    name: str = ""

    def __post_init__(self):
        if abs(float(np.dot(self.u, self.v))) > 1e-9 * (
            np.linalg.norm(self.u) * np.linalg.norm(self.v)
        ):
            raise ConfigError(f"surface {self.name!r}: edge vectors not orthogonal")
        if abs(np.linalg.norm(self.normal) - 1.0) > 1e-9:
            raise ConfigError(f"surface {self.name!r}: normal is not unit length")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"surface {self.name!r}: rho {self.rho} outside [0, 1]")

    @property
    def area(self) -> float:
        return float(np.linalg.norm(self.u) * np.linalg.norm(self.v))


@dataclass(frozen=True)
class SurfaceElement:
    """One Lambertian reflector patch produced by partitioning a surface."""

    center: np.ndarray
    area: float
    normal: np.ndarray
    rho: float
    order: float = 1.0


class ElementSet:
    """Struct-of-arrays view of many surface elements (fast vector math)."""

    def __init__(self, centers, normals, areas, rho):
        self.centers = np.asarray(centers, dtype=float).reshape(-1, 3)
        self.normals = np.asarray(normals, dtype=float).reshape(-1, 3)
        self.areas = np.asarray(areas, dtype=float).ravel()
        self.rho = np.asarray(rho, dtype=float).ravel()
        n = len(self.areas)
        if not (len(self.centers) == len(self.normals) == len(self.rho) == n):
            raise ValueError("inconsistent element arrays")

    def __len__(self) -> int:
        return len(self.areas)

    def element(self, i: int) -> SurfaceElement:
        return SurfaceElement(
            center=self.centers[i].copy(),
            area=float(self.areas[i]),
            normal=self.normals[i].copy(),
            rho=float(self.rho[i]),
        )


@dataclass
class Luminaire:
    """Ceiling light engine: 3x3 emitter grid at 2 cm pitch, facing down."""

    center: np.ndarray
    power_w: float = DEFAULT_LUMINAIRE_POWER_W
    flux_lm: float = DEFAULT_LUMINAIRE_FLUX_LM
    source_order: float = DEFAULT_SOURCE_ORDER
    lum_id: int = 0

    def __post_init__(self):
        if self.source_order <= 0:
            raise ConfigError(f"luminaire {self.lum_id}: source order must be > 0")

    @property
    def normal(self) -> np.ndarray:
        return np.array([0.0, 0.0, -1.0])

    def emitter_positions(self) -> np.ndarray:
        """(9, 3) array of the individual emitter positions."""
        offs = np.array([-1.0, 0.0, 1.0]) * _EMITTER_PITCH
        xs, ys = np.meshgrid(offs, offs, indexing="ij")
        pos = np.tile(self.center, (9, 1))
        pos[:, 0] += xs.ravel()
        pos[:, 1] += ys.ravel()
        return pos

    def cell(self) -> tuple[float, float]:
        """Lower corner (x0, y0) of this luminaire's 2 m x 2 m floor cell."""
        return (self.center[0] - 1.0, self.center[1] - 1.0)


@dataclass
class Receiver:
    position: np.ndarray
    area: float = DEFAULT_RECEIVER_AREA_M2
    fov_deg: float = DEFAULT_RECEIVER_FOV_DEG
    orientation: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    @property
    def cos_fov(self) -> float:
        return math.cos(math.radians(self.fov_deg))


@dataclass
class Scene:
    label: str
    surfaces: list[Surface]
    luminaires: list[Luminaire]
    bounds: tuple[float, float, float] = ROOM_BOUNDS
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        bx, by, bz = self.bounds
        for lum in self.luminaires:
            x, y, z = lum.center
            if not (0 < x < bx and 0 < y < by and abs(z - bz) < 1e-9):
                raise ConfigError(
                    f"luminaire {lum.lum_id} at {lum.center} not on the ceiling"
                )

    @property
    def occluders(self) -> list[Surface]:
        return [s for s in self.surfaces if s.occluding]

    def elements(self, pitch: float) -> ElementSet:
        """Partition of all reflective surfaces at the given pitch (cached)."""
        key = ("elements", round(pitch, 9))
        if key not in self._cache:
            self._cache[key] = partition_surfaces(self.surfaces, pitch)
        return self._cache[key]

    def luminaire(self, lum_id: int) -> Luminaire:
        for lum in self.luminaires:
            if lum.lum_id == lum_id:
                return lum
        raise ConfigError(f"no luminaire with id {lum_id}")


# ---------------------------------------------------------------------------
# Partitioning

def _partition_edge(length: float, pitch: float):
    """Split [0, length] into pitch-sized intervals; trailing tile may be short."""
    n_full = int(length / pitch + 1e-9)
    edges = [i * pitch for i in range(n_full + 1)]
    if edges[-1] < length - 1e-12:
        edges.append(length)
    return np.asarray(edges)


def partition_surfaces(surfaces: Iterable[Surface], pitch: float) -> ElementSet:
    if pitch <= 0:
        raise ValueError(f"element pitch must be > 0, got {pitch}")
    centers, normals, areas, rho = [], [], [], []
    for surf in surfaces:
        if surf.rho <= 0.0:
            continue
        lu = np.linalg.norm(surf.u)
        lv = np.linalg.norm(surf.v)
        uhat = surf.u / lu
        vhat = surf.v / lv
        eu = _partition_edge(lu, pitch)
        ev = _partition_edge(lv, pitch)
        cu = 0.5 * (eu[:-1] + eu[1:])
        cv = 0.5 * (ev[:-1] + ev[1:])
        du = np.diff(eu)
        dv = np.diff(ev)
        cc_u, cc_v = np.meshgrid(cu, cv, indexing="ij")
        aa = np.outer(du, dv)
        pts = (
            surf.origin[None, :]
            + cc_u.ravel()[:, None] * uhat[None, :]
            + cc_v.ravel()[:, None] * vhat[None, :]
        )
        centers.append(pts)
        normals.append(np.tile(surf.normal, (pts.shape[0], 1)))
        areas.append(aa.ravel())
        rho.append(np.full(pts.shape[0], surf.rho))
    if not centers:
        return ElementSet(
            np.empty((0, 3)), np.empty((0, 3)), np.empty(0), np.empty(0)
        )
    return ElementSet(
        np.vstack(centers), np.vstack(normals), np.concatenate(areas),
        np.concatenate(rho),
    )


def partition(scene: Scene, pitch_first: float, pitch_second: float):
    """Element sets used for first- and second-order reflections."""
    return scene.elements(pitch_first), scene.elements(pitch_second)


# ---------------------------------------------------------------------------
# Occlusion

def _segment_hits_surface(p, q, surf: Surface, eps: float = 1e-9) -> bool:
    d = q - p
    denom = float(np.dot(d, surf.normal))
    if abs(denom) < 1e-15:
        return False  # parallel or in-plane: never blocks
    t = float(np.dot(surf.origin - p, surf.normal)) / denom
    if t <= eps or t >= 1.0 - eps:
        return False  # endpoints on the surface do not count
    hit = p + t * d - surf.origin
    lu = np.linalg.norm(surf.u)
    lv = np.linalg.norm(surf.v)
    a = float(np.dot(hit, surf.u)) / lu
    b = float(np.dot(hit, surf.v)) / lv
    # strict interior: grazing an edge exactly does not block
    return eps < a < lu - eps and eps < b < lv - eps


def visible(p: np.ndarray, q: np.ndarray, scene: Scene) -> bool:
    """True iff the open segment p-q crosses no occluding surface."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.array_equal(p, q):
        raise ValueError("visible() requires two distinct points")
    for surf in scene.occluders:
        if _segment_hits_surface(p, q, surf):
            return False
    return True


def visible_mask(p: np.ndarray, targets: np.ndarray, scene: Scene) -> np.ndarray:
    """Vectorized visibility of one point against (N, 3) target points."""
    targets = np.asarray(targets, dtype=float)
    mask = np.ones(len(targets), dtype=bool)
    occluders = scene.occluders
    if not occluders:
        return mask
    p = np.asarray(p, dtype=float)
    d = targets - p[None, :]
    eps = 1e-9
    for surf in occluders:
        denom = d @ surf.normal
        live = np.abs(denom) > 1e-15
        t = np.full(len(targets), -1.0)
        t[live] = float(np.dot(surf.origin - p, surf.normal)) / denom[live]
        cand = (t > eps) & (t < 1.0 - eps)
        if not np.any(cand):
            continue
        hit = p[None, :] + t[cand, None] * d[cand] - surf.origin[None, :]
        lu = np.linalg.norm(surf.u)
        lv = np.linalg.norm(surf.v)
        a = (hit @ surf.u) / lu
        b = (hit @ surf.v) / lv
        blocked = (a > eps) & (a < lu - eps) & (b > eps) & (b < lv - eps)
        idx = np.flatnonzero(cand)
        mask[idx[blocked]] = False
    return mask


def segment_visible_mask(starts: np.ndarray, ends: np.ndarray,
                         scene: Scene) -> np.ndarray:
    """Vectorized visibility for N independent segments (N, 3) -> (N, 3)."""
    starts = np.asarray(starts, dtype=float)
    ends = np.asarray(ends, dtype=float)
    mask = np.ones(len(starts), dtype=bool)
    if not scene.occluders:
        return mask
    d = ends - starts
    eps = 1e-9
    for surf in scene.occluders:
        denom = d @ surf.normal
        live = np.abs(denom) > 1e-15
        t = np.full(len(starts), -1.0)
        t[live] = ((surf.origin[None, :] - starts[live]) @ surf.normal) / denom[live]
        cand = (t > eps) & (t < 1.0 - eps)
        if not np.any(cand):
            continue
        hit = starts[cand] + t[cand, None] * d[cand] - surf.origin[None, :]
        lu = np.linalg.norm(surf.u)
        lv = np.linalg.norm(surf.v)
        a = (hit @ surf.u) / lu
        b = (hit @ surf.v) / lv
        blocked = (a > eps) & (a < lu - eps) & (b > eps) & (b < lv - eps)
        idx = np.flatnonzero(cand)
        mask[idx[blocked]] = False
    return mask


# ---------------------------------------------------------------------------
# Room builders

def _axis_rect(name, origin, u, v, normal, rho, occluding=False) -> Surface:
    return Surface(
        origin=vec3(*origin), u=vec3(*u), v=vec3(*v), normal=vec3(*normal),
        rho=rho, occluding=occluding, name=name,
    )


def _shell_surfaces(rho_walls=0.8, rho_ceiling=0.8, rho_floor=0.3,
                    rho_wall_y8=None, rho_wall_x4=None) -> list[Surface]:
    bx, by, bz = ROOM_BOUNDS
    if rho_wall_y8 is None:
        rho_wall_y8 = rho_walls
    if rho_wall_x4 is None:
        rho_wall_x4 = rho_walls
    return [
        _axis_rect("floor", (0, 0, 0), (bx, 0, 0), (0, by, 0), (0, 0, 1), rho_floor),
        _axis_rect("ceiling", (0, 0, bz), (bx, 0, 0), (0, by, 0), (0, 0, -1),
                   rho_ceiling),
        _axis_rect("wall_x0", (0, 0, 0), (0, by, 0), (0, 0, bz), (1, 0, 0),
                   rho_walls),
        _axis_rect("wall_x4", (bx, 0, 0), (0, by, 0), (0, 0, bz), (-1, 0, 0),
                   rho_wall_x4),
        _axis_rect("wall_y0", (0, 0, 0), (bx, 0, 0), (0, 0, bz), (0, 1, 0),
                   rho_walls),
        _axis_rect("wall_y8", (0, by, 0), (bx, 0, 0), (0, 0, bz), (0, -1, 0),
                   rho_wall_y8),
    ]


def _default_luminaires(power_w, flux_lm, source_order) -> list[Luminaire]:
    lums = []
    lum_id = 1
    for x in (1.0, 3.0):
        for y in (1.0, 3.0, 5.0, 7.0):
            lums.append(Luminaire(
                center=vec3(x, y, ROOM_BOUNDS[2]), power_w=power_w,
                flux_lm=flux_lm, source_order=source_order, lum_id=lum_id,
            ))
            lum_id += 1
    return lums


def build_room_a(power_w: float = DEFAULT_LUMINAIRE_POWER_W,
                 flux_lm: float = DEFAULT_LUMINAIRE_FLUX_LM,
                 source_order: float = DEFAULT_SOURCE_ORDER) -> Scene:
    """Empty 4 m x 8 m x 3 m room, eight ceiling luminaires over the floor cells."""
    return Scene(
        label="A",
        surfaces=_shell_surfaces(),
        luminaires=_default_luminaires(power_w, flux_lm, source_order),
    )


def _cut_rect(rects, cut):
    """Subtract an axis-aligned (a0, a1, b0, b1) window from 2D rects."""
    a0, a1, b0, b1 = cut
    out = []
    for (ra0, ra1, rb0, rb1) in rects:
        if a1 <= ra0 or a0 >= ra1 or b1 <= rb0 or b0 >= rb1:
            out.append((ra0, ra1, rb0, rb1))
            continue
        ca0, ca1 = max(a0, ra0), min(a1, ra1)
        cb0, cb1 = max(b0, rb0), min(b1, rb1)
        if ra0 < ca0:
            out.append((ra0, ca0, rb0, rb1))
        if ca1 < ra1:
            out.append((ca1, ra1, rb0, rb1))
        if rb0 < cb0:
            out.append((ca0, ca1, rb0, cb0))
        if cb1 < rb1:
            out.append((ca0, ca1, cb1, rb1))
    return out


def default_room_b_layout() -> dict:
    """Approximate office layout: door, two windows, shelf walls, cubicles, desks.

    The published floor plan gives no exact furniture dimensions; this layout
    is an approximation and is labeled as such in the scene config.
    """
    bx, by, bz = ROOM_BOUNDS
    surfaces = []

    def rect_entry(name, origin, u, v, normal, rho, occluding=False):
        surfaces.append({
            "name": name, "origin": list(origin), "u": list(u), "v": list(v),
            "normal": list(normal), "rho": rho, "occluding": occluding,
        })

    rect_entry("floor", (0, 0, 0), (bx, 0, 0), (0, by, 0), (0, 0, 1), 0.3)
    rect_entry("ceiling", (0, 0, bz), (bx, 0, 0), (0, by, 0), (0, 0, -1), 0.8)
    # bookstand / cabinet walls
    rect_entry("wall_x4", (bx, 0, 0), (0, by, 0), (0, 0, bz), (-1, 0, 0), 0.4)
    rect_entry("wall_y8", (0, by, 0), (bx, 0, 0), (0, 0, bz), (0, -1, 0), 0.4)

    # short wall y=0 with a door (1 m wide, 2.1 m tall)
    door = (1.5, 2.5, 0.0, 2.1)
    for i, (a0, a1, b0, b1) in enumerate(_cut_rect([(0, bx, 0, bz)], door)):
        rect_entry(f"wall_y0_{i}", (a0, 0, b0), (a1 - a0, 0, 0), (0, 0, b1 - b0),
                   (0, 1, 0), 0.8)
    rect_entry("door", (door[0], 0, door[2]), (door[1] - door[0], 0, 0),
               (0, 0, door[3] - door[2]), (0, 1, 0), 0.0, occluding=True)

    # long wall x=0 with two windows (1.5 m x 1.5 m, sill at 1 m)
    wins = [(2.0, 3.5, 1.0, 2.5), (4.5, 6.0, 1.0, 2.5)]
    rects = [(0, by, 0, bz)]
    for w in wins:
        rects = _cut_rect(rects, w)
    for i, (a0, a1, b0, b1) in enumerate(rects):
        rect_entry(f"wall_x0_{i}", (0, a0, b0), (0, a1 - a0, 0), (0, 0, b1 - b0),
                   (1, 0, 0), 0.8)
    for i, (a0, a1, b0, b1) in enumerate(wins):
        rect_entry(f"window_{i}", (0, a0, b0), (0, a1 - a0, 0), (0, 0, b1 - b0),
                   (1, 0, 0), 0.0)

    # mini cubicle partitions, 1.5 m high, reflective on both faces
    part_rects = [
        ("cubicle_0", (0.0, 2.0, 0.0), (1.4, 0.0, 0.0)),
        ("cubicle_1", (2.6, 2.0, 0.0), (1.4, 0.0, 0.0)),
        ("cubicle_2", (0.0, 6.0, 0.0), (1.4, 0.0, 0.0)),
        ("cubicle_3", (2.6, 6.0, 0.0), (1.4, 0.0, 0.0)),
    ]
    for name, origin, u in part_rects:
        for side, normal in (("_front", (0, 1, 0)), ("_back", (0, -1, 0))):
            rect_entry(name + side, origin, u, (0, 0, 1.5), normal, 0.3,
                       occluding=True)

    # desk tops at 0.75 m
    desks = [
        ("desk_0", (0.0, 0.8, 0.75), (0.8, 0, 0), (0, 1.8, 0)),
        ("desk_1", (3.2, 4.6, 0.75), (0.8, 0, 0), (0, 1.8, 0)),
    ]
    for name, origin, u, v in desks:
        rect_entry(name, origin, u, v, (0, 0, 1), 0.3, occluding=True)

    return {
        "label": "B",
        "note": "approximate",
        "surfaces": surfaces,
        "luminaires": [
            {
                "id": lum.lum_id,
                "center": list(lum.center),
                "power_w": lum.power_w,
                "flux_lm": lum.flux_lm,
                "source_order": lum.source_order,
            }
            for lum in _default_luminaires(
                DEFAULT_LUMINAIRE_POWER_W, DEFAULT_LUMINAIRE_FLUX_LM,
                DEFAULT_SOURCE_ORDER)
        ],
    }


def scene_from_config(config: dict) -> Scene:
    """Build a Scene from a parsed scene-config document."""
    try:
        label = config["label"]
    except KeyError:
        raise ConfigError("scene config missing 'label'")
    surfaces = []
    for i, entry in enumerate(config.get("surfaces", [])):
        try:
            origin = vec3(*entry["origin"])
            u = vec3(*entry["u"])
            v = vec3(*entry["v"])
            if "normal" in entry:
                normal = vec3(*entry["normal"])
            else:
                normal = np.cross(u, v)
                normal = normal / np.linalg.norm(normal)
            surfaces.append(Surface(
                origin=origin, u=u, v=v, normal=normal,
                rho=float(entry["rho"]),
                occluding=bool(entry.get("occluding", False)),
                name=entry.get("name", f"surface_{i}"),
            ))
        except (KeyError, TypeError, ValueError, ConfigError) as exc:
            raise ConfigError(f"surfaces[{i}] ({entry.get('name', '?')}): {exc}")
    luminaires = []
    for i, entry in enumerate(config.get("luminaires", [])):
        try:
            luminaires.append(Luminaire(
                center=vec3(*entry["center"]),
                power_w=float(entry.get("power_w", DEFAULT_LUMINAIRE_POWER_W)),
                flux_lm=float(entry.get("flux_lm", DEFAULT_LUMINAIRE_FLUX_LM)),
                source_order=float(
                    entry.get("source_order", DEFAULT_SOURCE_ORDER)),
                lum_id=int(entry.get("id", i + 1)),
            ))
        except (KeyError, TypeError, ValueError, ConfigError) as exc:
            raise ConfigError(f"luminaires[{i}]: {exc}")
    return Scene(label=label, surfaces=surfaces, luminaires=luminaires)


def scene_to_config(scene: Scene) -> dict:
    return {
        "label": scene.label,
        "surfaces": [
            {
                "name": s.name, "origin": list(s.origin), "u": list(s.u),
                "v": list(s.v), "normal": list(s.normal), "rho": s.rho,
                "occluding": s.occluding,
            }
            for s in scene.surfaces
        ],
        "luminaires": [
            {
                "id": lum.lum_id, "center": list(lum.center),
                "power_w": lum.power_w, "flux_lm": lum.flux_lm,
                "source_order": lum.source_order,
            }
            for lum in scene.luminaires
        ],
    }


def build_room_b(layout: Optional[dict] = None) -> Scene:
    """Realistic office room from a layout config (default approximates Fig-style plan)."""
    if layout is None:
        layout = default_room_b_layout()
    return scene_from_config(layout)


_DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def load_scene(path: str) -> Scene:
    """Load a scene-config JSON file; bare names resolve to shipped defaults."""
    if not os.path.exists(path):
        packaged = os.path.join(_DATA_DIR, path if path.endswith(".json")
                                else path + ".json")
        if os.path.exists(packaged):
            path = packaged
        else:
            raise ConfigError(f"scene config not found: {path}")
    with open(path) as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})")
    return scene_from_config(config)
