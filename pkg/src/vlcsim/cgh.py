"""Phase-hologram design by simulated annealing.

A phase-only hologram of M x N cells is optimized so that its far-field
diffraction pattern concentrates energy uniformly inside a window that maps
onto a 2 m x 2 m floor cell (the window subtends the cell from the luminaire
2 m above the communication floor; the sample-to-floor mapping is linear in
tangent space).  The annealer flips one cell at a time to a random quantized
phase and accepts by the Metropolis rule on the root-sum-squared error
between the normalized target and reconstruction energies.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .channel import BeamMap

DEFAULT_CELLS = 64            # M = N
DEFAULT_GRID = 256            # reconstruction grid (4x zero-padding)
DEFAULT_PHASE_LEVELS = 256
DEFAULT_ALPHA = 0.95
DEFAULT_T_MIN_RATIO = 1e-3
DEFAULT_MOVES_PER_TEMP_FACTOR = 2   # moves per temperature = factor * M * N


@dataclass
class Hologram:
    """Phase-only hologram: unit amplitude, one phase per rectangular cell."""

    phase: np.ndarray            # radians, shape (M, N), wrapped to [0, 2pi)
    r: float = 1.0               # cell pitch, frequency-plane units
    s: float = 1.0

    def __post_init__(self):
        self.phase = np.mod(np.asarray(self.phase, dtype=float), 2.0 * np.pi)
        if self.r <= 0 or self.s <= 0:
            raise ValueError("cell pitch must be positive")

    @property
    def shape(self):
        return self.phase.shape

    @property
    def transmittance(self) -> np.ndarray:
        return np.exp(1j * self.phase)

    def save(self, path: str, seed: Optional[int] = None,
             cf: Optional[float] = None) -> None:
        """Row-major phase CSV plus a JSON sidecar with the design header."""
        np.savetxt(path, self.phase, delimiter=",", fmt="%.12f")
        meta = {
            "M": int(self.shape[0]), "N": int(self.shape[1]),
            "R": self.r, "S": self.s,
            "seed": seed, "CF": cf,
        }
        with open(_sidecar_path(path), "w") as fh:
            json.dump(meta, fh, indent=1)

    @classmethod
    def load(cls, path: str) -> "Hologram":
        phase = np.loadtxt(path, delimiter=",")
        r = s = 1.0
        sidecar = _sidecar_path(path)
        if os.path.exists(sidecar):
            with open(sidecar) as fh:
                meta = json.load(fh)
            r, s = float(meta.get("R", 1.0)), float(meta.get("S", 1.0))
        return cls(phase=np.atleast_2d(phase), r=r, s=s)


def _sidecar_path(path: str) -> str:
    base, _ = os.path.splitext(path)
    return base + ".meta.json"


@dataclass
class FarFieldPattern:
    """Discrete reconstruction: raw transform and sinc-enveloped amplitude.

    Grid index n maps to the reconstruction coordinate x_n = (n - G/2) / G.
    """

    amplitude: np.ndarray        # complex, includes RS * sinc cell envelope
    raw: np.ndarray              # plain transform, satisfies Parseval
    coords: np.ndarray           # x_n values, one axis (square grid)
    hologram_cells: int

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    def parseval_ratio(self) -> float:
        """sum|raw|^2 / (G^2 sum|H|^2); equals 1 for any phase-only hologram."""
        g = self.raw.shape[0]
        return float((np.abs(self.raw) ** 2).sum()
                     / (g * g * self.hologram_cells))


def _sinc_envelope(grid: int, r: float, s: float) -> np.ndarray:
    x = (np.arange(grid) - grid // 2) / grid
    return np.outer(np.sinc(r * x), np.sinc(s * x))


def far_field(h: Hologram, grid: int = DEFAULT_GRID) -> FarFieldPattern:
    """Evaluate the diffraction pattern on a centered grid via zero-padded FFT."""
    m, n = h.shape
    if grid < max(m, n):
        raise ValueError("reconstruction grid smaller than the hologram")
    tr = h.transmittance
    padded = np.zeros((grid, grid), dtype=complex)
    ks = np.arange(m) - m // 2
    ls = np.arange(n) - n // 2
    padded[np.ix_(ks % grid, ls % grid)] = tr
    raw = np.fft.fftshift(np.fft.ifft2(padded)) * grid * grid
    env = _sinc_envelope(grid, h.r, h.s)
    amplitude = h.r * h.s * env * raw
    coords = (np.arange(grid) - grid // 2) / grid
    return FarFieldPattern(amplitude=amplitude, raw=raw, coords=coords,
                           hologram_cells=m * n)


def far_field_direct(h: Hologram, grid: int = DEFAULT_GRID) -> np.ndarray:
    """Brute-force double-sum evaluation; oracle for small holograms."""
    m, n = h.shape
    tr = h.transmittance
    coords = (np.arange(grid) - grid // 2) / grid
    out = np.zeros((grid, grid), dtype=complex)
    for ni, x in enumerate(coords):
        for mi, y in enumerate(coords):
            acc = 0.0 + 0.0j
            for a in range(m):
                k = a - m // 2
                for b in range(n):
                    l = b - n // 2
                    acc += tr[a, b] * np.exp(
                        2j * np.pi * (h.r * x * k + h.s * y * l))
            out[ni, mi] = (h.r * h.s * np.sinc(h.r * x) * np.sinc(h.s * y)
                           * acc)
    return out


@dataclass
class TargetPattern:
    """Desired normalized far-field energy: uniform window, zero outside."""

    energy: np.ndarray
    window: np.ndarray           # boolean mask of the mapped floor cell
    design_fraction: float = 1.0

    def __post_init__(self):
        total = self.energy.sum()
        if total <= 0:
            raise ValueError("target pattern has no energy")
        if abs(total - 1.0) > 1e-12:
            self.energy = self.energy / total


def cell_target(grid: int = DEFAULT_GRID, window: Optional[int] = None,
                fraction: float = 0.3) -> TargetPattern:
    """Uniform target over the central window that maps onto the floor cell."""
    if window is None:
        window = grid // 2
    lo = grid // 2 - window // 2
    hi = lo + window
    mask = np.zeros((grid, grid), dtype=bool)
    mask[lo:hi, lo:hi] = True
    energy = np.where(mask, 1.0 / (window * window), 0.0)
    return TargetPattern(energy=energy, window=mask, design_fraction=fraction)


def cost(pattern: FarFieldPattern, target: TargetPattern) -> float:
    """Root-sum-squared error between normalized energies."""
    e = pattern.intensity
    if e.shape != target.energy.shape:
        raise ValueError("pattern and target grids differ")
    total = e.sum()
    if total > 0:
        e = e / total
    else:
        e = np.zeros_like(e)
    return float(np.sqrt(((target.energy - e) ** 2).sum()))


# ---------------------------------------------------------------------------
# Annealing

@dataclass
class AnnealSchedule:
    """Cooling schedule; t0=None self-calibrates to ~50% uphill acceptance."""

    t0: Optional[float] = None
    alpha: float = DEFAULT_ALPHA
    moves_per_temp: Optional[int] = None
    t_min_ratio: float = DEFAULT_T_MIN_RATIO
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("cooling factor must lie in (0, 1)")
        if not 0.0 < self.t_min_ratio < 1.0:
            raise ValueError("t_min_ratio must lie in (0, 1)")


@njit(cache=True, fastmath=True)
def _move_cost(f_re, f_im, sinc2, target, u_re, u_im, v_re, v_im,
               dh_re, dh_im, scratch):
    """CF after adding dh on the (u, v) separable mode; does not mutate F."""
    g = f_re.shape[0]
    tot = 0.0
    for n in range(g):
        a_re = u_re[n] * dh_re - u_im[n] * dh_im
        a_im = u_re[n] * dh_im + u_im[n] * dh_re
        row_re = f_re[n]
        row_im = f_im[n]
        row_s = sinc2[n]
        row_o = scratch[n]
        for m in range(g):
            fr = row_re[m] + a_re * v_re[m] - a_im * v_im[m]
            fi = row_im[m] + a_re * v_im[m] + a_im * v_re[m]
            en = row_s[m] * (fr * fr + fi * fi)
            row_o[m] = en
            tot += en
    acc = 0.0
    if tot > 0.0:
        inv = 1.0 / tot
        for n in range(g):
            row_t = target[n]
            row_o = scratch[n]
            for m in range(g):
                diff = row_t[m] - row_o[m] * inv
                acc += diff * diff
    else:
        for n in range(g):
            for m in range(g):
                acc += target[n, m] * target[n, m]
    return math.sqrt(acc), tot


@njit(cache=True, fastmath=True)
def _apply_move(f_re, f_im, u_re, u_im, v_re, v_im, dh_re, dh_im):
    g = f_re.shape[0]
    for n in range(g):
        a_re = u_re[n] * dh_re - u_im[n] * dh_im
        a_im = u_re[n] * dh_im + u_im[n] * dh_re
        row_re = f_re[n]
        row_im = f_im[n]
        for m in range(g):
            fr = row_re[m]
            fi = row_im[m]
            row_re[m] = fr + a_re * v_re[m] - a_im * v_im[m]
            row_im[m] = fi + a_re * v_im[m] + a_im * v_re[m]


@njit(cache=True)
def _anneal_loop(idx, f_re, f_im, sinc2, target, u_re, u_im, v_re, v_im,
                 ph_re, ph_im, cf0, t0, alpha, moves_per_temp, t_min, seed):
    """Sequential annealing chain; returns best phases and per-temp stats."""
    m_cells, n_cells = idx.shape
    levels = ph_re.shape[0]
    g = f_re.shape[0]
    scratch = np.empty((g, g))
    best_idx = idx.copy()
    cf = cf0
    best_cf = cf0
    np.random.seed(seed)

    n_temps = 1
    if t0 > 0.0:
        t = t0
        while t > t_min:
            t = t * alpha
            n_temps += 1
    trace_best = np.empty(n_temps)
    uphill_prop = np.zeros(n_temps, dtype=np.int64)
    uphill_acc = np.zeros(n_temps, dtype=np.int64)
    max_accepted_uphill = -1.0e300

    t = t0
    for ti in range(n_temps):
        for _ in range(moves_per_temp):
            cell = np.random.randint(0, m_cells * n_cells)
            a = cell // n_cells
            b = cell % n_cells
            new_level = np.random.randint(0, levels)
            old_level = idx[a, b]
            dh_re = ph_re[new_level] - ph_re[old_level]
            dh_im = ph_im[new_level] - ph_im[old_level]
            if dh_re == 0.0 and dh_im == 0.0:
                continue    # identical phase: CF unchanged, accept trivially
            cf_new, _tot = _move_cost(f_re, f_im, sinc2, target,
                                      u_re[a], u_im[a], v_re[b], v_im[b],
                                      dh_re, dh_im, scratch)
            dcf = cf_new - cf
            accept = dcf <= 0.0
            if not accept:
                uphill_prop[ti] += 1
                if t > 0.0:
                    accept = np.random.random() < math.exp(-dcf / t)
            if accept:
                if dcf > 0.0:
                    uphill_acc[ti] += 1
                    if dcf > max_accepted_uphill:
                        max_accepted_uphill = dcf
                _apply_move(f_re, f_im, u_re[a], u_im[a], v_re[b], v_im[b],
                            dh_re, dh_im)
                idx[a, b] = new_level
                cf = cf_new
                if cf < best_cf:
                    best_cf = cf
                    best_idx[:, :] = idx
        trace_best[ti] = best_cf
        t = t * alpha
    return best_idx, best_cf, trace_best, uphill_prop, uphill_acc, \
        max_accepted_uphill


@dataclass
class AnnealResult:
    hologram: Hologram
    cf_trace: np.ndarray         # cf0 followed by best CF after each temperature
    best_cf: float
    uphill_proposed: np.ndarray
    uphill_accepted: np.ndarray
    max_accepted_uphill: float
    schedule: AnnealSchedule = field(repr=False, default=None)


def _mode_tables(m, n, grid):
    coords = (np.arange(grid) - grid // 2) / grid
    ks = np.arange(m) - m // 2
    ls = np.arange(n) - n // 2
    u = np.exp(2j * np.pi * np.outer(ks, coords))
    v = np.exp(2j * np.pi * np.outer(ls, coords))
    return np.ascontiguousarray(u), np.ascontiguousarray(v)


def _field_from_levels(idx, phase_tab, u_tab, v_tab):
    tr = phase_tab[idx]
    return np.ascontiguousarray(u_tab.T @ tr @ v_tab)


def optimize(target: TargetPattern, schedule: Optional[AnnealSchedule] = None,
             m: int = DEFAULT_CELLS, n: Optional[int] = None,
             levels: int = DEFAULT_PHASE_LEVELS,
             r: float = 1.0, s: float = 1.0) -> AnnealResult:
    """Anneal a phase-only hologram toward the target far-field energy."""
    if n is None:
        n = m
    if schedule is None:
        schedule = AnnealSchedule()
    grid = target.energy.shape[0]
    rng = np.random.default_rng(schedule.seed)
    idx = rng.integers(0, levels, size=(m, n)).astype(np.int64)
    phase_tab = np.exp(2j * np.pi * np.arange(levels) / levels)
    u_tab, v_tab = _mode_tables(m, n, grid)
    sinc2 = np.ascontiguousarray(_sinc_envelope(grid, r, s) ** 2)
    f_grid = _field_from_levels(idx, phase_tab, u_tab, v_tab)
    target_e = np.ascontiguousarray(target.energy)

    e = sinc2 * np.abs(f_grid) ** 2
    tot = e.sum()
    cf0 = float(np.sqrt(((target_e - e / tot) ** 2).sum()))

    moves = schedule.moves_per_temp
    if moves is None:
        moves = DEFAULT_MOVES_PER_TEMP_FACTOR * m * n

    parts = _real_parts(f_grid, u_tab, v_tab, phase_tab)

    t0 = schedule.t0
    if t0 is None:
        t0 = _calibrate_t0(idx, parts, sinc2, target_e, cf0, rng)
    t_min = schedule.t_min_ratio * t0 if t0 > 0 else 0.0

    f_re, f_im, u_re, u_im, v_re, v_im, ph_re, ph_im = parts
    best_idx, best_cf, trace, up_prop, up_acc, max_up = _anneal_loop(
        idx.copy(), f_re.copy(), f_im.copy(), sinc2, target_e,
        u_re, u_im, v_re, v_im, ph_re, ph_im,
        cf0, float(t0), schedule.alpha, int(moves), float(t_min),
        int(schedule.seed) & 0x7FFFFFFF)

    holo = Hologram(phase=2.0 * np.pi * best_idx / levels, r=r, s=s)
    return AnnealResult(
        hologram=holo,
        cf_trace=np.concatenate([[cf0], trace]),
        best_cf=float(best_cf),
        uphill_proposed=up_prop,
        uphill_accepted=up_acc,
        max_accepted_uphill=float(max_up),
        schedule=schedule,
    )


def _real_parts(f_grid, u_tab, v_tab, phase_tab):
    def split(z):
        return (np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag))
    return (*split(f_grid), *split(u_tab), *split(v_tab), *split(phase_tab))


def _calibrate_t0(idx, parts, sinc2, target_e, cf0, rng,
                  samples: int = 100) -> float:
    """Median uphill step sized so initial uphill acceptance is ~50%."""
    f_re, f_im, u_re, u_im, v_re, v_im, ph_re, ph_im = parts
    g = f_re.shape[0]
    scratch = np.empty((g, g))
    m, n = idx.shape
    levels = ph_re.shape[0]
    ups = []
    for _ in range(samples):
        a = int(rng.integers(0, m))
        b = int(rng.integers(0, n))
        lv = int(rng.integers(0, levels))
        dh_re = ph_re[lv] - ph_re[idx[a, b]]
        dh_im = ph_im[lv] - ph_im[idx[a, b]]
        if dh_re == 0.0 and dh_im == 0.0:
            continue
        cf_new, _ = _move_cost(f_re, f_im, sinc2, target_e,
                               u_re[a], u_im[a], v_re[b], v_im[b],
                               dh_re, dh_im, scratch)
        if cf_new > cf0:
            ups.append(cf_new - cf0)
    if not ups:
        return 0.0
    return float(np.median(ups) / math.log(2.0))


def greedy_baseline(target: TargetPattern, iterations: int = 30000,
                    m: int = DEFAULT_CELLS, n: Optional[int] = None,
                    seed: int = 0, levels: int = DEFAULT_PHASE_LEVELS,
                    ) -> AnnealResult:
    """Pure descent oracle: T = 0, fixed iteration budget."""
    schedule = AnnealSchedule(t0=0.0, alpha=0.5, moves_per_temp=iterations,
                              seed=seed)
    return optimize(target, schedule, m=m, n=n, levels=levels)


def beam_intensity_map(h: Hologram, target: Optional[TargetPattern] = None,
                       grid: int = DEFAULT_GRID,
                       cell_size: float = 2.0) -> BeamMap:
    """Window-restricted far-field energy, renormalized over the floor cell.

    The in-window fraction of the total reconstruction energy is reported as
    the map's efficiency; callers multiply it into the designed power
    fraction.
    """
    if target is None:
        target = cell_target(grid)
    pattern = far_field(h, target.energy.shape[0])
    e = pattern.intensity
    total = e.sum()
    win = target.window
    in_win = e[win].sum()
    if in_win <= 0:
        raise ValueError("hologram puts no energy inside the window")
    wsize = int(round(math.sqrt(win.sum())))
    block = e[win].reshape(wsize, wsize)
    return BeamMap(values=block / in_win, cell_size=cell_size,
                   efficiency=float(in_win / total))
