"""Select-the-best-light-source controller.

Luminaires are probed one at a time (no mutual interference), the receiver
reports the SNR of each probe over an ideal feedback channel, and the
controller picks the argmax.  Selection never consumes the receiver's
coordinates, only the probe reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .channel import ImpulseResponse, received_power
from .scene import Receiver, Scene


@dataclass
class NoiseModel:
    """Single aggregate noise variance, identical across probes by default."""

    responsivity: float = 0.4    # A/W
    sigma2: float = 1e-15        # A^2

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("noise variance must be positive")


DEFAULT_NOISE = NoiseModel()


def snr(ir: ImpulseResponse, noise: NoiseModel = DEFAULT_NOISE) -> float:
    """Electrical SNR of the detected photocurrent: (R * Pr)^2 / sigma^2."""
    current = noise.responsivity * received_power(ir)
    return current * current / noise.sigma2


@dataclass(frozen=True)
class ProbeReport:
    lum_id: int
    snr: float
    received_power_w: float

    def __post_init__(self):
        if self.snr < 0:
            raise ValueError("snr must be >= 0")


@dataclass
class SelectionState:
    """idle -> probing(current id) -> selected(id)."""

    phase: str = "idle"
    current_id: Optional[int] = None
    selected_id: Optional[int] = None
    reports: list[ProbeReport] = field(default_factory=list)


def probe_cycle(scene: Scene, receiver: Receiver,
                evaluator: Callable[..., ImpulseResponse],
                noise: NoiseModel = DEFAULT_NOISE,
                state: Optional[SelectionState] = None) -> list[ProbeReport]:
    """Probe every luminaire alone, in ascending-id order.

    `evaluator(scene, luminaire, receiver)` produces the single-source
    impulse response used for the SNR measurement.
    """
    ids = [lum.lum_id for lum in scene.luminaires]
    if len(set(ids)) != len(ids):
        raise ValueError("luminaire ids are not distinct")
    reports = []
    for lum in sorted(scene.luminaires, key=lambda l: l.lum_id):
        if state is not None:
            state.phase = "probing"
            state.current_id = lum.lum_id
        ir = evaluator(scene, lum, receiver)
        reports.append(ProbeReport(
            lum_id=lum.lum_id,
            snr=snr(ir, noise),
            received_power_w=received_power(ir),
        ))
    if state is not None:
        state.phase = "idle"
        state.current_id = None
        state.reports = reports
    return reports


def select_best(reports: list[ProbeReport],
                state: Optional[SelectionState] = None) -> int:
    """Argmax by SNR; equal SNRs resolve to the lowest id."""
    if not reports:
        raise ValueError("no probe reports to select from")
    best = min(reports, key=lambda rep: (-rep.snr, rep.lum_id))
    if state is not None:
        state.phase = "selected"
        state.selected_id = best.lum_id
    return best.lum_id
