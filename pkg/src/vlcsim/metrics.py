"""Channel figures of merit computed from an impulse response.

Mean delay and delay spread weight each arrival by the *square* of its
power.  The 3 dB bandwidth uses the optical-power convention: the first
frequency where |H(f)| drops 3 dB below |H(0)|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import ImpulseResponse, received_power

OOK_BANDWIDTH_PER_BIT = 0.7   # required channel bandwidth = 0.7 x bit rate

_THRESHOLD_DB = -3.0
_MIN_FREQ_RESOLUTION_HZ = 1e6
_PAD_FACTOR = 16


class BandwidthResult(NamedTuple):
    hertz: float
    saturated: bool   # True when no -3 dB crossing exists below Nyquist

    def __float__(self):
        return self.hertz


@dataclass
class ChannelMetrics:
    mean_delay_s: float
    delay_spread_s: float
    bandwidth_3db_hz: float
    bandwidth_saturated: bool
    path_loss_db: float
    received_power_w: float
    data_rate_bps: float


def _weights(ir: ImpulseResponse):
    p2 = ir.bins ** 2
    total = p2.sum()
    if total <= 0.0:
        raise ValueError("impulse response carries no power")
    return p2, total


def mean_delay(ir: ImpulseResponse) -> float:
    """Power-squared-weighted centroid of arrival times."""
    p2, total = _weights(ir)
    return float((ir.times * p2).sum() / total)


def delay_spread(ir: ImpulseResponse) -> float:
    """Power-squared-weighted RMS width of the impulse response."""
    p2, total = _weights(ir)
    mu = (ir.times * p2).sum() / total
    return float(np.sqrt(((ir.times - mu) ** 2 * p2).sum() / total))


def bandwidth_3db(ir: ImpulseResponse) -> BandwidthResult:
    """First frequency where |H(f)| falls 3 dB below |H(0)|."""
    h = ir.bins
    if h.sum() <= 0.0:
        raise ValueError("impulse response carries no power")
    nyquist = 0.5 / ir.dt
    n = len(h)
    n_fft = 1 << max(
        int(math.ceil(math.log2(max(_PAD_FACTOR * n, 2)))),
        int(math.ceil(math.log2(1.0 / (ir.dt * _MIN_FREQ_RESOLUTION_HZ)))),
    )
    mag = np.abs(np.fft.rfft(h, n=n_fft))
    # optical-power convention: h is optical power, so |H| is the optical
    # transfer and its dB value is 10*log10
    mag_db = 10.0 * np.log10(np.maximum(mag / mag[0], 1e-300))
    below = np.flatnonzero(mag_db <= _THRESHOLD_DB)
    if len(below) == 0:
        return BandwidthResult(nyquist, True)
    i = int(below[0])
    freqs = np.fft.rfftfreq(n_fft, d=ir.dt)
    if i == 0:
        return BandwidthResult(float(freqs[0]), False)
    # linear interpolation in log magnitude between the straddling samples
    f = freqs[i - 1] + (freqs[i] - freqs[i - 1]) * (
        (_THRESHOLD_DB - mag_db[i - 1]) / (mag_db[i] - mag_db[i - 1]))
    return BandwidthResult(float(f), False)


def power_gain_db(p_with: float, p_without: float) -> float:
    if p_with <= 0.0 or p_without <= 0.0:
        raise ValueError("powers must be positive")
    return 10.0 * math.log10(p_with / p_without)


def ook_data_rate(bw_hz: float) -> float:
    """Bit rate supportable by OOK within the given channel bandwidth."""
    return bw_hz / OOK_BANDWIDTH_PER_BIT


def path_loss_db(ir: ImpulseResponse, transmitted_power_w: float) -> float:
    if transmitted_power_w <= 0.0:
        raise ValueError("transmitted power must be positive")
    rx = received_power(ir)
    if rx <= 0.0:
        raise ValueError("received power must be positive")
    return -10.0 * math.log10(rx / transmitted_power_w)


def compute_metrics(ir: ImpulseResponse,
                    transmitted_power_w: float) -> ChannelMetrics:
    bw = bandwidth_3db(ir)
    return ChannelMetrics(
        mean_delay_s=mean_delay(ir),
        delay_spread_s=delay_spread(ir),
        bandwidth_3db_hz=bw.hertz,
        bandwidth_saturated=bw.saturated,
        path_loss_db=path_loss_db(ir, transmitted_power_w),
        received_power_w=received_power(ir),
        data_rate_bps=ook_data_rate(bw.hertz),
    )
