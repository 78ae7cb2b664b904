import math

import numpy as np
import pytest

from vlcsim.channel import ImpulseResponse
from vlcsim.metrics import (
    bandwidth_3db, compute_metrics, delay_spread, mean_delay, ook_data_rate,
    path_loss_db, power_gain_db,
)


def ir_from_pairs(pairs, dt=1e-12):
    """Build a binned response placing each (t, P) at its bin center."""
    n = int(max(t for t, _ in pairs) / dt) + 2
    bins = np.zeros(n)
    for t, p in pairs:
        bins[int(round(t / dt - 0.5))] += p
    return ImpulseResponse(dt=dt, bins=bins)


class TestDelayStatistics:
    def test_single_bin_mean(self):
        ir = ir_from_pairs([(5e-9, 1e-6)])
        assert mean_delay(ir) == pytest.approx(5e-9, rel=1e-9)

    def test_single_bin_spread_zero(self):
        ir = ir_from_pairs([(5e-9, 1e-6)])
        assert delay_spread(ir) == pytest.approx(0.0, abs=1e-15)

    def test_two_equal_bins(self):
        ir = ir_from_pairs([(0.5e-12, 1.0), (1.0005e-9, 1.0)])
        assert mean_delay(ir) == pytest.approx(0.5005e-9, rel=1e-9)
        assert delay_spread(ir) == pytest.approx(0.5e-9, rel=1e-9)

    def test_hand_oracle_power_squared_weights(self):
        """P=2 at t=0, P=1 at t=1 ns -> mu = 0.2 ns, D = 0.4 ns."""
        ir = ir_from_pairs([(0.5e-12, 2.0), (1.0005e-9, 1.0)])
        t0 = 0.5e-12
        assert mean_delay(ir) - t0 == pytest.approx(0.2e-9, rel=1e-9)
        assert delay_spread(ir) == pytest.approx(0.4e-9, rel=1e-9)

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(11)
        bins = rng.random(500) * np.exp(-np.arange(500) / 80.0)
        ir = ImpulseResponse(dt=1e-11, bins=bins)
        t, p = ir.times, ir.bins
        # independent two-pass evaluation over raw (t_i, P_i) pairs
        w = p * p
        mu = sum(ti * wi for ti, wi in zip(t, w)) / sum(w)
        var = sum((ti - mu) ** 2 * wi for ti, wi in zip(t, w)) / sum(w)
        assert mean_delay(ir) == pytest.approx(mu, rel=1e-12)
        assert delay_spread(ir) == pytest.approx(math.sqrt(var), rel=1e-12)

    def test_shift_and_scale_invariance(self):
        rng = np.random.default_rng(5)
        bins = rng.random(200)
        a = ImpulseResponse(dt=1e-11, bins=bins)
        b = ImpulseResponse(dt=1e-11, bins=7.5 * bins, t0=3e-9)
        assert delay_spread(a) == pytest.approx(delay_spread(b), rel=1e-12)
        assert mean_delay(b) - mean_delay(a) == pytest.approx(3e-9, rel=1e-9)

    def test_zero_power_raises(self):
        with pytest.raises(ValueError):
            mean_delay(ImpulseResponse(dt=1e-12, bins=np.zeros(4)))


class TestBandwidth:
    def test_dirac_saturates_at_nyquist(self):
        ir = ImpulseResponse(dt=1e-11, bins=np.array([1.0]))
        bw = bandwidth_3db(ir)
        assert bw.saturated
        assert bw.hertz == pytest.approx(0.5 / 1e-11)

    def test_two_path_closed_form(self):
        """h = delta(t) + delta(t - 1 ns): crossing at cos(pi f T) = 10^-0.3."""
        dt = 1e-12
        bins = np.zeros(1001)
        bins[0] = 1.0
        bins[1000] = 1.0
        ir = ImpulseResponse(dt=dt, bins=bins)
        t_sep = 1000 * dt
        expected = math.acos(10.0 ** -0.3) / (math.pi * t_sep)
        assert bandwidth_3db(ir).hertz == pytest.approx(expected, rel=1e-3)

    def test_threshold_is_optical_convention(self):
        """The -3 dB amplitude ratio is 10^-0.3, not 1/sqrt(2)."""
        dt = 1e-12
        bins = np.zeros(1001)
        bins[0] = 1.0
        bins[1000] = 1.0
        bw = bandwidth_3db(ImpulseResponse(dt=dt, bins=bins)).hertz
        electrical = math.acos(1.0 / math.sqrt(2.0)) / (math.pi * 1e-9)
        optical = math.acos(10.0 ** -0.3) / (math.pi * 1e-9)
        assert bw == pytest.approx(optical, rel=1e-3)
        assert abs(bw - electrical) / electrical > 0.2

    def test_wider_response_lower_bandwidth(self):
        narrow = ImpulseResponse(
            dt=1e-11, bins=np.exp(-np.arange(200) / 3.0))
        wide = ImpulseResponse(
            dt=1e-11, bins=np.exp(-np.arange(200) / 30.0))
        assert bandwidth_3db(wide).hertz < bandwidth_3db(narrow).hertz

    def test_zero_power_raises(self):
        with pytest.raises(ValueError):
            bandwidth_3db(ImpulseResponse(dt=1e-12, bins=np.zeros(8)))


class TestScalarMetrics:
    def test_power_gain_equal_is_zero(self):
        assert power_gain_db(1e-6, 1e-6) == 0.0

    def test_power_gain_doubling(self):
        assert power_gain_db(2e-6, 1e-6) == pytest.approx(3.0103, abs=1e-4)

    def test_power_gain_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            power_gain_db(0.0, 1e-6)

    def test_ook_rate(self):
        assert ook_data_rate(0.7e9) == pytest.approx(1.0e9)
        assert ook_data_rate(1.21e9) == pytest.approx(1.7286e9, rel=1e-4)
        assert ook_data_rate(2.2e9) == pytest.approx(3.1429e9, rel=1e-4)

    def test_ook_rate_monotone(self):
        freqs = np.linspace(1e8, 1e10, 25)
        rates = [ook_data_rate(f) for f in freqs]
        assert all(b > a for a, b in zip(rates, rates[1:]))

    def test_path_loss(self):
        ir = ImpulseResponse(dt=1e-12, bins=np.array([1e-3]))
        assert path_loss_db(ir, 1.0) == pytest.approx(30.0, rel=1e-9)
        assert path_loss_db(ir, 1e-3) == pytest.approx(0.0, abs=1e-12)

    def test_path_loss_rejects_nonpositive(self):
        ir = ImpulseResponse(dt=1e-12, bins=np.array([1e-3]))
        with pytest.raises(ValueError):
            path_loss_db(ir, 0.0)

    def test_compute_metrics_fields(self):
        ir = ImpulseResponse(dt=1e-11,
                             bins=np.exp(-np.arange(100) / 10.0) * 1e-7)
        m = compute_metrics(ir, 9.0)
        assert m.received_power_w == pytest.approx(ir.total_power())
        assert m.data_rate_bps == pytest.approx(m.bandwidth_3db_hz / 0.7)
        assert m.delay_spread_s > 0
