import json

import numpy as np
import pytest

from vlcsim.cgh import (
    AnnealSchedule, Hologram, TargetPattern, beam_intensity_map, cell_target,
    cost, far_field, far_field_direct, greedy_baseline, optimize,
)


class TestHologram:
    def test_phase_wrapped(self):
        h = Hologram(phase=np.array([[-1.0, 7.0]]))
        assert (h.phase >= 0.0).all() and (h.phase < 2 * np.pi).all()

    def test_unit_transmittance(self):
        h = Hologram(phase=np.random.default_rng(0).uniform(0, 2 * np.pi,
                                                            (8, 8)))
        assert np.allclose(np.abs(h.transmittance), 1.0)

    def test_save_load_round_trip(self, tmp_path):
        h = Hologram(phase=np.random.default_rng(1).uniform(0, 2 * np.pi,
                                                            (16, 16)))
        path = tmp_path / "holo.csv"
        h.save(str(path), seed=3, cf=0.125)
        clone = Hologram.load(str(path))
        assert np.allclose(clone.phase, h.phase, atol=1e-11)
        meta = json.loads((tmp_path / "holo.meta.json").read_text())
        assert meta["M"] == 16 and meta["seed"] == 3


class TestFarField:
    def test_zero_phase_concentrates_at_dc(self):
        # critically sampled (no zero-padding): all energy in the DC sample
        h = Hologram(phase=np.zeros((8, 8)))
        e = far_field(h, grid=8).intensity
        dc = np.unravel_index(np.argmax(e), e.shape)
        assert dc == (4, 4)
        assert e[dc] / e.sum() > 0.999

    def test_parseval(self):
        rng = np.random.default_rng(7)
        h = Hologram(phase=rng.uniform(0, 2 * np.pi, (16, 16)))
        patt = far_field(h, grid=128)
        assert patt.parseval_ratio() == pytest.approx(1.0, rel=1e-9)

    def test_matches_brute_force_dft(self):
        rng = np.random.default_rng(3)
        h = Hologram(phase=rng.uniform(0, 2 * np.pi, (8, 8)))
        fast = far_field(h, grid=32).amplitude
        slow = far_field_direct(h, grid=32)
        assert np.max(np.abs(fast - slow)) / np.max(np.abs(slow)) < 1e-10

    def test_linear_ramp_shifts_peak(self):
        m = 8
        delta = 2
        k = np.arange(m) - m // 2
        phase = np.tile(2 * np.pi * k[:, None] * delta / m, (1, m))
        h = Hologram(phase=phase)
        grid = 32
        e = far_field(h, grid=grid).intensity
        peak = np.unravel_index(np.argmax(e), e.shape)
        # ramp over M cells shifts the DC peak by delta * grid / M samples
        # (negative direction under this transform's sign convention)
        assert peak == (grid // 2 - delta * grid // m, grid // 2)


class TestCost:
    def test_perfect_match_zero(self):
        target = cell_target(grid=16, window=8)
        # a pattern whose normalized energy equals the target exactly
        fake = far_field(Hologram(phase=np.zeros((4, 4))), grid=16)
        fake.amplitude = np.sqrt(target.energy)
        assert cost(fake, target) == pytest.approx(0.0, abs=1e-12)

    def test_zero_pattern_closed_form(self):
        target = cell_target(grid=16, window=4)
        fake = far_field(Hologram(phase=np.zeros((4, 4))), grid=16)
        fake.amplitude = np.zeros_like(fake.amplitude)
        p = 16
        assert cost(fake, target) == pytest.approx(1.0 / np.sqrt(p), rel=1e-12)

    def test_random_case_matches_double_loop(self):
        rng = np.random.default_rng(9)
        target = cell_target(grid=4, window=2)
        patt = far_field(Hologram(phase=rng.uniform(0, 2 * np.pi, (4, 4))),
                         grid=4)
        e = patt.intensity / patt.intensity.sum()
        acc = 0.0
        for i in range(4):
            for j in range(4):
                acc += (target.energy[i, j] - e[i, j]) ** 2
        assert cost(patt, target) == pytest.approx(np.sqrt(acc), rel=1e-12)

    def test_grid_mismatch(self):
        patt = far_field(Hologram(phase=np.zeros((4, 4))), grid=16)
        with pytest.raises(ValueError):
            cost(patt, cell_target(grid=32))


class TestTarget:
    def test_normalized(self):
        t = cell_target(grid=64)
        assert t.energy.sum() == pytest.approx(1.0, rel=1e-12)

    def test_window_centered(self):
        t = cell_target(grid=64, window=32)
        assert t.window[32, 32] and not t.window[8, 8]
        assert t.window.sum() == 32 * 32

    def test_empty_target_rejected(self):
        with pytest.raises(ValueError):
            TargetPattern(energy=np.zeros((4, 4)),
                          window=np.zeros((4, 4), dtype=bool))


class TestAnnealing:
    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            AnnealSchedule(alpha=1.5)
        with pytest.raises(ValueError):
            AnnealSchedule(t_min_ratio=0.0)

    def test_fixed_seed_determinism(self):
        target = cell_target(grid=32, window=16)
        sched = AnnealSchedule(seed=5, moves_per_temp=100)
        a = optimize(target, sched, m=8, n=8, levels=16)
        b = optimize(target, sched, m=8, n=8, levels=16)
        assert np.array_equal(a.hologram.phase, b.hologram.phase)
        assert a.best_cf == b.best_cf

    def test_final_cost_matches_recomputation(self):
        target = cell_target(grid=32, window=16)
        res = optimize(target, AnnealSchedule(seed=3, moves_per_temp=200),
                       m=8, n=8, levels=16)
        patt = far_field(res.hologram, grid=32)
        assert res.best_cf == pytest.approx(cost(patt, target), rel=1e-10)

    def test_best_trace_non_increasing(self):
        target = cell_target(grid=32, window=16)
        res = optimize(target, AnnealSchedule(seed=1, moves_per_temp=150),
                       m=8, n=8, levels=16)
        assert (np.diff(res.cf_trace) <= 1e-15).all()

    def test_greedy_never_accepts_uphill(self):
        target = cell_target(grid=32, window=16)
        res = greedy_baseline(target, iterations=2000, m=8, seed=2, levels=16)
        assert res.max_accepted_uphill <= 0.0
        assert (np.diff(res.cf_trace) <= 1e-15).all()

    def test_uphill_acceptance_decays_with_temperature(self):
        target = cell_target(grid=32, window=16)
        res = optimize(target, AnnealSchedule(seed=8, moves_per_temp=400),
                       m=8, n=8, levels=16)
        prop, acc = res.uphill_proposed, res.uphill_accepted
        live = prop > 0
        rates = acc[live] / prop[live]
        k = len(rates) // 3
        assert k > 0
        assert rates[:k].mean() > rates[-k:].mean()

    def test_anneal_beats_or_matches_greedy_small(self):
        target = cell_target(grid=32, window=16)
        res = optimize(target, AnnealSchedule(seed=0), m=8, n=8, levels=64)
        ref = greedy_baseline(target, iterations=4000, m=8, seed=0, levels=64)
        assert res.best_cf <= 1.1 * ref.best_cf

    def test_phase_only_after_optimization(self):
        target = cell_target(grid=32, window=16)
        res = optimize(target, AnnealSchedule(seed=4, moves_per_temp=100),
                       m=8, n=8, levels=16)
        assert np.allclose(np.abs(res.hologram.transmittance), 1.0)


class TestBeamIntensityMap:
    def test_sums_to_one(self):
        rng = np.random.default_rng(2)
        h = Hologram(phase=rng.uniform(0, 2 * np.pi, (16, 16)))
        bm = beam_intensity_map(h, cell_target(grid=64, window=32))
        assert bm.values.sum() == pytest.approx(1.0, rel=1e-9)

    def test_efficiency_in_unit_interval(self):
        rng = np.random.default_rng(6)
        h = Hologram(phase=rng.uniform(0, 2 * np.pi, (16, 16)))
        bm = beam_intensity_map(h, cell_target(grid=64, window=32))
        assert 0.0 < bm.efficiency <= 1.0

    def test_window_shape(self):
        h = Hologram(phase=np.zeros((16, 16)))
        bm = beam_intensity_map(h, cell_target(grid=64, window=32))
        assert bm.values.shape == (32, 32)
