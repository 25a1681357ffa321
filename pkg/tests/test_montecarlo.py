import math

import numpy as np
import pytest
from scipy import stats

from memstoch.circuit import DriveWaveform
from memstoch.master import Lumping, delta, integrate, mean_switch_time_parallel, series_rates
from memstoch.montecarlo import McConfig, first_passage, simulate, trial_rng
from memstoch.rates import gamma_01


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(duration=10, burn_in=10), dict(duration=10, burn_in=-1),
                                    dict(duration=10, record_dt=0), dict(duration=10, trials=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            McConfig(**kw)


class TestStreams:
    def test_trial_streams_differ(self):
        a = trial_rng(7, 0).random(4)
        b = trial_rng(7, 1).random(4)
        assert not np.array_equal(a, b)

    def test_trial_stream_reproducible(self):
        np.testing.assert_array_equal(trial_rng(7, 3).random(8), trial_rng(7, 3).random(8))


class TestSimulate:
    def test_occupancy_sums_to_one(self, fig1b):
        est = simulate(fig1b, McConfig(500.0, 10.0, seed=1), lumping=Lumping.popcount(3))
        assert math.fsum(est.occupancy) == pytest.approx(1.0, abs=1e-12)
        assert math.fsum(est.class_occupancy) == pytest.approx(1.0, abs=1e-12)
        assert np.all(est.occupancy >= 0)
        assert est.total_time == pytest.approx(490.0)
        assert est.events > 0

    def test_seed_determinism(self, fig1b):
        cfg = McConfig(300.0, 0.0, seed=11, trials=2)
        a = simulate(fig1b, cfg)
        b = simulate(fig1b, cfg)
        np.testing.assert_array_equal(a.occupancy, b.occupancy)
        assert a.events == b.events

    def test_thread_independence(self, fig1b):
        cfg = McConfig(200.0, 0.0, seed=5, trials=4)
        a = simulate(fig1b, cfg, threads=1)
        b = simulate(fig1b, cfg, threads=3)
        np.testing.assert_array_equal(a.occupancy, b.occupancy)
        np.testing.assert_array_equal(a.stderr, b.stderr)

    def test_seeds_differ(self, fig1b):
        a = simulate(fig1b, McConfig(200.0, seed=1))
        b = simulate(fig1b, McConfig(200.0, seed=2))
        assert not np.array_equal(a.occupancy, b.occupancy)

    def test_frozen_state(self, single):
        frozen = single.with_waveform(DriveWaveform.constant(0.0))
        est = simulate(frozen, McConfig(10.0), theta0=1)
        assert est.frozen
        np.testing.assert_array_equal(est.occupancy, [0.0, 1.0])
        assert est.events == 0

    def test_absorbing_parallel(self, parallel3):
        est = simulate(parallel3, McConfig(100.0, 50.0, seed=3))
        assert est.occupancy[7] == 1.0

    def test_matches_master_equation_two_state(self, single):
        # single device alternately switched on and off: a 2-state mixing chain
        wf = DriveWaveform.rectangular(1.0, -1.0, 0.5, 0.5)
        circ = single.with_waveform(wf)
        tr = integrate(circ, None, delta(0, 2), 200.0, dt=0.005, record_dt=0.005)
        me = tr.time_average(199.0)
        est = simulate(circ, McConfig(2e4, 100.0, seed=9))
        err = np.abs(est.occupancy - me)
        assert np.all(err <= 3 * est.stderr + 1e-12), (est.occupancy, me, est.stderr)

    def test_trial_independence(self, fig1b):
        lump = Lumping.popcount(3)
        a = simulate(fig1b, McConfig(2000.0, 200.0, seed=21, trials=2), lumping=lump)
        b = simulate(fig1b, McConfig(2000.0, 200.0, seed=22, trials=2), lumping=lump)
        sigma = np.hypot(a.class_stderr, b.class_stderr)
        assert np.all(np.abs(a.class_occupancy - b.class_occupancy) <= 4 * sigma)

    def test_series_export(self, fig1b):
        lump = Lumping.popcount(3)
        est = simulate(fig1b, McConfig(1.0, 0.0, record_dt=0.1, seed=1, record=True), lumping=lump)
        lines = est.series_csv(lump).splitlines()
        assert lines[0] == "t,theta,class"
        assert len(lines) == 1 + 11
        assert lines[1].startswith("0.0,000,P0")

    def test_csv_headers(self, fig1b):
        est = simulate(fig1b, McConfig(20.0, seed=1), lumping=Lumping.popcount(3))
        assert est.occupancy_csv().splitlines()[0] == "theta,occupancy,stderr"
        assert est.class_csv().splitlines()[0] == "class,occupancy,stderr"
        assert len(est.occupancy_csv().splitlines()) == 9


class TestFirstPassage:
    def test_exponential_single(self, single):
        gam = gamma_01(0.5, single.params[0])
        fp = first_passage(single, 0, 1, trials=10_000, seed=4)
        assert abs(fp.mean - 1 / gam) <= 3 * fp.stderr
        # shape: the switching times follow an exponential law
        ks = stats.kstest(fp.times, "expon", args=(0, 1 / gam))
        assert ks.pvalue > 1e-3

    def test_parallel_harmonic(self, parallel3):
        gam = gamma_01(0.25, parallel3.params[0])
        fp = first_passage(parallel3, 0, 7, trials=20_000, seed=8)
        assert abs(fp.mean - mean_switch_time_parallel(gam, 3)) <= 3 * fp.stderr

    def test_series_two(self, series2):
        g0, g1 = series_rates(series2)
        fp = first_passage(series2, 0, 3, trials=20_000, seed=13)
        assert abs(fp.mean - (1 / (2 * g0) + 1 / g1)) <= 3 * fp.stderr

    def test_series_faster(self, series3, parallel3):
        s = first_passage(series3, 0, 7, trials=5000, seed=1)
        p = first_passage(parallel3, 0, 7, trials=5000, seed=1)
        assert s.mean < p.mean

    def test_predicate_target(self, parallel3):
        fp = first_passage(parallel3, 0, lambda th: bin(th).count("1") >= 1, trials=5000, seed=2)
        gam = gamma_01(0.25, parallel3.params[0])
        assert abs(fp.mean - 1 / (3 * gam)) <= 3 * fp.stderr

    def test_censoring(self, single):
        never = single.with_waveform(DriveWaveform.constant(-1.0))
        fp = first_passage(never, 0, 1, trials=5, time_cap=10.0)
        assert fp.censored == 5 and fp.flagged
        assert math.isnan(fp.mean)

    def test_threads_do_not_change_times(self, parallel3):
        a = first_passage(parallel3, 0, 7, trials=200, seed=3, threads=1)
        b = first_passage(parallel3, 0, 7, trials=200, seed=3, threads=4)
        np.testing.assert_array_equal(a.times, b.times)

    def test_rectangular_drive(self, fig1b):
        # under pulses only the positive half-periods switch devices on
        fp = first_passage(fig1b, 0, lambda th: th != 0, trials=2000, seed=6)
        assert fp.censored == 0 and fp.mean > 0
