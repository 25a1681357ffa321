"""
Acceptance criteria, one test each.

Every test prints (and records for the terminal summary) a single
``PASS``/``FAIL`` line with the measured quantity next to its tolerance.
Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python tests/test_acceptance.py``.
"""

import csv
import math
import time

import mpmath
import numpy as np

from memstoch.attractor import (PulseSpec, averaged_attractor, chain_attractor, chain_coefficients,
                                phase_portrait)
from memstoch.circuit import example_path, load_example
from memstoch.cli import main
from memstoch.master import (Lumping, LumpingError, build_generator, check_lumping, delta, integrate,
                             lumped_generator, mean_switch_time_parallel, mean_switch_time_series,
                             parallel_all_on_prob, series_rates)
from memstoch.montecarlo import first_passage
from memstoch.rates import gamma_01
from memstoch.spice import behavioral_sources, emit, golden_compare, normalize_expression

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

DECK = str(example_path("fig1b_candidate"))
PULSES = PulseSpec(1.0, -1.0, 0.1, 0.1)
SEED = 20240601

# tolerances pinned by the acceptance criteria
ME_MC_SIGMAS = 3.0
ME_MC_REL = 0.022
ME_MC_RUNTIME = 60.0
ATTRACTOR_SUM_TOL = 1e-12
ATTRACTOR_DYN_TOL = 1e-3
ATTRACTOR_RUNTIME = 10.0
PARALLEL_TOL = 1e-8
PARALLEL_TRIALS = 100_000
PARALLEL_RUNTIME = 30.0
ORACLE_TOL = 1e-8
ORACLE_SAMPLES = 100
SUM_TOL = 1e-9
NEG_TOL = -1e-12
COLSUM_TOL = 1e-14
LUMP_TOL = 1e-9

REFERENCE_SOURCES = (
    "3*g01(tau01,V01,V(Vm1,0))*V(P0)-g10(tau10,V10,V(Vm3,0))*V(P1)",
    "2*g01(tau01,V01,V(Vm2,0))*V(P1)-2*g10(tau10,V10,V(Vm5,0))*V(P2)",
    "g01(tau01,V01,V(Vm4,0))*V(P2)-3*g10(tau10,V10,V(Vm6,0))*V(P3)",
)


def report(n, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {title} -- {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def read_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [r[0] for r in rows[1:]], np.array([[float(x) for x in r[1:]] for r in rows[1:]])


def test_criterion_1_me_mc_agreement(tmp_path):
    start = time.perf_counter()
    me_out, mc_out = tmp_path / "me.csv", tmp_path / "mc.csv"
    assert main(["me", DECK, "--p0", "theta:000", "--t-end", "1e4", "--lump", "popcount", "--record-dt", "0.1",
                 "--out", str(me_out)]) == 0
    assert main(["mc", DECK, "--duration", "1e5", "--burn-in", "1e3", "--seed", str(SEED), "--lump", "popcount",
                 "--out", str(mc_out)]) == 0
    elapsed = time.perf_counter() - start

    _, t_col, states = read_table(me_out)
    t = np.array([float(x) for x in t_col])
    # steady state: time average over the last 100 s (500 whole periods, trapezoid on the record grid)
    sel = t >= t[-1] - 100.0 - 1e-9
    w = np.diff(t[sel])
    s = states[sel]
    me = ((s[1:] + s[:-1]) * w[:, None]).sum(axis=0) / (2 * (t[sel][-1] - t[sel][0]))

    _, labels, mc = read_table(str(mc_out) + ".classes.csv")
    occ, se = mc[:, 0], mc[:, 1]
    dev = np.abs(occ - me)
    allowed = np.maximum(ME_MC_SIGMAS * se, ME_MC_REL * me)
    rel = dev / me
    ok = bool(np.all(dev <= allowed)) and elapsed < ME_MC_RUNTIME
    detail = ", ".join(f"{lb}: ME {m:.5f} MC {o:.5f}+-{e:.5f} ({100 * r:.2f}%)"
                       for lb, m, o, e, r in zip(labels, me, occ, se, rel))
    report(1, "ME vs MC steady state", ok,
           f"{detail}; tol max(3 se, 2.2%); runtime {elapsed:.1f}s < {ME_MC_RUNTIME:.0f}s")


def test_criterion_2_attractor():
    start = time.perf_counter()
    circ = load_example("fig1b_candidate")
    chain = chain_attractor(chain_coefficients(circ, PULSES)).p
    full = averaged_attractor(circ, PULSES).p
    sums_err = float(np.max(np.abs(Lumping.popcount(3).matrix() @ full - chain)))
    initial = ([1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.2, 0.8, 0.0, 0.0])
    series = phase_portrait(circ, PULSES, initial, 1000)
    dyn_err = max(float(np.max(np.abs(s[-1] - chain))) for s in series)
    elapsed = time.perf_counter() - start
    ok = sums_err <= ATTRACTOR_SUM_TOL and dyn_err <= ATTRACTOR_DYN_TOL and elapsed < ATTRACTOR_RUNTIME
    report(2, "closed-form attractor", ok,
           f"chain={np.array2string(chain, precision=6)}; |chain - averaged class sums| = {sums_err:.1e} "
           f"(tol 1e-12); max |period-end - chain| after 1000 periods = {dyn_err:.2e} (tol 1e-3); "
           f"runtime {elapsed:.1f}s < {ATTRACTOR_RUNTIME:.0f}s")


def test_criterion_3_parallel_analytics():
    start = time.perf_counter()
    circ = load_example("parallel3")
    gam = gamma_01(0.25, circ.params[0])
    tr = integrate(circ, None, delta(0, 8), 3.0, dt=1e-3, record_dt=0.01)
    curve_err = float(np.max(np.abs(tr.states[:, 7] - parallel_all_on_prob(tr.times, gam, 3))))
    fp = first_passage(circ, 0, 7, trials=PARALLEL_TRIALS, seed=SEED)
    h3 = mean_switch_time_parallel(gam, 3)
    z = abs(fp.mean - h3) / fp.stderr
    elapsed = time.perf_counter() - start
    ok = curve_err <= PARALLEL_TOL and z <= 3 and fp.censored == 0 and elapsed < PARALLEL_RUNTIME
    report(3, "parallel-network analytics", ok,
           f"max |p_111 - (1-e^-gt)^3| = {curve_err:.1e} (tol 1e-8); MC mean {fp.mean:.5f} +- {fp.stderr:.5f} "
           f"vs H3/g = {h3:.5f} ({z:.2f} se, tol 3); runtime {elapsed:.1f}s < {PARALLEL_RUNTIME:.0f}s")


def test_criterion_4_series_vs_parallel():
    par, ser = load_example("parallel3"), load_example("series3")
    gam = gamma_01(0.25, par.params[0])
    t_par = mean_switch_time_parallel(gam, 3)
    t_ser = mean_switch_time_series(series_rates(ser))
    fp_par = first_passage(par, 0, 7, trials=20_000, seed=SEED)
    fp_ser = first_passage(ser, 0, 7, trials=20_000, seed=SEED + 1)
    z_par = abs(fp_par.mean - t_par) / fp_par.stderr
    z_ser = abs(fp_ser.mean - t_ser) / fp_ser.stderr
    gap = (fp_par.mean - fp_ser.mean) / math.hypot(fp_par.stderr, fp_ser.stderr)
    ok = t_ser < t_par and z_par <= 3 and z_ser <= 3 and gap > 3
    report(4, "series switches faster than parallel", ok,
           f"analytic series {t_ser:.5f} s < parallel {t_par:.5f} s; MC series {fp_ser.mean:.5f} ({z_ser:.2f} se), "
           f"MC parallel {fp_par.mean:.5f} ({z_par:.2f} se); MC gap {gap:.1f} se")


def test_criterion_5_small_instance_oracle():
    circ = load_example("series2")
    q = build_generator(circ, circ.source.waveform.v_plus).dense()
    times = np.linspace(0.0, 2.0, ORACLE_SAMPLES + 1)[1:]
    tr = integrate(circ, None, delta(0, 4), 2.0, dt=1e-3, record_dt=0.02)
    mpmath.mp.dps = 40
    qm = mpmath.matrix(q.tolist())
    p0 = mpmath.matrix([1, 0, 0, 0])
    oracle = np.array([[float(x) for x in mpmath.expm(qm * mpmath.mpf(float(t))) * p0] for t in times])
    err = float(np.max(np.abs(tr.states[1:] - oracle)))
    ok = err <= ORACLE_TOL and len(times) == ORACLE_SAMPLES
    report(5, "N=2 matrix-exponential oracle", ok,
           f"max |RK4 - expm| over {len(times)} samples = {err:.1e} (tol 1e-8)")


def test_criterion_6_conservation():
    lump = Lumping.popcount(3)
    fig = load_example("fig1b_candidate")
    runs = [
        ("fig1b full", integrate(fig, None, delta(0, 8), 1e3, record_dt=0.1, check=False)),
        ("fig1b lumped", integrate(fig, None, delta(0, 4), 1e4, record_dt=0.1, lumping=lump, check=False)),
        ("fig1b from 111", integrate(fig, None, delta(7, 8), 1e3, record_dt=0.1, check=False)),
        ("parallel3", integrate(load_example("parallel3"), None, delta(0, 8), 3.0, dt=1e-3, check=False)),
        ("series3", integrate(load_example("series3"), None, delta(0, 8), 3.0, dt=1e-3, check=False)),
        ("series2", integrate(load_example("series2"), None, delta(0, 4), 2.0, dt=1e-3, check=False)),
        ("single", integrate(load_example("single"), None, delta(0, 2), 2.0, dt=1e-3, check=False)),
    ]
    gens = []
    for name in ("fig1b_candidate", "fig1b_asymmetric", "parallel3", "series3", "series2", "single"):
        c = load_example(name)
        for v in (1.0, -1.0, c.source.waveform.v_plus):
            gens.append(build_generator(c, v))
    gens += [lumped_generator(fig, v, lump) for v in (1.0, -1.0)]
    violations = 0
    worst_sum = max(tr.max_sum_error() for _, tr in runs)
    worst_min = min(tr.min_probability() for _, tr in runs)
    worst_col = max(g.column_sum_error() for g in gens)
    violations += sum(tr.max_sum_error() > SUM_TOL for _, tr in runs)
    violations += sum(tr.min_probability() < NEG_TOL for _, tr in runs)
    violations += sum(g.column_sum_error() > COLSUM_TOL for g in gens)
    report(6, "conservation suite", violations == 0,
           f"{len(runs)} trajectories, {len(gens)} generators: max |sum p - 1| = {worst_sum:.1e} (tol 1e-9), "
           f"min p = {worst_min:.1e} (tol -1e-12), max rel column sum = {worst_col:.1e} (tol 1e-14); "
           f"{violations} violations")


def test_criterion_7_lumping_equivalence():
    lump = Lumping.popcount(3)
    fig = load_example("fig1b_candidate")
    full = integrate(fig, None, delta(0, 8), 1e3, record_dt=0.1)
    lumped = integrate(fig, None, delta(0, 4), 1e3, record_dt=0.1, lumping=lump)
    err = float(np.max(np.abs(full.lumped(lump).states - lumped.states)))
    try:
        check_lumping(build_generator(load_example("fig1b_asymmetric"), 1.0), lump)
        rejected, why = False, "accepted"
    except LumpingError as exc:
        rejected, why = True, f"rejected (witness {exc.witness})"
    report(7, "lumping equivalence", err <= LUMP_TOL and rejected,
           f"max |class sums(8-state) - 4-state| = {err:.1e} (tol 1e-9); 900-ohm deck {why}")


def test_criterion_8_spice_golden():
    fig = load_example("fig1b_candidate")
    deck = emit(fig)
    golden = example_path("fig1b_candidate").with_suffix(".cir").read_text(encoding="utf-8")
    flat = normalize_expression(deck.text)
    found = [normalize_expression(e) in flat for e in REFERENCE_SOURCES]
    n_sources = len(behavioral_sources(deck.text))
    cmp = golden_compare(deck, golden)
    ok = all(found) and cmp.match and n_sources == 3
    report(8, "SPICE deck golden test", ok,
           f"reference B-source expressions found {sum(found)}/3; golden: {cmp}; behavioral sources {n_sources} (= K-1 = 3)")


def test_criterion_9_determinism(tmp_path):
    outs = []
    for threads in ("1", "2", "4"):
        out = tmp_path / f"mc{threads}.csv"
        assert main(["mc", DECK, "--duration", "2000", "--burn-in", "100", "--trials", "8", "--seed", str(SEED),
                     "--threads", threads, "--out", str(out)]) == 0
        outs.append((out.read_bytes(), (tmp_path / f"mc{threads}.csv.classes.csv").read_bytes()))
    ok = all(o == outs[0] for o in outs[1:])
    report(9, "MC determinism across --threads", ok,
           f"occupancy and class CSVs byte-identical for --threads 1/2/4: {ok}")


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
