"""
Event-driven Monte Carlo simulation of stochastic memristor circuits.

Between source edges every device switches as a Poisson process with a
constant rate, so waiting times are sampled exactly: each device draws
``-ln(u) / rate`` and the earliest one flips, unless the next half-period
edge comes first, in which case the clock jumps to the edge, the source
toggles and all candidates are drawn again. No time discretisation enters
the dynamics; ``record_dt`` only sets the grid of the optional recorded
series.

Random streams
--------------
Each trial ``k`` gets its own ``numpy.random.Generator(PCG64)`` seeded by
``SeedSequence(seed, spawn_key=(k,))``. Trials can therefore run in any
order or in parallel and still merge to identical results.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .circuit import Circuit, DriveWaveform, format_configuration, solve_voltages
from .master import Lumping
from .rates import rate_for_transition, transition_rates

_BLOCK = 4096
_TABLE_LIMIT = 12


@dataclass(frozen=True)
class McConfig:
    """Run length and statistics settings for :func:`simulate`.

    ``duration`` and ``burn_in`` apply to every trial. Occupancy after the
    burn-in is split into ``batches`` equal windows per trial; standard
    errors are computed from the spread of the pooled batch means.
    """

    duration: float
    burn_in: float = 0.0
    record_dt: float = 0.1
    seed: int = 0
    trials: int = 1
    batches: int = 20
    record: bool = False

    def __post_init__(self):
        if not self.duration > self.burn_in >= 0:
            raise ValueError("need duration > burn_in >= 0")
        if not self.record_dt > 0:
            raise ValueError("record_dt must be positive")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.batches < 1:
            raise ValueError("batches must be at least 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class McEstimate:
    """Time-averaged occupancy over the post-burn-in window of all trials."""

    occupancy: np.ndarray
    stderr: np.ndarray
    labels: Tuple[str, ...]
    events: int
    total_time: float
    class_occupancy: Optional[np.ndarray] = None
    class_stderr: Optional[np.ndarray] = None
    class_labels: Tuple[str, ...] = ()
    frozen: bool = False
    series: Optional[Tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False)

    def occupancy_csv(self) -> str:
        """``theta,occupancy,stderr`` rows for every configuration."""
        return _table_csv("theta", self.labels, self.occupancy, self.stderr)

    def class_csv(self) -> str:
        if self.class_occupancy is None:
            raise ValueError("estimate has no lumped classes")
        return _table_csv("class", self.class_labels, self.class_occupancy, self.class_stderr)

    def series_csv(self, lumping: Optional[Lumping] = None) -> str:
        """Recorded state on the ``record_dt`` grid as ``t,theta[,class]`` rows."""
        if self.series is None:
            raise ValueError("no series recorded; set McConfig(record=True)")
        times, states = self.series
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "theta"] + (["class"] if lumping is not None else []))
        for t, th in zip(times, states):
            row = [repr(float(t)), self.labels[th]]
            if lumping is not None:
                row.append(lumping.labels[lumping.partition[th]])
            w.writerow(row)
        return buf.getvalue()


def _table_csv(key, labels, occ, err) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([key, "occupancy", "stderr"])
    for label, o, e in zip(labels, occ, err):
        w.writerow([label, repr(float(o)), repr(float(e))])
    return buf.getvalue()


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent PCG64 stream for ``(seed, trial)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(trial),))))


class _Uniforms:
    """Block-buffered uniforms on (0, 1]; blocks grow so short trials stay cheap."""

    __slots__ = ("rng", "buf", "i", "block")

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.buf: List[float] = []
        self.i = 0
        self.block = 32

    def take(self, k: int) -> List[float]:
        if self.i + k > len(self.buf):
            # leftover values are dropped; the stream stays a pure function of the seed
            self.buf = (1.0 - self.rng.random(max(self.block, k))).tolist()
            self.block = min(2 * self.block, _BLOCK)
            self.i = 0
        out = self.buf[self.i:self.i + k]
        self.i += k
        return out


class _RateTable:
    """Per-device exit rates keyed by (source level, configuration)."""

    def __init__(self, circuit: Circuit, params=None):
        self.circuit = circuit
        self.params = circuit.params if params is None else params
        self.n = circuit.n_memristors
        self._full = {}
        self._lazy = {}

    def rates(self, level: float, theta: int) -> List[float]:
        if self.n <= _TABLE_LIMIT:
            tab = self._full.get(level)
            if tab is None:
                tab = transition_rates(self.circuit, level, self.params).tolist()
                self._full[level] = tab
            return tab[theta]
        key = (level, theta)
        r = self._lazy.get(key)
        if r is None:
            v = solve_voltages(self.circuit, theta, level)
            r = [rate_for_transition(theta, m, v[m], self.params[m]) for m in range(self.n)]
            self._lazy[key] = r
        return r


def _edges(waveform: DriveWaveform):
    """Yield ``(time, level_after)`` for every edge after t = 0, from the integer period index."""
    if waveform.is_constant:
        while True:
            yield math.inf, waveform.v_plus
    period = waveform.period
    k = int(math.floor(waveform.phase / period)) - 1
    while True:
        base = k * period - waveform.phase
        for e, lvl in ((base + waveform.tau_plus, waveform.v_minus), (base + period, waveform.v_plus)):
            if e > 0.0:
                yield e, lvl
        k += 1


def _next_event(rates: Sequence[float], u: Sequence[float]) -> Tuple[float, int]:
    """Earliest candidate time and its device (ties -> lowest index)."""
    best, who = math.inf, -1
    for m, r in enumerate(rates):
        if r > 0.0:
            t = -math.log(u[m]) / r
            if t < best:
                best, who = t, m
    return best, who


def _run_trial(circuit: Circuit, waveform: DriveWaveform, theta0: int, cfg: McConfig,
               table: _RateTable, trial: int):
    rng = _Uniforms(trial_rng(cfg.seed, trial))
    n, n_states = circuit.n_memristors, circuit.n_states
    nb = cfg.batches
    window = (cfg.duration - cfg.burn_in) / nb
    bounds = [cfg.burn_in + k * window for k in range(nb)] + [cfg.duration]
    occ = [[0.0] * n_states for _ in range(nb)]

    rec_t: List[float] = []
    rec_s: List[int] = []
    next_rec = 0
    rec_dt = cfg.record_dt

    t = 0.0
    theta = theta0
    level = waveform.value(0.0)
    edges = _edges(waveform)
    edge, next_level = next(edges)
    events = 0
    b = 0  # current batch
    duration = cfg.duration

    while t < duration:
        rates = table.rates(level, theta)
        tau, m = _next_event(rates, rng.take(n))
        boundary = edge if edge < duration else duration
        switched = t + tau < boundary
        t_new = t + tau if switched else boundary

        # accumulate occupancy of theta over [t, t_new)
        if t_new > cfg.burn_in:
            lo = t if t > cfg.burn_in else cfg.burn_in
            while lo < t_new:
                hi = bounds[b + 1]
                if t_new <= hi or b == nb - 1:
                    occ[b][theta] += t_new - lo
                    break
                occ[b][theta] += hi - lo
                lo = hi
                b += 1
        if cfg.record:
            while next_rec * rec_dt < t_new and next_rec * rec_dt <= duration:
                rec_t.append(next_rec * rec_dt)
                rec_s.append(theta)
                next_rec += 1

        t = t_new
        if switched:
            theta ^= 1 << m
            events += 1
        elif t >= edge:
            level = next_level
            edge, next_level = next(edges)

    if cfg.record and next_rec * rec_dt <= duration + 1e-9 * duration:
        rec_t.append(next_rec * rec_dt)
        rec_s.append(theta)
    return np.array(occ), events, (np.array(rec_t), np.array(rec_s, dtype=np.int64))


def simulate(circuit: Circuit, cfg: McConfig, theta0: int = 0, waveform: Optional[DriveWaveform] = None,
             lumping: Optional[Lumping] = None, params=None, threads: int = 1) -> McEstimate:
    """Time-averaged configuration occupancy from exact event-driven runs.

    Parameters
    ----------
    circuit, waveform
        Network and drive; ``waveform=None`` uses the circuit's source.
    theta0
        Starting configuration of every trial.
    lumping
        Optional partition for class-level occupancies and errors.
    threads
        Worker count; results do not depend on it.

    Notes
    -----
    If every rate is zero under a constant drive the state never changes;
    the estimate is then the point mass at ``theta0`` with ``frozen=True``.
    """
    waveform = circuit.source.waveform if waveform is None else waveform
    if not 0 <= theta0 < circuit.n_states:
        raise ValueError(f"theta0={theta0} out of range")
    table = _RateTable(circuit, params)
    # warm the table before fanning out so workers only read it
    for level in waveform.levels:
        table.rates(level, theta0)

    def run(k):
        return _run_trial(circuit, waveform, theta0, cfg, table, k)

    if threads > 1 and cfg.trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(cfg.trials)))
    else:
        results = [run(k) for k in range(cfg.trials)]

    batches = np.concatenate([r[0] for r in results])  # (trials * nb, n_states)
    events = sum(r[1] for r in results)
    totals = np.sum(batches, axis=0)
    total_time = float(math.fsum(totals))
    occupancy = totals / total_time
    frac = batches / batches.sum(axis=1, keepdims=True)
    stderr = _batch_stderr(frac)

    labels = tuple(format_configuration(t, circuit.n_memristors) for t in range(circuit.n_states))
    kw = {}
    if lumping is not None:
        a = lumping.matrix()
        kw = dict(class_occupancy=a @ occupancy, class_stderr=_batch_stderr(frac @ a.T),
                  class_labels=lumping.labels)
    frozen = waveform.is_constant and not any(table.rates(waveform.v_plus, theta0))
    series = None
    if cfg.record:
        series = (np.concatenate([r[2][0] + 0.0 for r in results]), np.concatenate([r[2][1] for r in results]))
    return McEstimate(occupancy, stderr, labels, events, total_time, frozen=frozen, series=series, **kw)


def _batch_stderr(frac: np.ndarray) -> np.ndarray:
    nb = frac.shape[0]
    if nb < 2:
        return np.full(frac.shape[1], np.nan)
    return frac.std(axis=0, ddof=1) / math.sqrt(nb)


# --------------------------------------------------------------------------
# first passage

@dataclass(frozen=True)
class FirstPassage:
    """Sample statistics of hitting times; censored trials are excluded from the mean."""

    mean: float
    stderr: float
    trials: int
    censored: int
    times: np.ndarray = field(repr=False)

    @property
    def flagged(self) -> bool:
        return self.censored > 0


def first_passage(circuit: Circuit, theta0: int, target: Union[int, Callable[[int], bool]], trials: int,
                  seed: int = 0, waveform: Optional[DriveWaveform] = None, time_cap: float = math.inf,
                  params=None, threads: int = 1) -> FirstPassage:
    """Mean time for the circuit to first reach ``target`` from ``theta0``.

    ``target`` is a configuration or a predicate on configurations. Each
    trial runs on its own stream and stops at the first hit or at
    ``time_cap``; capped trials are counted as censored.
    """
    waveform = circuit.source.waveform if waveform is None else waveform
    hit = (lambda th: th == target) if isinstance(target, (int, np.integer)) else target
    table = _RateTable(circuit, params)
    n = circuit.n_memristors
    for level in waveform.levels:
        table.rates(level, theta0)

    def one(k):
        rng = _Uniforms(trial_rng(seed, k))
        t, theta = 0.0, theta0
        level = waveform.value(0.0)
        edges = _edges(waveform)
        edge, next_level = next(edges)
        while not hit(theta):
            tau, m = _next_event(table.rates(level, theta), rng.take(n))
            boundary = min(edge, time_cap)
            if t + tau < boundary:
                t += tau
                theta ^= 1 << m
            else:
                t = boundary
                if t >= time_cap:
                    return math.nan
                level = next_level
                edge, next_level = next(edges)
        return t

    if threads > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            times = np.array(list(pool.map(one, range(trials))))
    else:
        times = np.array([one(k) for k in range(trials)])
    ok = times[~np.isnan(times)]
    censored = int(trials - len(ok))
    mean = float(math.fsum(ok) / len(ok)) if len(ok) else math.nan
    se = float(ok.std(ddof=1) / math.sqrt(len(ok))) if len(ok) > 1 else math.nan
    return FirstPassage(mean, se, trials, censored, times)
