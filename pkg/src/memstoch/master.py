"""
Master equation for configuration occupation probabilities.

The probability vector ``p`` over the 2**N configurations obeys
``dp/dt = Q p`` where the generator ``Q`` has ``Q[theta', theta]`` equal to
the rate of the one-device flip ``theta -> theta'`` and a diagonal that makes
every column sum to zero. Under a rectangular drive ``Q`` is piecewise
constant, switching between two matrices at the half-period edges.

Symmetric circuits admit an exact reduction (lumping) in which equivalent
configurations are merged into classes; for three identical, permutation
symmetric devices the classes are the number of devices in the on-state.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from .circuit import (Circuit, DriveWaveform, _broadcast_params, configuration_voltage_table,
                      format_configuration)
from .rates import gamma_01, transition_rates

MAX_DEVICES = 20
DENSE_LIMIT = 512

# tolerances shared with the acceptance suite
SUM_TOL = 1e-9
NEG_TOL = 1e-12
DRIFT_LIMIT = 1e-6
COLSUM_TOL = 1e-14


class MasterEquationError(RuntimeError):
    """Numerical failure while building or integrating a master equation."""


class StepSizeError(MasterEquationError):
    """Probability drifted or went negative; the time step is too large."""


class InfiniteRateError(MasterEquationError):
    """A switching rate overflowed to infinity."""


class LumpingError(ValueError):
    """Partition is not an exact lumping of the generator.

    ``witness`` is ``(theta1, theta2, target_class)``: two members of one
    class whose total rates into ``target_class`` differ.
    """

    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


# --------------------------------------------------------------------------
# value types

@dataclass(frozen=True)
class Generator:
    """Transition-rate matrix of a (possibly lumped) master equation.

    Attributes
    ----------
    matrix : scipy.sparse.csc_matrix
        ``Q`` with ``Q[j, i]`` the rate ``i -> j`` (``i != j``) and
        ``Q[i, i] = -sum_j Q[j, i]``.
    labels : tuple of str
        Name of each state (bit strings for configurations, class names for
        lumped systems).
    v_source : float
        Source voltage the rates were evaluated at.
    voltage_table : ndarray or None
        Configuration-by-memristor voltages used to build the rates. For a
        lumped generator built from representatives, the rows belong to the
        class representatives.
    """

    matrix: sp.csc_matrix
    labels: Tuple[str, ...]
    v_source: float = float("nan")
    voltage_table: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def column_sum_error(self) -> float:
        """Largest |column sum| relative to the column's total outflow."""
        q = self.matrix
        colsum = np.asarray(q.sum(axis=0)).ravel()
        scale = np.asarray(abs(q).sum(axis=0)).ravel() / 2.0
        scale[scale == 0] = 1.0
        return float(np.max(np.abs(colsum) / scale)) if self.dim else 0.0


@dataclass(frozen=True)
class ProbabilityVector:
    p: np.ndarray
    labels: Tuple[str, ...]

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        if len(self.labels) != len(p):
            raise ValueError("labels and probabilities differ in length")

    def validate(self, sum_tol: float = SUM_TOL, neg_tol: float = NEG_TOL) -> "ProbabilityVector":
        check_probabilities(self.p, sum_tol, neg_tol)
        return self

    def __getitem__(self, key):
        if isinstance(key, str):
            return self.p[self.labels.index(key)]
        return self.p[key]

    def __len__(self):
        return len(self.p)


def check_probabilities(p: np.ndarray, sum_tol: float = SUM_TOL, neg_tol: float = NEG_TOL):
    s = float(np.sum(p))
    if not abs(s - 1.0) <= sum_tol:
        raise ValueError(f"probabilities sum to {s!r}, not 1 within {sum_tol}")
    lo, hi = float(np.min(p)), float(np.max(p))
    if lo < -neg_tol or hi > 1.0 + neg_tol:
        raise ValueError(f"probability outside [0, 1]: min {lo!r}, max {hi!r}")


@dataclass(frozen=True)
class Trajectory:
    """Probability vectors sampled at strictly increasing times."""

    times: np.ndarray
    states: np.ndarray
    labels: Tuple[str, ...]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=float)
        if s.shape != (len(t), len(self.labels)):
            raise ValueError(f"states shape {s.shape} does not match {len(t)} times x {len(self.labels)} labels")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("trajectory times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> ProbabilityVector:
        return ProbabilityVector(self.states[-1], self.labels)

    def at(self, i: int) -> ProbabilityVector:
        return ProbabilityVector(self.states[i], self.labels)

    def lumped(self, lumping: "Lumping") -> "Trajectory":
        """Class sums of a full-configuration trajectory."""
        return Trajectory(self.times, self.states @ lumping.matrix().T, lumping.labels)

    def max_sum_error(self) -> float:
        return float(np.max(np.abs(self.states.sum(axis=1) - 1.0)))

    def min_probability(self) -> float:
        return float(self.states.min())

    def time_average(self, t_start: float, t_end: Optional[float] = None) -> np.ndarray:
        """Trapezoidal time average of the samples in ``[t_start, t_end]``."""
        t_end = self.times[-1] if t_end is None else t_end
        sel = (self.times >= t_start - 1e-12) & (self.times <= t_end + 1e-12)
        t, s = self.times[sel], self.states[sel]
        if len(t) < 2:
            raise ValueError("need at least two samples in the averaging window")
        w = np.diff(t)
        return ((s[1:] + s[:-1]) * w[:, None]).sum(axis=0) / (2.0 * (t[-1] - t[0]))

    def to_csv(self, fh=None) -> Optional[str]:
        """Write ``t,<label0>,...`` rows with round-trip float formatting."""
        own = fh is None
        buf = io.StringIO() if own else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *self.labels])
        for t, row in zip(self.times, self.states):
            w.writerow([repr(float(t)), *(repr(float(x)) for x in row)])
        return buf.getvalue() if own else None

    @classmethod
    def from_csv(cls, text: str) -> "Trajectory":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if not header or header[0] != "t":
            raise ValueError("trajectory CSV must start with a 't' column")
        data = np.array([[float(x) for x in r] for r in body]).reshape(len(body), len(header))
        return cls(data[:, 0], data[:, 1:], tuple(header[1:]))


@dataclass(frozen=True)
class Lumping:
    """Partition of the 2**N configurations into classes.

    ``partition[theta]`` is the class index of configuration ``theta``.
    """

    partition: Tuple[int, ...]
    labels: Tuple[str, ...]

    def __post_init__(self):
        part = tuple(int(c) for c in self.partition)
        object.__setattr__(self, "partition", part)
        k = len(self.labels)
        if not part:
            raise ValueError("empty partition")
        if len(part) & (len(part) - 1):
            raise ValueError(f"partition covers {len(part)} states; expected 2**N configurations")
        if min(part) < 0 or max(part) >= k:
            raise ValueError("partition refers to a class without a label")
        missing = sorted(set(range(k)) - set(part))
        if missing:
            raise ValueError(f"classes {missing} are empty")

    @classmethod
    def popcount(cls, n: int) -> "Lumping":
        """Classes by number of devices in the on-state, labelled ``P0..PN``."""
        return cls(tuple(bin(t).count("1") for t in range(1 << n)), tuple(f"P{k}" for k in range(n + 1)))

    @classmethod
    def identity(cls, n: int) -> "Lumping":
        return cls(tuple(range(1 << n)), tuple(format_configuration(t, n) for t in range(1 << n)))

    @classmethod
    def from_classes(cls, classes: Sequence[Sequence[int]], labels: Optional[Sequence[str]] = None) -> "Lumping":
        size = sum(len(c) for c in classes)
        part = [-1] * size
        for k, members in enumerate(classes):
            for th in members:
                if not 0 <= th < size:
                    raise ValueError(f"configuration {th} out of range for {size} states")
                if part[th] != -1:
                    raise ValueError(f"configuration {th} appears in two classes")
                part[th] = k
        if -1 in part:
            raise ValueError("partition is not total")
        labels = tuple(labels) if labels is not None else tuple(f"C{k}" for k in range(len(classes)))
        return cls(tuple(part), labels)

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    @property
    def n_states(self) -> int:
        return len(self.partition)

    @property
    def multiplicity(self) -> Tuple[int, ...]:
        counts = [0] * self.n_classes
        for c in self.partition:
            counts[c] += 1
        return tuple(counts)

    def members(self, k: int) -> List[int]:
        return [t for t, c in enumerate(self.partition) if c == k]

    def representative(self, k: int) -> int:
        """Smallest configuration in class ``k``."""
        return self.partition.index(k)

    def matrix(self) -> np.ndarray:
        """Aggregation matrix ``A`` (classes x states) with ``P = A p``."""
        a = np.zeros((self.n_classes, self.n_states))
        a[list(self.partition), np.arange(self.n_states)] = 1.0
        return a

    def spread(self, class_probs: Sequence[float]) -> np.ndarray:
        """Full vector assigning each class's probability uniformly to its members."""
        class_probs = np.asarray(class_probs, dtype=float)
        mult = np.array(self.multiplicity, dtype=float)
        return class_probs[list(self.partition)] / mult[list(self.partition)]


# --------------------------------------------------------------------------
# generators

def build_generator(circuit: Circuit, v_source: float, params=None) -> Generator:
    """Full 2**N generator at a fixed source voltage.

    ``Q[flip(theta, m), theta]`` is the rate of device ``m`` leaving its
    state in ``theta``; only single-bit flips have nonzero rates.
    """
    n = circuit.n_memristors
    if n > MAX_DEVICES:
        raise ValueError(f"N={n} exceeds the dimension guard of {MAX_DEVICES} devices")
    rates = transition_rates(circuit, v_source, params)
    n_states = 1 << n
    theta = np.repeat(np.arange(n_states), n)
    dev = np.tile(np.arange(n), n_states)
    r = rates.ravel()
    keep = r != 0
    rows = np.concatenate([theta[keep] ^ (1 << dev[keep]), np.arange(n_states)])
    cols = np.concatenate([theta[keep], np.arange(n_states)])
    vals = np.concatenate([r[keep], -rates.sum(axis=1)])
    q = sp.csc_matrix((vals, (rows, cols)), shape=(n_states, n_states))
    labels = tuple(format_configuration(t, n) for t in range(n_states))
    return Generator(q, labels, float(v_source), configuration_voltage_table(circuit, v_source))


def generator_from_matrix(q, labels: Optional[Sequence[str]] = None) -> Generator:
    """Wrap a rate matrix given as dense or sparse ``Q``; columns must sum to zero."""
    q = sp.csc_matrix(q, dtype=float)
    labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(q.shape[0]))
    return Generator(q, labels)


def check_lumping(generator: Generator, lumping: Lumping, tol: float = 1e-12) -> np.ndarray:
    """Verify exact lumpability and return the lumped dense matrix.

    For every class ``C`` and target class ``C'`` all members of ``C`` must
    have the same total rate into ``C'`` (relative tolerance ``tol``).
    """
    if lumping.n_states != generator.dim:
        raise LumpingError(f"lumping covers {lumping.n_states} states, generator has {generator.dim}")
    a = lumping.matrix()
    # into[C', theta] = total rate theta -> class C'
    into = np.asarray((sp.csr_matrix(a) @ generator.matrix).todense())
    scale = max(float(np.max(np.abs(into))), 1e-300)
    qa = np.zeros((lumping.n_classes, lumping.n_classes))
    for k in range(lumping.n_classes):
        members = lumping.members(k)
        ref = into[:, members[0]]
        for th in members[1:]:
            diff = np.abs(into[:, th] - ref)
            diff[k] = 0.0  # the own-class entry is minus the sum of the others
            bad = int(np.argmax(diff))
            if diff[bad] > tol * scale:
                raise LumpingError(
                    f"invalid lumping: states {generator.labels[members[0]]} and {generator.labels[th]} "
                    f"of class {lumping.labels[k]} have different rates into class {lumping.labels[bad]} "
                    f"({float(ref[bad])!r} vs {float(into[bad, th])!r})",
                    witness=(members[0], th, bad),
                )
        qa[:, k] = ref
    return qa


def lump_symmetric(generator: Generator, lumping: Lumping, tol: float = 1e-12) -> Generator:
    """Exact reduced generator on the classes of a validated lumping."""
    qa = check_lumping(generator, lumping, tol)
    vt = generator.voltage_table
    if vt is not None:
        vt = vt[[lumping.representative(k) for k in range(lumping.n_classes)]]
    return Generator(sp.csc_matrix(qa), lumping.labels, generator.v_source, vt)


def lumped_generator(circuit: Circuit, v_source: float, lumping: Lumping, params=None,
                     validate: bool = True) -> Generator:
    """Lumped generator for ``circuit``.

    With ``validate=True`` the full generator is built and checked. Otherwise
    rates are evaluated on one representative configuration per class only,
    which is what the SPICE copy circuits do.
    """
    if validate:
        return lump_symmetric(build_generator(circuit, v_source, params), lumping)
    plist = circuit.params if params is None else _broadcast_params(params, circuit.n_memristors)
    from .circuit import solve_voltages
    from .rates import rate_for_transition

    k = lumping.n_classes
    qa = np.zeros((k, k))
    reps = [lumping.representative(c) for c in range(k)]
    vt = np.array([solve_voltages(circuit, th, v_source) for th in reps])
    for c, th in enumerate(reps):
        for m in range(circuit.n_memristors):
            r = rate_for_transition(th, m, vt[c, m], plist[m])
            if r:
                qa[lumping.partition[th ^ (1 << m)], c] += r
                qa[c, c] -= r
    return Generator(sp.csc_matrix(qa), lumping.labels, float(v_source), vt)


# --------------------------------------------------------------------------
# integration

def rk4_step_matrix(q: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step for ``dp/dt = Q p`` with constant ``Q``.

    For a linear autonomous system the four stages collapse to the degree-4
    Taylor polynomial of ``exp(hQ)``.
    """
    hq = h * q
    eye = np.eye(q.shape[0])
    return eye + hq @ (eye + hq @ (eye / 2 + hq @ (eye / 6 + hq / 24)))


def _rk4_sparse(q, p, h, n):
    for _ in range(n):
        k1 = q @ p
        k2 = q @ (p + 0.5 * h * k1)
        k3 = q @ (p + 0.5 * h * k2)
        k4 = q @ (p + h * k3)
        p = p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


class _Propagator:
    """Cache of n-step RK4 propagators per (source level, step, count)."""

    def __init__(self, generator_for: Callable[[float], Generator]):
        self._generator_for = generator_for
        self._gens: Dict[float, Generator] = {}
        self._powers: Dict[Tuple[float, float, int], np.ndarray] = {}

    def generator(self, level: float) -> Generator:
        g = self._gens.get(level)
        if g is None:
            g = self._generator_for(level)
            if not np.all(np.isfinite(g.matrix.data)):
                raise InfiniteRateError(f"infinite switching rate at source level {level!r} V")
            self._gens[level] = g
        return g

    def advance(self, p: np.ndarray, level: float, h: float, n: int) -> np.ndarray:
        g = self.generator(level)
        if g.dim > DENSE_LIMIT:
            return _rk4_sparse(g.matrix, p, h, n)
        key = (level, h, n)
        m = self._powers.get(key)
        if m is None:
            m = np.linalg.matrix_power(rk4_step_matrix(g.dense(), h), n)
            self._powers[key] = m
        return m @ p


def _divides(dt: float, length: float) -> bool:
    k = length / dt
    return abs(k - round(k)) <= 1e-9 * max(1.0, k) and round(k) >= 1


def _merge_times(points: Sequence[float]) -> List[float]:
    out: List[float] = []
    for t in sorted(points):
        if out and abs(t - out[-1]) <= 1e-9 * max(1.0, abs(t)):
            continue
        out.append(t)
    return out


def _propagate(generator_for: Callable[[float], Generator], waveform: DriveWaveform, p0: np.ndarray,
               t_end: float, dt: float, record_dt: Optional[float], labels: Tuple[str, ...],
               check: bool = True) -> Trajectory:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if not waveform.is_constant:
        for name, half in (("tau_plus", waveform.tau_plus), ("tau_minus", waveform.tau_minus)):
            if not _divides(dt, half):
                raise ValueError(f"dt={dt!r} does not divide the half-period {name}={half!r}")
    record_dt = dt if record_dt is None else record_dt
    if not _divides(dt, record_dt):
        raise ValueError(f"record_dt={record_dt!r} is not a multiple of dt={dt!r}")

    n_rec = int(math.floor(t_end / record_dt + 1e-9))
    samples = [k * record_dt for k in range(n_rec + 1)]
    if not math.isclose(samples[-1], t_end, rel_tol=1e-9, abs_tol=1e-12):
        samples.append(t_end)
    else:
        samples[-1] = t_end
    breaks = _merge_times(samples + waveform.edges(0.0, t_end))

    prop = _Propagator(generator_for)
    p = np.array(p0, dtype=float)
    out = np.empty((len(samples), len(p)))
    out[0] = p
    si = 1
    for a, b in zip(breaks[:-1], breaks[1:]):
        length = b - a
        n = max(1, int(round(length / dt)))
        if abs(n * dt - length) <= 1e-9 * max(1.0, length):
            h = dt
        else:
            n = max(1, int(math.ceil(length / dt - 1e-9)))
            h = length / n
        level = waveform.value(0.5 * (a + b))
        p = prop.advance(p, level, h, n)
        if si < len(samples) and abs(b - samples[si]) <= 1e-9 * max(1.0, abs(b)):
            if check:
                _check_state(p, b)
            out[si] = p
            si += 1
    return Trajectory(np.array(samples), out, labels)


def _check_state(p: np.ndarray, t: float):
    drift = abs(float(p.sum()) - 1.0)
    if drift > DRIFT_LIMIT:
        raise StepSizeError(f"probability drift {drift:.3e} at t={t!r}; reduce dt")
    if drift > SUM_TOL:
        raise StepSizeError(f"probability sum off by {drift:.3e} at t={t!r}")
    lo = float(p.min())
    if lo < -NEG_TOL:
        raise StepSizeError(f"negative probability {lo!r} at t={t!r}; reduce dt")


def _initial(p0, labels) -> np.ndarray:
    if isinstance(p0, ProbabilityVector):
        if p0.labels != tuple(labels):
            raise ValueError(f"p0 labels {p0.labels} do not match system labels {tuple(labels)}")
        p = np.array(p0.p)
    else:
        p = np.array(p0, dtype=float)
    if p.shape != (len(labels),):
        raise ValueError(f"p0 has shape {p.shape}, expected ({len(labels)},)")
    check_probabilities(p)
    return p


def integrate(circuit: Circuit, waveform: Optional[DriveWaveform], p0, t_end: float,
              dt: Optional[float] = None, record_dt: Optional[float] = None,
              lumping: Optional[Lumping] = None, params=None, check: bool = True) -> Trajectory:
    """Integrate the master equation of ``circuit`` under ``waveform``.

    Classical fixed-step RK4. Steps never straddle a waveform edge, so the
    generator is constant within each step; ``dt`` must divide both
    half-periods. The generator is built once per source level. No
    renormalisation is applied: the probability sum and sign are checked at
    every recorded sample and a :class:`StepSizeError` is raised on drift.

    Parameters
    ----------
    waveform
        Drive; ``None`` uses the circuit's own source waveform.
    p0
        Initial probabilities over configurations (or over the classes of
        ``lumping`` when given).
    dt
        RK4 step. Defaults to ``min(tau_plus, tau_minus) / 100`` for a
        rectangular drive and ``t_end / 1000`` for a constant one.
    record_dt
        Sampling interval of the returned trajectory, a multiple of ``dt``.
    lumping
        Integrate the reduced system on these classes (validated).
    """
    waveform = circuit.source.waveform if waveform is None else waveform
    if dt is None:
        dt = t_end / 1000 if waveform.is_constant else min(waveform.tau_plus, waveform.tau_minus) / 100
    if lumping is None:
        labels = tuple(format_configuration(t, circuit.n_memristors) for t in range(circuit.n_states))

        def gen(v):
            return build_generator(circuit, v, params)
    else:
        labels = lumping.labels

        def gen(v):
            return lumped_generator(circuit, v, lumping, params)

    return _propagate(gen, waveform, _initial(p0, labels), t_end, dt, record_dt, labels, check)


def integrate_generator(generator: Generator, p0, t_end: float, dt: float,
                        record_dt: Optional[float] = None, check: bool = True) -> Trajectory:
    """RK4 integration of a constant generator."""
    p = _initial(p0, generator.labels)
    return _propagate(lambda v: generator, DriveWaveform.constant(generator.v_source), p, t_end, dt,
                      record_dt, generator.labels, check)


def integrate_piecewise(generator_for: Callable[[float], Generator], waveform: DriveWaveform, p0,
                        t_end: float, dt: float, record_dt: Optional[float] = None,
                        labels: Optional[Sequence[str]] = None) -> Trajectory:
    """Integrate with generators supplied per source level by ``generator_for``."""
    if labels is None:
        labels = generator_for(waveform.v_plus).labels
    labels = tuple(labels)
    return _propagate(generator_for, waveform, _initial(p0, labels), t_end, dt, record_dt, labels)


def stationary(generator: Generator) -> np.ndarray:
    """Null vector of ``Q`` normalised to sum 1 (dense SVD; small systems)."""
    q = generator.dense()
    u, s, vt = np.linalg.svd(q)
    p = vt[-1]
    return p / p.sum()


# --------------------------------------------------------------------------
# closed forms for identical devices under constant drive

def parallel_off_prob(t, gamma: float):
    """Probability a device is still off after ``t`` under constant rate ``gamma``."""
    return np.exp(-gamma * np.asarray(t, dtype=float))


def parallel_all_on_prob(t, gamma: float, n: int):
    """Probability all ``n`` independent parallel devices have switched on."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return (-np.expm1(-gamma * np.asarray(t, dtype=float))) ** n


def mean_switch_time_parallel(gamma: float, n: int) -> float:
    """Mean time until ``n`` parallel devices are all on: ``H_n / gamma``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return math.fsum(1.0 / k for k in range(1, n + 1)) / gamma


def mean_switch_time_series(gammas: Sequence[float]) -> float:
    """Mean switching time of ``N`` identical series devices.

    ``gammas[j]`` is the off->on rate of an off device when ``j`` devices
    are already on; the result is ``sum_j 1 / ((N - j) * gammas[j])``.
    """
    n = len(gammas)
    if n < 1:
        raise ValueError("need at least one rate")
    if any(not g > 0 for g in gammas):
        raise ValueError("all rates must be positive")
    return math.fsum(1.0 / ((n - j) * g) for j, g in enumerate(gammas))


def series_rates(circuit: Circuit, v_source: Optional[float] = None) -> np.ndarray:
    """Off->on rate of an off device with ``j`` devices on, for j = 0..N-1.

    Devices ``0..j-1`` are switched on and device ``j`` is probed, which is
    representative for a chain of identical devices.
    """
    v = circuit.source.waveform.v_plus if v_source is None else v_source
    table = configuration_voltage_table(circuit, v)
    plist = circuit.params
    return np.array([gamma_01(table[(1 << j) - 1, j], plist[j]) for j in range(circuit.n_memristors)])


def average_resistance(p_off, p_on, params) -> Union[float, np.ndarray]:
    """Expected resistance ``R_off p_off + R_on p_on``."""
    return params.R_off * np.asarray(p_off) + params.R_on * np.asarray(p_on)


def delta(theta: int, n_states: int) -> np.ndarray:
    p = np.zeros(n_states)
    p[theta] = 1.0
    return p
