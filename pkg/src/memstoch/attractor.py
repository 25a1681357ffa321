"""
Steady state of a circuit driven by alternating-polarity pulses.

Under short pulses the master equation can be averaged over one period,
giving constant rates ``(Q(V+) tau+ + Q(V-) tau-) / (tau+ + tau-)``. Its
unique stationary vector is the attractor every initial distribution
converges to.

When the lumped classes form a chain (class ``i`` only talks to
``i - 1`` and ``i + 1``), the per-period balance of probability flow between
neighbours gives the attractor in closed form from forward coefficients
``a_i`` and backward coefficients ``b_i``::

    P_i = P_0 * prod_{j <= i} a_j / b_j
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.optimize import least_squares
from scipy.sparse.csgraph import connected_components

from .circuit import Circuit, DeviceParams, DriveWaveform
from .master import (Generator, Lumping, ProbabilityVector, build_generator, integrate,
                     lumped_generator)


class AttractorError(RuntimeError):
    """Stationary state missing, non-unique, or the chain is degenerate."""


@dataclass(frozen=True)
class PulseSpec:
    """Alternating pulses: ``v_plus`` for ``tau_plus`` then ``v_minus`` for ``tau_minus``."""

    v_plus: float
    v_minus: float
    tau_plus: float
    tau_minus: float

    def __post_init__(self):
        if not (self.tau_plus > 0 and self.tau_minus > 0):
            raise ValueError("pulse durations must be positive")

    @property
    def period(self) -> float:
        return self.tau_plus + self.tau_minus

    def waveform(self) -> DriveWaveform:
        return DriveWaveform.rectangular(self.v_plus, self.v_minus, self.tau_plus, self.tau_minus)

    @classmethod
    def from_waveform(cls, wf: DriveWaveform) -> "PulseSpec":
        if wf.is_constant:
            raise ValueError("a constant drive has no pulses")
        return cls(wf.v_plus, wf.v_minus, wf.tau_plus, wf.tau_minus)

    def scaled(self, c: float) -> "PulseSpec":
        return PulseSpec(self.v_plus, self.v_minus, self.tau_plus * c, self.tau_minus * c)


@dataclass(frozen=True)
class ChainCoefficients:
    """Per-period forward (``a``) and backward (``b``) flow coefficients.

    ``a[i-1]`` multiplies ``P_{i-1}`` in the flow from class ``i-1`` to
    ``i``; ``b[i-1]`` multiplies ``P_i`` in the flow back. Both are
    dimensionless rate-times-duration products.
    """

    a: Tuple[float, ...]
    b: Tuple[float, ...]
    labels: Tuple[str, ...] = ()
    #: optional period-averaged rates proportional to ``a`` and ``b``; when
    #: given, the attractor is computed from them so that rescaling both pulse
    #: durations by a common factor reproduces it bit for bit
    rates: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise ValueError("a and b differ in length")
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        if any(x < 0 for x in self.a + self.b):
            raise ValueError("chain coefficients must be non-negative")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"P{k}" for k in range(len(self.a) + 1)))

    @property
    def absorbing(self) -> bool:
        """True when some backward coefficient vanishes while its forward one does not."""
        return any(bi == 0 and ai > 0 for ai, bi in zip(self.a, self.b))


def _is_chain(q: np.ndarray) -> bool:
    k = q.shape[0]
    off = ~np.eye(k, dtype=bool) & ~np.eye(k, k=1, dtype=bool) & ~np.eye(k, k=-1, dtype=bool)
    return not np.any(q[off] != 0)


def chain_coefficients(circuit: Circuit, pulses: PulseSpec, lumping: Optional[Lumping] = None,
                       params=None) -> ChainCoefficients:
    """Forward/backward coefficients of a lumped chain under pulse drive.

    The lumping (popcount classes by default) is validated at both source
    levels. The forward coefficient from class ``i-1`` to ``i`` collects the
    lumped rate at ``V+`` times ``tau+`` plus the rate at ``V-`` times
    ``tau-``; for devices that only switch on under positive bias the second
    term is zero.
    """
    lumping = Lumping.popcount(circuit.n_memristors) if lumping is None else lumping
    qp = lumped_generator(circuit, pulses.v_plus, lumping, params).dense()
    qm = lumped_generator(circuit, pulses.v_minus, lumping, params).dense()
    w_plus, w_minus = pulses.tau_plus / pulses.period, pulses.tau_minus / pulses.period
    avg = qp * w_plus + qm * w_minus
    flow = qp * pulses.tau_plus + qm * pulses.tau_minus
    if not _is_chain(flow):
        raise AttractorError("lumped classes do not form a chain; use the averaged attractor")
    k = lumping.n_classes
    a = [flow[i, i - 1] for i in range(1, k)]
    b = [flow[i - 1, i] for i in range(1, k)]
    rates = (tuple(avg[i, i - 1] for i in range(1, k)), tuple(avg[i - 1, i] for i in range(1, k)))
    return ChainCoefficients(tuple(a), tuple(b), lumping.labels, rates)


def chain_attractor(coeffs: ChainCoefficients) -> ProbabilityVector:
    """Closed-form stationary class probabilities of a pulse-driven chain.

    Raises
    ------
    AttractorError
        If any backward coefficient is zero.
    """
    a = np.array(coeffs.a)
    b = np.array(coeffs.b)
    if np.any(b == 0):
        i = int(np.flatnonzero(b == 0)[0]) + 1
        raise AttractorError(f"backward coefficient b_{i} is zero; the chain is absorbing")
    if coeffs.rates is not None:
        a, b = (np.array(x) for x in coeffs.rates)
    if np.any(b == 0):
        i = int(np.flatnonzero(b == 0)[0]) + 1
        raise AttractorError(f"backward coefficient b_{i} is zero; the chain is absorbing")
    with np.errstate(divide="ignore"):
        logw = np.concatenate(([0.0], np.cumsum(np.log(a) - np.log(b))))
    w = np.exp(logw - np.max(logw))
    return ProbabilityVector(w / math.fsum(w), coeffs.labels)


def averaged_generator(circuit: Circuit, pulses: PulseSpec, params=None) -> Generator:
    gp = build_generator(circuit, pulses.v_plus, params)
    gm = build_generator(circuit, pulses.v_minus, params)
    q = gp.matrix * (pulses.tau_plus / pulses.period) + gm.matrix * (pulses.tau_minus / pulses.period)
    return Generator(sp.csc_matrix(q), gp.labels)


def closed_classes(generator: Generator) -> List[List[int]]:
    """Closed communicating classes (recurrent sets) of the chain."""
    q = generator.matrix.tocsr().copy()
    q.setdiag(0)
    q.eliminate_zeros()
    # edge i -> j when rate i -> j is positive, i.e. Q[j, i] > 0
    adj = sp.csr_matrix(q.T)
    n_comp, comp = connected_components(adj, directed=True, connection="strong")
    leaves = np.ones(n_comp, dtype=bool)
    src, dst = adj.nonzero()
    for s, d in zip(src, dst):
        if comp[s] != comp[d]:
            leaves[comp[s]] = False
    return [sorted(np.flatnonzero(comp == c).tolist()) for c in range(n_comp) if leaves[c]]


def stationary_distribution(generator: Generator, rtol: float = 1e-12) -> np.ndarray:
    """Unique ``p`` with ``Q p = 0``, ``sum(p) = 1``.

    The rank of ``Q`` is checked with an SVD; a null space of dimension
    greater than one means several closed classes, which is reported.
    """
    closed = closed_classes(generator)
    if len(closed) > 1:
        names = "; ".join("{" + ", ".join(generator.labels[i] for i in c) + "}" for c in closed)
        raise AttractorError(f"stationary distribution is not unique; closed classes: {names}")
    q = generator.dense()
    s = np.linalg.svd(q, compute_uv=False)
    null_dim = int(np.sum(s <= rtol * max(s[0], 1e-300) * q.shape[0]))
    if null_dim > 1:
        raise AttractorError(f"generator has a {null_dim}-dimensional null space")
    aug = np.vstack([q, np.ones((1, q.shape[1]))])
    rhs = np.zeros(q.shape[0] + 1)
    rhs[-1] = 1.0
    p, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
    p[np.abs(p) < 1e-300] = 0.0
    return p


def averaged_attractor(circuit: Circuit, pulses: PulseSpec, params=None) -> ProbabilityVector:
    """Stationary vector of the period-averaged full generator.

    Exact for the averaged dynamics; it approximates the true periodic
    orbit only when the switching probability per pulse is small.
    """
    g = averaged_generator(circuit, pulses, params)
    return ProbabilityVector(stationary_distribution(g), g.labels)


def residual(coeffs: ChainCoefficients, p) -> float:
    """Largest per-class imbalance of the per-period probability flow at ``p``."""
    p = np.asarray(p.p if isinstance(p, ProbabilityVector) else p, dtype=float)
    a, b = np.array(coeffs.a), np.array(coeffs.b)
    if len(p) != len(a) + 1:
        raise ValueError(f"expected {len(a) + 1} class probabilities, got {len(p)}")
    j = a * p[:-1] - b * p[1:]  # net flow i-1 -> i
    net = np.concatenate(([0.0], j)) - np.concatenate((j, [0.0]))
    return float(np.max(np.abs(net)))


# --------------------------------------------------------------------------
# trajectories toward the attractor

def phase_portrait(circuit: Circuit, pulses: PulseSpec, initial: Sequence, n_periods: int,
                   dt: Optional[float] = None, lumping: Optional[Lumping] = None) -> List[np.ndarray]:
    """Class probabilities at the end of each period, one array per initial state.

    ``initial`` holds class-probability vectors; each array has shape
    ``(n_periods + 1, K)`` with row 0 the initial state.
    """
    lumping = Lumping.popcount(circuit.n_memristors) if lumping is None else lumping
    wf = pulses.waveform()
    out = []
    for p0 in initial:
        p0 = np.asarray(p0, dtype=float)
        if n_periods == 0:
            out.append(p0[None, :])
            continue
        tr = integrate(circuit, wf, p0, n_periods * pulses.period, dt=dt, record_dt=pulses.period,
                       lumping=lumping)
        out.append(tr.states)
    return out


def phase_portrait_csv(series: Sequence[np.ndarray], labels: Sequence[str], period: float,
                       names: Optional[Sequence[str]] = None) -> str:
    """CSV ``series,period,t,<labels>``; rows for period 0 are included."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "period", "t", *labels])
    for s, arr in enumerate(series):
        name = names[s] if names is not None else str(s)
        for k, row in enumerate(arr):
            w.writerow([name, k, repr(k * period), *(repr(float(x)) for x in row)])
    return buf.getvalue()


def attractor_csv(p: ProbabilityVector) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["state", "probability"])
    for label, x in zip(p.labels, p.p):
        w.writerow([label, repr(float(x))])
    return buf.getvalue()


# --------------------------------------------------------------------------
# diagnostics

def calibrate(circuit: Circuit, pulses: PulseSpec, target: Sequence[float],
              base: Optional[DeviceParams] = None, lumping: Optional[Lumping] = None):
    """Fit ``tau10/tau01``, ``V01`` and ``V10`` so the chain attractor hits ``target``.

    Only ratios ``a_i / b_i`` enter the attractor, so ``tau01`` of ``base``
    is held fixed. All devices get the same fitted parameters. Returns the
    fitted :class:`DeviceParams` and the final max abs error. This is a
    diagnostic; a fit on a reconstructed circuit says nothing about the
    parameters of any real device.
    """
    base = circuit.params[0] if base is None else base
    target = np.asarray(target, dtype=float)

    def params_of(x):
        ratio, v01, v10 = np.exp(x)
        return DeviceParams(base.tau01, v01, base.tau01 * ratio, v10, base.R_on, base.R_off)

    def resid(x):
        try:
            p = chain_attractor(chain_coefficients(circuit, pulses, lumping, params_of(x))).p
        except (AttractorError, ValueError, FloatingPointError):
            return np.full(len(target), 1e3)
        return np.log(np.maximum(p, 1e-300)) - np.log(target)

    x0 = np.log([base.tau10 / base.tau01, base.V01, base.V10])
    fit = least_squares(resid, x0, x_scale="jac", max_nfev=2000)
    best = params_of(fit.x)
    got = chain_attractor(chain_coefficients(circuit, pulses, lumping, best)).p
    return best, float(np.max(np.abs(got - target)))
