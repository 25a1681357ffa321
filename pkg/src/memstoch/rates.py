"""Voltage-dependent Poisson switching rates of binary stochastic memristors.

Off->on switching happens only under positive voltage, on->off only under
negative voltage; at exactly 0 V both rates are zero. Rates grow
exponentially with the voltage magnitude. Extreme voltages overflow to
``inf``, which callers treat as an instantaneous transition.
"""

from __future__ import annotations

import numpy as np

from .circuit import DeviceParams, is_on


def gamma_01(v, p: DeviceParams):
    """Off->on rate ``exp(v/V01)/tau01`` for ``v > 0``, else 0. Vectorised over ``v``."""
    v = np.asarray(v, dtype=float)
    with np.errstate(over="ignore"):
        out = np.where(v > 0, np.exp(np.where(v > 0, v, 0.0) / p.V01) / p.tau01, 0.0)
    return float(out) if out.ndim == 0 else out


def gamma_10(v, p: DeviceParams):
    """On->off rate ``exp(|v|/V10)/tau10`` for ``v < 0``, else 0."""
    v = np.asarray(v, dtype=float)
    with np.errstate(over="ignore"):
        out = np.where(v < 0, np.exp(np.where(v < 0, -v, 0.0) / p.V10) / p.tau10, 0.0)
    return float(out) if out.ndim == 0 else out


def rate_for_transition(theta: int, m: int, voltage: float, p: DeviceParams, n: int | None = None) -> float:
    """Rate at which memristor ``m`` leaves its current state in configuration ``theta``."""
    if m < 0 or (n is not None and m >= n):
        raise IndexError(f"memristor index {m} out of range for N={n}")
    return gamma_10(voltage, p) if is_on(theta, m) else gamma_01(voltage, p)


def transition_rates(circuit, v_source: float, params=None) -> np.ndarray:
    """Exit rate of every memristor in every configuration.

    Returns an array ``r`` of shape ``(2**N, N)`` where ``r[theta, m]`` is the
    rate at which device ``m`` flips when the circuit is in ``theta`` and the
    source sits at ``v_source``.
    """
    from .circuit import _broadcast_params, configuration_voltage_table

    plist = circuit.params if params is None else _broadcast_params(params, circuit.n_memristors)
    table = configuration_voltage_table(circuit, v_source)
    n_states, n = table.shape
    on = (np.arange(n_states)[:, None] >> np.arange(n)[None, :]) & 1
    out = np.empty_like(table)
    for m, p in enumerate(plist):
        out[:, m] = np.where(on[:, m] == 1, gamma_10(table[:, m], p), gamma_01(table[:, m], p))
    return out
