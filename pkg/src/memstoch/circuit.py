"""
Circuits of binary stochastic memristors and their resistive solution.

A :class:`Circuit` holds N memristors, any number of linear resistors and
exactly one ideal voltage source. Each memristor is either off (``R_off``)
or on (``R_on``); the joint state of all devices is an N-bit integer, the
configuration, where bit ``m`` is the state of memristor ``m``.

For a fixed configuration the network is purely resistive, so the voltage
across every memristor follows from a modified nodal analysis (MNA) solve.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

GROUND = "0"


class NetlistSyntaxError(ValueError):
    """Malformed netlist text. Carries the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class NetlistSemanticError(ValueError):
    """Well-formed netlist that violates a circuit invariant."""


class SingularNetworkError(RuntimeError):
    """Conductance matrix is singular; ``nodes`` lists the floating nodes."""

    def __init__(self, nodes: Sequence[str]):
        self.nodes = tuple(nodes)
        super().__init__(
            "singular conductance matrix, nodes not connected to ground: "
            + ", ".join(self.nodes)
        )


@dataclass(frozen=True)
class DeviceParams:
    """Switching and resistance parameters of one binary memristor.

    Attributes
    ----------
    tau01, V01 : float
        Time scale [s] and voltage scale [V] of the off->on rate.
    tau10, V10 : float
        Same for the on->off rate.
    R_on, R_off : float
        Resistances [Ohm] of the two states, ``R_on < R_off``.
    """

    tau01: float
    V01: float
    tau10: float
    V10: float
    R_on: float
    R_off: float

    def __post_init__(self):
        for name in ("tau01", "V01", "tau10", "V10", "R_on", "R_off"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"DeviceParams.{name} must be positive and finite, got {value!r}")
        if not self.R_on < self.R_off:
            raise ValueError(f"R_on ({self.R_on}) must be smaller than R_off ({self.R_off})")

    def resistance(self, on: bool) -> float:
        return self.R_on if on else self.R_off


#: Device parameters of the shipped fig1b_candidate deck.
DEFAULT_PARAMS = DeviceParams(tau01=45.0, V01=0.27, tau10=45.0, V10=0.05, R_on=100.0, R_off=1000.0)


@dataclass(frozen=True)
class DriveWaveform:
    """Piecewise-constant source voltage.

    ``kind == "constant"`` holds ``v_plus`` forever. ``kind == "rectangular"``
    alternates ``v_plus`` for ``tau_plus`` seconds and ``v_minus`` for
    ``tau_minus`` seconds; ``phase`` shifts the pattern so that
    ``value(t) = v_plus`` iff ``(t + phase) mod period < tau_plus``.
    """

    kind: str
    v_plus: float
    v_minus: float = 0.0
    tau_plus: float = math.inf
    tau_minus: float = math.inf
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "rectangular"):
            raise ValueError(f"unknown waveform kind {self.kind!r}")
        if self.kind == "rectangular":
            if not (self.tau_plus > 0 and self.tau_minus > 0):
                raise ValueError("tau_plus and tau_minus must be positive")
            if not (math.isfinite(self.tau_plus) and math.isfinite(self.tau_minus)):
                raise ValueError("rectangular half-periods must be finite")

    @classmethod
    def constant(cls, v0: float) -> "DriveWaveform":
        return cls("constant", float(v0))

    @classmethod
    def rectangular(cls, v_plus: float, v_minus: float, tau_plus: float,
                    tau_minus: float, phase: float = 0.0) -> "DriveWaveform":
        return cls("rectangular", float(v_plus), float(v_minus), float(tau_plus),
                   float(tau_minus), float(phase))

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    @property
    def period(self) -> float:
        return math.inf if self.is_constant else self.tau_plus + self.tau_minus

    @property
    def levels(self) -> Tuple[float, ...]:
        return (self.v_plus,) if self.is_constant else (self.v_plus, self.v_minus)

    def _offset(self, t: float) -> float:
        return (t + self.phase) % self.period

    def value(self, t: float) -> float:
        if self.is_constant:
            return self.v_plus
        return self.v_plus if self._offset(t) < self.tau_plus else self.v_minus

    def next_edge(self, t: float) -> float:
        """Time of the first level change strictly after ``t`` (inf if none)."""
        if self.is_constant:
            return math.inf
        period = self.period
        s = self._offset(t)
        if s < self.tau_plus:
            edge = t + (self.tau_plus - s)
        else:
            edge = t + (period - s)
        # guard against round-off placing us on the edge itself
        if edge - t <= 1e-12 * max(1.0, abs(t)):
            return self.next_edge(edge + 1e-12 * max(1.0, abs(t)))
        return edge

    def edges(self, t_start: float, t_end: float) -> List[float]:
        """All level-change instants in the open interval (t_start, t_end)."""
        out = []
        if self.is_constant:
            return out
        # enumerate on the integer period grid to avoid accumulating round-off
        period = self.period
        k0 = math.floor((t_start + self.phase) / period) - 1
        k = k0
        while True:
            base = k * period - self.phase
            for e in (base + self.tau_plus, base + period):
                if t_start < e < t_end and not _close(e, t_start) and not _close(e, t_end):
                    out.append(e)
            if base > t_end:
                break
            k += 1
        return sorted(set(out))


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class Memristor:
    id: int
    n_plus: str
    n_minus: str
    params: DeviceParams


@dataclass(frozen=True)
class Resistor:
    id: str
    n_plus: str
    n_minus: str
    resistance: float


@dataclass(frozen=True)
class Source:
    n_plus: str
    n_minus: str
    waveform: DriveWaveform


@dataclass(frozen=True)
class Circuit:
    """Netlist of stochastic memristors, resistors and one voltage source.

    Construction checks the structural invariants (dense memristor ids,
    positive resistances, ground present, no floating declared nodes).
    Connectivity is checked by :func:`parse_netlist` and again, at solve
    time, by :func:`solve_voltages`.
    """

    memristors: Tuple[Memristor, ...]
    resistors: Tuple[Resistor, ...]
    source: Source
    declared_nodes: Tuple[str, ...] = ()
    _index: Dict[str, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "memristors", tuple(sorted(self.memristors, key=lambda m: m.id)))
        object.__setattr__(self, "resistors", tuple(self.resistors))
        ids = [m.id for m in self.memristors]
        if ids != list(range(len(ids))):
            raise NetlistSemanticError(f"memristor ids must be 0..N-1 without gaps or duplicates, got {ids}")
        rids = [r.id for r in self.resistors]
        if len(set(rids)) != len(rids):
            dup = sorted({r for r in rids if rids.count(r) > 1})
            raise NetlistSemanticError(f"duplicate resistor id(s): {', '.join(dup)}")
        for r in self.resistors:
            if not (r.resistance > 0 and math.isfinite(r.resistance)):
                raise NetlistSemanticError(f"resistor {r.id}: resistance must be positive, got {r.resistance}")
        for el in self._two_terminal():
            if el.n_plus == el.n_minus:
                raise NetlistSemanticError(f"element {_label(el)} is shorted ({el.n_plus} to itself)")
        used = self._used_nodes()
        if GROUND not in used:
            raise NetlistSemanticError("no element is connected to ground node '0'")
        dangling = [n for n in self.declared_nodes if n not in used]
        if dangling:
            raise NetlistSemanticError(f"dangling node(s) declared but unused: {', '.join(dangling)}")
        names = [GROUND] + sorted(n for n in used if n != GROUND)
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    def _two_terminal(self):
        return (*self.memristors, *self.resistors, self.source)

    def _used_nodes(self):
        nodes = set()
        for el in self._two_terminal():
            nodes.update((el.n_plus, el.n_minus))
        return nodes

    @property
    def n_memristors(self) -> int:
        return len(self.memristors)

    @property
    def n_states(self) -> int:
        return 1 << len(self.memristors)

    @property
    def nodes(self) -> Tuple[str, ...]:
        """Node names in index order; ground first."""
        return tuple(self._index)

    @property
    def params(self) -> Tuple[DeviceParams, ...]:
        return tuple(m.params for m in self.memristors)

    def node_index(self, name: str) -> int:
        return self._index[name]

    def replace(self, **changes) -> "Circuit":
        kw = dict(memristors=self.memristors, resistors=self.resistors,
                  source=self.source, declared_nodes=self.declared_nodes)
        kw.update(changes)
        return Circuit(**kw)

    def with_waveform(self, waveform: DriveWaveform) -> "Circuit":
        s = self.source
        return self.replace(source=Source(s.n_plus, s.n_minus, waveform))

    def with_params(self, params) -> "Circuit":
        """Copy with device parameters replaced (one DeviceParams or one per device)."""
        plist = _broadcast_params(params, self.n_memristors)
        mems = tuple(Memristor(m.id, m.n_plus, m.n_minus, p) for m, p in zip(self.memristors, plist))
        return self.replace(memristors=mems)

    def unreachable_nodes(self) -> List[str]:
        """Nodes with no path to ground through any element (source included)."""
        adj: Dict[str, set] = {n: set() for n in self._index}
        for el in self._two_terminal():
            adj[el.n_plus].add(el.n_minus)
            adj[el.n_minus].add(el.n_plus)
        seen = {GROUND}
        stack = [GROUND]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return [n for n in self._index if n not in seen]


def _label(el) -> str:
    if isinstance(el, Memristor):
        return f"mem {el.id}"
    if isinstance(el, Resistor):
        return f"res {el.id}"
    return "src"


def _broadcast_params(params, n: int) -> Tuple[DeviceParams, ...]:
    if isinstance(params, DeviceParams):
        return (params,) * n
    plist = tuple(params)
    if len(plist) != n:
        raise ValueError(f"expected {n} DeviceParams, got {len(plist)}")
    return plist


# --------------------------------------------------------------------------
# configurations

def flip(theta: int, m: int, n: Optional[int] = None) -> int:
    """Configuration with the state of memristor ``m`` toggled.

    >>> flip(0b000, 1)
    2
    """
    if m < 0 or (n is not None and m >= n):
        raise IndexError(f"memristor index {m} out of range for N={n}")
    if n is not None and not 0 <= theta < (1 << n):
        raise ValueError(f"configuration {theta} out of range for N={n}")
    return theta ^ (1 << m)


def is_on(theta: int, m: int) -> bool:
    return bool((theta >> m) & 1)


def format_configuration(theta: int, n: int) -> str:
    """Bit string with memristor 0 as the rightmost character."""
    return format(theta, f"0{n}b") if n else ""


def parse_configuration(text: str, n: int) -> int:
    if len(text) != n or any(c not in "01" for c in text):
        raise ValueError(f"configuration {text!r} is not a {n}-bit string")
    return int(text, 2)


# --------------------------------------------------------------------------
# nodal analysis

def _solve_dense(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting; returns None when singular."""
    a = a.astype(float).copy()
    b = b.astype(float).copy()
    n = len(b)
    scale = np.abs(a).max() if a.size else 1.0
    tol = 1e-13 * scale * n
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) <= tol:
            return None
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        f = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(f, a[k, k:])
        b[k + 1:] -= f * b[k]
    x = np.zeros(n)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def solve_voltages(circuit: Circuit, theta: int, v_source: float) -> np.ndarray:
    """Voltage across every memristor for configuration ``theta``.

    Memristor ``m`` is assigned ``R_on`` when bit ``m`` of ``theta`` is set
    and ``R_off`` otherwise. The source is an ideal voltage source of value
    ``v_source`` between its ``n_plus`` and ``n_minus`` nodes.

    Returns
    -------
    ndarray, shape (N,)
        ``V(n_plus) - V(n_minus)`` for each memristor, in volts.

    Raises
    ------
    SingularNetworkError
        If part of the network floats with respect to ground.
    """
    if not 0 <= theta < circuit.n_states:
        raise ValueError(f"configuration {theta} out of range for N={circuit.n_memristors}")
    floating = circuit.unreachable_nodes()
    if floating:
        raise SingularNetworkError(floating)

    n_nodes = len(circuit.nodes) - 1  # ground eliminated
    dim = n_nodes + 1  # one extra unknown: source branch current
    a = np.zeros((dim, dim))
    b = np.zeros(dim)

    def stamp(n1, n2, g):
        i, j = circuit.node_index(n1) - 1, circuit.node_index(n2) - 1
        if i >= 0:
            a[i, i] += g
        if j >= 0:
            a[j, j] += g
        if i >= 0 and j >= 0:
            a[i, j] -= g
            a[j, i] -= g

    for mem in circuit.memristors:
        stamp(mem.n_plus, mem.n_minus, 1.0 / mem.params.resistance(is_on(theta, mem.id)))
    for res in circuit.resistors:
        stamp(res.n_plus, res.n_minus, 1.0 / res.resistance)
    src = circuit.source
    i, j = circuit.node_index(src.n_plus) - 1, circuit.node_index(src.n_minus) - 1
    k = n_nodes
    if i >= 0:
        a[i, k] += 1.0
        a[k, i] += 1.0
    if j >= 0:
        a[j, k] -= 1.0
        a[k, j] -= 1.0
    b[k] = v_source

    x = _solve_dense(a, b)
    if x is None:
        raise SingularNetworkError(_floating_in_matrix(circuit))
    potentials = np.concatenate(([0.0], x[:n_nodes]))
    return np.array([
        potentials[circuit.node_index(m.n_plus)] - potentials[circuit.node_index(m.n_minus)]
        for m in circuit.memristors
    ])


def _floating_in_matrix(circuit: Circuit) -> List[str]:
    # Connectivity passed but the matrix is still singular: report every
    # non-ground node, the best we can say without a rank decomposition.
    return [n for n in circuit.nodes if n != GROUND]


def configuration_voltage_table(circuit: Circuit, v_source: float) -> np.ndarray:
    """Memristor voltages for every configuration.

    Returns an array of shape ``(2**N, N)``; row ``theta`` is
    ``solve_voltages(circuit, theta, v_source)``. Results are memoized per
    ``(circuit, v_source)``; callers get a read-only view.
    """
    return _voltage_table(circuit, float(v_source))


@lru_cache(maxsize=256)
def _voltage_table(circuit: Circuit, v_source: float) -> np.ndarray:
    table = np.array([solve_voltages(circuit, th, v_source) for th in range(circuit.n_states)])
    table = table.reshape(circuit.n_states, circuit.n_memristors)
    table.setflags(write=False)
    return table


# --------------------------------------------------------------------------
# netlist text

_KEYVAL = re.compile(r"^([A-Za-z][A-Za-z0-9_]*)=(.*)$")
_MEM_KEYS = ("tau01", "V01", "tau10", "V10", "Ron", "Roff")


def _number(tok: str, line: int, col: int) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise NetlistSyntaxError(f"expected a bare SI number, got {tok!r}", line, col) from None
    if not math.isfinite(value) or tok.strip().lower() in ("nan", "inf", "+inf", "-inf", "infinity"):
        raise NetlistSyntaxError(f"non-finite number {tok!r}", line, col)
    return value


def _tokens(raw: str):
    """Yield (token, 1-based column) pairs, stopping at a '#' comment."""
    for m in re.finditer(r"\S+", raw):
        if m.group().startswith("#"):
            return
        yield m.group(), m.start() + 1


def _keyvals(toks, required, optional, line):
    out = {}
    for tok, col in toks:
        m = _KEYVAL.match(tok)
        if not m:
            raise NetlistSyntaxError(f"expected key=value, got {tok!r}", line, col)
        key, val = m.group(1), m.group(2)
        if key not in required and key not in optional:
            raise NetlistSyntaxError(f"unknown parameter {key!r}", line, col)
        if key in out:
            raise NetlistSyntaxError(f"parameter {key!r} given twice", line, col)
        out[key] = _number(val, line, col + len(key) + 1)
    missing = [k for k in required if k not in out]
    if missing:
        raise NetlistSyntaxError(f"missing parameter(s): {', '.join(missing)}", line, 1)
    return out


def parse_netlist(text: str) -> Circuit:
    """Parse netlist text into a validated :class:`Circuit`.

    Grammar (one statement per line, ``#`` starts a comment)::

        node <name>
        mem <id> <n+> <n-> tau01=<s> V01=<V> tau10=<s> V10=<V> Ron=<Ohm> Roff=<Ohm>
        res <id> <n+> <n-> <Ohm>
        src <n+> <n-> const <V>
        src <n+> <n-> rect Vp=<V> Vm=<V> tp=<s> tm=<s> [phase=<s>]

    Numbers are bare SI values parsed with correctly-rounded decimal
    conversion; unit suffixes such as ``1k`` are syntax errors.
    """
    declared: List[str] = []
    mems: List[Memristor] = []
    ress: List[Resistor] = []
    sources: List[Tuple[int, Source]] = []
    mem_lines: Dict[int, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = list(_tokens(raw))
        if not toks:
            continue
        (kw, kcol), rest = toks[0], toks[1:]

        def need(count, what):
            if len(rest) < count:
                col = rest[-1][1] + len(rest[-1][0]) if rest else kcol + len(kw)
                raise NetlistSyntaxError(f"{kw}: expected {what}", lineno, col)

        if kw == "node":
            need(1, "a node name")
            if len(rest) > 1:
                raise NetlistSyntaxError("node: unexpected token", lineno, rest[1][1])
            name = rest[0][0]
            if name != GROUND and name not in declared:
                declared.append(name)
        elif kw == "ground":
            need(1, "'0'")
            if rest[0][0] != GROUND or len(rest) > 1:
                raise NetlistSyntaxError("ground is always node '0'", lineno, rest[0][1])
        elif kw == "mem":
            need(3 + len(_MEM_KEYS), "id, two nodes and six parameters")
            id_tok, id_col = rest[0]
            if not re.fullmatch(r"\d+", id_tok):
                raise NetlistSyntaxError(f"memristor id must be a non-negative integer, got {id_tok!r}", lineno, id_col)
            mid = int(id_tok)
            if mid in mem_lines:
                raise NetlistSemanticError(f"line {lineno}: duplicate memristor id {mid} (first on line {mem_lines[mid]})")
            mem_lines[mid] = lineno
            kv = _keyvals(rest[3:], _MEM_KEYS, (), lineno)
            try:
                p = DeviceParams(kv["tau01"], kv["V01"], kv["tau10"], kv["V10"], kv["Ron"], kv["Roff"])
            except ValueError as exc:
                raise NetlistSemanticError(f"line {lineno}: {exc}") from None
            mems.append(Memristor(mid, rest[1][0], rest[2][0], p))
        elif kw == "res":
            need(4, "id, two nodes and a resistance")
            if len(rest) > 4:
                raise NetlistSyntaxError("res: unexpected token", lineno, rest[4][1])
            ress.append(Resistor(rest[0][0], rest[1][0], rest[2][0], _number(rest[3][0], lineno, rest[3][1])))
        elif kw == "src":
            need(3, "two nodes and a waveform kind")
            kind, kind_col = rest[2]
            if kind == "const":
                need(4, "a voltage")
                if len(rest) > 4:
                    raise NetlistSyntaxError("src: unexpected token", lineno, rest[4][1])
                wf = DriveWaveform.constant(_number(rest[3][0], lineno, rest[3][1]))
            elif kind == "rect":
                kv = _keyvals(rest[3:], ("Vp", "Vm", "tp", "tm"), ("phase",), lineno)
                try:
                    wf = DriveWaveform.rectangular(kv["Vp"], kv["Vm"], kv["tp"], kv["tm"], kv.get("phase", 0.0))
                except ValueError as exc:
                    raise NetlistSemanticError(f"line {lineno}: {exc}") from None
            else:
                raise NetlistSyntaxError(f"unknown source kind {kind!r} (const|rect)", lineno, kind_col)
            sources.append((lineno, Source(rest[0][0], rest[1][0], wf)))
        else:
            raise NetlistSyntaxError(f"unknown statement {kw!r}", lineno, kcol)

    if not sources:
        raise NetlistSemanticError("netlist has no source")
    if len(sources) > 1:
        lines = ", ".join(str(ln) for ln, _ in sources)
        raise NetlistSemanticError(f"exactly one source allowed, found {len(sources)} (lines {lines})")
    if not mems:
        raise NetlistSemanticError("netlist has no memristors")

    circuit = Circuit(tuple(mems), tuple(ress), sources[0][1], tuple(declared))
    floating = circuit.unreachable_nodes()
    if floating:
        raise NetlistSemanticError(f"circuit is not connected; floating node(s): {', '.join(floating)}")
    return circuit


def format_netlist(circuit: Circuit) -> str:
    """Canonical netlist text; ``parse_netlist(format_netlist(c)) == c``."""
    lines = [f"node {n}" for n in circuit.declared_nodes]
    for m in circuit.memristors:
        p = m.params
        lines.append(
            f"mem {m.id} {m.n_plus} {m.n_minus} tau01={p.tau01!r} V01={p.V01!r} "
            f"tau10={p.tau10!r} V10={p.V10!r} Ron={p.R_on!r} Roff={p.R_off!r}"
        )
    for r in circuit.resistors:
        lines.append(f"res {r.id} {r.n_plus} {r.n_minus} {r.resistance!r}")
    s, w = circuit.source, circuit.source.waveform
    if w.is_constant:
        lines.append(f"src {s.n_plus} {s.n_minus} const {w.v_plus!r}")
    else:
        lines.append(
            f"src {s.n_plus} {s.n_minus} rect Vp={w.v_plus!r} Vm={w.v_minus!r} "
            f"tp={w.tau_plus!r} tm={w.tau_minus!r} phase={w.phase!r}"
        )
    return "\n".join(lines) + "\n"


def load_netlist(path) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return parse_netlist(fh.read())


def example_path(name: str):
    """Path of a deck shipped in ``memstoch/data`` (``.net`` suffix optional)."""
    from importlib.resources import files

    if not name.endswith(".net"):
        name += ".net"
    return files("memstoch") / "data" / name


def load_example(name: str) -> Circuit:
    return parse_netlist(example_path(name).read_text(encoding="utf-8"))
