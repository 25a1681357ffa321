"""
SPICE decks that solve a lumped master equation.

Each class probability is the voltage across a 1 F capacitor whose initial
condition is the starting probability. Probability flow between two classes
is a single behavioural current source connected between the two capacitor
nodes, so it drains one and fills the other. Switching rates need the
voltage across a device in a given configuration; these come from resistive
copies of the circuit, one per class representative, all driven by the one
source. Voltage-controlled voltage sources expose each needed device voltage
as a probe node ``VmN`` referenced to ground.

The deck targets the LTspice core subset (``.func``, ``B`` sources, ``.ic``,
``.tran``); it is emitted but never run here.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from . import __version__
from .circuit import (GROUND, Circuit, DeviceParams, DriveWaveform, _broadcast_params, format_configuration,
                      format_netlist, is_on, solve_voltages)
from .master import Generator, Lumping, check_probabilities, lumped_generator
from .rates import gamma_01, gamma_10

MAX_CLASSES = 64


class SpiceEmitError(ValueError):
    pass


@dataclass(frozen=True)
class Probe:
    """Voltage probe ``name`` across ``device`` in copy circuit of ``configuration``."""

    name: str
    cls: int
    configuration: int
    device: int


@dataclass(frozen=True)
class Term:
    """``coef * g(kind)(device params, V(probe)) * V(P_source_class)``."""

    coef: int
    kind: str  # "g01" or "g10"
    probe: int  # index into SpiceDeck.probes


@dataclass(frozen=True)
class Flow:
    """Net current from class ``a`` to class ``b``: forward terms minus backward terms."""

    name: str
    a: int
    b: int
    forward: Tuple[Term, ...]
    backward: Tuple[Term, ...]


@dataclass(frozen=True)
class SpiceDeck:
    text: str
    node_manifest: Dict[str, str]
    probes: Tuple[Probe, ...]
    flows: Tuple[Flow, ...]
    class_nodes: Tuple[str, ...]
    params: Tuple[DeviceParams, ...]

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.text)

    def generator(self, circuit: Circuit, v_source: float) -> Generator:
        """Lumped generator implied by the deck's current sources at ``v_source``.

        Probe voltages are recomputed from ``circuit``; this is the same
        equation system the SPICE engine would integrate.
        """
        k = len(self.class_nodes)
        q = np.zeros((k, k))
        cache = {}

        def rate(term: Term) -> float:
            pr = self.probes[term.probe]
            if pr.configuration not in cache:
                cache[pr.configuration] = solve_voltages(circuit, pr.configuration, v_source)
            v = cache[pr.configuration][pr.device]
            p = self.params[pr.device]
            return term.coef * (gamma_01(v, p) if term.kind == "g01" else gamma_10(v, p))

        for fl in self.flows:
            for t in fl.forward:
                r = rate(t)
                q[fl.b, fl.a] += r
                q[fl.a, fl.a] -= r
            for t in fl.backward:
                r = rate(t)
                q[fl.a, fl.b] += r
                q[fl.b, fl.b] -= r
        labels = tuple(self.node_manifest[f"class:{i}"] for i in range(k))
        return Generator(sp.csc_matrix(q), labels, float(v_source))


def _fmt(x: float) -> str:
    return repr(float(x))


def _pulse(wf: DriveWaveform) -> str:
    if wf.is_constant:
        return f"DC {_fmt(wf.v_plus)}"
    period = wf.period
    edge = 1e-6 * min(wf.tau_plus, wf.tau_minus)
    off = wf.phase % period
    if off < wf.tau_plus:
        v1, v2, td, ton = wf.v_plus, wf.v_minus, wf.tau_plus - off, wf.tau_minus
    else:
        v1, v2, td, ton = wf.v_minus, wf.v_plus, period - off, wf.tau_plus
    return (f"PULSE({_fmt(v1)} {_fmt(v2)} {_fmt(td)} {_fmt(edge)} {_fmt(edge)} "
            f"{_fmt(ton - edge)} {_fmt(period)})")


def _param_names(plist: Sequence[DeviceParams]):
    """Parameter names per device; shared names when all devices are identical."""
    if all(p == plist[0] for p in plist):
        names = [("tau01", "V01", "tau10", "V10")] * len(plist)
        decl = [("tau01", plist[0].tau01), ("V01", plist[0].V01), ("tau10", plist[0].tau10), ("V10", plist[0].V10)]
    else:
        names, decl = [], []
        for m, p in enumerate(plist):
            nm = (f"tau01_{m}", f"V01_{m}", f"tau10_{m}", f"V10_{m}")
            names.append(nm)
            decl += list(zip(nm, (p.tau01, p.V01, p.tau10, p.V10)))
    return names, decl


def _term_text(term: Term, probes, pnames, src_node: str) -> str:
    pr = probes[term.probe]
    tau, v0 = (pnames[pr.device][0], pnames[pr.device][1]) if term.kind == "g01" else \
        (pnames[pr.device][2], pnames[pr.device][3])
    coef = "" if term.coef == 1 else f"{term.coef}*"
    return f"{coef}{term.kind}({tau},{v0},V({pr.name},0))*V({src_node})"


def emit(circuit: Circuit, waveform: Optional[DriveWaveform] = None, lumping: Optional[Lumping] = None,
         p0=None, t_end: float = 1e4, record_dt: float = 0.1, params=None) -> SpiceDeck:
    """Compile the lumped master equation of ``circuit`` into a SPICE deck.

    Parameters
    ----------
    lumping
        Class partition (popcount by default), checked at every source level.
    p0
        Initial class probabilities; defaults to all mass on class 0.
    t_end, record_dt
        Transient length and print step of the ``.tran`` card.
    """
    waveform = circuit.source.waveform if waveform is None else waveform
    n = circuit.n_memristors
    lumping = Lumping.popcount(n) if lumping is None else lumping
    if lumping.n_classes > MAX_CLASSES:
        raise SpiceEmitError(f"{lumping.n_classes} classes exceeds the limit of {MAX_CLASSES}")
    plist = circuit.params if params is None else _broadcast_params(params, n)
    for level in waveform.levels:
        lumped_generator(circuit, level, lumping, plist)  # raises LumpingError
    k = lumping.n_classes
    p0 = np.eye(k)[0] if p0 is None else np.asarray(p0, dtype=float)
    if p0.shape != (k,):
        raise SpiceEmitError(f"p0 must have {k} class probabilities")
    check_probabilities(p0)

    # probes: group devices of a representative whose copy-circuit voltages coincide
    probes: List[Probe] = []
    pair_terms: Dict[Tuple[int, int], List[Term]] = {}
    for c in range(k):
        rep = lumping.representative(c)
        v_unit = solve_voltages(circuit, rep, 1.0)
        groups: Dict[Tuple[str, int], List[List[int]]] = {}
        for m in range(n):
            kind = "g10" if is_on(rep, m) else "g01"
            target = lumping.partition[rep ^ (1 << m)]
            bucket = groups.setdefault((kind, target), [])
            for g in bucket:
                m0 = g[0]
                if plist[m0] == plist[m] and abs(v_unit[m0] - v_unit[m]) <= 1e-12 * max(1.0, abs(v_unit[m])):
                    g.append(m)
                    break
            else:
                bucket.append([m])
        ordered = sorted(groups.items(), key=lambda kv: (kv[0][0] != "g01", kv[0][1]))
        for (kind, target), bucket in ordered:
            for g in bucket:
                probes.append(Probe(f"Vm{len(probes) + 1}", c, rep, g[0]))
                pair_terms.setdefault((c, target), []).append(Term(len(g), kind, len(probes) - 1))

    flows: List[Flow] = []
    for a, b in sorted({tuple(sorted(key)) for key in pair_terms}):
        flows.append(Flow(f"B{len(flows) + 1}", a, b, tuple(pair_terms.get((a, b), ())),
                          tuple(pair_terms.get((b, a), ()))))

    # node names
    class_nodes = tuple(f"P{i}" for i in range(k))
    manifest: Dict[str, str] = {}
    used: Dict[str, str] = {}

    def claim(node: str, owner: str):
        if node in used and used[node] != owner:
            raise SpiceEmitError(f"node name collision: {node!r} used by {used[node]} and {owner}")
        used[node] = owner

    claim(GROUND, "ground")
    claim("drive", "drive source")
    for i, node in enumerate(class_nodes):
        claim(node, f"class {lumping.labels[i]}")
        manifest[f"class:{i}"] = lumping.labels[i]
        manifest[f"P:{lumping.labels[i]}"] = node
    for pr in probes:
        claim(pr.name, f"probe {pr.name}")
        manifest[f"probe:{pr.name}"] = f"{format_configuration(pr.configuration, n)}:{pr.device}"

    src = circuit.source
    grounded = src.n_minus == GROUND or src.n_plus == GROUND

    def copy_node(node: str, c: int) -> str:
        if node == GROUND:
            return GROUND
        if grounded and node in (src.n_plus, src.n_minus):
            return "drive"
        name = f"{node}_c{c}"
        claim(name, f"copy {c}")
        return name

    pnames, pdecl = _param_names(plist)
    digest = hashlib.sha256(
        (format_netlist(circuit) + repr((waveform, lumping, tuple(p0), t_end, record_dt, plist))).encode()
    ).hexdigest()

    lines = [
        f"* memstoch {__version__} master-equation deck",
        f"* input sha256 {digest}",
        f"* classes: {' '.join(f'{node}={lbl}' for node, lbl in zip(class_nodes, lumping.labels))}",
        "",
        "* device parameters and rate functions",
        ".param " + " ".join(f"{name}={_fmt(v)}" for name, v in pdecl),
        ".func g01(tau,V0,v) {if(v>0,exp(v/V0)/tau,0)}",
        ".func g10(tau,V0,v) {if(v<0,exp(-v/V0)/tau,0)}",
        "",
        "* drive",
    ]
    if src.n_plus == GROUND:
        lines.append(f"Vdrive 0 drive {_pulse(waveform)}")
    else:
        lines.append(f"Vdrive drive 0 {_pulse(waveform)}")

    lines += ["", "* probability capacitors"]
    for i, node in enumerate(class_nodes):
        lines.append(f"C{node} {node} 0 1")
    lines.append(".ic " + " ".join(f"V({node})={_fmt(p0[i])}" for i, node in enumerate(class_nodes)))

    lines += ["", "* probability flow between classes"]
    for fl in flows:
        fwd = "+".join(_term_text(t, probes, pnames, class_nodes[fl.a]) for t in fl.forward)
        bwd = "-".join(_term_text(t, probes, pnames, class_nodes[fl.b]) for t in fl.backward)
        expr = fwd + ("-" + bwd if bwd else "") if fwd else ("-" + bwd if bwd else "0")
        lines.append(f"{fl.name} {class_nodes[fl.a]} {class_nodes[fl.b]} I={expr}")

    reps = sorted({pr.configuration for pr in probes}, key=lambda th: lumping.partition[th])
    for th in reps:
        c = lumping.partition[th]
        lines += ["", f"* copy circuit for class {lumping.labels[c]}, configuration {format_configuration(th, n)}"]
        if not grounded:
            lines.append(f"Edrive_c{c} {copy_node(src.n_plus, c)} {copy_node(src.n_minus, c)} drive 0 1")
        for mem in circuit.memristors:
            r = plist[mem.id].R_on if is_on(th, mem.id) else plist[mem.id].R_off
            lines.append(f"RM{mem.id}_c{c} {copy_node(mem.n_plus, c)} {copy_node(mem.n_minus, c)} {_fmt(r)}")
        for res in circuit.resistors:
            lines.append(f"R{res.id}_c{c} {copy_node(res.n_plus, c)} {copy_node(res.n_minus, c)} {_fmt(res.resistance)}")
        for pr in probes:
            if pr.configuration == th:
                mem = circuit.memristors[pr.device]
                lines.append(f"E{pr.name} {pr.name} 0 {copy_node(mem.n_plus, c)} {copy_node(mem.n_minus, c)} 1")

    lines += ["", f".tran {_fmt(record_dt)} {_fmt(t_end)} 0 {_fmt(record_dt)}", ".end"]
    text = "\n".join(lines) + "\n"
    return SpiceDeck(text, manifest, tuple(probes), tuple(flows), class_nodes, tuple(plist))


# --------------------------------------------------------------------------
# golden files

@dataclass(frozen=True)
class CompareReport:
    match: bool
    line: Optional[int] = None
    expected: Optional[str] = None
    got: Optional[str] = None

    def __bool__(self):
        return self.match

    def __str__(self):
        if self.match:
            return "decks match"
        return f"mismatch at line {self.line}: expected {self.expected!r}, got {self.got!r}"


_PUNCT_SPACE = re.compile(r"\s*([()*/+\-,=<>{}])\s*")


def _normal_lines(text: str, ignore_comments: bool) -> List[Tuple[int, str]]:
    out = []
    for i, raw in enumerate(text.splitlines(), start=1):
        # collapse runs of blanks; blanks next to operators carry no meaning
        line = _PUNCT_SPACE.sub(r"\1", " ".join(raw.split()))
        if not line or (ignore_comments and line.startswith("*")):
            continue
        out.append((i, line))
    return out


def golden_compare(deck, reference: str, ignore_comments: bool = True) -> CompareReport:
    """Whitespace-insensitive, line-ordered comparison against a reference deck.

    Comment lines (``*``) are skipped by default so version headers do not
    break golden files. The report names the first differing line of
    ``deck`` (1-based).
    """
    text = deck.text if isinstance(deck, SpiceDeck) else deck
    got = _normal_lines(text, ignore_comments)
    exp = _normal_lines(reference, ignore_comments)
    for (gi, g), (_, e) in zip(got, exp):
        if g != e:
            return CompareReport(False, gi, e, g)
    if len(got) != len(exp):
        if len(got) > len(exp):
            gi, g = got[len(exp)]
            return CompareReport(False, gi, None, g)
        return CompareReport(False, (got[-1][0] + 1) if got else 1, exp[len(got)][1], None)
    return CompareReport(True)


def normalize_expression(expr: str) -> str:
    """Strip all whitespace; used to compare B-source expressions."""
    return re.sub(r"\s+", "", expr)


def behavioral_sources(text: str) -> Dict[str, Tuple[str, str, str]]:
    """``{name: (node_a, node_b, expression)}`` for every ``B`` line in a deck."""
    out = {}
    for raw in text.splitlines():
        parts = raw.split(None, 3)
        if parts and parts[0].upper().startswith("B") and len(parts) == 4:
            expr = parts[3]
            expr = expr[2:] if expr.upper().startswith("I=") else expr
            out[parts[0]] = (parts[1], parts[2], normalize_expression(expr))
    return out
