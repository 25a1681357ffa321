"""
Command-line interface.

Subcommands: ``me`` (master-equation trajectory), ``mc`` (Monte Carlo
occupancy), ``attractor``, ``spice`` (emit a deck), ``phase`` (per-period
phase portrait) and ``replay`` (rerun a manifest). Every command writes its
outputs plus ``<out>.manifest.json``.

Exit codes: 0 success, 2 usage or parse error, 3 numerical or model error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .attractor import (AttractorError, PulseSpec, attractor_csv, averaged_attractor, chain_attractor,
                        chain_coefficients, phase_portrait, phase_portrait_csv, residual)
from .circuit import (Circuit, NetlistSemanticError, NetlistSyntaxError, SingularNetworkError, parse_configuration,
                      parse_netlist)
from .master import (Lumping, LumpingError, MasterEquationError, ProbabilityVector, _divides, integrate)
from .montecarlo import McConfig, simulate
from .spice import SpiceEmitError, emit

EXIT_USAGE = 2
EXIT_MODEL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _read_deck(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read deck {path}: {exc.strerror}") from None
    return parse_netlist(text), hashlib.sha256(text.encode("utf-8")).hexdigest()


def _lumping(name: str, circuit: Circuit) -> Optional[Lumping]:
    if name == "none":
        return None
    if name == "popcount":
        return Lumping.popcount(circuit.n_memristors)
    raise UsageError(f"unknown lumping {name!r} (popcount|none)")


def parse_p0(text: str, circuit: Circuit, lumping: Optional[Lumping]) -> np.ndarray:
    """Initial vector from ``theta:<bits>`` or ``label:prob,label:prob,...``.

    Labels may name configurations (``011``) or popcount classes (``P1``);
    class mass is spread uniformly over its members when integrating the
    full system.
    """
    n = circuit.n_memristors
    pop = Lumping.popcount(n)
    target = lumping if lumping is not None else Lumping.identity(n)
    try:
        if text.startswith("theta:"):
            theta = parse_configuration(text[len("theta:"):], n)
            p = np.zeros(target.n_classes)
            p[target.partition[theta]] = 1.0
            return p
        full = np.zeros(circuit.n_states)
        for item in text.split(","):
            label, _, prob = item.partition(":")
            label, value = label.strip(), float(prob)
            if label in pop.labels:
                full += pop.spread(np.eye(pop.n_classes)[pop.labels.index(label)]) * value
            elif lumping is not None and label in lumping.labels:
                full += lumping.spread(np.eye(lumping.n_classes)[lumping.labels.index(label)]) * value
            else:
                full[parse_configuration(label, n)] += value
    except ValueError as exc:
        raise UsageError(f"bad --p0 {text!r}: {exc}") from None
    p = target.matrix() @ full
    if abs(p.sum() - 1.0) > 1e-9 or p.min() < 0:
        raise UsageError(f"--p0 {text!r} is not a probability vector (sum {p.sum()!r})")
    return p


def _pulses(args, circuit: Circuit) -> PulseSpec:
    wf = circuit.source.waveform
    d = (wf.v_plus, wf.v_minus, wf.tau_plus, wf.tau_minus) if not wf.is_constant else (None,) * 4
    vals = [args.vplus, args.vminus, args.tplus, args.tminus]
    vals = [v if v is not None else dv for v, dv in zip(vals, d)]
    if any(v is None for v in vals):
        raise UsageError("deck has a constant source; give --vplus --vminus --tplus --tminus")
    try:
        return PulseSpec(*vals)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write(path: str, text: str, outputs: List[str]):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    outputs.append(str(path))


def _manifest(args, argv: List[str], deck_hash: str, outputs: List[str], extra=None):
    resolved = {k: v for k, v in vars(args).items() if k not in ("func",)}
    data = {
        "command": args.command,
        "argv": argv,
        "deck": args.deck,
        "deck_sha256": deck_hash,
        "parameters": resolved,
        "seed": resolved.get("seed"),
        "version": __version__,
        "outputs": outputs,
    }
    if extra:
        data.update(extra)
    path = str(args.out) + ".manifest.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --------------------------------------------------------------------------
# commands

def cmd_me(args, argv):
    circuit, h = _read_deck(args.deck)
    lumping = _lumping(args.lump, circuit)
    p0 = parse_p0(args.p0, circuit, lumping)
    wf = circuit.source.waveform
    dt = args.dt if args.dt is not None else (
        args.t_end / 1000 if wf.is_constant else min(wf.tau_plus, wf.tau_minus) / 100)
    if not dt > 0:
        raise UsageError("--dt must be positive")
    if not wf.is_constant:
        for name, half in (("tau_plus", wf.tau_plus), ("tau_minus", wf.tau_minus)):
            if not _divides(dt, half):
                raise UsageError(f"--dt {dt!r} does not divide the half-period {name}={half!r}; "
                                 "steps must align with the source edges")
    record = args.record_dt if args.record_dt is not None else dt
    if not _divides(dt, record):
        raise UsageError(f"--record-dt {record!r} is not a multiple of --dt {dt!r}")
    tr = integrate(circuit, None, p0, args.t_end, dt=dt, record_dt=record, lumping=lumping)
    outputs: List[str] = []
    _write(args.out, tr.to_csv(), outputs)
    _manifest(args, argv, h, outputs, {"resolved_dt": dt, "resolved_record_dt": record})


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MEMSTOCH_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"MEMSTOCH_SEED={env!r} is not an integer") from None


def cmd_mc(args, argv):
    circuit, h = _read_deck(args.deck)
    lumping = _lumping(args.lump, circuit)
    args.seed = _seed(args)
    try:
        theta0 = parse_configuration(args.theta0, circuit.n_memristors) if args.theta0 else 0
        cfg = McConfig(args.duration, args.burn_in, args.record_dt, args.seed, args.trials, args.batches,
                       record=args.series is not None)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    est = simulate(circuit, cfg, theta0, lumping=lumping, threads=args.threads)
    outputs: List[str] = []
    _write(args.out, est.occupancy_csv(), outputs)
    if lumping is not None:
        _write(str(args.out) + ".classes.csv", est.class_csv(), outputs)
    if args.series is not None:
        _write(args.series, est.series_csv(lumping), outputs)
    # threads is a performance hint only; keep it out of the manifest so reruns match
    args_for_manifest = argparse.Namespace(**{k: v for k, v in vars(args).items() if k != "threads"})
    _manifest(args_for_manifest, argv, h, outputs, {"events": est.events})


def cmd_attractor(args, argv):
    circuit, h = _read_deck(args.deck)
    pulses = _pulses(args, circuit)
    lumping = Lumping.popcount(circuit.n_memristors)
    lines = []
    if args.method == "chain":
        coeffs = chain_coefficients(circuit, pulses, lumping)
        p = chain_attractor(coeffs)
        text = attractor_csv(p)
        res = residual(coeffs, p)
        lines.append(f"a = {list(coeffs.a)}")
        lines.append(f"b = {list(coeffs.b)}")
    else:
        full = averaged_attractor(circuit, pulses)
        classes = ProbabilityVector(lumping.matrix() @ full.p, lumping.labels)
        text = attractor_csv(classes) + attractor_csv(full).split("\n", 1)[1]
        try:
            res = residual(chain_coefficients(circuit, pulses, lumping), classes)
        except (LumpingError, AttractorError):
            res = float("nan")
    lines.append(f"residual = {res!r}")
    outputs: List[str] = []
    _write(args.out, text, outputs)
    print("\n".join(lines))
    _manifest(args, argv, h, outputs, {"residual": res})


def cmd_spice(args, argv):
    circuit, h = _read_deck(args.deck)
    lumping = _lumping(args.lump, circuit) or Lumping.identity(circuit.n_memristors)
    p0 = parse_p0(args.p0, circuit, lumping)
    deck = emit(circuit, lumping=lumping, p0=p0, t_end=args.t_end, record_dt=args.record_dt)
    outputs: List[str] = []
    _write(args.out, deck.text, outputs)
    _manifest(args, argv, h, outputs, {"node_manifest": deck.node_manifest})


def cmd_phase(args, argv):
    circuit, h = _read_deck(args.deck)
    pulses = _pulses(args, circuit)
    lumping = Lumping.popcount(circuit.n_memristors)
    if args.periods < 0:
        raise UsageError("--periods must be non-negative")
    specs = args.p0 or ["theta:" + "0" * circuit.n_memristors]
    inits = [parse_p0(s, circuit, lumping) for s in specs]
    series = phase_portrait(circuit, pulses, inits, args.periods, dt=args.dt, lumping=lumping)
    if args.periods == 0:
        series = [s[:0] for s in series]
    outputs: List[str] = []
    _write(args.out, phase_portrait_csv(series, lumping.labels, pulses.period, names=specs), outputs)
    _manifest(args, argv, h, outputs)


def cmd_replay(args, argv):
    with open(args.manifest, encoding="utf-8") as fh:
        data = json.load(fh)
    deck = data["deck"]
    _, h = _read_deck(deck)
    if h != data["deck_sha256"]:
        raise UsageError(f"deck {deck} changed since the manifest was written")
    return main(data["argv"])


# --------------------------------------------------------------------------

def _add_pulse_flags(p):
    p.add_argument("--vplus", type=float, help="positive pulse level [V] (default: deck source)")
    p.add_argument("--vminus", type=float, help="negative pulse level [V]")
    p.add_argument("--tplus", type=float, help="positive pulse duration [s]")
    p.add_argument("--tminus", type=float, help="negative pulse duration [s]")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="memstoch", description="Stochastic memristor circuit simulator.")
    parser.add_argument("--version", action="version", version=f"memstoch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("me", help="integrate the master equation")
    p.add_argument("deck")
    p.add_argument("--p0", required=True, help="theta:<bits> or label:prob,... ")
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=float, help="RK4 step; must divide both half-periods")
    p.add_argument("--record-dt", type=float, help="output sampling interval (multiple of dt)")
    p.add_argument("--lump", default="none", help="popcount|none")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_me)

    p = sub.add_parser("mc", help="event-driven Monte Carlo occupancy")
    p.add_argument("deck")
    p.add_argument("--duration", type=float, default=1e6)
    p.add_argument("--burn-in", type=float, default=1e3)
    p.add_argument("--record-dt", type=float, default=0.1)
    p.add_argument("--seed", type=int, help="RNG seed (default: $MEMSTOCH_SEED or 0)")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--batches", type=int, default=20)
    p.add_argument("--threads", type=int, default=1, help="worker hint; does not change results")
    p.add_argument("--theta0", help="initial configuration bits (default all off)")
    p.add_argument("--lump", default="popcount", help="popcount|none")
    p.add_argument("--series", help="also write the recorded state series to this CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("attractor", help="pulse-driven steady state")
    p.add_argument("deck")
    _add_pulse_flags(p)
    p.add_argument("--method", choices=("chain", "averaged"), default="chain")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attractor)

    p = sub.add_parser("spice", help="emit a SPICE deck")
    p.add_argument("deck")
    p.add_argument("--lump", default="popcount", help="popcount|none")
    p.add_argument("--p0", default=None, help="initial probabilities (default: all devices off)")
    p.add_argument("--t-end", type=float, default=1e4)
    p.add_argument("--record-dt", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spice)

    p = sub.add_parser("phase", help="per-period class probabilities for several initial states")
    p.add_argument("deck")
    _add_pulse_flags(p)
    p.add_argument("--p0", action="append", help="initial state; repeat for several series")
    p.add_argument("--periods", type=int, default=1000)
    p.add_argument("--dt", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "spice" and args.p0 is None:
            args.p0 = "theta:" + "0" * _read_deck(args.deck)[0].n_memristors
        rc = args.func(args, argv)
        return 0 if rc is None else rc
    except (UsageError, NetlistSyntaxError, NetlistSemanticError) as exc:
        print(f"memstoch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MasterEquationError, LumpingError, AttractorError, SingularNetworkError, SpiceEmitError) as exc:
        print(f"memstoch: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
