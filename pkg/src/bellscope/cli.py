"""Command-line entry point.

Exit codes: 0 ok, 2 usage, 3 parse or validation error, 4 reproduction
mismatch, 5 internal consistency (a theory bound was violated).  Every error
prints one line ``error: <code>: <message>`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .bell import BellLabel, bell_labels, bell_state, hyper_bell_state, hyper_label, hyper_labels, named_hyper_labels
from .circuits import classify_group, compose_circuit, load_circuit, save_circuit, validate_document
from .criteria import limits, ll_pairwise_distinguishable, simplified_g1_distinguishable
from .detection import DetectorModel, coincidence_matrix, distinguishability_partition
from .errors import BellscopeError, CircuitParseError, ContractError, ReproductionMismatch
from .reproduce import SCENARIOS, detector_map, regenerate, reproduce
from .search import SearchConfig, bound_audit, maximize_classes


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _pair(text: str) -> tuple[int, int]:
    try:
        n, D = (int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"expected 'n,D', got {text!r}") from None
    return n, D


def select_states(selector: str, statistics="boson"):
    """Parse a state selector into (labels, states).

    ``bell:n,D`` is the full Bell basis and ``bell:n,D:P.i1...,P.i1...`` a
    subset; ``hyper64`` and ``hyper15`` are the hyperentangled basis and its
    fifteen named members; ``hyper:1,49`` picks sequence numbers.
    """
    if selector == "hyper64":
        hs = list(hyper_labels())
    elif selector == "hyper15":
        hs = list(named_hyper_labels())
    elif selector.startswith("hyper:"):
        try:
            hs = [hyper_label(int(v)) for v in selector[6:].split(",")]
        except ValueError:
            raise UsageError(f"bad hyper selector {selector!r}") from None
    elif selector.startswith("bell:"):
        parts = selector[5:].split(":")
        n, D = _pair(parts[0])
        if len(parts) == 1:
            labs = bell_labels(n, D)
        else:
            try:
                labs = []
                for item in parts[1].split(","):
                    P, *idx = (int(v) for v in item.split("."))
                    labs.append(BellLabel(n, D, P, tuple(idx)))
            except ValueError:
                raise UsageError(f"bad Bell label list in {selector!r}") from None
        return [str(x) for x in labs], [bell_state(x, statistics) for x in labs]
    else:
        raise UsageError(f"unknown state selector {selector!r}")
    return [str(h) for h in hs], [hyper_bell_state(h, statistics) for h in hs]


def _detector_names(arg: str | None):
    if arg is None:
        return None
    if arg == "fig4":
        return detector_map()
    try:
        return json.loads(Path(arg).read_text())["mode_to_detector"]
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise CircuitParseError(f"cannot read detector map {arg}: {exc}") from None


def cmd_limits(args) -> int:
    if args.n < 2 or args.d < 2:
        raise UsageError(f"need --n >= 2 and --d >= 2, got n={args.n}, d={args.d}")
    lv = limits(args.n, args.d)
    if args.format == "json":
        _emit(json.dumps({"schema_version": 1, **lv.to_dict()}, indent=2) + "\n", args.out)
    else:
        rel = ">=" if lv.me_is_lower_bound else "="
        _emit(
            f"n={lv.n} D={lv.D}\nN1 = {lv.n1}\nN2 >= {lv.n2_lower}\n"
            f"CC = log2({lv.n1}) = {lv.cc_bits:.4f} bits\nME {rel} {lv.me:.6g}\n",
            args.out,
        )
    return 0


def cmd_analyze(args) -> int:
    circuit = load_circuit(args.circuit)
    u = compose_circuit(circuit)
    labels, states = select_states(args.states, circuit.statistics)
    report = distinguishability_partition(u, states, args.model, args.tol, labels)
    doc = report.to_dict()
    doc["circuit"] = circuit.name or Path(args.circuit).name
    doc["selector"] = args.states
    validate_document(doc, "report.schema.json", ContractError)
    table = coincidence_matrix(report)
    names = _detector_names(args.detector_map)
    if args.csv:
        Path(args.csv).write_text(table.to_csv(names))
    if args.format == "json":
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    elif args.format == "csv":
        _emit(table.to_csv(names), args.out)
    else:
        head = (
            f"{report.class_count} classes, {report.singleton_count} singletons, "
            f"CC = {report.channel_capacity_bits:.4f} bits, model = {report.detector_model.value}\n"
        )
        if report.flagged:
            head += "".join(f"  {note}\n" for note in report.notes)
        _emit(head + table.to_text(names), args.out)
    return 0


def cmd_classify(args) -> int:
    circuit = load_circuit(args.circuit)
    n = circuit.photon_count
    if circuit.mode_count % n:
        raise CircuitParseError("mode_count is not a multiple of photon_count")
    tag = classify_group(compose_circuit(circuit), n, circuit.mode_count // n, circuit.statistics, args.tol)
    doc = {"schema_version": 1, "group": tag.group, "min_norm": tag.min_norm}
    if tag.witness:
        doc["witness"] = {"label": str(tag.witness[0]), "prefix": list(tag.witness[1])}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def cmd_ll_check(args) -> int:
    circuit = load_circuit(args.circuit)
    u = compose_circuit(circuit)
    labels, states = select_states(args.states, circuit.statistics)
    n = circuit.photon_count
    tag = classify_group(u, n, circuit.mode_count // n, circuit.statistics)
    pairs = []
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            entry = {"pair": [labels[i], labels[j]], "ll": ll_pairwise_distinguishable(u, states[i], states[j], args.tol)}
            if tag.group == "G1":
                entry["simplified"] = simplified_g1_distinguishable(u, states[i], states[j], args.tol, tag)
            pairs.append(entry)
    doc = {"schema_version": 1, "group": tag.group, "pairs": pairs}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def cmd_search(args) -> int:
    cfg = SearchConfig(
        args.n,
        args.d,
        args.statistics,
        args.budget,
        args.restarts,
        args.step_scale,
        args.seed,
        args.target,
        args.identity_start,
    )
    result = maximize_classes(cfg)
    spec, provenance = result.to_circuit()
    if args.out:
        save_circuit(spec, args.out, provenance)
    bound = limits(args.n, args.d).n1
    status = "converged" if result.converged else "not converged"
    sys.stdout.write(
        f"best classes {result.best_classes} (limit {bound}), singletons {result.best_singletons}, "
        f"group {result.group.group}, {result.evaluations} evaluations, {status}\n"
    )
    return 0


def cmd_audit(args) -> int:
    report = bound_audit(args.n, args.d, args.statistics, args.samples, args.seed)
    _emit(json.dumps({"schema_version": 1, **report.to_dict()}, indent=2) + "\n", args.out)
    return 0


def cmd_reproduce(args) -> int:
    scenarios = SCENARIOS if args.scenario == "all" else (args.scenario,)
    if args.regenerate:
        for s in scenarios:
            sys.stdout.write(f"wrote {regenerate(s)}\n")
        return 0
    failed = []
    for s in scenarios:
        result = reproduce(s)
        sys.stdout.write(f"{s}: {'PASS' if result.ok else 'FAIL'}\n")
        for line in result.differences:
            sys.stdout.write(f"  {line}\n")
        if not result.ok:
            failed.append(s)
    if failed:
        raise ReproductionMismatch(f"golden mismatch in {', '.join(failed)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bellscope", description="Bell-state measurement analysis for linear optics.")
    p.add_argument("--version", action="version", version=f"bellscope {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("limits", help="distinguishing limits for an n-photon, D-level system")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--format", choices=["json", "text-table"], default="text-table")
    s.add_argument("--out")
    s.set_defaults(func=cmd_limits)

    s = sub.add_parser("analyze", help="partition a state set under a circuit")
    s.add_argument("circuit")
    s.add_argument("--states", required=True, help="bell:n,D | bell:n,D:P.i,... | hyper64 | hyper15 | hyper:1,49")
    s.add_argument("--model", choices=[m.value for m in DetectorModel], default="number-resolving")
    s.add_argument("--tol", type=_positive, default=1e-12)
    s.add_argument("--format", choices=["json", "csv", "text-table"], default="json")
    s.add_argument("--csv", help="also write the coincidence matrix here")
    s.add_argument("--detector-map", help="'fig4' or a JSON file with mode_to_detector")
    s.add_argument("--out")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("classify-group", help="G1/G2 classification of a circuit")
    s.add_argument("circuit")
    s.add_argument("--tol", type=_positive, default=1e-12)
    s.add_argument("--out")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("ll-check", help="pairwise discrimination criteria")
    s.add_argument("circuit")
    s.add_argument("--states", required=True)
    s.add_argument("--tol", type=_positive, default=1e-10)
    s.add_argument("--out")
    s.set_defaults(func=cmd_ll_check)

    s = sub.add_parser("search", help="look for a unitary with many classes")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--statistics", choices=["boson", "fermion"], default="boson")
    s.add_argument("--budget", type=int, default=500)
    s.add_argument("--restarts", type=int, default=25)
    s.add_argument("--step-scale", type=float, default=0.5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--target", type=int)
    s.add_argument("--identity-start", action="store_true")
    s.add_argument("--out", help="write the best unitary as a circuit file")
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("audit", help="check the G1 limit on Haar samples")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--statistics", choices=["boson", "fermion"], default="boson")
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("reproduce", help="compare a scenario against its golden file")
    s.add_argument("scenario", choices=[*SCENARIOS, "all"])
    s.add_argument("--regenerate", action="store_true", help="rewrite golden files (clean tree only)")
    s.set_defaults(func=cmd_reproduce)
    return p


def _positive(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return value


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    except BellscopeError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_status
    except ValueError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
