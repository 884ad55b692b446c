"""Command-line interface: one executable, one subcommand per operation.

Results go to stdout, diagnostics to stderr. Exit codes: 0 success, 1 invalid
input (with line/column where known), 2 usage error. All randomness flows
from explicit ``--seed`` values; floats print with 9 significant digits so
outputs are stable golden files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import analysis
from .energy import GAS_CONSTANT, EnergyParams, load_params, structure_energy
from .errors import InputError
from .fold import mccaskill_partition, mfe_fold
from .partition import PatternConstraint, partition_function, pattern_partition
from .sampler import sample_ensemble
from .structure import (
    SecondaryStructure,
    parse_dot_bracket,
    parse_pair_lines,
    sample_uniform_structure,
)

SCHEMA = "seqsem-cli/1"


def _fmt(x: float) -> str:
    return format(x, ".9g")


def _json_num(x: float):
    # 9 significant digits everywhere so outputs are stable golden files
    return None if math.isinf(x) or math.isnan(x) else float(_fmt(x))


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def read_structures(path: str) -> list[SecondaryStructure]:
    """Dot-bracket lines (one structure each), or a single pair-list block."""
    text = _read_text(path)
    meaningful = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not meaningful:
        raise InputError("no structures in input")
    if meaningful[0].isdigit():
        return [parse_pair_lines(text)]
    structures = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        structures.append(parse_dot_bracket(stripped, line=lineno))
    return structures


def _single_structure(path: str) -> SecondaryStructure:
    structures = read_structures(path)
    if len(structures) > 1:
        print(
            f"seqsem: input holds {len(structures)} structures; using the first",
            file=sys.stderr,
        )
    return structures[0]


def read_sequences(path: str) -> list[tuple[str, str]]:
    """FASTA records, or bare one-sequence-per-line text."""
    text = _read_text(path)
    entries: list[tuple[str, str]] = []
    if text.lstrip().startswith(">"):
        name, chunks = None, []
        for raw in text.splitlines():
            if raw.startswith(">"):
                if name is not None:
                    entries.append((name, "".join(chunks)))
                name, chunks = raw[1:].split()[0] if raw[1:].split() else "seq", []
            elif raw.strip():
                chunks.append(raw.strip())
        if name is not None:
            entries.append((name, "".join(chunks)))
    else:
        count = 0
        for raw in text.splitlines():
            stripped = raw.strip()
            if stripped and not stripped.startswith("#"):
                count += 1
                entries.append((f"seq{count}", stripped))
    if not entries:
        raise InputError("no sequences in input")
    return entries


def _load_params(args) -> EnergyParams:
    params = load_params(args.params)
    if getattr(args, "temperature", None) is not None:
        if args.temperature <= 0:
            raise InputError("temperature must be positive")
        params = params.with_rt(GAS_CONSTANT * args.temperature)
    return params


def _params_meta(params: EnergyParams) -> dict:
    return {"file": params.name, "sha256": params.checksum, "rt": params.rt}


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_partition(args) -> int:
    params = _load_params(args)
    if args.arc_tables:
        args.json = True
    out = []
    for S in read_structures(args.structures):
        result = partition_function(params, S)
        if args.json:
            entry = {"structure": S.to_dot_bracket(), "log_q": _json_num(result.log_q)}
            if args.arc_tables:
                entry["arc_tables"] = {
                    f"{i},{j}": [[_json_num(v) for v in row] for row in table.tolist()]
                    for (i, j), table in sorted(result.arc_tables.items())
                }
            out.append(entry)
        else:
            print(_fmt(result.log_q))
    if args.json:
        json.dump({"schema": SCHEMA, "params": _params_meta(params), "results": out}, sys.stdout)
        print()
    return 0


def cmd_pattern(args) -> int:
    params = _load_params(args)
    S = _single_structure(args.structures)
    start, end = args.interval
    if len(args.pattern) != end - start + 1:
        raise InputError(
            f"pattern length {len(args.pattern)} does not match interval [{start},{end}]"
        )
    constraint = PatternConstraint.subsequence(S.n, start, args.pattern)
    log_constrained = pattern_partition(params, S, constraint)
    log_q = partition_function(params, S).log_q
    prob = 0.0 if log_constrained == float("-inf") else min(1.0, math.exp(log_constrained - log_q))
    if args.json:
        json.dump(
            {
                "schema": SCHEMA,
                "params": _params_meta(params),
                "structure": S.to_dot_bracket(),
                "interval": [start, end],
                "pattern": args.pattern,
                "log_q_pattern": _json_num(log_constrained),
                "probability": prob,
            },
            sys.stdout,
        )
        print()
    else:
        print(f"log_q_pattern {_fmt(log_constrained)}")
        print(f"probability {_fmt(prob)}")
    return 0


def cmd_sample(args) -> int:
    params = _load_params(args)
    S = _single_structure(args.structures)
    draws = sample_ensemble(params, S, args.count, args.seed)
    if args.format == "jsonl":
        for k, d in enumerate(draws):
            json.dump(
                {
                    "index": k,
                    "sequence": d.sequence,
                    "energy": d.energy,
                    "log_prob": d.log_prob,
                    "stepwise_logs": list(d.stepwise_logs),
                },
                sys.stdout,
            )
            print()
    else:
        for k, d in enumerate(draws):
            print(f">s{k:06d} energy={_fmt(d.energy)} logp={_fmt(d.log_prob)}")
            print(d.sequence)
    return 0


def cmd_fold(args) -> int:
    params = _load_params(args)
    entries = read_sequences(args.sequences)
    out = []
    for name, seq in entries:
        result = mfe_fold(params, seq)
        if args.json:
            out.append(
                {
                    "name": name,
                    "sequence": seq,
                    "structure": result.structure.to_dot_bracket(),
                    "energy": result.energy,
                }
            )
        else:
            print(f"{result.structure.to_dot_bracket()} {_fmt(result.energy)}")
    if args.json:
        json.dump({"schema": SCHEMA, "params": _params_meta(params), "results": out}, sys.stdout)
        print()
    return 0


def cmd_seqpf(args) -> int:
    params = _load_params(args)
    out = []
    for name, seq in read_sequences(args.sequences):
        log_q = mccaskill_partition(params, seq)
        if args.json:
            out.append({"name": name, "sequence": seq, "log_q": _json_num(log_q)})
        else:
            print(_fmt(log_q))
    if args.json:
        json.dump({"schema": SCHEMA, "params": _params_meta(params), "results": out}, sys.stdout)
        print()
    return 0


def cmd_heatmap(args) -> int:
    params = _load_params(args)
    S = _single_structure(args.structures)
    if args.exact:
        window = args.window if args.window is not None else 4
        hm = analysis.exact_heat_map(params, S, window=window)
    else:
        if args.seed is None or args.count is None:
            raise InputError("sampled heat maps require --seed and -n")
        window = args.window if args.window is not None else 8
        draws = sample_ensemble(params, S, args.count, args.seed)
        hm = analysis.sampled_heat_map([d.sequence for d in draws], window=window)
    with open(args.out, "w") as fh:
        fh.write(hm.to_csv())
    if args.pgm:
        with open(args.pgm, "w") as fh:
            fh.write(hm.to_pgm(saturation=args.saturation))
    print(f"heatmap {hm.provenance} window={hm.window} -> {args.out}", file=sys.stderr)
    return 0


def cmd_signature(args) -> int:
    params = _load_params(args)
    S = _single_structure(args.structures)
    draws = sample_ensemble(params, S, args.count, args.seed)
    report = analysis.signature_report(
        params, S, draws, baseline_count=args.baselines, seed=args.seed, threads=args.threads
    )
    payload = {
        "schema": SCHEMA,
        "params": _params_meta(params),
        "structure": S.to_dot_bracket(),
        "ensemble_size": args.count,
        "seed": args.seed,
        "ifr": report.ifr,
        "delta_eta": {
            "median": report.delta_stats.median,
            "q1": report.delta_stats.q1,
            "q3": report.delta_stats.q3,
        },
        "baselines": [
            {
                "structure": b.structure.to_dot_bracket(),
                "ifr": b.ifr,
                "delta_eta": {
                    "median": b.delta_stats.median,
                    "q1": b.delta_stats.q1,
                    "q3": b.delta_stats.q3,
                },
            }
            for b in report.baselines
        ],
    }
    if args.full:
        payload["delta_etas"] = list(report.delta_etas)
        payload["refold_flags"] = [bool(f) for f in report.refold_flags]
    json.dump(payload, sys.stdout)
    print()
    return 0


def cmd_mi(args) -> int:
    from concurrent.futures import ThreadPoolExecutor

    params = _load_params(args)
    S = _single_structure(args.structures)
    log_q_struct = partition_function(params, S).log_q
    entries = read_sequences(args.sequences)
    for name, seq in entries:
        if len(seq) != S.n:
            raise InputError(f"sequence {name} has length {len(seq)}, structure needs {S.n}")
    workers = max(1, args.threads or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        log_q_seqs = list(pool.map(lambda e: mccaskill_partition(params, e[1]), entries))
    out = []
    for (name, seq), log_q_seq in zip(entries, log_q_seqs):
        score = analysis.mi_score(params, seq, S, log_q_struct, log_q_seq)
        if args.json:
            out.append(
                {
                    "name": name,
                    "sequence": seq,
                    "energy": _json_num(structure_energy(params, seq, S)),
                    "log_q_sequence": _json_num(log_q_seq),
                    "mi_sign": score.sign,
                    "mi_log_magnitude": _json_num(score.log_magnitude),
                }
            )
        else:
            print(f"{score.sign:+d} {_fmt(score.log_magnitude)}")
    if args.json:
        json.dump(
            {
                "schema": SCHEMA,
                "params": _params_meta(params),
                "structure": S.to_dot_bracket(),
                "log_q_structure": _json_num(log_q_struct),
                "results": out,
            },
            sys.stdout,
        )
        print()
    return 0


def cmd_random_structures(args) -> int:
    for k in range(args.count):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=args.seed, spawn_key=(k,)))
        S = sample_uniform_structure(args.length, rng)
        if args.format == "pairs":
            sys.stdout.write(S.to_pair_lines())
        else:
            print(S.to_dot_bracket())
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--params", default=None, help="energy parameter file (default: shipped set)")
    p.add_argument("--temperature", type=float, default=None, help="temperature in Kelvin")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqsem",
        description="Sequence ensembles of a fixed RNA secondary structure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="log partition function over sequences, log Q(S)")
    p.add_argument("structures", help="dot-bracket file, pair-list file, or - for stdin")
    p.add_argument("--json", action="store_true")
    p.add_argument("--arc-tables", action="store_true", help="include per-arc tables (implies --json)")
    _add_common(p)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("pattern", help="pattern partition function and probability")
    p.add_argument("structures")
    p.add_argument("--interval", nargs=2, type=int, required=True, metavar=("I", "J"))
    p.add_argument("--pattern", required=True)
    p.add_argument("--json", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("sample", help="Boltzmann-sample sequences for a structure")
    p.add_argument("structures")
    p.add_argument("-n", "--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=("fasta", "jsonl"), default="fasta")
    _add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fold", help="minimum free energy structure of sequences")
    p.add_argument("sequences", help="FASTA file, raw lines, or - for stdin")
    p.add_argument("--json", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_fold)

    p = sub.add_parser("seqpf", help="log partition function over structures, log Q(sigma)")
    p.add_argument("sequences")
    p.add_argument("--json", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_seqpf)

    p = sub.add_parser("heatmap", help="entropy heat-map (sampled or exact)")
    p.add_argument("structures")
    p.add_argument("-n", "--count", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--window", type=int, default=None, help="default 8 sampled, 4 exact")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--pgm", default=None, help="optional grayscale PGM output path")
    p.add_argument("--saturation", type=float, default=0.59, help="heat rendered black at/above")
    _add_common(p)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("signature", help="IFR and refolding-gap signature vs random baselines")
    p.add_argument("structures")
    p.add_argument("-n", "--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--baselines", type=int, default=5)
    p.add_argument("--threads", type=int, default=os.cpu_count())
    p.add_argument("--full", action="store_true", help="include per-sequence gaps and flags")
    p.add_argument("--json", action="store_true", help="accepted for symmetry; output is JSON")
    _add_common(p)
    p.set_defaults(func=cmd_signature)

    p = sub.add_parser("mi", help="unnormalized mutual-information dominant term")
    p.add_argument("structures")
    p.add_argument("sequences")
    p.add_argument("--json", action="store_true")
    p.add_argument("--threads", type=int, default=os.cpu_count())
    _add_common(p)
    p.set_defaults(func=cmd_mi)

    p = sub.add_parser("random-structures", help="uniform random structures of a given length")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("-n", "--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=("db", "pairs"), default="db")
    p.set_defaults(func=cmd_random_structures)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"seqsem: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:  # pragma: no cover - downstream closed the pipe
        return 0


if __name__ == "__main__":
    sys.exit(main())
