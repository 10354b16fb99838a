"""Command line interface.

Subcommands: ``parse`` (report molecules), ``partition`` (groups and
membership as JSON), ``train`` (fit a model, write checkpoint + trace CSV),
``embed`` (dump tier embeddings for molecules) and ``interp`` (walk the
latent line between two molecules and report decoded edge statistics).

Exit codes: 0 success, 1 when any input line fails to parse, 2 for I/O
problems, 3 when training aborts on a non-finite loss, 4 for checkpoint or
config mismatches.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .models import (
    MoleculeData,
    TieredVgaeParams,
    decode_with_graph_vector,
    encode_tiered,
    encode_tiered_variational,
    interpolate_latent,
    zero_noise,
)
from .molgraph import MoleculeRecord, load_molecules
from .smiles import SmilesError, parse_smiles
from .train import (
    NonFiniteLossError,
    TrainConfig,
    gae_trace_csv,
    train_gae,
    train_vgae,
    vgae_trace_csv,
)

TOP_EDGES = 10


def _dims(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected D1,D2,D3, got {text!r}")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from None
    if any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"dims must be positive, got {text!r}")
    return dims  # type: ignore[return-value]


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _non_negative_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text!r}")
    return value


def _steps(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"steps must be at least 2, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moltiers",
        description="Tiered graph autoencoders for molecules.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    cmd = commands.add_parser("parse", help="parse molecules and report sizes")
    cmd.add_argument("--input", required=True, help="molecule file: one SMILES [name] per line")
    cmd.set_defaults(handler=cmd_parse)

    cmd = commands.add_parser("partition", help="emit groups and membership matrices as JSON")
    cmd.add_argument("--input", required=True, help="molecule file")
    cmd.add_argument("--out", help="output JSON path (default: stdout)")
    cmd.set_defaults(handler=cmd_partition)

    cmd = commands.add_parser("train", help="train a model, write checkpoint and trace CSV")
    cmd.add_argument("--input", required=True, help="molecule file")
    cmd.add_argument("--out", required=True, help="output directory for checkpoint.json and trace.csv")
    cmd.add_argument("--model", choices=("gae", "vgae"), default="gae")
    cmd.add_argument("--dims", type=_dims, default=(16, 16, 16), help="tier widths D1,D2,D3")
    cmd.add_argument("--layers", type=_positive_int, default=3, help="GNN layers per tier")
    cmd.add_argument("--lr", type=_positive_float, default=0.01, help="learning rate")
    cmd.add_argument("--epochs", type=_non_negative_int, default=200)
    cmd.add_argument("--seed", type=int, default=0)
    cmd.add_argument("--optimizer", choices=("sgd", "adam"), default="adam")
    cmd.add_argument("--beta", type=_non_negative_float, default=1.0, help="KL weight (vgae)")
    cmd.add_argument("--lambda-x", type=_non_negative_float, default=0.1, dest="lambda_x",
                     help="feature reconstruction weight")
    cmd.set_defaults(handler=cmd_train)

    cmd = commands.add_parser("embed", help="dump embeddings at a chosen tier")
    cmd.add_argument("checkpoint", help="checkpoint JSON written by train")
    cmd.add_argument("--input", required=True, help="molecule file")
    cmd.add_argument("--tier", choices=("node", "group", "graph"), default="graph")
    cmd.add_argument("--out", help="output JSON path (default: stdout)")
    cmd.set_defaults(handler=cmd_embed)

    cmd = commands.add_parser("interp", help="interpolate between two molecules in latent space")
    cmd.add_argument("checkpoint", help="checkpoint JSON written by train")
    cmd.add_argument("smiles_a", help="first endpoint SMILES")
    cmd.add_argument("smiles_b", help="second endpoint SMILES")
    cmd.add_argument("--steps", type=_steps, default=5, help="points on the path, endpoints included")
    cmd.add_argument("--out", help="output JSON path (default: stdout)")
    cmd.set_defaults(handler=cmd_interp)

    return parser


def _report_failures(records: list[MoleculeRecord]) -> int:
    failures = 0
    for record in records:
        if record.error is not None:
            failures += 1
            print(f"line {record.line_number}: {record.error}", file=sys.stderr)
    return failures


def _matrix_doc(array: np.ndarray) -> dict:
    array = np.asarray(array, dtype=np.float64)
    return {"shape": list(array.shape), "rows": array.tolist()}


def _write_json(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load_dataset(path: str) -> tuple[list[MoleculeData], int]:
    """Parse a molecule file into model inputs; returns (dataset, failures)."""
    records = load_molecules(path)
    failures = _report_failures(records)
    dataset = [
        MoleculeData.from_graph(record.graph) for record in records if record.graph is not None
    ]
    return dataset, failures


def cmd_parse(args) -> int:
    records = load_molecules(args.input)
    failures = _report_failures(records)
    for record in records:
        graph = record.graph
        if graph is None:
            continue
        print(
            f"{graph.name}: atoms={graph.num_atoms} bonds={graph.num_bonds} "
            f"rings={graph.ring_count} formula={graph.formula()}"
        )
    return 1 if failures else 0


def cmd_partition(args) -> int:
    records = load_molecules(args.input)
    failures = _report_failures(records)
    molecules = []
    for record in records:
        graph = record.graph
        if graph is None:
            continue
        data = MoleculeData.from_graph(graph)
        groups = []
        for group in data.group_set:
            member_atoms = [graph.atoms[i] for i in group.atoms]
            counts: dict[str, int] = {}
            for atom in member_atoms:
                counts[atom.element] = counts.get(atom.element, 0) + 1
            ordered = [e for e in ("C", "H") if e in counts]
            ordered += sorted(e for e in counts if e not in ("C", "H"))
            formula = "".join(f"{e}{counts[e]}" if counts[e] > 1 else e for e in ordered)
            groups.append({"kind": group.kind, "atoms": list(group.atoms), "formula": formula})
        molecules.append(
            {
                "name": graph.name,
                "smiles": graph.smiles,
                "num_atoms": graph.num_atoms,
                "groups": groups,
                "membership": _matrix_doc(data.node_to_group),
            }
        )
    _write_json({"molecules": molecules}, args.out)
    return 1 if failures else 0


def cmd_train(args) -> int:
    dataset, failures = _load_dataset(args.input)
    if failures:
        return 1
    if not dataset:
        print("no molecules to train on", file=sys.stderr)
        return 1
    config = TrainConfig(
        dims=args.dims,
        depth=args.layers,
        learning_rate=args.lr,
        epochs=args.epochs,
        seed=args.seed,
        optimizer=args.optimizer,
        beta=args.beta,
        feature_weight=args.lambda_x,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.model == "vgae":
        params, trace = train_vgae(dataset, config)
        csv_text = vgae_trace_csv(trace)
        final = f"final elbo {trace[-1].elbo}" if trace else "no epochs run"
    else:
        params, trace = train_gae(dataset, config)
        csv_text = gae_trace_csv(trace)
        final = f"final loss {trace[-1]}" if trace else "no epochs run"

    checkpoint_path = out_dir / "checkpoint.json"
    trace_path = out_dir / "trace.csv"
    save_checkpoint(params, checkpoint_path)
    trace_path.write_text(csv_text, encoding="utf-8")
    print(
        f"trained {args.model} on {len(dataset)} molecules for {config.epochs} epochs; "
        f"{final}; checkpoint: {checkpoint_path}; trace: {trace_path}"
    )
    return 0


def _encode(params, data: MoleculeData):
    if isinstance(params, TieredVgaeParams):
        embeddings, _ = encode_tiered_variational(params, data, zero_noise)
        return embeddings
    return encode_tiered(params, data)


def cmd_embed(args) -> int:
    params = load_checkpoint(args.checkpoint)
    records = load_molecules(args.input)
    failures = _report_failures(records)
    molecules = []
    try:
        with ad.no_grad():
            for record in records:
                graph = record.graph
                if graph is None:
                    continue
                data = MoleculeData.from_graph(graph)
                embeddings = _encode(params, data)
                doc = {
                    "name": graph.name,
                    "smiles": graph.smiles,
                    "membership_node_to_group": _matrix_doc(data.node_to_group),
                    "membership_group_to_graph": _matrix_doc(data.group_to_graph),
                }
                if args.tier == "node":
                    doc["embeddings"] = _matrix_doc(embeddings.node.values)
                    doc["elements"] = [atom.element for atom in graph.atoms]
                elif args.tier == "group":
                    doc["embeddings"] = _matrix_doc(embeddings.group.values)
                    doc["group_kinds"] = data.group_set.kinds
                else:
                    doc["embeddings"] = _matrix_doc(embeddings.graph.values)
                molecules.append(doc)
    except ad.ShapeError as err:
        print(f"checkpoint does not fit these molecules: {err}", file=sys.stderr)
        return 4
    _write_json({"tier": args.tier, "molecules": molecules}, args.out)
    return 1 if failures else 0


def cmd_interp(args) -> int:
    params = load_checkpoint(args.checkpoint)
    try:
        graph_a = parse_smiles(args.smiles_a, name="a")
        graph_b = parse_smiles(args.smiles_b, name="b")
    except SmilesError as err:
        print(f"cannot parse endpoint: {err}", file=sys.stderr)
        return 1
    try:
        with ad.no_grad():
            data_a = MoleculeData.from_graph(graph_a)
            data_b = MoleculeData.from_graph(graph_b)
            emb_a = _encode(params, data_a)
            emb_b = _encode(params, data_b)
            start = emb_a.graph.values.reshape(-1)
            end = emb_b.graph.values.reshape(-1)
            path = interpolate_latent(start, end, args.steps)

            decoded = []
            alphas = np.linspace(0.0, 1.0, args.steps)
            for alpha, vector in zip(alphas, path):
                # Decoded statistics only: the probabilities live in the first
                # endpoint's atom frame with its molecule-tier rows swapped for
                # the interpolated vector. No molecules are decoded.
                probs = decode_with_graph_vector(params, emb_a, vector)
                n = probs.shape[0]
                pairs = [
                    (float(probs[i, j]), i, j) for i in range(n) for j in range(i + 1, n)
                ]
                pairs.sort(key=lambda entry: (-entry[0], entry[1], entry[2]))
                mean_prob = float(np.mean([p for p, _, _ in pairs])) if pairs else 0.0
                decoded.append(
                    {
                        "alpha": float(alpha),
                        "mean_edge_probability": mean_prob,
                        "top_edges": [
                            {"first": i, "second": j, "probability": p}
                            for p, i, j in pairs[:TOP_EDGES]
                        ],
                    }
                )
    except ad.ShapeError as err:
        print(f"checkpoint does not fit these molecules: {err}", file=sys.stderr)
        return 4

    doc = {
        "endpoints": {
            "a": {"smiles": graph_a.smiles, "embedding": start.tolist()},
            "b": {"smiles": graph_b.smiles, "embedding": end.tolist()},
        },
        "steps": args.steps,
        "vectors": [v.tolist() for v in path],
        "decoded": decoded,
    }
    _write_json(doc, args.out)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 2
    except CheckpointError as err:
        print(f"checkpoint error: {err}", file=sys.stderr)
        return 4
    except NonFiniteLossError as err:
        print(f"training aborted: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
