"""Command-line entry point.

Subcommands mirror the pipeline stages: ingest, embed-baseline, align, pairs,
train, wsd, eval.  Every subcommand takes --seed, --threads, and --log-level;
all randomness flows from the seed through named counter-based generators, and
threads default to 1 so determinism is the default.  Each written output file
gets a sibling <out>.manifest.json recording the command, arguments, input
digests, tool version, and seed.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .errors import SenseAlignError
from . import alignment, embedding, head, inventory, pairgen, wsdeval
from .util import sha256_file

log = logging.getLogger("sense_align.cli")

_LOG_LEVELS = ("debug", "info", "warning", "error")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=17, help="root seed for all randomness")
    p.add_argument("--threads", type=int, default=1, help="worker threads (1 = fully serial)")
    p.add_argument(
        "--log-level",
        choices=_LOG_LEVELS,
        default="warning",
        help="diagnostic verbosity (SENSE_ALIGN_LOG overrides)",
    )


def _setup_logging(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    level = os.environ.get("SENSE_ALIGN_LOG", args.log_level).lower()
    if level not in _LOG_LEVELS:
        parser.error(f"invalid log level {level!r} (choose from {', '.join(_LOG_LEVELS)})")
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _write_manifest(
    out_path: str, args: argparse.Namespace, argv: list[str], inputs: list[str], started: float
) -> None:
    manifest = {
        "command": argv[0] if argv else "",
        "arguments": argv,
        "inputs": {path: sha256_file(path) for path in sorted(set(inputs))},
        "tool_version": __version__,
        "seed": args.seed,
        "wall_time_s": round(time.monotonic() - started, 6),
    }
    with open(f"{out_path}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def _load_inventories(paths: list[str], names: list[str] | None, lenient: bool = False):
    if names and len(names) != len(paths):
        raise SenseAlignError(
            f"--name given {len(names)} times for {len(paths)} inventories"
        )
    return [
        inventory.load_inventory(path, name=names[i] if names else None, lenient=lenient)
        for i, path in enumerate(paths)
    ]


def _cmd_ingest(args, argv, started) -> int:
    invs = _load_inventories(args.inventory, args.name, lenient=args.lenient)
    for inv in invs:
        if args.stats:
            print(f"{inv.name}: {inventory.compute_stats(inv).render()}")
        else:
            print(f"{inv.name}: ok ({len(inv.entries)} entries)")
    return 0


def _cmd_embed_baseline(args, argv, started) -> int:
    records: dict[str, embedding.EmbeddingVector] = {}
    inputs = list(args.inventory) + list(args.test)
    for inv in _load_inventories(args.inventory, None):
        for key, vec in embedding.embed_inventory_baseline(inv, args.dim, args.seed).items():
            if key in records:
                raise SenseAlignError(f"duplicate embedding key {key!r} across inputs")
            records[key] = vec
    for test_path in args.test:
        for inst in wsdeval.load_test_file(test_path):
            key = embedding.instance_key(inst.instance_id)
            if key in records:
                raise SenseAlignError(f"duplicate embedding key {key!r} across inputs")
            sentence = inventory.ExampleSentence(inst.text, inst.span)
            records[key] = embedding.baseline_embed_target(
                sentence, inst.lemma, args.dim, args.seed
            )
    store = embedding.EmbeddingStore(args.dim, records)
    embedding.write_store(store, args.out)
    _write_manifest(args.out, args, argv, inputs, started)
    print(f"wrote {len(store)} vectors (dim {store.dim}) to {args.out}")
    return 0


def _cmd_align(args, argv, started) -> int:
    inv_a = inventory.load_inventory(args.inv_a)
    inv_b = inventory.load_inventory(args.inv_b)
    store = embedding.load_store(args.embeddings)
    links = alignment.align_inventories(
        inv_a, inv_b, store, args.threshold, threads=args.threads
    )
    alignment.write_links(links, args.out)
    _write_manifest(args.out, args, argv, [args.inv_a, args.inv_b, args.embeddings], started)
    print(f"wrote {len(links)} links to {args.out}")
    return 0


_PARTITION_NAMES = ("train", "dev", "test")


def _cmd_pairs(args, argv, started) -> int:
    invs = _load_inventories(args.inv, None)
    links = alignment.load_links(args.links) if args.links else []
    if args.mode == "cross":
        if len(invs) != 2:
            raise SenseAlignError("--mode cross needs exactly two --inv files")
        if not args.links:
            raise SenseAlignError("--mode cross needs --links")
        pairs = pairgen.gen_cross_inventory(links, invs[0], invs[1])
    elif args.mode == "within":
        pairs = []
        for inv in invs:
            pairs.extend(pairgen.gen_within_inventory(inv))
    else:
        pairs = pairgen.gen_context_context(invs, links)
    inputs = list(args.inv) + ([args.links] if args.links else [])

    if args.split:
        try:
            ratios = [float(r) for r in args.split.split(",") if r]
        except ValueError:
            raise SenseAlignError(f"--split expects comma-separated fractions, got {args.split!r}")
        partitions = pairgen.split_and_shuffle(pairs, args.seed, ratios)
        out = Path(args.out)
        for i, part in enumerate(partitions):
            if not part:
                continue
            name = _PARTITION_NAMES[i] if i < len(_PARTITION_NAMES) else f"part{i}"
            path = str(out.with_suffix(f".{name}{out.suffix}"))
            pairgen.write_pairs(part, path)
            _write_manifest(path, args, argv, inputs, started)
            pos, neg = pairgen.label_counts(part)
            print(f"wrote {len(part)} pairs ({pos} positive, {neg} negative) to {path}")
    else:
        pairgen.write_pairs(pairs, args.out)
        _write_manifest(args.out, args, argv, inputs, started)
    if args.stats or not args.split:
        pos, neg = pairgen.label_counts(pairs)
        print(f"{args.mode}: {len(pairs)} pairs, {pos} positive, {neg} negative")
    return 0


def _cmd_train(args, argv, started) -> int:
    pair_paths = [p for chunk in args.pairs for p in chunk.split(",") if p]
    pairs = []
    for path in pair_paths:
        pairs.extend(pairgen.load_pairs(path))
    store = embedding.load_store(args.embeddings)
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg_obj = json.load(fh)
        except OSError as exc:
            raise SenseAlignError(f"cannot read config file {args.config}: {exc}")
        except json.JSONDecodeError as exc:
            raise SenseAlignError(f"{args.config}: invalid JSON: {exc}")
        cfg = head.train_config_from_json(cfg_obj, default_seed=args.seed)
    else:
        cfg = head.TrainConfig(seed=args.seed)
    init = head.load_model(args.init, store) if args.init else None
    model = head.train(pairs, store, cfg, init=init)
    head.save_model(model, args.out)
    inputs = pair_paths + [args.embeddings]
    if args.config:
        inputs.append(args.config)
    if args.init:
        inputs.append(args.init)
    _write_manifest(args.out, args, argv, inputs, started)
    final = model.meta["epoch_losses"][-1] if model.meta.get("epoch_losses") else float("nan")
    print(f"trained on {len(pairs)} pairs for {cfg.epochs} epochs, final loss {final:.6f}")
    return 0


def _cmd_wsd(args, argv, started) -> int:
    instances = wsdeval.load_test_file(args.test)
    inputs = [args.test]
    if args.mfs:
        if not args.train_counts:
            raise SenseAlignError("--mfs needs --train-counts")
        counts = wsdeval.load_train_counts(args.train_counts)
        inputs.append(args.train_counts)
        rows = [(inst.instance_id, wsdeval.mfs_baseline(counts, inst), {}) for inst in instances]
    else:
        if not args.model or not args.embeddings:
            raise SenseAlignError("wsd needs --model and --embeddings (or --mfs)")
        store = embedding.load_store(args.embeddings)
        model = head.load_model(args.model, store)
        inputs.extend([args.model, args.embeddings])
        rows = []
        for inst in instances:
            predicted, probs = wsdeval.wsd_predict(model, store, inst)
            rows.append((inst.instance_id, predicted, probs))
    wsdeval.write_predictions(rows, args.out)
    _write_manifest(args.out, args, argv, inputs, started)
    print(f"wrote {len(rows)} predictions to {args.out}")
    return 0


def _cmd_eval(args, argv, started) -> int:
    instances = wsdeval.load_test_file(args.test)
    predictions = wsdeval.load_predictions(args.preds)
    counts = wsdeval.load_train_counts(args.train_counts) if args.train_counts else {}
    try:
        bounds = tuple(int(b) for b in args.buckets.split(",") if b)
    except ValueError:
        raise SenseAlignError(f"--buckets expects comma-separated integers, got {args.buckets!r}")
    bucketing = wsdeval.ShotBucketing(bounds, counts)
    report = wsdeval.score(predictions, instances, bucketing)
    if args.json:
        print(json.dumps(report.to_json_obj(), indent=1))
    else:
        print(report.render())
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="sense-align", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sense-align {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")

    p = sub.add_parser("ingest", help="validate inventories and report statistics")
    p.add_argument("--inventory", action="append", required=True, help="inventory file (repeatable)")
    p.add_argument("--name", action="append", help="inventory name override, one per --inventory")
    p.add_argument("--lenient", action="store_true", help="map unknown POS tags to 'other'")
    p.add_argument("--stats", action="store_true", help="print count statistics")
    p.set_defaults(func=_cmd_ingest)
    _add_common(p)

    p = sub.add_parser("embed-baseline", help="write deterministic baseline embeddings")
    p.add_argument("--inventory", action="append", default=[], help="inventory file (repeatable)")
    p.add_argument("--test", action="append", default=[], help="evaluation instance file (repeatable)")
    p.add_argument("--dim", type=int, default=256, help="embedding dimension")
    p.add_argument("--out", required=True, help="output embedding file")
    p.set_defaults(func=_cmd_embed_baseline)
    _add_common(p)

    p = sub.add_parser("align", help="align the glosses of two inventories")
    p.add_argument("--inv-a", required=True, help="first inventory file")
    p.add_argument("--inv-b", required=True, help="second inventory file")
    p.add_argument("--embeddings", required=True, help="embedding file with g: keys")
    p.add_argument("--threshold", type=float, default=alignment.DEFAULT_THRESHOLD,
                   help="minimum similarity for a link")
    p.add_argument("--out", required=True, help="output links file")
    p.set_defaults(func=_cmd_align)
    _add_common(p)

    p = sub.add_parser("pairs", help="generate labeled equivalence pairs")
    p.add_argument("--mode", required=True, choices=("cross", "within", "context"))
    p.add_argument("--inv", action="append", required=True, help="inventory file (repeatable)")
    p.add_argument("--links", help="alignment links file")
    p.add_argument("--out", required=True, help="output pairs file")
    p.add_argument("--stats", action="store_true", help="print positive/negative counts")
    p.add_argument("--split", help="partition fractions, e.g. 0.8,0.2 (adds train/dev/... suffixes)")
    p.set_defaults(func=_cmd_pairs)
    _add_common(p)

    p = sub.add_parser("train", help="train the equivalence head on pair files")
    p.add_argument("--pairs", action="append", required=True,
                   help="pairs file, repeatable or comma-separated")
    p.add_argument("--embeddings", required=True, help="embedding file")
    p.add_argument("--config", help="JSON training config file")
    p.add_argument("--init", help="continue from this model file")
    p.add_argument("--out", required=True, help="output model file")
    p.set_defaults(func=_cmd_train)
    _add_common(p)

    p = sub.add_parser("wsd", help="predict the best gloss per test instance")
    p.add_argument("--model", help="trained model file")
    p.add_argument("--embeddings", help="embedding file with q: and g: keys")
    p.add_argument("--test", required=True, help="evaluation instance file")
    p.add_argument("--mfs", action="store_true", help="most-frequent-sense baseline instead of the model")
    p.add_argument("--train-counts", help="JSON gloss-id -> training count map (for --mfs)")
    p.add_argument("--out", required=True, help="output predictions file")
    p.set_defaults(func=_cmd_wsd)
    _add_common(p)

    p = sub.add_parser("eval", help="score predictions against gold instances")
    p.add_argument("--preds", required=True, help="predictions file")
    p.add_argument("--test", required=True, help="evaluation instance file")
    p.add_argument("--train-counts", help="JSON gloss-id -> training count map")
    p.add_argument("--buckets", default="0,2,5,10", help="shot bucket boundaries")
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.set_defaults(func=_cmd_eval)
    _add_common(p)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "subcommand", None):
        parser.print_usage(sys.stderr)
        print("sense-align: error: a subcommand is required", file=sys.stderr)
        return 1
    _setup_logging(args, parser)
    started = time.monotonic()
    try:
        return args.func(args, argv, started)
    except SenseAlignError as exc:
        print(f"sense-align: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"sense-align: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
