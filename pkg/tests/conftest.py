"""Shared fixtures: bundled inventories, a hand-embedded alignment fixture,
and a helper that drives the full CLI pipeline into a scratch directory."""

from __future__ import annotations

import io
import json
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np
import pytest

from sense_align.cli import main as cli_main
from sense_align.embedding import EmbeddingStore, EmbeddingVector, embed_inventory_baseline
from sense_align.inventory import load_inventory

DATA = Path(__file__).parent / "data"


def run_cli(argv: list[str]) -> tuple[int, str, str]:
    """Run the CLI in-process; returns (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    try:
        with redirect_stdout(out), redirect_stderr(err):
            code = cli_main([str(a) for a in argv])
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 0
    return code, out.getvalue(), err.getvalue()


def cli_ok(argv: list[str]) -> str:
    code, out, err = run_cli(argv)
    assert code == 0, f"command {argv} failed with code {code}: {err or out}"
    return out


@pytest.fixture(scope="session")
def lex_a():
    return load_inventory(str(DATA / "lex_a.jsonl"))


@pytest.fixture(scope="session")
def lex_b():
    return load_inventory(str(DATA / "lex_b.jsonl"))


@pytest.fixture(scope="session")
def search_invs():
    return tuple(
        load_inventory(str(DATA / f"{name}.jsonl")) for name in ("alpha", "bravo", "charlie")
    )


def _unit8(components: dict[int, float]) -> EmbeddingVector:
    v = np.zeros(8, dtype=np.float32)
    for idx, val in components.items():
        v[idx] = val
    return EmbeddingVector(v)


# Hand-picked definition vectors for the three-inventory "search" fixture.
# Same-meaning glosses share a dominant axis; different meanings are
# orthogonal, so the intended links and scores are known by construction.
SEARCH_VECTORS = {
    "g:alpha:search:verb:0": {0: 1.0},
    "g:alpha:search:verb:1": {1: 1.0},
    "g:bravo:search:verb:0": {1: 0.7, 5: 0.7141428428542851},
    "g:bravo:search:verb:1": {0: 0.9, 3: 0.4358898943540673},
    "g:bravo:search:verb:2": {2: 1.0},
    "g:charlie:search:verb:0": {2: 0.65, 6: 0.7599342076785331},
    "g:charlie:search:verb:1": {0: 0.85, 4: 0.5267826876426369},
}

# (gloss_a, gloss_b, similarity) for every same-meaning pair, per inventory pair.
SEARCH_GOLD = [
    ("alpha:search:verb:0", "bravo:search:verb:1", 0.90),
    ("alpha:search:verb:1", "bravo:search:verb:0", 0.70),
    ("alpha:search:verb:0", "charlie:search:verb:1", 0.85),
    ("bravo:search:verb:1", "charlie:search:verb:1", 0.765),
    ("bravo:search:verb:2", "charlie:search:verb:0", 0.65),
]


@pytest.fixture(scope="session")
def search_store():
    return EmbeddingStore(8, {key: _unit8(c) for key, c in SEARCH_VECTORS.items()})


@pytest.fixture(scope="session")
def baseline_store(lex_a, lex_b):
    records = {}
    for inv in (lex_a, lex_b):
        records.update(embed_inventory_baseline(inv, 256, 17))
    return EmbeddingStore(256, records)


def run_full_pipeline(work: Path, seed: int = 17) -> dict:
    """ingest -> embed-baseline -> align -> pairs -> train -> wsd -> eval."""
    paths = {
        "emb": work / "baseline.semb",
        "links": work / "links.jsonl",
        "cross": work / "cross.jsonl",
        "within": work / "within.jsonl",
        "context": work / "context.jsonl",
        "model": work / "head.json",
        "preds": work / "preds.jsonl",
        "mfs_preds": work / "mfs_preds.jsonl",
    }
    lex_a = DATA / "lex_a.jsonl"
    lex_b = DATA / "lex_b.jsonl"
    test = DATA / "wsd_test.jsonl"
    seed_args = ["--seed", str(seed)]

    cli_ok(["ingest", "--inventory", lex_a, "--inventory", lex_b, "--stats"] + seed_args)
    cli_ok(
        ["embed-baseline", "--inventory", lex_a, "--inventory", lex_b,
         "--test", test, "--dim", "256", "--out", paths["emb"]] + seed_args
    )
    cli_ok(
        ["align", "--inv-a", lex_a, "--inv-b", lex_b, "--embeddings", paths["emb"],
         "--threshold", "0.6", "--out", paths["links"]] + seed_args
    )
    cli_ok(
        ["pairs", "--mode", "cross", "--inv", lex_a, "--inv", lex_b,
         "--links", paths["links"], "--out", paths["cross"]] + seed_args
    )
    cli_ok(
        ["pairs", "--mode", "within", "--inv", lex_a, "--inv", lex_b,
         "--out", paths["within"]] + seed_args
    )
    cli_ok(
        ["pairs", "--mode", "context", "--inv", lex_a, "--inv", lex_b,
         "--links", paths["links"], "--out", paths["context"]] + seed_args
    )
    cli_ok(
        ["train", "--pairs", f"{paths['within']},{paths['cross']}",
         "--embeddings", paths["emb"], "--config", DATA / "train_config.json",
         "--out", paths["model"]] + seed_args
    )
    cli_ok(
        ["wsd", "--model", paths["model"], "--embeddings", paths["emb"],
         "--test", test, "--out", paths["preds"]] + seed_args
    )
    cli_ok(
        ["wsd", "--mfs", "--train-counts", DATA / "mfs_counts.json",
         "--test", test, "--out", paths["mfs_preds"]] + seed_args
    )
    report = json.loads(
        cli_ok(
            ["eval", "--preds", paths["preds"], "--test", test,
             "--train-counts", DATA / "train_counts.json", "--json"] + seed_args
        )
    )
    mfs_report = json.loads(
        cli_ok(
            ["eval", "--preds", paths["mfs_preds"], "--test", test,
             "--train-counts", DATA / "train_counts.json", "--json"] + seed_args
        )
    )
    return {"paths": paths, "report": report, "mfs_report": mfs_report}


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory):
    return run_full_pipeline(tmp_path_factory.mktemp("pipeline"))
