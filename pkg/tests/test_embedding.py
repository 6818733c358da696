"""Frozen literals here were computed by an independent reimplementation of
the hashing embedder (separate FNV walk, tokenizer, and float32 rounding)."""

from __future__ import annotations

import math
import struct

import numpy as np
import pytest

from sense_align.embedding import (
    MIN_DIM,
    EmbeddingStore,
    EmbeddingVector,
    baseline_embed_sentence,
    baseline_embed_target,
    cosine,
    embed_inventory_baseline,
    example_key,
    gloss_key,
    instance_key,
    load_store,
    resolve_target_span,
    write_store,
)
from sense_align.errors import DataError
from sense_align.inventory import ExampleSentence

SENTENCE = "The cat sat on the mat"

SENTENCE_VEC_D8_S17 = [
    -0.6324555277824402, 0.0, 0.0, 0.0, 0.0,
    -0.3162277638912201, -0.3162277638912201, 0.6324555277824402,
]

TARGET_VEC_D8_S17 = [
    -0.7236937880516052, 0.0, 0.0, 0.0, 0.0,
    -0.5216089487075806, -0.20208482444286346, 0.40416964888572693,
]


def test_embedding_vector_validates_shape_and_finiteness():
    with pytest.raises(DataError):
        EmbeddingVector(np.zeros((2, 2), dtype=np.float32))
    with pytest.raises(DataError):
        EmbeddingVector(np.array([], dtype=np.float32))
    with pytest.raises(DataError, match="non-finite"):
        EmbeddingVector(np.array([1.0, float("nan")], dtype=np.float32))


def test_embedding_vector_is_read_only():
    vec = EmbeddingVector(np.ones(4, dtype=np.float32))
    with pytest.raises(ValueError):
        vec.values[0] = 2.0


def test_embedding_vector_equality_is_bitwise():
    a = EmbeddingVector(np.array([1.0, -0.0], dtype=np.float32))
    b = EmbeddingVector(np.array([1.0, 0.0], dtype=np.float32))
    assert a == EmbeddingVector(np.array([1.0, -0.0], dtype=np.float32))
    assert a != b


def test_sentence_vector_matches_frozen_value():
    vec = baseline_embed_sentence(SENTENCE, 8, 17)
    assert vec.values.dtype == np.float32
    assert vec.values.tolist() == SENTENCE_VEC_D8_S17


def test_target_vector_matches_frozen_value():
    sentence = ExampleSentence(SENTENCE, (8, 14))
    vec = baseline_embed_target(sentence, "sat", 8, 17)
    assert vec.values.tolist() == TARGET_VEC_D8_S17


def test_sentence_vector_has_unit_norm():
    vec = baseline_embed_sentence(SENTENCE, 64, 17).values.astype(np.float64)
    assert math.fsum(x * x for x in vec) == pytest.approx(1.0, abs=1e-7)


def test_single_token_sentence_target_equals_sentence_vector():
    sentence = ExampleSentence("mat", (0, 3))
    assert baseline_embed_target(sentence, "mat", 8, 17) == baseline_embed_sentence(
        "mat", 8, 17
    )


def test_embedder_is_deterministic_and_seed_sensitive():
    a = baseline_embed_sentence(SENTENCE, 32, 17)
    assert a == baseline_embed_sentence(SENTENCE, 32, 17)
    assert a != baseline_embed_sentence(SENTENCE, 32, 18)


def test_embedder_ignores_token_order():
    a = baseline_embed_sentence("alpha beta gamma", 16, 17)
    b = baseline_embed_sentence("gamma  alpha, beta!", 16, 17)
    assert a == b


def test_embedder_lowercases_and_splits_on_non_alphanumerics():
    assert baseline_embed_sentence("Cat-Mat", 16, 17) == baseline_embed_sentence(
        "cat mat", 16, 17
    )


def test_tokenless_text_yields_the_zero_vector():
    vec = baseline_embed_sentence("?! ... --", 8, 17)
    assert vec.is_zero
    with pytest.raises(DataError, match="zero vector"):
        cosine(vec, vec)


def test_dim_below_minimum_is_rejected():
    with pytest.raises(DataError, match=str(MIN_DIM)):
        baseline_embed_sentence(SENTENCE, MIN_DIM - 1, 17)
    with pytest.raises(DataError, match=str(MIN_DIM)):
        baseline_embed_target(ExampleSentence("mat", (0, 3)), "mat", 4, 17)


def test_cosine_matches_frozen_hand_value():
    u = EmbeddingVector(np.array([1.0, 2.0, 3.0], dtype=np.float32))
    v = EmbeddingVector(np.array([4.0, 5.0, 6.0], dtype=np.float32))
    assert cosine(u, v) == pytest.approx(0.9746318461970762, abs=1e-15)


def test_cosine_of_disjoint_vocabulary_sentences_with_no_collisions():
    u = baseline_embed_sentence("to look for something", 256, 17)
    v = baseline_embed_sentence("machines compute quickly", 256, 17)
    assert cosine(u, v) == 0.0


def test_cosine_matches_frozen_value_with_bucket_collisions():
    s1 = "the quick brown fox jumps over the lazy dog near a river bank today"
    s2 = (
        "quantum processors entangle photons while superconducting circuits "
        "amplify microwave signals efficiently"
    )
    u = baseline_embed_sentence(s1, 32, 17)
    v = baseline_embed_sentence(s2, 32, 17)
    assert cosine(u, v) == pytest.approx(-0.2760262237369417, abs=1e-15)


def test_cosine_is_exactly_symmetric():
    rng = np.random.default_rng(3)
    for _ in range(20):
        u = EmbeddingVector(rng.normal(size=33).astype(np.float32))
        v = EmbeddingVector(rng.normal(size=33).astype(np.float32))
        assert cosine(u, v) == cosine(v, u)


def test_cosine_is_clamped_and_scale_invariant():
    u = EmbeddingVector(np.array([0.1, 0.2, -0.3], dtype=np.float32))
    scaled = EmbeddingVector(u.values * 7.0)
    neg = EmbeddingVector(-u.values)
    assert cosine(u, u) == pytest.approx(1.0, abs=1e-15)
    assert cosine(u, scaled) == pytest.approx(1.0, abs=1e-12)
    assert cosine(u, neg) == pytest.approx(-1.0, abs=1e-12)
    # The clamp guarantees the mathematical range even under rounding.
    assert -1.0 <= cosine(u, scaled) <= 1.0
    assert -1.0 <= cosine(u, neg) <= 1.0


def test_cosine_rejects_dim_mismatch():
    u = EmbeddingVector(np.ones(8, dtype=np.float32))
    v = EmbeddingVector(np.ones(9, dtype=np.float32))
    with pytest.raises(DataError, match="dim mismatch"):
        cosine(u, v)


def test_resolve_target_span_prefers_the_explicit_span():
    sentence = ExampleSentence("bank on the bank", (12, 16))
    assert resolve_target_span(sentence, "bank") == (12, 16)


def test_resolve_target_span_falls_back_to_first_match():
    sentence = ExampleSentence("The Bank opened early")
    assert resolve_target_span(sentence, "bank") == (4, 8)
    with pytest.raises(DataError, match="not found"):
        resolve_target_span(ExampleSentence("no match here"), "bank")


def test_target_span_covering_no_token_is_rejected():
    sentence = ExampleSentence("ab -- cd", (3, 5))
    with pytest.raises(DataError, match="covers no token"):
        baseline_embed_target(sentence, "ab", 8, 17)


def test_store_lookup_failure_names_the_key():
    store = EmbeddingStore(8, {"g:a": EmbeddingVector(np.ones(8, dtype=np.float32))})
    assert "g:a" in store
    assert len(store) == 1
    with pytest.raises(DataError, match="'g:missing'"):
        store.get("g:missing")


def test_store_rejects_mixed_dimensions():
    with pytest.raises(DataError, match="dim"):
        EmbeddingStore(
            8,
            {
                "a": EmbeddingVector(np.ones(8, dtype=np.float32)),
                "b": EmbeddingVector(np.ones(16, dtype=np.float32)),
            },
        )


def _tiny_store() -> EmbeddingStore:
    return EmbeddingStore(
        8,
        {
            "g:inv:w:noun:0": baseline_embed_sentence("first meaning", 8, 17),
            "g:inv:w:noun:1": baseline_embed_sentence("second meaning", 8, 17),
            "q:t1": baseline_embed_sentence("a query context", 8, 17),
        },
    )


def test_store_round_trip_is_exact(tmp_path):
    store = _tiny_store()
    path = tmp_path / "vectors.semb"
    write_store(store, str(path))
    loaded = load_store(str(path))
    assert loaded.dim == store.dim
    assert set(loaded.records) == set(store.records)
    for key, vec in store.records.items():
        assert loaded.records[key] == vec


def test_store_file_is_canonical_regardless_of_insertion_order(tmp_path):
    records = _tiny_store().records
    reversed_records = dict(reversed(list(records.items())))
    p1, p2 = tmp_path / "a.semb", tmp_path / "b.semb"
    write_store(EmbeddingStore(8, records), str(p1))
    write_store(EmbeddingStore(8, reversed_records), str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_load_store_rejects_corruption(tmp_path):
    path = tmp_path / "vectors.semb"
    write_store(_tiny_store(), str(path))
    blob = path.read_bytes()

    bad = tmp_path / "bad.semb"
    bad.write_bytes(b"XEMB" + blob[4:])
    with pytest.raises(DataError, match="bad magic"):
        load_store(str(bad))

    bad.write_bytes(blob[:4] + b"\x09" + blob[5:])
    with pytest.raises(DataError, match="version"):
        load_store(str(bad))

    bad.write_bytes(blob[:-3])
    with pytest.raises(DataError, match="truncated"):
        load_store(str(bad))

    bad.write_bytes(blob + b"x")
    with pytest.raises(DataError, match="trailing"):
        load_store(str(bad))

    bad.write_bytes(blob[:-4] + struct.pack("<f", float("nan")))
    with pytest.raises(DataError, match="non-finite"):
        load_store(str(bad))

    with pytest.raises(DataError, match="cannot read"):
        load_store(str(tmp_path / "absent.semb"))


def test_load_store_rejects_duplicate_keys(tmp_path):
    header = struct.pack("<4sBIQ", b"SEMB", 1, 8, 2)
    record = struct.pack("<H", 3) + b"g:a" + np.ones(8, dtype="<f4").tobytes()
    path = tmp_path / "dup.semb"
    path.write_bytes(header + record + record)
    with pytest.raises(DataError, match="duplicate key"):
        load_store(str(path))


def test_key_helpers_compose_canonical_ids():
    assert gloss_key("wn:bank:noun:0") == "g:wn:bank:noun:0"
    assert example_key("wn:bank:noun:0", 2) == "c:wn:bank:noun:0:2"
    assert instance_key("t7") == "q:t7"


def test_embed_inventory_baseline_covers_all_glosses_and_examples(lex_a):
    records = embed_inventory_baseline(lex_a, 16, 17)
    expected = set()
    for gloss in lex_a.all_glosses():
        expected.add(gloss_key(gloss.id))
        for i, example in enumerate(gloss.examples):
            expected.add(example_key(gloss.id, i))
            assert records[example_key(gloss.id, i)] == baseline_embed_target(
                example, gloss.lemma, 16, 17
            )
    assert set(records) == expected
