"""Word-sense disambiguation inference and the evaluation suite.

Disambiguation scores every candidate gloss of the target word with the
equivalence head and takes the argmax.  Evaluation reports micro-F1 (equal to
accuracy here, since every instance gets exactly one prediction) overall, per
POS, and per training-shot bucket, plus a most-frequent-sense baseline and an
accuracy table for human judgments of alignment links.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .alignment import AlignmentLink
from .embedding import EmbeddingStore, gloss_key, instance_key
from .errors import DataError
from .head import HeadModel, predict
from .inventory import GlossId, PosTag

log = logging.getLogger("sense_align.wsdeval")

DEFAULT_BUCKET_BOUNDS = (0, 2, 5, 10)

POS_CELLS = ("noun", "verb", "adj", "adv", "other")


@dataclass(frozen=True)
class WsdInstance:
    instance_id: str
    text: str
    span: tuple[int, int]
    lemma: str
    pos: PosTag
    candidates: tuple[GlossId, ...]
    gold: tuple[GlossId, ...]

    def __post_init__(self) -> None:
        if not self.instance_id:
            raise DataError("instance id must be non-empty")
        start, end = self.span
        if not (0 <= start < end <= len(self.text)):
            raise DataError(f"instance {self.instance_id}: span out of bounds")
        if not self.candidates:
            raise DataError(f"instance {self.instance_id}: empty candidate list")
        if not self.gold:
            raise DataError(f"instance {self.instance_id}: empty gold set")
        missing = set(self.gold) - set(self.candidates)
        if missing:
            raise DataError(
                f"instance {self.instance_id}: gold glosses not among candidates: "
                + ", ".join(sorted(str(g) for g in missing))
            )


@dataclass(frozen=True)
class ShotBucketing:
    """Partition of the non-negative integers by training-instance count.

    boundaries (b0 < b1 < ... < bk) induce buckets [0..b0], [b0+1..b1], ...,
    and (bk..inf).  counts maps each sense to its training-instance number;
    senses absent from the map count as 0.
    """

    boundaries: tuple[int, ...] = DEFAULT_BUCKET_BOUNDS
    counts: Mapping[GlossId, int] = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if not self.boundaries or self.boundaries[0] < 0:
            raise DataError("bucket boundaries must start at a non-negative integer")
        if list(self.boundaries) != sorted(set(self.boundaries)):
            raise DataError("bucket boundaries must be strictly increasing")
        if self.counts is None:
            object.__setattr__(self, "counts", {})

    def labels(self) -> list[str]:
        out = []
        lo = 0
        for b in self.boundaries:
            out.append(str(b) if lo == b else f"{lo}-{b}")
            lo = b + 1
        out.append(f"{self.boundaries[-1]}+")
        return out

    def bucket_of_count(self, count: int) -> str:
        if count < 0:
            raise DataError(f"negative training count {count}")
        lo = 0
        for b in self.boundaries:
            if count <= b:
                return str(b) if lo == b else f"{lo}-{b}"
            lo = b + 1
        return f"{self.boundaries[-1]}+"

    def bucket_of_instance(self, inst: WsdInstance) -> str:
        # Multi-gold instances bucket by their best-trained gold sense.
        count = max(self.counts.get(g, 0) for g in inst.gold)
        return self.bucket_of_count(count)


@dataclass(frozen=True)
class Cell:
    correct: int
    total: int

    @property
    def f1(self) -> float:
        """Micro-F1 as a percentage; single-prediction setting makes P = R = F1."""
        return 100.0 * self.correct / self.total if self.total else 0.0

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass(frozen=True)
class EvalReport:
    overall: Cell
    per_pos: dict[str, Cell]
    per_bucket: dict[str, Cell]

    @property
    def f1_overall(self) -> float:
        return self.overall.f1

    def render(self) -> str:
        lines = [f"overall      F1 {self.overall.f1:6.1f}  ({self.overall.correct}/{self.overall.total})"]
        for pos, cell in self.per_pos.items():
            lines.append(f"pos {pos:<9} F1 {cell.f1:6.1f}  ({cell.correct}/{cell.total})")
        for label, cell in self.per_bucket.items():
            lines.append(f"shots {label:<7} F1 {cell.f1:6.1f}  ({cell.correct}/{cell.total})")
        return "\n".join(lines)

    def to_json_obj(self) -> dict:
        def cell_obj(c: Cell) -> dict:
            return {"correct": c.correct, "total": c.total, "f1": c.f1}

        return {
            "overall": cell_obj(self.overall),
            "per_pos": {k: cell_obj(v) for k, v in self.per_pos.items()},
            "per_bucket": {k: cell_obj(v) for k, v in self.per_bucket.items()},
        }


def wsd_predict(
    model: HeadModel, store: EmbeddingStore, inst: WsdInstance
) -> tuple[GlossId, dict[GlossId, float]]:
    """Argmax of the equivalence probability over candidate glosses.

    Exactly equal probabilities go to the lowest gloss index, so candidate
    order never matters.
    """
    u = store.get(instance_key(inst.instance_id))
    probs: dict[GlossId, float] = {}
    best: GlossId | None = None
    best_p = float("-inf")
    for gid in inst.candidates:
        p = predict(model, u, store.get(gloss_key(gid)))
        probs[gid] = p
        if p > best_p or (p == best_p and best is not None and gid.index < best.index):
            best, best_p = gid, p
    assert best is not None
    return best, probs


def mfs_baseline(train_counts: Mapping[GlossId, int], inst: WsdInstance) -> GlossId:
    """Highest training count wins; ties to the lowest gloss index; an
    all-zero row falls back to the first listed candidate."""
    counts = [train_counts.get(g, 0) for g in inst.candidates]
    if all(c == 0 for c in counts):
        return inst.candidates[0]
    best = inst.candidates[0]
    best_c = counts[0]
    for gid, c in zip(inst.candidates[1:], counts[1:]):
        if c > best_c or (c == best_c and gid.index < best.index):
            best, best_c = gid, c
    return best


def score(
    predictions: Mapping[str, GlossId],
    instances: Sequence[WsdInstance],
    bucketing: ShotBucketing | None = None,
) -> EvalReport:
    """Instance correct iff its prediction is one of the gold glosses."""
    bucketing = bucketing or ShotBucketing()
    known = {inst.instance_id for inst in instances}
    if len(known) != len(instances):
        raise DataError("duplicate instance ids in the test set")
    unknown = set(predictions) - known
    if unknown:
        raise DataError(f"predictions for unknown instances: {sorted(unknown)[:5]}")
    missing = known - set(predictions)
    if missing:
        raise DataError(f"instances without a prediction: {sorted(missing)[:5]}")

    pos_cells = {p: [0, 0] for p in POS_CELLS}
    bucket_cells = {label: [0, 0] for label in bucketing.labels()}
    correct_total = 0
    for inst in instances:
        correct = predictions[inst.instance_id] in inst.gold
        correct_total += correct
        pc = pos_cells[inst.pos.value]
        pc[0] += correct
        pc[1] += 1
        bc = bucket_cells[bucketing.bucket_of_instance(inst)]
        bc[0] += correct
        bc[1] += 1
    return EvalReport(
        overall=Cell(correct_total, len(instances)),
        per_pos={p: Cell(c, t) for p, (c, t) in pos_cells.items()},
        per_bucket={b: Cell(c, t) for b, (c, t) in bucket_cells.items()},
    )


@dataclass(frozen=True)
class AccuracyTable:
    overall: Cell
    per_pos: dict[str, Cell]

    def render(self) -> str:
        lines = [f"overall      accuracy {self.overall.accuracy:.2f}  ({self.overall.correct}/{self.overall.total})"]
        for pos, cell in self.per_pos.items():
            lines.append(
                f"pos {pos:<9} accuracy {cell.accuracy:.2f}  ({cell.correct}/{cell.total})"
            )
        return "\n".join(lines)


def score_alignment_judgments(
    links: Sequence[AlignmentLink], judgments: Mapping[tuple[str, str], bool]
) -> AccuracyTable:
    """Accuracy of links against human correct/incorrect judgments.

    Judgment keys are (gloss_a, gloss_b) canonical id strings; every judged
    key must name an existing link.  Unjudged links are simply not counted.
    """
    by_key = {(str(link.gloss_a), str(link.gloss_b)): link for link in links}
    unknown = set(judgments) - set(by_key)
    if unknown:
        raise DataError(f"judgments for unknown links: {sorted(unknown)[:5]}")
    pos_cells = {p: [0, 0] for p in POS_CELLS}
    correct_total = 0
    for key, is_correct in judgments.items():
        link = by_key[key]
        cell = pos_cells[link.pos.value]
        cell[0] += bool(is_correct)
        cell[1] += 1
        correct_total += bool(is_correct)
    return AccuracyTable(
        overall=Cell(correct_total, len(judgments)),
        per_pos={p: Cell(c, t) for p, (c, t) in pos_cells.items()},
    )


def load_test_file(path: str) -> list[WsdInstance]:
    """{id, lemma, pos, context, start, end, candidates, gold} per line."""
    instances = []
    seen: set[str] = set()
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read test file {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{where}: invalid JSON: {exc}") from None
            try:
                inst = WsdInstance(
                    instance_id=str(obj["id"]),
                    text=obj["context"],
                    span=(int(obj["start"]), int(obj["end"])),
                    lemma=obj["lemma"],
                    pos=PosTag.parse(obj["pos"]),
                    candidates=tuple(GlossId.parse(g) for g in obj["candidates"]),
                    gold=tuple(GlossId.parse(g) for g in obj["gold"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{where}: malformed instance: {exc}") from None
            except DataError as exc:
                raise DataError(f"{where}: {exc}") from None
            if inst.instance_id in seen:
                raise DataError(f"{where}: duplicate instance id {inst.instance_id!r}")
            seen.add(inst.instance_id)
            instances.append(inst)
    return instances


def write_predictions(
    rows: Iterable[tuple[str, GlossId, Mapping[GlossId, float]]], path: str
) -> None:
    """{id, predicted, probs} per line, probs keyed by canonical gloss id."""
    with open(path, "w", encoding="utf-8") as fh:
        for instance_id, predicted, probs in rows:
            obj = {
                "id": instance_id,
                "predicted": str(predicted),
                "probs": {str(g): p for g, p in probs.items()},
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_predictions(path: str) -> dict[str, GlossId]:
    preds: dict[str, GlossId] = {}
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read predictions file {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
                instance_id = str(obj["id"])
                predicted = GlossId.parse(obj["predicted"])
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise DataError(f"{where}: malformed prediction: {exc}") from None
            if instance_id in preds:
                raise DataError(f"{where}: duplicate prediction for {instance_id!r}")
            preds[instance_id] = predicted
    return preds


def load_train_counts(path: str) -> dict[GlossId, int]:
    """JSON object mapping canonical gloss id to training-instance count."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read counts file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise DataError(f"{path}: counts file must be a JSON object")
    counts: dict[GlossId, int] = {}
    for key, value in obj.items():
        if not isinstance(value, int) or value < 0:
            raise DataError(f"{path}: count for {key!r} must be a non-negative integer")
        counts[GlossId.parse(key)] = value
    return counts
