"""Word-sense inventory data model, line-delimited ingestion, and statistics.

An inventory file is UTF-8 JSON lines, one headword entry per line:

    {"lemma": "search", "pos": "verb",
     "glosses": [{"definition": "...",
                  "examples": [{"text": "...",
                                "target_start": 4, "target_end": 10}]}]}

``target_start``/``target_end`` are optional character offsets (end exclusive)
marking the headword inside the example.  Inventories are immutable after
loading and safe to share across threads.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import DataError

_WS = re.compile(r"\s+")


class PosTag(str, Enum):
    NOUN = "noun"
    VERB = "verb"
    ADJ = "adj"
    ADV = "adv"
    OTHER = "other"

    @classmethod
    def parse(cls, raw: str, lenient: bool = False) -> "PosTag":
        """Case-insensitive parse; unknown tags map to OTHER only when lenient."""
        try:
            return cls(raw.strip().lower())
        except ValueError:
            if lenient:
                return cls.OTHER
            raise DataError(
                f"unknown POS tag {raw!r} (expected one of: "
                + ", ".join(t.value for t in cls)
                + ")"
            ) from None


def normalize_lemma(raw: str) -> str:
    """Lowercase and collapse whitespace; no morphological analysis."""
    return _WS.sub(" ", raw.strip()).lower()


@dataclass(frozen=True)
class ExampleSentence:
    text: str
    target_span: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if not self.text:
            raise DataError("example text must be non-empty")
        if self.target_span is not None:
            start, end = self.target_span
            if not (0 <= start < end <= len(self.text)):
                raise DataError(
                    f"target span ({start}, {end}) out of bounds for text of "
                    f"length {len(self.text)}"
                )


@dataclass(frozen=True, order=True)
class GlossId:
    """Identifies one gloss as ``inventory:lemma:pos:index``.

    Inventory names must not contain ':' so the canonical form parses back
    unambiguously even when the lemma is a phrase containing ':'.
    """

    inventory: str
    lemma: str
    pos: PosTag
    index: int

    def __post_init__(self) -> None:
        if not self.inventory or ":" in self.inventory:
            raise DataError(f"invalid inventory name {self.inventory!r}")
        if self.index < 0:
            raise DataError(f"gloss index must be non-negative, got {self.index}")

    def __str__(self) -> str:
        return f"{self.inventory}:{self.lemma}:{self.pos.value}:{self.index}"

    @classmethod
    def parse(cls, raw: str) -> "GlossId":
        try:
            head, pos_str, idx_str = raw.rsplit(":", 2)
            inventory, lemma = head.split(":", 1)
            return cls(inventory, lemma, PosTag.parse(pos_str), int(idx_str))
        except (ValueError, DataError) as exc:
            raise DataError(f"malformed gloss id {raw!r}: {exc}") from None


@dataclass(frozen=True)
class Gloss:
    id: GlossId
    lemma: str
    pos: PosTag
    definition: str
    examples: tuple[ExampleSentence, ...] = ()

    def __post_init__(self) -> None:
        if not self.definition.strip():
            raise DataError("gloss definition must be non-empty")


@dataclass(frozen=True)
class Inventory:
    """A named sense inventory: (lemma, pos) -> ordered glosses.

    Treated as immutable after construction; entry order is the file order.
    """

    name: str
    entries: dict[tuple[str, PosTag], tuple[Gloss, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.name or ":" in self.name:
            raise DataError(f"invalid inventory name {self.name!r}")
        for (lemma, pos), glosses in self.entries.items():
            for i, gloss in enumerate(glosses):
                gid = gloss.id
                ok = (
                    gid.inventory == self.name
                    and gid.lemma == lemma
                    and gid.pos == pos
                    and gid.index == i
                    and gloss.lemma == lemma
                    and gloss.pos == pos
                )
                if not ok:
                    raise DataError(
                        f"gloss id {gid} inconsistent with entry ({lemma!r}, "
                        f"{pos.value}) at position {i} in inventory {self.name!r}"
                    )

    def glosses(self, lemma: str, pos: PosTag) -> tuple[Gloss, ...]:
        return self.entries.get((lemma, pos), ())

    def find_gloss(self, gid: GlossId) -> Gloss:
        if gid.inventory != self.name:
            raise DataError(f"gloss {gid} does not belong to inventory {self.name!r}")
        glosses = self.entries.get((gid.lemma, gid.pos), ())
        if gid.index >= len(glosses):
            raise DataError(f"dangling gloss reference {gid}")
        return glosses[gid.index]

    def all_glosses(self):
        for glosses in self.entries.values():
            yield from glosses


@dataclass(frozen=True)
class InventoryStats:
    word_count: int
    gloss_count: int
    example_count: int
    glosses_per_word: float
    examples_per_word: float

    def render(self) -> str:
        return (
            f"words={self.word_count} glosses={self.gloss_count} "
            f"examples={self.example_count} "
            f"glosses/word={self.glosses_per_word:.1f} "
            f"examples/word={self.examples_per_word:.1f}"
        )


def _parse_example(obj, where: str) -> ExampleSentence:
    if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
        raise DataError(f"{where}: example must be an object with a 'text' string")
    start = obj.get("target_start")
    end = obj.get("target_end")
    if (start is None) != (end is None):
        raise DataError(f"{where}: target_start and target_end must come together")
    span = None
    if start is not None:
        if not isinstance(start, int) or not isinstance(end, int):
            raise DataError(f"{where}: target offsets must be integers")
        span = (start, end)
    return ExampleSentence(obj["text"], span)


def load_inventory(path: str, name: str | None = None, lenient: bool = False) -> Inventory:
    """Load and validate one inventory file.

    ``name`` defaults to the file stem.  Errors report the 1-based line number.
    """
    name = name if name is not None else Path(path).stem
    entries: dict[tuple[str, PosTag], tuple[Gloss, ...]] = {}
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read inventory file {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            where = f"{path}:{lineno}"
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{where}: invalid JSON: {exc}") from None
            if not isinstance(record, dict):
                raise DataError(f"{where}: record must be a JSON object")
            if not isinstance(record.get("lemma"), str) or not record["lemma"].strip():
                raise DataError(f"{where}: missing or empty 'lemma'")
            if not isinstance(record.get("pos"), str):
                raise DataError(f"{where}: missing 'pos'")
            raw_glosses = record.get("glosses")
            if not isinstance(raw_glosses, list) or not raw_glosses:
                raise DataError(f"{where}: 'glosses' must be a non-empty array")
            lemma = normalize_lemma(record["lemma"])
            try:
                pos = PosTag.parse(record["pos"], lenient=lenient)
            except DataError as exc:
                raise DataError(f"{where}: {exc}") from None
            key = (lemma, pos)
            if key in entries:
                raise DataError(
                    f"{where}: duplicate entry for ({lemma!r}, {pos.value})"
                )
            glosses = []
            for i, raw in enumerate(raw_glosses):
                if not isinstance(raw, dict) or not isinstance(raw.get("definition"), str):
                    raise DataError(
                        f"{where}: gloss {i} must be an object with a 'definition' string"
                    )
                raw_examples = raw.get("examples", [])
                if not isinstance(raw_examples, list):
                    raise DataError(f"{where}: gloss {i} 'examples' must be an array")
                try:
                    examples = tuple(
                        _parse_example(e, where) for e in raw_examples
                    )
                    gloss = Gloss(
                        id=GlossId(name, lemma, pos, i),
                        lemma=lemma,
                        pos=pos,
                        definition=raw["definition"],
                        examples=examples,
                    )
                except DataError as exc:
                    msg = str(exc)
                    raise DataError(
                        msg if msg.startswith(where) else f"{where}: gloss {i}: {msg}"
                    ) from None
                glosses.append(gloss)
            entries[key] = tuple(glosses)
    return Inventory(name, entries)


def write_inventory(inv: Inventory, path: str) -> None:
    """Inverse of load_inventory; preserves entry and gloss order."""
    with open(path, "w", encoding="utf-8") as fh:
        for (lemma, pos), glosses in inv.entries.items():
            record = {
                "lemma": lemma,
                "pos": pos.value,
                "glosses": [
                    {
                        "definition": g.definition,
                        "examples": [
                            {"text": e.text}
                            if e.target_span is None
                            else {
                                "text": e.text,
                                "target_start": e.target_span[0],
                                "target_end": e.target_span[1],
                            }
                            for e in g.examples
                        ],
                    }
                    for g in glosses
                ],
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def compute_stats(inv: Inventory) -> InventoryStats:
    """Exact counts; averages kept in full precision (round only for display).

    A "word" is a distinct lemma string; an entry is a (lemma, pos) pair, so a
    headword listed under two POS tags still counts once.
    """
    if not inv.entries:
        raise DataError(f"inventory {inv.name!r} is empty")
    words = {lemma for (lemma, _pos) in inv.entries}
    gloss_count = sum(len(g) for g in inv.entries.values())
    example_count = sum(
        len(gloss.examples) for glosses in inv.entries.values() for gloss in glosses
    )
    word_count = len(words)
    return InventoryStats(
        word_count=word_count,
        gloss_count=gloss_count,
        example_count=example_count,
        glosses_per_word=gloss_count / word_count,
        examples_per_word=example_count / word_count,
    )


def common_keys(a: Inventory, b: Inventory) -> list[tuple[str, PosTag]]:
    """Keys present in both inventories, sorted by (lemma, pos tag string).

    POS must match exactly; alignment never crosses POS categories.
    """
    shared = set(a.entries) & set(b.entries)
    return sorted(shared, key=lambda k: (k[0], k[1].value))
