"""Labeled semantic-equivalence pairs generated from inventories and alignments.

Three generators, one record shape.  Gloss-context pairs ask "does this
definition describe the target word in this sentence"; context-context pairs
ask "do these two sentences use the word in the same meaning".  Negatives are
always same-(lemma, POS) contrasts: crossing words would make them trivially
easy.  Cross-inventory generation only involves glosses that survived
alignment at threshold; a gloss that failed the threshold may be an alignment
error, so it contributes neither positives nor negatives.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Iterable, Sequence

from .alignment import AlignmentLink
from .embedding import resolve_target_span
from .errors import DataError
from .inventory import Gloss, GlossId, Inventory, PosTag
from .util import named_rng

log = logging.getLogger("sense_align.pairgen")


class PairKind(str, Enum):
    GLOSS_CONTEXT = "gloss-context"
    CONTEXT_CONTEXT = "context-context"


class PairLabel(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


class PairSource(str, Enum):
    CROSS_INVENTORY = "cross-inventory"
    WITHIN_INVENTORY = "within-inventory"


@dataclass(frozen=True)
class PairContext:
    """One example occurrence: sentence, target span, and its provenance."""

    text: str
    span: tuple[int, int]
    gloss_id: GlossId
    example_index: int

    def __post_init__(self) -> None:
        start, end = self.span
        if not (0 <= start < end <= len(self.text)):
            raise DataError(f"context span ({start}, {end}) out of bounds")
        if self.example_index < 0:
            raise DataError("example index must be non-negative")


@dataclass(frozen=True)
class PairInstance:
    kind: PairKind
    label: PairLabel
    source: PairSource
    context: PairContext
    gloss: tuple[GlossId, str] | None = None
    context2: PairContext | None = None

    def __post_init__(self) -> None:
        if self.kind is PairKind.GLOSS_CONTEXT:
            if self.gloss is None or self.context2 is not None:
                raise DataError("gloss-context pair needs a gloss and no second context")
            gid = self.gloss[0]
            if (gid.lemma, gid.pos) != (self.context.gloss_id.lemma, self.context.gloss_id.pos):
                raise DataError(
                    f"pair crosses words: context {self.context.gloss_id} vs gloss {gid}"
                )
            if self.label is PairLabel.NEGATIVE and gid == self.context.gloss_id:
                raise DataError(f"self-pair {gid} cannot be negative")
        else:
            if self.context2 is None or self.gloss is not None:
                raise DataError("context-context pair needs two contexts and no gloss")
            c1, c2 = self.context.gloss_id, self.context2.gloss_id
            if (c1.lemma, c1.pos) != (c2.lemma, c2.pos):
                raise DataError(f"pair crosses words: {c1} vs {c2}")
            if self.label is PairLabel.NEGATIVE and c1 == c2:
                raise DataError(f"same-gloss contexts of {c1} cannot be negative")

    @property
    def word_key(self) -> tuple[str, PosTag]:
        return (self.context.gloss_id.lemma, self.context.gloss_id.pos)


def _context(gloss: Gloss, example_index: int) -> PairContext:
    example = gloss.examples[example_index]
    try:
        span = resolve_target_span(example, gloss.lemma)
    except DataError as exc:
        raise DataError(f"gloss {gloss.id} example {example_index}: {exc}") from None
    return PairContext(example.text, span, gloss.id, example_index)


def _gloss_context(
    definition_of: Gloss, context_of: Gloss, label: PairLabel, source: PairSource
) -> Iterable[PairInstance]:
    for idx in range(len(context_of.examples)):
        yield PairInstance(
            kind=PairKind.GLOSS_CONTEXT,
            label=label,
            source=source,
            context=_context(context_of, idx),
            gloss=(definition_of.id, definition_of.definition),
        )


def _linked_glosses_by_word(
    links: Sequence[AlignmentLink], by_name: dict[str, Inventory]
) -> dict[tuple[str, PosTag], list[tuple[Gloss, Gloss]]]:
    """Resolve links to gloss pairs, grouped by word, in link order."""
    grouped: dict[tuple[str, PosTag], list[tuple[Gloss, Gloss]]] = {}
    for link in links:
        for gid in (link.gloss_a, link.gloss_b):
            if gid.inventory not in by_name:
                raise DataError(f"link references unknown inventory {gid.inventory!r}")
        ga = by_name[link.gloss_a.inventory].find_gloss(link.gloss_a)
        gb = by_name[link.gloss_b.inventory].find_gloss(link.gloss_b)
        grouped.setdefault((link.lemma, link.pos), []).append((ga, gb))
    return grouped


def gen_cross_inventory(
    links: Sequence[AlignmentLink], a: Inventory, b: Inventory
) -> list[PairInstance]:
    """Pairs across two inventories, driven entirely by the alignment links.

    Each link (g, g') yields positives definition(g) x examples(g') and
    definition(g') x examples(g).  Negatives contrast a linked gloss with the
    examples of the other inventory's linked glosses it is NOT linked to.
    """
    by_name = {a.name: a, b.name: b}
    if len(by_name) != 2:
        raise DataError("cross-inventory generation needs two distinct inventories")
    grouped = _linked_glosses_by_word(links, by_name)
    out: list[PairInstance] = []
    for key in sorted(grouped, key=lambda k: (k[0], k[1].value)):
        pairs = grouped[key]
        linked_ids = {(ga.id, gb.id) for ga, gb in pairs}
        for ga, gb in sorted(pairs, key=lambda p: (p[0].id, p[1].id)):
            out.extend(_gloss_context(ga, gb, PairLabel.POSITIVE, PairSource.CROSS_INVENTORY))
            out.extend(_gloss_context(gb, ga, PairLabel.POSITIVE, PairSource.CROSS_INVENTORY))
        side_a = sorted({ga.id: ga for ga, _ in pairs}.values(), key=lambda g: g.id)
        side_b = sorted({gb.id: gb for _, gb in pairs}.values(), key=lambda g: g.id)
        for ga in side_a:
            for gb in side_b:
                if (ga.id, gb.id) in linked_ids:
                    continue
                out.extend(_gloss_context(ga, gb, PairLabel.NEGATIVE, PairSource.CROSS_INVENTORY))
                out.extend(_gloss_context(gb, ga, PairLabel.NEGATIVE, PairSource.CROSS_INVENTORY))
    return out


def gen_within_inventory(inv: Inventory) -> list[PairInstance]:
    """Definition vs. own examples positive; vs. sibling-gloss examples negative."""
    out: list[PairInstance] = []
    for key in sorted(inv.entries, key=lambda k: (k[0], k[1].value)):
        glosses = inv.entries[key]
        for g in glosses:
            out.extend(_gloss_context(g, g, PairLabel.POSITIVE, PairSource.WITHIN_INVENTORY))
        for g in glosses:
            for other in glosses:
                if other.id == g.id:
                    continue
                out.extend(
                    _gloss_context(g, other, PairLabel.NEGATIVE, PairSource.WITHIN_INVENTORY)
                )
    return out


def _example_cross(
    g1: Gloss, g2: Gloss, label: PairLabel, source: PairSource
) -> Iterable[PairInstance]:
    for i in range(len(g1.examples)):
        for j in range(len(g2.examples)):
            yield PairInstance(
                kind=PairKind.CONTEXT_CONTEXT,
                label=label,
                source=source,
                context=_context(g1, i),
                context2=_context(g2, j),
            )


def gen_context_context(
    inv_list: Sequence[Inventory], links: Sequence[AlignmentLink]
) -> list[PairInstance]:
    """Example-vs-example pairs (two contexts, same lemma).

    Positive: both examples of one gloss, or examples of two linked glosses.
    Negative: examples of two sibling glosses in one inventory, or of two
    cross-inventory linked glosses that are not linked to each other.  Each
    unordered pair is emitted exactly once.
    """
    by_name = {inv.name: inv for inv in inv_list}
    if len(by_name) != len(inv_list):
        raise DataError("duplicate inventory names in context-context generation")
    grouped = _linked_glosses_by_word(links, by_name) if links else {}
    out: list[PairInstance] = []

    word_keys = sorted(
        {key for inv in inv_list for key in inv.entries}
        | set(grouped),
        key=lambda k: (k[0], k[1].value),
    )
    for key in word_keys:
        for inv in inv_list:
            for g in inv.entries.get(key, ()):
                for i, j in combinations(range(len(g.examples)), 2):
                    out.append(
                        PairInstance(
                            kind=PairKind.CONTEXT_CONTEXT,
                            label=PairLabel.POSITIVE,
                            source=PairSource.WITHIN_INVENTORY,
                            context=_context(g, i),
                            context2=_context(g, j),
                        )
                    )
        pairs = grouped.get(key, [])
        linked_ids = {(ga.id, gb.id) for ga, gb in pairs}
        for ga, gb in sorted(pairs, key=lambda p: (p[0].id, p[1].id)):
            out.extend(_example_cross(ga, gb, PairLabel.POSITIVE, PairSource.CROSS_INVENTORY))
        for inv in inv_list:
            glosses = inv.entries.get(key, ())
            for g1, g2 in combinations(glosses, 2):
                out.extend(
                    _example_cross(g1, g2, PairLabel.NEGATIVE, PairSource.WITHIN_INVENTORY)
                )
        side_a = sorted({ga.id: ga for ga, _ in pairs}.values(), key=lambda g: g.id)
        side_b = sorted({gb.id: gb for _, gb in pairs}.values(), key=lambda g: g.id)
        for ga in side_a:
            for gb in side_b:
                if (ga.id, gb.id) in linked_ids:
                    continue
                out.extend(_example_cross(ga, gb, PairLabel.NEGATIVE, PairSource.CROSS_INVENTORY))
    return out


def split_and_shuffle(
    pairs: Sequence[PairInstance], seed: int, ratios: Sequence[float] = (0.8, 0.2)
) -> list[list[PairInstance]]:
    """Partition pairs by word key so no (lemma, POS) straddles partitions.

    Returns len(ratios) + 1 lists; the last holds the leftover keys (empty
    when the ratios sum to 1).  Deterministic for a given seed.
    """
    if not pairs:
        raise DataError("cannot split an empty pair list")
    if any(r <= 0 for r in ratios) or sum(ratios) > 1.0 + 1e-9:
        raise DataError(f"ratios must be positive and sum to at most 1, got {list(ratios)}")
    by_key: dict[tuple[str, PosTag], list[PairInstance]] = {}
    for p in pairs:
        by_key.setdefault(p.word_key, []).append(p)
    keys = sorted(by_key, key=lambda k: (k[0], k[1].value))
    rng = named_rng(seed, "pairgen.split")
    order = rng.permutation(len(keys))
    shuffled_keys = [keys[i] for i in order]
    edges = []
    cum = 0.0
    for r in ratios:
        cum += r
        edges.append(round(cum * len(keys)))
    partitions: list[list[PairInstance]] = []
    start = 0
    for edge in edges + [len(keys)]:
        chunk: list[PairInstance] = []
        for key in shuffled_keys[start:edge]:
            chunk.extend(by_key[key])
        if chunk:
            perm = rng.permutation(len(chunk))
            chunk = [chunk[i] for i in perm]
        partitions.append(chunk)
        start = edge
    return partitions


def label_counts(pairs: Iterable[PairInstance]) -> tuple[int, int]:
    pos = neg = 0
    for p in pairs:
        if p.label is PairLabel.POSITIVE:
            pos += 1
        else:
            neg += 1
    return pos, neg


def _context_obj(c: PairContext) -> dict:
    return {
        "text": c.text,
        "start": c.span[0],
        "end": c.span[1],
        "gloss": str(c.gloss_id),
        "example": c.example_index,
    }


def write_pairs(pairs: Sequence[PairInstance], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            obj: dict = {
                "kind": p.kind.value,
                "label": p.label.value,
                "context": _context_obj(p.context),
            }
            if p.gloss is not None:
                obj["gloss"] = {"id": str(p.gloss[0]), "definition": p.gloss[1]}
            if p.context2 is not None:
                obj["context2"] = _context_obj(p.context2)
            obj["source"] = p.source.value
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def _parse_context(obj: dict, where: str) -> PairContext:
    try:
        return PairContext(
            text=obj["text"],
            span=(int(obj["start"]), int(obj["end"])),
            gloss_id=GlossId.parse(obj["gloss"]),
            example_index=int(obj["example"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{where}: malformed context: {exc}") from None


def load_pairs(path: str) -> list[PairInstance]:
    pairs = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read pairs file {path}: {exc}") from None
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
                kind = PairKind(obj["kind"])
                label = PairLabel(obj["label"])
                source = PairSource(obj["source"])
            except (KeyError, ValueError) as exc:
                raise DataError(f"{where}: malformed pair record: {exc}") from None
            context = _parse_context(obj.get("context", {}), where)
            gloss = None
            context2 = None
            if "gloss" in obj:
                try:
                    gloss = (GlossId.parse(obj["gloss"]["id"]), obj["gloss"]["definition"])
                except (KeyError, TypeError) as exc:
                    raise DataError(f"{where}: malformed gloss field: {exc}") from None
            if "context2" in obj:
                context2 = _parse_context(obj["context2"], where)
            try:
                pairs.append(
                    PairInstance(
                        kind=kind, label=label, source=source,
                        context=context, gloss=gloss, context2=context2,
                    )
                )
            except DataError as exc:
                raise DataError(f"{where}: {exc}") from None
    return pairs
