"""Gloss alignment: reward matrices, exact assignment solving, orchestration.

For one (lemma, POS) shared by two inventories, the gloss lists S1 and S2 form
a bipartite graph weighted by definition similarity.  The maximum-total-weight
one-to-one assignment is solved exactly with the Hungarian method (potentials
variant, cubic worst case; gloss lists are tiny so this is never a concern).
Unbalanced lists are squared up with zero-weight dummy vertices; a gloss
matched to a dummy is simply unaligned.

Among equally heavy assignments, the lexicographically smallest assignment
sequence is returned, so results are stable across runs and platforms.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .embedding import EmbeddingStore, cosine, gloss_key
from .errors import DataError
from .inventory import Gloss, GlossId, Inventory, PosTag, common_keys

log = logging.getLogger("sense_align.alignment")

DEFAULT_THRESHOLD = 0.6

# Slack for "equally heavy" when refining ties; weights are cosines so any
# genuinely different assignment totals differ by far more than this.
_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class RewardMatrix:
    """Similarity weights, row-major; rows index S1 glosses, cols S2 glosses.

    real_rows/real_cols mark the original sizes after padding; rows and
    columns beyond them are zero-weight dummies.  Similarity-derived entries
    lie in [-1, 1]; construction only requires finiteness so that shifted
    matrices remain representable in property checks.
    """

    weights: np.ndarray
    real_rows: int = -1
    real_cols: int = -1

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.size == 0:
            raise DataError("reward matrix must be 2-D and non-empty")
        if not np.all(np.isfinite(w)):
            raise DataError("reward matrix contains a non-finite entry")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.real_rows < 0:
            object.__setattr__(self, "real_rows", w.shape[0])
        if self.real_cols < 0:
            object.__setattr__(self, "real_cols", w.shape[1])
        if self.real_rows > w.shape[0] or self.real_cols > w.shape[1]:
            raise DataError("real_rows/real_cols exceed matrix shape")

    @property
    def rows(self) -> int:
        return int(self.weights.shape[0])

    @property
    def cols(self) -> int:
        return int(self.weights.shape[1])

    def is_dummy_row(self, i: int) -> bool:
        return i >= self.real_rows

    def is_dummy_col(self, j: int) -> bool:
        return j >= self.real_cols


@dataclass(frozen=True)
class Matching:
    """A perfect matching on the padded square problem.

    assignment[i] is the column matched to row i; a bijection on {0..m-1}.
    total_weight sums only edges whose row and column are both real.
    """

    assignment: tuple[int, ...]
    total_weight: float
    rows: int
    cols: int

    def __post_init__(self) -> None:
        m = len(self.assignment)
        if sorted(self.assignment) != list(range(m)):
            raise DataError("assignment is not a permutation")

    def pairs(self) -> list[tuple[int, int]]:
        """Matched (row, col) pairs between real vertices, by row."""
        return [
            (i, j)
            for i, j in enumerate(self.assignment)
            if i < self.rows and j < self.cols
        ]


@dataclass(frozen=True)
class AlignmentLink:
    gloss_a: GlossId
    gloss_b: GlossId
    score: float

    def __post_init__(self) -> None:
        if self.gloss_a.lemma != self.gloss_b.lemma or self.gloss_a.pos != self.gloss_b.pos:
            raise DataError(
                f"link endpoints must share lemma and POS: {self.gloss_a} vs {self.gloss_b}"
            )
        if self.gloss_a.inventory == self.gloss_b.inventory:
            raise DataError(f"link endpoints must come from different inventories: {self.gloss_a}")
        if not math.isfinite(self.score):
            raise DataError("link score must be finite")

    @property
    def lemma(self) -> str:
        return self.gloss_a.lemma

    @property
    def pos(self) -> PosTag:
        return self.gloss_a.pos


def build_reward_matrix(
    glosses_a: Sequence[Gloss], glosses_b: Sequence[Gloss], store: EmbeddingStore
) -> RewardMatrix:
    """weights[i][j] = cosine of the stored definition vectors."""
    if not glosses_a or not glosses_b:
        raise DataError("cannot build a reward matrix over an empty gloss list")
    vecs_a = [store.get(gloss_key(g.id)) for g in glosses_a]
    vecs_b = [store.get(gloss_key(g.id)) for g in glosses_b]
    weights = np.empty((len(glosses_a), len(glosses_b)), dtype=np.float64)
    for i, (ga, va) in enumerate(zip(glosses_a, vecs_a)):
        for j, (gb, vb) in enumerate(zip(glosses_b, vecs_b)):
            try:
                weights[i, j] = cosine(va, vb)
            except DataError as exc:
                raise DataError(f"similarity({ga.id}, {gb.id}): {exc}") from None
    return RewardMatrix(weights)


def pad_to_square(m: RewardMatrix) -> RewardMatrix:
    """Zero-weight dummy rows or columns up to max(rows, cols)."""
    size = max(m.rows, m.cols)
    if m.rows == m.cols:
        return m
    padded = np.zeros((size, size), dtype=np.float64)
    padded[: m.rows, : m.cols] = m.weights
    return RewardMatrix(padded, real_rows=m.real_rows, real_cols=m.real_cols)


def _hungarian_min(cost: np.ndarray) -> list[int]:
    """Exact min-cost perfect matching on a square matrix (potentials method).

    Returns row -> column, 0-indexed.  Index 0 of the internal arrays is a
    virtual column used to seed each augmenting search.
    """
    n = cost.shape[0]
    inf = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = [0] * n
    for j in range(1, n + 1):
        row_to_col[p[j] - 1] = j - 1
    return row_to_col


def _assignment_weight(weights: np.ndarray, assignment: Sequence[int]) -> float:
    return math.fsum(weights[i, j] for i, j in enumerate(assignment))


def _lex_smallest_optimal(weights: np.ndarray, base: list[int]) -> list[int]:
    """Refine an optimal assignment to the lexicographically smallest one.

    Row by row, try each smaller unused column and keep it iff the exactly
    solved completion of the remaining rows still attains the optimum.  The
    feasibility oracle is exact, so the greedy choice is correct.
    """
    n = weights.shape[0]
    best_total = _assignment_weight(weights, base)
    assign = list(base)
    remaining = set(range(n))
    for i in range(n):
        for j in sorted(c for c in remaining if c < assign[i]):
            rest_cols = sorted(remaining - {j})
            if i + 1 < n:
                sub = -weights[np.ix_(range(i + 1, n), rest_cols)]
                completion = [rest_cols[c] for c in _hungarian_min(sub)]
            else:
                completion = []
            candidate = assign[:i] + [j] + completion
            if _assignment_weight(weights, candidate) >= best_total - _EPS:
                assign = candidate
                break
        remaining.discard(assign[i])
    return assign


def solve_matching(m: RewardMatrix) -> Matching:
    """Exact maximum-weight perfect matching; lexicographically smallest ties."""
    if m.rows != m.cols:
        raise DataError(
            f"matching requires a square matrix, got {m.rows}x{m.cols}; pad_to_square first"
        )
    base = _hungarian_min(-m.weights)
    assignment = _lex_smallest_optimal(m.weights, base)
    total = math.fsum(
        m.weights[i, j]
        for i, j in enumerate(assignment)
        if i < m.real_rows and j < m.real_cols
    )
    return Matching(tuple(assignment), total, m.real_rows, m.real_cols)


def align_word(
    glosses_a: Sequence[Gloss],
    glosses_b: Sequence[Gloss],
    store: EmbeddingStore,
    threshold: float,
) -> list[AlignmentLink]:
    """Alignment links for one (lemma, POS), already sorted by row index."""
    matrix = build_reward_matrix(glosses_a, glosses_b, store)
    matching = solve_matching(pad_to_square(matrix))
    links = []
    for i, j in matching.pairs():
        score = float(matrix.weights[i, j])
        if score >= threshold:
            links.append(AlignmentLink(glosses_a[i].id, glosses_b[j].id, score))
    return links


def align_inventories(
    a: Inventory,
    b: Inventory,
    store: EmbeddingStore,
    threshold: float = DEFAULT_THRESHOLD,
    threads: int = 1,
) -> list[AlignmentLink]:
    """Align every common (lemma, POS) of two inventories.

    Glosses matched to dummies or scoring below the threshold yield no link.
    Per-word problems are independent, so threads > 1 fans them out; results
    merge in key order either way, so the output is identical and sorted by
    (lemma, pos, first gloss index).
    """
    if not -1.0 <= threshold <= 1.0:
        raise DataError(f"threshold must lie in [-1, 1], got {threshold}")
    if a.name == b.name:
        raise DataError(f"cannot align inventory {a.name!r} with itself")
    keys = common_keys(a, b)
    if threads > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_word = list(
                pool.map(
                    lambda key: align_word(a.entries[key], b.entries[key], store, threshold),
                    keys,
                )
            )
    else:
        per_word = [align_word(a.entries[key], b.entries[key], store, threshold) for key in keys]
    links = [link for word_links in per_word for link in word_links]
    log.info("aligned %s vs %s: %d links at threshold %g", a.name, b.name, len(links), threshold)
    return links


def align_all(
    inventories: Sequence[Inventory],
    store: EmbeddingStore,
    threshold: float = DEFAULT_THRESHOLD,
) -> list[AlignmentLink]:
    """All pairings (choose two, input order) processed independently."""
    links: list[AlignmentLink] = []
    for i in range(len(inventories)):
        for j in range(i + 1, len(inventories)):
            links.extend(align_inventories(inventories[i], inventories[j], store, threshold))
    return links


def write_links(links: Sequence[AlignmentLink], path: str) -> None:
    """Line-delimited records with the score printed at 6 decimal places."""
    with open(path, "w", encoding="utf-8") as fh:
        for link in links:
            fh.write(
                "{"
                + f'"lemma": {json.dumps(link.lemma, ensure_ascii=False)}, '
                + f'"pos": "{link.pos.value}", '
                + f'"gloss_a": {json.dumps(str(link.gloss_a), ensure_ascii=False)}, '
                + f'"gloss_b": {json.dumps(str(link.gloss_b), ensure_ascii=False)}, '
                + f'"score": {link.score:.6f}'
                + "}\n"
            )


def load_links(path: str) -> list[AlignmentLink]:
    links = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read links file {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                rec = json.loads(line)
                link = AlignmentLink(
                    GlossId.parse(rec["gloss_a"]),
                    GlossId.parse(rec["gloss_b"]),
                    float(rec["score"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{where}: malformed link record: {exc}") from None
            except DataError as exc:
                raise DataError(f"{where}: {exc}") from None
            if rec.get("lemma") != link.lemma or rec.get("pos") != link.pos.value:
                raise DataError(f"{where}: lemma/pos fields disagree with gloss ids")
            links.append(link)
    return links
