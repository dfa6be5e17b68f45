"""Filtered link-prediction evaluation.

Each test triple contributes two ranking events: replacing the head and
replacing the tail with every entity.  In the filtered setting, candidate
entities known to complete the triple elsewhere (train/valid/test) are
removed before ranking.  Ties share the mean of the tied positions, so a
constant scorer cannot fake a good rank.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .data import TripleStore
from .model import EmbeddingTable, score_all

HITS_AT = (1, 3, 10)


@dataclass
class RankMetrics:
    mr: float
    mrr: float
    hits: dict
    count: int

    def to_dict(self) -> dict:
        out = {"mr": self.mr, "mrr": self.mrr}
        for k in HITS_AT:
            out[f"hits{k}"] = self.hits[k]
        out["count"] = self.count
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_text(self) -> str:
        rows = [("metric", "value")]
        rows += [(k, f"{v:.6f}" if isinstance(v, float) else str(v))
                 for k, v in self.to_dict().items()]
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


class FilterIndex:
    """Known-true completions per (entity, relation) pair on each side."""

    def __init__(self):
        self.tails = defaultdict(set)  # (h, r) -> {t}
        self.heads = defaultdict(set)  # (r, t) -> {h}

    @classmethod
    def from_stores(cls, stores: Iterable[TripleStore]) -> "FilterIndex":
        index = cls()
        for store in stores:
            for h, r, t in store.triples:
                index.tails[(int(h), int(r))].add(int(t))
                index.heads[(int(r), int(t))].add(int(h))
        return index

    def tail_set(self, h: int, r: int) -> set:
        return self.tails.get((h, r), set())

    def head_set(self, r: int, t: int) -> set:
        return self.heads.get((r, t), set())


def filtered_rank(scores: np.ndarray, true_index: int, filter_set) -> float:
    """Rank of the true candidate after removing known-true competitors.

    rank = 1 + (#strictly greater) + (#equal)/2 over remaining candidates;
    the filter never removes the true candidate itself.
    """
    scores = np.asarray(scores)
    if not 0 <= true_index < scores.shape[0]:
        raise IndexError(f"true index {true_index} out of range [0, {scores.shape[0]})")
    true_score = scores[true_index]
    keep = np.ones(scores.shape[0], dtype=bool)
    for j in filter_set:
        if j != true_index:
            keep[j] = False
    remaining = scores[keep]
    greater = int(np.count_nonzero(remaining > true_score))
    equal = int(np.count_nonzero(remaining == true_score)) - 1
    return 1.0 + greater + equal / 2.0


Tables = Union[EmbeddingTable, Sequence[EmbeddingTable]]


def _as_tables(tables: Tables) -> list[EmbeddingTable]:
    if isinstance(tables, EmbeddingTable):
        return [tables]
    return list(tables)


def collect_ranks(
    tables: Tables,
    test: TripleStore,
    filter_index: FilterIndex,
    use_reciprocal: bool = True,
    filtered: bool = True,
) -> np.ndarray:
    """Ranks in deterministic order: tail event, then head event, per triple.

    Passing several tables sums their scores (ensemble scoring).  With
    ``use_reciprocal`` head queries are answered through the reciprocal
    relation's tail path (relation id r + R for raw id r); otherwise heads
    are scored directly.  Filter sets always carry the raw-triple meaning,
    independent of the scoring path.
    """
    models = _as_tables(tables)
    first = models[0]
    for other in models[1:]:
        if other.num_entities != first.num_entities:
            raise ValueError("ensemble tables disagree on entity count")
        if other.num_relations != first.num_relations:
            raise ValueError("ensemble tables disagree on relation count")
    if test.n_entities != first.num_entities:
        raise ValueError("test store and model disagree on entity count")

    offset = first.num_relations // 2
    ranks = []
    for h, r, t in test.triples:
        h, r, t = int(h), int(r), int(t)
        tail_scores = sum(score_all(m, (h, r), "replace_tail") for m in models)
        tail_filter = filter_index.tail_set(h, r) if filtered else ()
        ranks.append(filtered_rank(tail_scores, t, tail_filter))

        if use_reciprocal:
            if r + offset >= first.num_relations:
                raise ValueError(
                    f"relation {r} has no reciprocal id {r + offset} in the model"
                )
            head_scores = sum(score_all(m, (t, r + offset), "replace_tail") for m in models)
        else:
            head_scores = sum(score_all(m, (t, r), "replace_head") for m in models)
        head_filter = filter_index.head_set(r, t) if filtered else ()
        ranks.append(filtered_rank(head_scores, h, head_filter))
    return np.array(ranks, dtype=np.float64)


def aggregate_ranks(ranks: np.ndarray) -> RankMetrics:
    arr = np.asarray(ranks, dtype=np.float64)
    if arr.size == 0:
        return RankMetrics(float("nan"), float("nan"), {k: float("nan") for k in HITS_AT}, 0)
    return RankMetrics(
        mr=float(arr.mean()),
        mrr=float((1.0 / arr).mean()),
        hits={k: float((arr <= k).mean()) for k in HITS_AT},
        count=int(arr.size),
    )


def evaluate_split(
    tables: Tables,
    test: TripleStore,
    filter_index: FilterIndex,
    use_reciprocal: bool = True,
    filtered: bool = True,
) -> RankMetrics:
    """MR / MRR / Hits@k over head- and tail-replacement events."""
    return aggregate_ranks(
        collect_ranks(tables, test, filter_index, use_reciprocal, filtered)
    )
