"""Triple stores, TSV ingestion, checkpoints, and synthetic graphs.

File formats owned by this module:

* Triple TSV: one triple per line, ``head<TAB>relation<TAB>tail``, UTF-8.
* Checkpoint: binary, little-endian.  Layout:
    - 4 bytes magic ``GEOM``
    - uint32 format version (currently 1)
    - uint32 header length, then that many bytes of UTF-8 JSON with keys
      grade, dim_k, num_entities, num_relations, precision, config
    - entity coefficients, row-major [row][component][blade]
    - relation coefficients, same layout
    - uint32 dictionary length, then UTF-8 JSON
      {"entities": [...], "relations": [...]}
  Coefficients are IEEE-754 little-endian, 8 bytes for f64 or 4 for f32.
  A save/load round trip is bit-identical.
* Pattern manifest: JSON produced by the synthetic generator, listing the
  pattern kind and partners of every relation and, for each test triple
  implied by a pattern, the ground triples it derives from.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .model import EmbeddingTable

CHECKPOINT_MAGIC = b"GEOM"
CHECKPOINT_VERSION = 1

_PRECISION_DTYPES = {"f64": np.dtype("<f8"), "f32": np.dtype("<f4")}


class TripleFormatError(ValueError):
    """Malformed or duplicate line in a triple TSV file."""


class VocabularyError(ValueError):
    """Symbol not present in the fixed dictionaries."""


class CheckpointError(ValueError):
    """Unreadable or inconsistent checkpoint file."""


class GenerationError(ValueError):
    """Synthetic graph request that cannot be satisfied."""


@dataclass
class TripleStore:
    """Indexed triple set with bidirectional name/id dictionaries."""

    triples: np.ndarray  # (n, 3) int64 rows [head, relation, tail]
    entity_names: list[str]
    relation_names: list[str]
    entity_ids: dict = field(init=False, repr=False)
    relation_ids: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.triples = np.asarray(self.triples, dtype=np.int64).reshape(-1, 3)
        self.entity_ids = {name: i for i, name in enumerate(self.entity_names)}
        self.relation_ids = {name: i for i, name in enumerate(self.relation_names)}

    @property
    def n_entities(self) -> int:
        return len(self.entity_names)

    @property
    def n_relations(self) -> int:
        return len(self.relation_names)

    @property
    def n_triples(self) -> int:
        return self.triples.shape[0]


def load_triples(
    path,
    entity_ids: Optional[dict] = None,
    relation_ids: Optional[dict] = None,
) -> TripleStore:
    """Read a triple TSV file.

    Without dictionaries, names found in the file are assigned dense ids
    in sorted lexicographic order, so the same file contents always yield
    the same ids regardless of line order.  With dictionaries (from a
    previously loaded split), every symbol must already be known.
    """
    path = Path(path)
    fixed = entity_ids is not None or relation_ids is not None
    if fixed and (entity_ids is None or relation_ids is None):
        raise ValueError("pass both dictionaries or neither")

    rows: list[tuple[str, str, str]] = []
    seen: dict[tuple[str, str, str], int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise TripleFormatError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, found {len(fields)}"
                )
            triple = (fields[0], fields[1], fields[2])
            if triple in seen:
                raise TripleFormatError(
                    f"{path}:{lineno}: duplicate triple (first seen at line {seen[triple]})"
                )
            seen[triple] = lineno
            rows.append(triple)

    if not fixed:
        entity_ids = {n: i for i, n in
                      enumerate(sorted({h for h, _, _ in rows} | {t for _, _, t in rows}))}
        relation_ids = {n: i for i, n in enumerate(sorted({r for _, r, _ in rows}))}

    ids = np.empty((len(rows), 3), dtype=np.int64)
    for i, (h, r, t) in enumerate(rows):
        for j, (name, table) in enumerate(((h, entity_ids), (r, relation_ids), (t, entity_ids))):
            if name not in table:
                kind = "relation" if j == 1 else "entity"
                raise VocabularyError(f"{path}: unknown {kind} {name!r}")
            ids[i, j] = table[name]

    entity_names = _names_from_ids(entity_ids)
    relation_names = _names_from_ids(relation_ids)
    return TripleStore(ids, entity_names, relation_names)


def _names_from_ids(mapping: dict) -> list[str]:
    names = [""] * len(mapping)
    for name, i in mapping.items():
        if not 0 <= i < len(mapping) or names[i]:
            raise ValueError("dictionary ids must be dense and unique")
        names[i] = name
    return names


def save_triples(store: TripleStore, path):
    with open(path, "w", encoding="utf-8") as fh:
        for h, r, t in store.triples:
            fh.write(f"{store.entity_names[h]}\t{store.relation_names[r]}\t{store.entity_names[t]}\n")


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(table: EmbeddingTable, config: dict, path):
    precision = {np.dtype(np.float64): "f64", np.dtype(np.float32): "f32"}.get(table.dtype)
    if precision is None:
        raise CheckpointError(f"unsupported dtype {table.dtype}")
    header = {
        "grade": table.grade,
        "dim_k": table.dim_k,
        "num_entities": table.num_entities,
        "num_relations": table.num_relations,
        "precision": precision,
        "config": config,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    dicts = {
        "entities": table.entity_names,
        "relations": table.relation_names,
    }
    dict_bytes = json.dumps(dicts, sort_keys=True).encode("utf-8")
    dt = _PRECISION_DTYPES[precision]
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(np.ascontiguousarray(table.entities, dtype=dt).tobytes())
        fh.write(np.ascontiguousarray(table.relations, dtype=dt).tobytes())
        fh.write(struct.pack("<I", len(dict_bytes)))
        fh.write(dict_bytes)


def load_checkpoint(path) -> tuple[EmbeddingTable, dict]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic {blob[:4]!r}")
    if len(blob) < 12:
        raise CheckpointError(f"{path}: truncated checkpoint")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    (header_len,) = struct.unpack_from("<I", blob, 8)
    offset = 12
    if offset + header_len > len(blob):
        raise CheckpointError(f"{path}: truncated checkpoint")
    header = json.loads(blob[offset:offset + header_len].decode("utf-8"))
    offset += header_len

    grade = header.get("grade")
    k = header.get("dim_k")
    n_ent = header.get("num_entities")
    n_rel = header.get("num_relations")
    precision = header.get("precision")
    if grade not in (1, 2, 3) or precision not in _PRECISION_DTYPES:
        raise CheckpointError(f"{path}: bad shape header {header}")
    if not all(isinstance(v, int) and v > 0 for v in (k, n_ent, n_rel)):
        raise CheckpointError(f"{path}: bad shape header {header}")
    dim = 2 ** grade
    dt = _PRECISION_DTYPES[precision]
    ent_bytes = n_ent * k * dim * dt.itemsize
    rel_bytes = n_rel * k * dim * dt.itemsize
    if offset + ent_bytes + rel_bytes + 4 > len(blob):
        raise CheckpointError(f"{path}: truncated checkpoint")
    entities = np.frombuffer(blob, dtype=dt, count=n_ent * k * dim, offset=offset)
    entities = entities.reshape(n_ent, k, dim).copy()
    offset += ent_bytes
    relations = np.frombuffer(blob, dtype=dt, count=n_rel * k * dim, offset=offset)
    relations = relations.reshape(n_rel, k, dim).copy()
    offset += rel_bytes
    (dict_len,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    if offset + dict_len != len(blob):
        raise CheckpointError(f"{path}: trailing or missing dictionary bytes")
    dicts = json.loads(blob[offset:offset + dict_len].decode("utf-8"))

    table = EmbeddingTable(grade, entities, relations,
                           dicts.get("entities"), dicts.get("relations"))
    return table, header.get("config", {})


# ---------------------------------------------------------------------------
# synthetic pattern graphs


@dataclass
class SyntheticSpec:
    """Shape of a generated graph whose test split exercises pattern
    inference: symmetric, anti-symmetric, inverse and composed relations.

    Every relation is a translation by a set of random offsets on the
    entity ring (t - h mod n lies in the relation's offset set); the
    pattern kinds are expressed through the offset sets (a symmetric
    relation's set is closed under negation, an inverse pair's sets are
    negations of each other, a composed relation's set is the sumset of
    its parts).  Ground triples sample a fraction of each relation's true
    pairs; the closure of the ground set under the declared patterns
    yields the implied triples that the held-out splits are drawn from.
    Structure matters: with unstructured random pairs the held-out
    composed facts would be statistically unpredictable, so the
    acceptance experiment would measure nothing.
    """

    n_entities: int = 200
    n_sym: int = 2
    n_antisym: int = 2
    n_inverse_pairs: int = 2
    n_comp_triples: int = 2
    density: float = 0.02
    seed: int = 0
    ground_fraction: float = 0.7
    test_fraction: float = 0.3
    valid_fraction: float = 0.1


def _draw_offsets(rng, n: int, count: int, reject) -> list[int]:
    out: list[int] = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise GenerationError("could not draw distinct relation offsets")
        o = int(rng.integers(1, n))
        if o not in out and not reject(o, out):
            out.append(o)
    return out


def gen_synthetic_kg(spec: SyntheticSpec):
    """Build (train, valid, test) stores plus a pattern manifest.

    Ground triples are sampled at the requested density, the set is closed
    under the declared patterns, and a fraction of the pattern-implied
    triples is reserved for valid/test so that ranking them requires the
    pattern itself rather than memorization.
    """
    n = spec.n_entities
    if n < 3:
        raise GenerationError("need at least 3 entities")
    if spec.density <= 0:
        raise GenerationError("density must be positive")
    if min(spec.n_sym, spec.n_antisym, spec.n_inverse_pairs, spec.n_comp_triples) < 0:
        raise GenerationError("pattern counts must be non-negative")
    if spec.n_sym + spec.n_antisym + spec.n_inverse_pairs + spec.n_comp_triples == 0:
        raise GenerationError("at least one pattern group is required")
    if not 0 <= spec.test_fraction + spec.valid_fraction <= 1:
        raise GenerationError("holdout fractions must fit in [0, 1]")
    if not 0 < spec.ground_fraction <= 1:
        raise GenerationError("ground fraction must be in (0, 1]")
    n_offsets = int(round(spec.density * n))
    if n_offsets < 1:
        raise GenerationError("density too low to draw any ground pairs")
    if 3 * n_offsets >= n:
        raise GenerationError("density too high for distinct relation offsets")

    rng = np.random.default_rng(spec.seed)
    entity_names = [f"e{i:0{len(str(n - 1))}d}" for i in range(n)]

    relation_info = []   # (name, pattern, partners)
    offset_sets = {}     # name -> sorted offsets
    partners = {}        # relation name -> inverse partner name
    comp_groups = []     # (r1, r2, r3, offsets2)

    for i in range(spec.n_sym):
        name = f"sym{i}"
        relation_info.append((name, "symmetric", []))
        base = _draw_offsets(rng, n, (n_offsets + 1) // 2,
                             reject=lambda o, out: (n - o) in out or 2 * o == n)
        offset_sets[name] = sorted({o for b in base for o in (b, n - b)})

    for i in range(spec.n_antisym):
        name = f"anti{i}"
        relation_info.append((name, "anti-symmetric", []))
        offs = _draw_offsets(rng, n, n_offsets,
                             reject=lambda o, out: (n - o) in out or 2 * o == n)
        offset_sets[name] = sorted(offs)

    for i in range(spec.n_inverse_pairs):
        fwd, rev = f"inv{i}_r1", f"inv{i}_r2"
        relation_info.append((fwd, "inverse", [rev]))
        relation_info.append((rev, "inverse", [fwd]))
        offs = _draw_offsets(rng, n, n_offsets, reject=lambda o, out: False)
        offset_sets[fwd] = sorted(offs)
        offset_sets[rev] = sorted((n - o) % n for o in offs)
        partners[fwd] = rev
        partners[rev] = fwd

    comp_parts = max(1, int(round(np.sqrt(n_offsets))))
    for i in range(spec.n_comp_triples):
        r1, r2, r3 = f"comp{i}_r1", f"comp{i}_r2", f"comp{i}_r3"
        relation_info.append((r1, "composition", [r2, r3]))
        relation_info.append((r2, "composition", [r1, r3]))
        relation_info.append((r3, "composed", [r1, r2]))
        s1 = _draw_offsets(rng, n, comp_parts, reject=lambda o, out: False)
        s2 = _draw_offsets(rng, n, comp_parts, reject=lambda o, out: False)
        offset_sets[r1] = sorted(s1)
        offset_sets[r2] = sorted(s2)
        offset_sets[r3] = sorted({(a + b) % n for a in s1 for b in s2} - {0})
        comp_groups.append((r1, r2, r3, sorted(s2)))

    ground = []
    for name, _, _ in relation_info:
        pairs = [(h, (h + o) % n) for o in offset_sets[name] for h in range(n)]
        take = rng.permutation(len(pairs))[: max(1, int(spec.ground_fraction * len(pairs)))]
        ground.extend((pairs[j][0], name, pairs[j][1]) for j in sorted(take))
    ground = list(dict.fromkeys(ground))
    ground_set = set(ground)

    implied_unique: dict = {}

    def imply(triple, pattern, sources):
        if triple not in ground_set and triple not in implied_unique:
            implied_unique[triple] = (pattern, sources)

    for h, name, t in ground:
        kind = next(p for rn, p, _ in relation_info if rn == name)
        if kind == "symmetric":
            imply((t, name, h), "symmetric", [(h, name, t)])
        elif kind == "inverse":
            imply((t, partners[name], h), "inverse", [(h, name, t)])
    for r1, r2, r3, s2 in comp_groups:
        for h, name, o in ground:
            if name != r1:
                continue
            for b in s2:
                t = (o + b) % n
                if (o, r2, t) in ground_set:
                    imply((h, r3, t), "composition", [(h, r1, o), (o, r2, t)])

    implied_list = list(implied_unique.items())
    order = rng.permutation(len(implied_list))
    n_test = int(round(spec.test_fraction * len(implied_list)))
    n_valid = int(round(spec.valid_fraction * len(implied_list)))
    test_items = [implied_list[i] for i in order[:n_test]]
    valid_items = [implied_list[i] for i in order[n_test:n_test + n_valid]]
    train_items = [implied_list[i] for i in order[n_test + n_valid:]]

    relation_names = sorted(name for name, _, _ in relation_info)
    ent_ids = {name: i for i, name in enumerate(entity_names)}
    rel_ids = {name: i for i, name in enumerate(relation_names)}

    def make_store(rows):
        ids = np.array(
            [(h, rel_ids[r], t) for (h, r, t) in rows], dtype=np.int64
        ).reshape(-1, 3)
        return TripleStore(ids, list(entity_names), list(relation_names))

    train = make_store(ground + [t for t, _ in train_items])
    valid = make_store([t for t, _ in valid_items])
    test = make_store([t for t, _ in test_items])

    def name_triple(t):
        h, r, tl = t
        return [entity_names[h], r, entity_names[tl]]

    manifest = {
        "seed": spec.seed,
        "n_entities": n,
        "density": spec.density,
        "relations": [
            {"name": name, "pattern": pattern, "partners": partners}
            for name, pattern, partners in sorted(relation_info)
        ],
        "test_implied": [
            {
                "triple": name_triple(t),
                "pattern": pattern,
                "source": [name_triple(s) for s in sources],
            }
            for t, (pattern, sources) in test_items
        ],
    }
    return train, valid, test, manifest
