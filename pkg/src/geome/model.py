"""Embedding tables and multivector scoring.

An embedding assigns every entity and relation k multivector components.
The score of a triple (h, r, t) is the summed scalar part of the
componentwise product  M_h x M_r x conjugate(M_t):

    phi(h, r, t) = sum_i Sc(M_h_i x M_r_i x conjugate(M_t_i))

The hot path uses fused kernels with the product expansion written out
per grade instead of composing three generic products; their agreement
with the composed form is enforced by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ga import GROUP_NAMES, Algebra, algebra

MODEL_GRADES = {"geome1d": 1, "geome2d": 2, "geome3d": 3}

_DTYPES = {"f32": np.float32, "f64": np.float64}


@dataclass
class ModelConfig:
    grade: int
    dim_k: int
    num_entities: int
    num_relations: int
    precision: str = "f64"

    def __post_init__(self):
        if self.grade not in (1, 2, 3):
            raise ValueError(f"unsupported grade {self.grade}")
        if self.dim_k <= 0 or self.num_entities <= 0 or self.num_relations <= 0:
            raise ValueError("dim_k, num_entities and num_relations must be positive")
        if self.precision not in _DTYPES:
            raise ValueError(f"precision must be one of {sorted(_DTYPES)}")

    @property
    def dtype(self):
        return _DTYPES[self.precision]

    @property
    def parameter_count(self) -> int:
        return (self.num_entities + self.num_relations) * self.dim_k * 2 ** self.grade


class EmbeddingTable:
    """Entity and relation parameters: arrays of shape (rows, k, 2^grade).

    Rows are addressed by dense integer ids.  Optional name lists tie ids
    back to the dictionaries they were built from; they travel with
    checkpoints and guard ensemble scoring.
    """

    def __init__(
        self,
        grade: int,
        entities: np.ndarray,
        relations: np.ndarray,
        entity_names: Optional[list[str]] = None,
        relation_names: Optional[list[str]] = None,
    ):
        entities = np.asarray(entities)
        relations = np.asarray(relations)
        if entities.ndim != 3 or relations.ndim != 3:
            raise ValueError("entity/relation arrays must have shape (rows, k, blades)")
        dim = 2 ** grade
        if entities.shape[2] != dim or relations.shape[2] != dim:
            raise ValueError(f"blade axis must have length {dim} for grade {grade}")
        if entities.shape[1] != relations.shape[1]:
            raise ValueError("entities and relations must share the component count k")
        self.grade = grade
        self.entities = entities
        self.relations = relations
        self.entity_names = entity_names
        self.relation_names = relation_names

    @classmethod
    def random(cls, config: ModelConfig, seed: int = 0, std: float = 1e-2,
               entity_names=None, relation_names=None) -> "EmbeddingTable":
        rng = np.random.default_rng(seed)
        dim = 2 ** config.grade
        ent = rng.normal(0.0, std, size=(config.num_entities, config.dim_k, dim))
        rel = rng.normal(0.0, std, size=(config.num_relations, config.dim_k, dim))
        dt = config.dtype
        return cls(config.grade, ent.astype(dt), rel.astype(dt), entity_names, relation_names)

    @property
    def num_entities(self) -> int:
        return self.entities.shape[0]

    @property
    def num_relations(self) -> int:
        return self.relations.shape[0]

    @property
    def dim_k(self) -> int:
        return self.entities.shape[1]

    @property
    def algebra(self) -> Algebra:
        return algebra(self.grade)

    @property
    def dtype(self):
        return self.entities.dtype

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(
            self.grade,
            self.entities.copy(),
            self.relations.copy(),
            None if self.entity_names is None else list(self.entity_names),
            None if self.relation_names is None else list(self.relation_names),
        )

    def astype(self, dtype) -> "EmbeddingTable":
        return EmbeddingTable(
            self.grade,
            self.entities.astype(dtype),
            self.relations.astype(dtype),
            self.entity_names,
            self.relation_names,
        )


def _check_index(idx, count, what: str):
    idx = np.asarray(idx)
    if idx.size and (idx.min() < 0 or idx.max() >= count):
        raise IndexError(f"{what} index out of range [0, {count})")


def fused_product(grade: int, h: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Geometric product h x r with the expansion written out per grade.

    Inputs and output have blades on the last axis; any leading shape is
    broadcast elementwise.
    """
    lead = np.broadcast_shapes(h.shape[:-1], r.shape[:-1])
    if grade == 1:
        h0, h1 = h[..., 0], h[..., 1]
        r0, r1 = r[..., 0], r[..., 1]
        out = np.empty(lead + (2,), dtype=np.result_type(h, r))
        out[..., 0] = h0 * r0 + h1 * r1
        out[..., 1] = h0 * r1 + h1 * r0
        return out
    if grade == 2:
        h0, h1, h2, h12 = (h[..., i] for i in range(4))
        r0, r1, r2, r12 = (r[..., i] for i in range(4))
        out = np.empty(lead + (4,), dtype=np.result_type(h, r))
        out[..., 0] = h0 * r0 + h1 * r1 + h2 * r2 - h12 * r12
        out[..., 1] = h0 * r1 + h1 * r0 - h2 * r12 + h12 * r2
        out[..., 2] = h0 * r2 + h1 * r12 + h2 * r0 - h12 * r1
        out[..., 3] = h0 * r12 + h1 * r2 - h2 * r1 + h12 * r0
        return out
    if grade == 3:
        h0, h1, h2, h3, h12, h23, h13, h123 = (h[..., i] for i in range(8))
        r0, r1, r2, r3, r12, r23, r13, r123 = (r[..., i] for i in range(8))
        out = np.empty(lead + (8,), dtype=np.result_type(h, r))
        out[..., 0] = (h0 * r0 + h1 * r1 + h2 * r2 + h3 * r3
                       - h12 * r12 - h23 * r23 - h13 * r13 - h123 * r123)
        out[..., 1] = (h0 * r1 + h1 * r0 - h2 * r12 + h12 * r2
                       - h3 * r13 + h13 * r3 - h23 * r123 - h123 * r23)
        out[..., 2] = (h0 * r2 + h2 * r0 + h1 * r12 - h12 * r1
                       - h3 * r23 + h23 * r3 + h13 * r123 + h123 * r13)
        out[..., 3] = (h0 * r3 + h3 * r0 + h1 * r13 - h13 * r1
                       + h2 * r23 - h23 * r2 - h12 * r123 - h123 * r12)
        out[..., 4] = (h0 * r12 + h12 * r0 + h1 * r2 - h2 * r1
                       - h13 * r23 + h23 * r13 + h3 * r123 + h123 * r3)
        out[..., 5] = (h0 * r23 + h23 * r0 + h1 * r123 + h123 * r1
                       + h2 * r3 - h3 * r2 - h12 * r13 + h13 * r12)
        out[..., 6] = (h0 * r13 + h13 * r0 + h1 * r3 - h3 * r1
                       - h2 * r123 - h123 * r2 + h12 * r23 - h23 * r12)
        out[..., 7] = (h0 * r123 + h123 * r0 + h1 * r23 + h23 * r1
                       - h2 * r13 - h13 * r2 + h3 * r12 + h12 * r3)
        return out
    raise ValueError(f"unsupported grade {grade}")


def adjoint_right(grade: int, reversion_signs: np.ndarray, r: np.ndarray,
                  s: np.ndarray) -> np.ndarray:
    """u with <a x r, s> = <a, u> for all a: u = s x reverse(r).

    Reversion is the adjoint of multiplication under the blade-coefficient
    inner product, which turns the scoring contractions into ordinary
    products of sign-flipped arguments.
    """
    return fused_product(grade, s, reversion_signs * r)


def adjoint_left(grade: int, reversion_signs: np.ndarray, h: np.ndarray,
                 g: np.ndarray) -> np.ndarray:
    """v with <h x b, g> = <b, v> for all b: v = reverse(h) x g."""
    return fused_product(grade, reversion_signs * h, g)


def score_triples(table: EmbeddingTable, heads, relations, tails) -> np.ndarray:
    """Scores for index arrays of equal length (fused kernel)."""
    heads = np.atleast_1d(np.asarray(heads))
    relations = np.atleast_1d(np.asarray(relations))
    tails = np.atleast_1d(np.asarray(tails))
    _check_index(heads, table.num_entities, "head entity")
    _check_index(tails, table.num_entities, "tail entity")
    _check_index(relations, table.num_relations, "relation")
    h = table.entities[heads]
    r = table.relations[relations]
    t = table.entities[tails]
    sigma = table.algebra.tail_signs.astype(h.dtype)
    hr = fused_product(table.grade, h, r)
    return np.sum(hr * sigma * t, axis=(-2, -1))


def score_triple(table: EmbeddingTable, h: int, r: int, t: int) -> float:
    return float(score_triples(table, [h], [r], [t])[0])


def score_all(table: EmbeddingTable, fixed: tuple[int, int], side: str) -> np.ndarray:
    """Scores against every candidate entity on one side.

    fixed = (entity, relation): the entity kept in place (the head when
    replacing tails, the tail when replacing heads).  Element j of the
    result equals score_triple with candidate j substituted.
    """
    entity, relation = fixed
    _check_index(np.array([entity]), table.num_entities, "fixed entity")
    _check_index(np.array([relation]), table.num_relations, "relation")
    alg = table.algebra
    sigma = alg.tail_signs.astype(table.dtype)
    e = table.entities[entity]
    r = table.relations[relation]
    flat = table.entities.reshape(table.num_entities, -1)
    if side == "replace_tail":
        q = sigma * fused_product(table.grade, e, r)
        return flat @ q.reshape(-1)
    if side == "replace_head":
        # phi(h', r, t) = <h', u> with u = (sigma*t) x reverse(r)
        rev = alg.reversion_signs.astype(table.dtype)
        u = adjoint_right(table.grade, rev, r, sigma * e)
        return flat @ u.reshape(-1)
    raise ValueError(f"side must be 'replace_tail' or 'replace_head', got {side!r}")


def project_subsumption(table: EmbeddingTable, mode: str, modulus: float = 1.0) -> EmbeddingTable:
    """Project the table onto one of the subsumed model families.

    complex:    zero the vector blades (and the trivector at grade 3),
                keeping scalar + bivector coefficients.
    quaternion: grade 3 only; zero vector and trivector blades, keeping
                the scalar and the three bivectors.
    protate:    grade 2 only; complex projection followed by rescaling
                every relation component to unit norm and every entity
                component to norm `modulus`.
    """
    alg = table.algebra
    g = alg.blade_grades
    out = table.copy()
    if mode == "complex":
        if table.grade < 2:
            raise ValueError("complex projection requires grade >= 2")
        keep = (g == 0) | (g == 2)
    elif mode == "quaternion":
        if table.grade != 3:
            raise ValueError("quaternion projection requires grade 3")
        keep = (g == 0) | (g == 2)
    elif mode == "protate":
        if table.grade != 2:
            raise ValueError("protate projection requires grade 2")
        if modulus <= 0:
            raise ValueError("modulus must be positive")
        keep = (g == 0) | (g == 2)
    else:
        raise ValueError(f"unknown projection mode {mode!r}")
    out.entities = out.entities * keep.astype(out.dtype)
    out.relations = out.relations * keep.astype(out.dtype)
    if mode == "protate":
        out.relations = _rescale_components(out.relations, 1.0)
        out.entities = _rescale_components(out.entities, modulus)
    return out


def _rescale_components(arr: np.ndarray, target: float) -> np.ndarray:
    norms = np.sqrt(np.sum(np.square(arr), axis=-1, keepdims=True))
    # degenerate zero components become pure scalars of the target norm
    safe = np.where(norms == 0.0, 1.0, norms)
    out = arr * (target / safe)
    zero = np.broadcast_to(norms == 0.0, arr.shape).copy()
    zero[..., 1:] = False
    out = np.where(zero, target, out)
    return out.astype(arr.dtype)


def _check_shared_dictionaries(a: EmbeddingTable, b: EmbeddingTable):
    if a.num_entities != b.num_entities or a.num_relations != b.num_relations:
        raise ValueError("ensemble tables disagree on entity/relation counts")
    if a.entity_names is not None and b.entity_names is not None:
        if list(a.entity_names) != list(b.entity_names):
            raise ValueError("ensemble tables were built from different entity dictionaries")
    if a.relation_names is not None and b.relation_names is not None:
        if list(a.relation_names) != list(b.relation_names):
            raise ValueError("ensemble tables were built from different relation dictionaries")


def ensemble_score(a: EmbeddingTable, b: EmbeddingTable, h: int, r: int, t: int) -> float:
    """Sum of the two component scores over shared dictionaries."""
    _check_shared_dictionaries(a, b)
    return score_triple(a, h, r, t) + score_triple(b, h, r, t)


@dataclass
class RelationReport:
    """Blade-group norms of one relation embedding, plus an optional
    conjugacy comparison against a partner relation."""

    relation: int
    group_norms: dict = field(default_factory=dict)
    partner: Optional[int] = None
    conjugacy_distance: Optional[float] = None
    normalized_conjugacy_distance: Optional[float] = None

    def lines(self) -> list[str]:
        out = [f"relation={self.relation}"]
        for name, value in self.group_norms.items():
            out.append(f"norm_{name}={value:.6g}")
        if self.partner is not None:
            out.append(f"partner={self.partner}")
            out.append(f"conjugacy_distance={self.conjugacy_distance:.6g}")
            out.append(f"normalized_conjugacy_distance={self.normalized_conjugacy_distance:.6g}")
        return out


def inspect_relation(table: EmbeddingTable, relation: int,
                     partner: Optional[int] = None) -> RelationReport:
    """Per-blade-group Euclidean norms aggregated over the k components.

    With a partner relation, also reports sum_i ||M_r_i - conjugate(M_p_i)||
    and the same divided by sum_i ||M_r_i||.
    """
    _check_index(np.array([relation]), table.num_relations, "relation")
    alg = table.algebra
    coeffs = table.relations[relation]
    report = RelationReport(relation=relation)
    for g in range(table.grade + 1):
        group = coeffs[:, alg.blade_grades == g]
        report.group_norms[GROUP_NAMES[g]] = float(np.sqrt(np.sum(np.square(group))))
    if partner is not None:
        _check_index(np.array([partner]), table.num_relations, "relation")
        other = alg.conjugate(table.relations[partner])
        per_component = np.sqrt(np.sum(np.square(coeffs - other), axis=-1))
        distance = float(np.sum(per_component))
        base = float(np.sum(np.sqrt(np.sum(np.square(coeffs), axis=-1))))
        report.partner = partner
        report.conjugacy_distance = distance
        report.normalized_conjugacy_distance = distance / base if base > 0 else float("inf")
    return report
