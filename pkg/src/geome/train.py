"""Full-softmax training with cube-norm regularization and Adagrad.

For every triple (h, r, t) of the reciprocal-augmented training set the
instantaneous loss is

    -log softmax_{h'} phi(h', r, t)   at h
    -log softmax_{t'} phi(h, r, t')   at t
    + (lambda/3) * sum_i (|M_h_i|_3^3 + |M_r_i|_3^3 + |M_t_i|_3^3)

summed over the batch, where |M|_3^3 is the sum of cubed absolute blade
coefficients.  Both softmax terms run over all entities, so every entity
row receives gradient through the denominators; relation rows receive
gradient only when they appear in the batch (or as partners of a pattern
constraint).  Gradients are exact and checked against central finite
differences by grad_check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .data import TripleStore
from .evaluation import FilterIndex, evaluate_split
from .model import EmbeddingTable, ModelConfig, adjoint_left, adjoint_right, fused_product
from .ga import algebra

RECIPROCAL_SUFFIX = "⁻¹"  # superscript -1


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the offending batch index."""

    def __init__(self, message: str, batch_index: Optional[int] = None):
        super().__init__(message)
        self.batch_index = batch_index


@dataclass
class TrainConfig:
    dim_k: int = 1000
    grade: int = 2
    lr: float = 0.1
    batch_size: int = 1000
    lambda_reg: float = 0.01
    max_epochs: int = 100
    seed: int = 0
    init_std: float = 1e-2
    eval_every: int = 5
    patience: int = 3
    adagrad_eps: float = 1e-10
    precision: str = "f64"
    constraint_weight: float = 1.0
    constrain_symmetric: tuple = ()
    constrain_inverse: tuple = ()  # pairs (r1, r2)


@dataclass
class OptimizerState:
    """Per-coefficient sums of squared gradients (never decreasing)."""

    entity_acc: np.ndarray
    relation_acc: np.ndarray

    @classmethod
    def zeros(cls, table: EmbeddingTable) -> "OptimizerState":
        return cls(
            entity_acc=np.zeros_like(table.entities),
            relation_acc=np.zeros_like(table.relations),
        )


@dataclass
class Gradients:
    """Dense entity gradient plus gradients for the touched relation rows."""

    entities: np.ndarray
    relation_rows: np.ndarray
    relations: np.ndarray


@dataclass
class TrainHistory:
    epoch_losses: list = field(default_factory=list)
    evaluations: list = field(default_factory=list)  # (epoch, validation MRR)
    best_epoch: int = 0
    best_mrr: float = float("nan")


def augment_reciprocal(store: TripleStore) -> TripleStore:
    """Add a reversed twin (t, r+R, h) for every triple (h, r, t).

    The returned store has 2R relations; id r+R is the reciprocal of r.
    """
    n_rel = store.n_relations
    recip_names = [name + RECIPROCAL_SUFFIX for name in store.relation_names]
    clash = set(recip_names) & set(store.relation_names)
    if clash:
        raise ValueError(f"relation names already contain reciprocal forms: {sorted(clash)}")
    reverse = store.triples[:, [2, 1, 0]].copy()
    reverse[:, 1] += n_rel
    return TripleStore(
        np.concatenate([store.triples, reverse], axis=0),
        list(store.entity_names),
        store.relation_names + recip_names,
    )


def _check_batch(batch: np.ndarray, table: EmbeddingTable):
    if batch.size == 0:
        raise ValueError("empty batch")
    if batch[:, [0, 2]].min() < 0 or batch[:, [0, 2]].max() >= table.num_entities:
        raise IndexError("entity index out of range")
    if batch[:, 1].min() < 0 or batch[:, 1].max() >= table.num_relations:
        raise IndexError("relation index out of range")


def loss_and_grads(table: EmbeddingTable, batch, cfg: TrainConfig):
    """Batch loss and exact gradients.

    Returns (loss, Gradients).  The entity gradient is dense because the
    softmax denominators touch every entity; relation gradients cover the
    batch relations and any constraint partners.
    """
    alg = algebra(table.grade)
    sigma = alg.tail_signs.astype(table.dtype)
    rev = alg.reversion_signs.astype(table.dtype)
    batch = np.asarray(batch, dtype=np.int64).reshape(-1, 3)
    _check_batch(batch, table)
    heads, rels, tails = batch[:, 0], batch[:, 1], batch[:, 2]
    n_batch = batch.shape[0]
    rows = np.arange(n_batch)

    ent = table.entities
    ent_flat = ent.reshape(table.num_entities, -1)
    h_emb = ent[heads]
    r_emb = table.relations[rels]
    t_emb = ent[tails]

    # tail-replacement scores phi(h, r, j) = <Q_b, E_j>;
    # head-replacement scores phi(j, r, t) = <E_j, U_b>
    q = sigma * fused_product(table.grade, h_emb, r_emb)
    sig_t = sigma * t_emb
    u = adjoint_right(table.grade, rev, r_emb, sig_t)
    qu = np.concatenate([q.reshape(n_batch, -1), u.reshape(n_batch, -1)], axis=0)
    scores = qu @ ent_flat.T
    scores_t, scores_h = scores[:n_batch], scores[n_batch:]

    def log_softmax_parts(part, true_cols):
        peak = part.max(axis=1, keepdims=True)
        lse = peak[:, 0] + np.log(np.exp(part - peak).sum(axis=1))
        probs = np.exp(part - lse[:, None])
        probs[rows, true_cols] -= 1.0
        return float(np.sum(lse - part[rows, true_cols])), probs

    loss_t, p_t = log_softmax_parts(scores_t, tails)
    loss_h, p_h = log_softmax_parts(scores_h, heads)
    loss = loss_t + loss_h

    probs = np.concatenate([p_t, p_h], axis=0)
    d_ent = (probs.T @ qu).reshape(ent.shape)

    g = probs @ ent_flat
    g_q = sigma * g[:n_batch].reshape(q.shape)
    g_u = g[n_batch:].reshape(u.shape)
    d_h = adjoint_right(table.grade, rev, r_emb, g_q)
    d_r = adjoint_left(table.grade, rev, h_emb, g_q)
    d_r += adjoint_left(table.grade, rev, g_u, sig_t)
    d_t = sigma * fused_product(table.grade, g_u, r_emb)

    lam = cfg.lambda_reg
    if lam > 0:
        loss += (lam / 3.0) * float(
            np.sum(np.abs(h_emb) ** 3) + np.sum(np.abs(r_emb) ** 3) + np.sum(np.abs(t_emb) ** 3)
        )
        d_h = d_h + lam * h_emb * np.abs(h_emb)
        d_r = d_r + lam * r_emb * np.abs(r_emb)
        d_t = d_t + lam * t_emb * np.abs(t_emb)

    d_rel = np.zeros_like(table.relations)
    np.add.at(d_ent, heads, d_h)
    np.add.at(d_ent, tails, d_t)
    np.add.at(d_rel, rels, d_r)
    touched = [rels]

    if cfg.constrain_symmetric or cfg.constrain_inverse:
        loss += _pattern_penalties(table, batch, cfg, rev, sigma, d_ent, d_rel, touched)

    if not np.isfinite(loss):
        raise TrainingDiverged(f"non-finite loss {loss!r}")

    rel_rows = np.unique(np.concatenate(touched))
    return loss, Gradients(entities=d_ent, relation_rows=rel_rows,
                           relations=d_rel[rel_rows])


def _score_rows(grade, sigma, h, r, t):
    return np.sum(fused_product(grade, h, r) * sigma * t, axis=(-2, -1))


def _pattern_penalties(table, batch, cfg, rev, sigma, d_ent, d_rel, touched):
    """Squared score-difference penalties for flagged relation patterns.

    Symmetric relation y:      w * (phi(h,y,t) - phi(t,y,h))^2
    Inverse pair (y1, y2):     w * (phi(h,y1,t) - phi(t,y2,h))^2  (both sides)
    """
    heads, rels, tails = batch[:, 0], batch[:, 1], batch[:, 2]
    grade = table.grade
    w = cfg.constraint_weight
    ent = table.entities
    total = 0.0

    def grads_of_phi(h_emb, r_emb, t_emb):
        sig_t = sigma * t_emb
        gh = adjoint_right(grade, rev, r_emb, sig_t)
        gr = adjoint_left(grade, rev, h_emb, sig_t)
        gt = sigma * fused_product(grade, h_emb, r_emb)
        return gh, gr, gt

    def apply(mask, rel_a, rel_b):
        nonlocal total
        if not np.any(mask):
            return
        hs, ts = heads[mask], tails[mask]
        h_emb, t_emb = ent[hs], ent[ts]
        ra = table.relations[rel_a][None]
        rb = table.relations[rel_b][None]
        phi_fwd = _score_rows(grade, sigma, h_emb, np.broadcast_to(ra, h_emb.shape), t_emb)
        phi_rev = _score_rows(grade, sigma, t_emb, np.broadcast_to(rb, h_emb.shape), h_emb)
        diff = phi_fwd - phi_rev
        total += w * float(np.sum(diff ** 2))
        coef = (2.0 * w * diff)[:, None, None]

        gh1, gr1, gt1 = grads_of_phi(h_emb, np.broadcast_to(ra, h_emb.shape), t_emb)
        gh2, gr2, gt2 = grads_of_phi(t_emb, np.broadcast_to(rb, h_emb.shape), h_emb)
        np.add.at(d_ent, hs, coef * (gh1 - gt2))
        np.add.at(d_ent, ts, coef * (gt1 - gh2))
        np.add.at(d_rel, np.full(hs.shape, rel_a), coef * gr1)
        np.add.at(d_rel, np.full(hs.shape, rel_b), -coef * gr2)
        touched.append(np.array([rel_a, rel_b]))

    for y in cfg.constrain_symmetric:
        apply(rels == y, y, y)
    for y1, y2 in cfg.constrain_inverse:
        apply(rels == y1, y1, y2)
        apply(rels == y2, y2, y1)
    return total


def adagrad_step(table: EmbeddingTable, state: OptimizerState, grads: Gradients,
                 cfg: TrainConfig):
    """In-place update: acc += g^2; theta -= lr * g / (sqrt(acc) + eps)."""
    state.entity_acc += grads.entities ** 2
    table.entities -= cfg.lr * grads.entities / (np.sqrt(state.entity_acc) + cfg.adagrad_eps)
    rows = grads.relation_rows
    if rows.size:
        acc = state.relation_acc[rows] + grads.relations ** 2
        state.relation_acc[rows] = acc
        table.relations[rows] -= cfg.lr * grads.relations / (np.sqrt(acc) + cfg.adagrad_eps)


def init_table(store: TripleStore, cfg: TrainConfig, rng: np.random.Generator) -> EmbeddingTable:
    config = ModelConfig(
        grade=cfg.grade,
        dim_k=cfg.dim_k,
        num_entities=store.n_entities,
        num_relations=store.n_relations,
        precision=cfg.precision,
    )
    dim = 2 ** cfg.grade
    ent = rng.normal(0.0, cfg.init_std, size=(config.num_entities, cfg.dim_k, dim))
    rel = rng.normal(0.0, cfg.init_std, size=(config.num_relations, cfg.dim_k, dim))
    return EmbeddingTable(
        cfg.grade,
        ent.astype(config.dtype),
        rel.astype(config.dtype),
        list(store.entity_names),
        list(store.relation_names),
    )


def fit(store: TripleStore, valid: Optional[TripleStore], cfg: TrainConfig,
        verbose: bool = True):
    """Train on a reciprocal-augmented store with early stopping.

    Every ``eval_every`` epochs the filtered validation MRR is computed;
    training stops after ``patience`` evaluations without improvement or
    at ``max_epochs``, whichever comes first, and the parameters from the
    best evaluation are returned.  Identical (seed, config, data) produce
    bit-identical results.
    """
    rng = np.random.default_rng(cfg.seed)
    table = init_table(store, cfg, rng)
    state = OptimizerState.zeros(table)
    history = TrainHistory()

    filt = None
    if valid is not None and valid.n_triples > 0:
        filt = FilterIndex.from_stores([store, valid])

    best_table = None
    best_mrr = -np.inf
    stale = 0
    n = store.n_triples

    for epoch in range(1, cfg.max_epochs + 1):
        start = time.perf_counter()
        order = rng.permutation(n)
        epoch_loss = 0.0
        for batch_index, lo in enumerate(range(0, n, cfg.batch_size)):
            batch = store.triples[order[lo:lo + cfg.batch_size]]
            try:
                loss, grads = loss_and_grads(table, batch, cfg)
            except TrainingDiverged as err:
                err.batch_index = batch_index
                raise
            adagrad_step(table, state, grads, cfg)
            epoch_loss += loss
        mean_loss = epoch_loss / max(n, 1)
        history.epoch_losses.append(mean_loss)
        if verbose:
            print(f"epoch={epoch} loss={mean_loss:.6f} "
                  f"time={time.perf_counter() - start:.2f}s", flush=True)

        if filt is not None and epoch % cfg.eval_every == 0:
            mrr = evaluate_split(table, valid, filt, use_reciprocal=True).mrr
            history.evaluations.append((epoch, mrr))
            if verbose:
                print(f"eval epoch={epoch} mrr={mrr:.6f} best={max(best_mrr, mrr):.6f}",
                      flush=True)
            if mrr > best_mrr:
                best_mrr = mrr
                best_table = table.copy()
                history.best_epoch = epoch
                history.best_mrr = mrr
                stale = 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break

    if best_table is not None:
        return best_table, history
    return table, history


def grad_check(
    num_entities: int = 5,
    num_relations: int = 2,
    dim_k: int = 3,
    grade: int = 2,
    lambda_reg: float = 0.01,
    seed: int = 0,
    step: float = 1e-6,
    batch_size: int = 6,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Small models only: the numeric pass perturbs every coefficient twice.
    """
    rng = np.random.default_rng(seed)
    dim = 2 ** grade
    table = EmbeddingTable(
        grade,
        rng.normal(0.0, 0.5, size=(num_entities, dim_k, dim)),
        rng.normal(0.0, 0.5, size=(num_relations, dim_k, dim)),
    )
    batch = np.stack(
        [
            rng.integers(0, num_entities, size=batch_size),
            rng.integers(0, num_relations, size=batch_size),
            rng.integers(0, num_entities, size=batch_size),
        ],
        axis=1,
    )
    cfg = TrainConfig(dim_k=dim_k, grade=grade, lambda_reg=lambda_reg)

    _, grads = loss_and_grads(table, batch, cfg)
    analytic = {"entities": grads.entities, "relations": np.zeros_like(table.relations)}
    analytic["relations"][grads.relation_rows] = grads.relations

    worst = 0.0
    for name in ("entities", "relations"):
        arr = getattr(table, name)
        for idx in np.ndindex(arr.shape):
            keep = arr[idx]
            arr[idx] = keep + step
            up = loss_and_grads(table, batch, cfg)[0]
            arr[idx] = keep - step
            down = loss_and_grads(table, batch, cfg)[0]
            arr[idx] = keep
            numeric = (up - down) / (2.0 * step)
            scale = max(abs(numeric), abs(analytic[name][idx]), 1e-6)
            worst = max(worst, abs(numeric - analytic[name][idx]) / scale)
    return worst
