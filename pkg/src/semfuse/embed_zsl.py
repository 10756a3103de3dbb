"""Embedding-family zero-shot model.

Features and class semantics are projected into a common space by two
affine branches; training minimizes the mean squared Euclidean distance
between paired projections plus a weight penalty, and inference picks
the nearest projected class prototype.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .datasets import FeatureSet, check_split_discipline
from .errors import ContractError, ManifestError, ShapeError
from .fusion import (
    FusionParams,
    SemanticBundle,
    fuse_graph,
    init_fusion,
    resolve_semantics,
)

Batch = list[tuple[np.ndarray, SemanticBundle]]


class EmbedModel:
    """Two projection branches into a shared q-dimensional space."""

    def __init__(self, store: ad.ParamStore, q: int, m: int, d: int, lam: float):
        self.store = store
        self.q = q
        self.m = m
        self.d = d
        self.lam = lam

    @property
    def W_z(self) -> ad.Tensor:
        return self.store["W_z"]

    @property
    def b_z(self) -> ad.Tensor:
        return self.store["b_z"]

    @property
    def W_e(self) -> ad.Tensor:
        return self.store["W_e"]

    @property
    def b_e(self) -> ad.Tensor:
        return self.store["b_e"]

    def project_features(self, z: ad.Tensor) -> ad.Tensor:
        return ad.add_bias(ad.matmul(z, ad.transpose(self.W_z)), self.b_z)

    def project_semantics(self, e: ad.Tensor) -> ad.Tensor:
        return ad.add_bias(ad.matmul(e, ad.transpose(self.W_e)), self.b_e)

    def weight_penalty(self) -> ad.Tensor:
        return ad.add(ad.sum_sq(self.W_z), ad.sum_sq(self.W_e))


def init_embed_model(q: int, m: int, d: int, lam: float, seed: int) -> EmbedModel:
    if q <= 0 or m <= 0 or d <= 0:
        raise ContractError("dimensions must be positive")
    if lam < 0 or not np.isfinite(lam):
        raise ContractError("lambda must be finite and non-negative")
    rng = np.random.default_rng(seed)
    store = ad.ParamStore()
    store.add("W_z", rng.uniform(-1, 1, size=(q, m)) * np.sqrt(6.0 / (q + m)))
    store.add("b_z", np.zeros(q))
    store.add("W_e", rng.uniform(-1, 1, size=(q, d)) * np.sqrt(6.0 / (q + d)))
    store.add("b_e", np.zeros(q))
    return EmbedModel(store, q, m, d, lam)


def _semantic_graph(
    fusion: FusionParams | None, bundles: list[SemanticBundle]
) -> ad.Tensor:
    """Semantic inputs for a list of bundles, fused when trainable."""
    if fusion is not None:
        e_c = ad.constant(np.stack([b.e_c for b in bundles]))
        e_p = ad.constant(np.stack([b.e_p for b in bundles]))
        return fuse_graph(fusion, e_c, e_p)
    missing = [b.name for b in bundles if b.e is None]
    if missing:
        raise ContractError(f"bundles without fused semantics: {missing[:3]}")
    return ad.constant(np.stack([b.e for b in bundles]))


def embed_loss(
    model: EmbedModel, fusion: FusionParams | None, batch: Batch
) -> ad.Tensor:
    """Mean squared common-space distance plus the weight penalty."""
    if not batch:
        raise ContractError("empty batch")
    z = np.stack([np.asarray(z_i, dtype=np.float64) for z_i, _ in batch])
    if z.shape[1] != model.m:
        raise ShapeError(f"features have dimension {z.shape[1]}, expected {model.m}")
    bundles = [b for _, b in batch]
    z_proj = model.project_features(ad.constant(z))
    e_proj = model.project_semantics(_semantic_graph(fusion, bundles))
    pair_term = ad.scale(ad.sum_sq(ad.sub(z_proj, e_proj)), 1.0 / len(batch))
    penalty = model.weight_penalty()
    if fusion is not None:
        penalty = ad.add(penalty, fusion.weight_penalty())
    return ad.add(pair_term, ad.scale(penalty, model.lam))


@dataclass
class EmbedTrainConfig:
    q: int | None = None  # common-space dimension, defaults to d
    lr: float = 1e-3
    epochs: int = 1000
    lam: float = 1e-3
    alpha: float = 0.5
    seed: int = 0
    batch_size: int = 64
    optimizer: str = "adam"  # "adam" | "sgd"
    variation: str = "ours"


@dataclass
class EmbedRun:
    """Training artifacts: both parameter groups plus the loss trace."""

    model: EmbedModel
    fusion: FusionParams | None
    loss_history: list[float] = field(default_factory=list)


def train_embed(
    data: FeatureSet, bundles: list[SemanticBundle], config: EmbedTrainConfig
) -> EmbedRun:
    """Gradient-descent training on seen-class features.

    Full batch when the dataset fits in one batch, otherwise shuffled
    mini-batches. Deterministic given config and seed; epochs=0 returns
    the freshly initialized parameters.
    """
    check_split_discipline(data.seen_ids, data.unseen_ids)
    outside = set(int(c) for c in np.unique(data.labels)) - set(data.seen_ids)
    if outside:
        raise ManifestError(f"training features contain non-seen classes {sorted(outside)}")
    by_id = {b.class_id: b for b in bundles}
    missing = sorted(set(int(c) for c in np.unique(data.labels)) - set(by_id))
    if missing:
        raise ManifestError(f"classes without semantics: {missing}")

    d = bundles[0].dimension
    q = config.q if config.q is not None else d
    seeds = np.random.SeedSequence(config.seed).spawn(3)
    model_seed, fusion_seed, shuffle_seed = (
        int(s.generate_state(1)[0]) for s in seeds
    )
    model = init_embed_model(q, data.m, d, config.lam, model_seed)
    fusion = (
        init_fusion(d, fusion_seed, config.alpha)
        if config.variation == "ours"
        else None
    )
    if fusion is None:
        # bake the raw vector of the active side into each bundle
        bundles = resolve_semantics(bundles, None, config.variation)
        by_id = {b.class_id: b for b in bundles}

    stores = [model.store] + ([fusion.store] if fusion is not None else [])
    states = [ad.AdamState(s) for s in stores]
    rng = np.random.default_rng(shuffle_seed)
    history: list[float] = []

    for _ in range(config.epochs):
        order = np.arange(data.n)
        if data.n > config.batch_size:
            rng.shuffle(order)
        epoch_losses = []
        for start in range(0, data.n, config.batch_size):
            rows = order[start : start + config.batch_size]
            batch = [(data.features[i], by_id[int(data.labels[i])]) for i in rows]
            loss = embed_loss(model, fusion, batch)
            ad.backward(loss, *stores)
            for store, state in zip(stores, states):
                if config.optimizer == "adam":
                    ad.adam_step(store, state, config.lr)
                elif config.optimizer == "sgd":
                    ad.sgd_step(store, config.lr)
                else:
                    raise ContractError(f"unknown optimizer {config.optimizer!r}")
            epoch_losses.append(loss.item())
        history.append(float(np.mean(epoch_losses)))
    return EmbedRun(model, fusion, history)


def _prototype_matrix(
    model: EmbedModel, fusion: FusionParams | None, candidates: list[SemanticBundle]
) -> tuple[np.ndarray, np.ndarray]:
    """Projected class prototypes, sorted by class id."""
    ordered = sorted(candidates, key=lambda b: b.class_id)
    protos = model.project_semantics(_semantic_graph(fusion, ordered)).data
    ids = np.array([b.class_id for b in ordered], dtype=np.int64)
    return protos, ids


def classify_batch(
    model: EmbedModel,
    fusion: FusionParams | None,
    z: np.ndarray,
    candidates: list[SemanticBundle],
) -> np.ndarray:
    """Nearest-prototype labels for feature rows; ties go to the lowest id."""
    if not candidates:
        raise ContractError("no candidate classes")
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    protos, ids = _prototype_matrix(model, fusion, candidates)
    z_proj = model.project_features(ad.constant(z)).data
    # squared distances (n_samples, n_candidates); argmin hits the first
    # minimum, i.e. the lowest class id because prototypes are id-sorted
    d2 = ((z_proj[:, None, :] - protos[None, :, :]) ** 2).sum(axis=2)
    return ids[np.argmin(d2, axis=1)]


def classify(
    model: EmbedModel,
    fusion: FusionParams | None,
    z: np.ndarray,
    candidates: list[SemanticBundle],
) -> int:
    """Class id of the nearest projected prototype for one feature vector."""
    return int(classify_batch(model, fusion, z, candidates)[0])


class EmbedPredictor:
    """Evaluation adapter bundling the trained branches and variation."""

    def __init__(
        self, model: EmbedModel, fusion: FusionParams | None, variation: str
    ):
        self.model = model
        self.fusion = fusion
        self.variation = variation

    def predict_batch(
        self, z: np.ndarray, candidates: list[SemanticBundle]
    ) -> np.ndarray:
        if self.fusion is None:
            candidates = resolve_semantics(candidates, None, self.variation)
        return classify_batch(self.model, self.fusion, z, candidates)
