"""Generative-family zero-shot model.

A conditional Wasserstein critic/generator pair with gradient penalty
learns to synthesize class features from semantics; a frozen linear
softmax classifier (pretrained on real seen features) regularizes the
generator; a final softmax classifier trained on real seen plus
synthetic unseen features performs the actual ZSL/GZSL prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .datasets import FeatureSet, check_split_discipline
from .errors import ContractError, ManifestError, ShapeError
from .fusion import SemanticBundle, fuse_graph, init_fusion, resolve_semantics


class Mlp:
    """Dense layers with leaky-relu between them, linear at the end."""

    def __init__(self, store: ad.ParamStore, sizes: list[int], slope: float = 0.2):
        self.store = store
        self.sizes = sizes
        self.slope = slope

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    def forward(self, x: ad.Tensor) -> ad.Tensor:
        h = x
        for i in range(self.n_layers):
            h = ad.add_bias(
                ad.matmul(h, ad.transpose(self.store[f"l{i}.W"])), self.store[f"l{i}.b"]
            )
            if i < self.n_layers - 1:
                h = ad.leaky_relu(h, self.slope)
        return h

    def weight_tensors(self) -> list[ad.Tensor]:
        return [self.store[f"l{i}.W"] for i in range(self.n_layers)]


def _init_mlp(sizes: list[int], seed: int, slope: float = 0.2) -> Mlp:
    rng = np.random.default_rng(seed)
    store = ad.ParamStore()
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        store.add(f"l{i}.W", rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        store.add(f"l{i}.b", np.zeros(fan_out))
    return Mlp(store, sizes, slope)


class Generator:
    """Maps (noise, semantics) to a synthetic feature vector."""

    def __init__(self, mlp: Mlp, noise_dim: int, d: int, m: int):
        if noise_dim <= 0:
            raise ContractError("noise dimension must be positive")
        self.mlp = mlp
        self.noise_dim = noise_dim
        self.d = d
        self.m = m

    @property
    def store(self) -> ad.ParamStore:
        return self.mlp.store

    def forward(self, h: ad.Tensor, e: ad.Tensor) -> ad.Tensor:
        if h.shape[-1] != self.noise_dim or e.shape[-1] != self.d:
            raise ShapeError(
                f"generator inputs {h.shape}, {e.shape} do not match "
                f"(noise_dim={self.noise_dim}, d={self.d})"
            )
        return self.mlp.forward(ad.concat_cols(h, e))


class Discriminator:
    """Scalar-scoring Wasserstein critic conditioned on semantics."""

    def __init__(self, mlp: Mlp, m: int, d: int):
        self.mlp = mlp
        self.m = m
        self.d = d

    @property
    def store(self) -> ad.ParamStore:
        return self.mlp.store

    def forward(self, z: ad.Tensor, e: ad.Tensor) -> ad.Tensor:
        if z.shape[-1] != self.m or e.shape[-1] != self.d:
            raise ShapeError(
                f"critic inputs {z.shape}, {e.shape} do not match (m={self.m}, d={self.d})"
            )
        return self.mlp.forward(ad.concat_cols(z, e))


def init_generator(
    m: int, d: int, noise_dim: int, seed: int, hidden: list[int] | None = None
) -> Generator:
    sizes = [noise_dim + d] + (hidden if hidden is not None else [4 * m]) + [m]
    return Generator(_init_mlp(sizes, seed), noise_dim, d, m)


def init_discriminator(
    m: int, d: int, seed: int, hidden: list[int] | None = None
) -> Discriminator:
    sizes = [m + d] + (hidden if hidden is not None else [4 * m]) + [1]
    return Discriminator(_init_mlp(sizes, seed), m, d)


# ---------------------------------------------------------------------------
# gradient penalty


def gradient_penalty(
    disc: Discriminator,
    z_real: np.ndarray,
    z_fake: np.ndarray,
    e: np.ndarray,
    beta,
) -> ad.Tensor:
    """Unit-gradient-norm penalty at interpolates between real and fake.

    The interpolate ``beta * z_real + (1 - beta) * z_fake`` enters the
    critic as a fresh leaf; its input gradient comes from a backward
    pass kept differentiable so the penalty can train the critic.
    Accepts single vectors or row-aligned batches; ``beta`` may be a
    scalar or one value per row. Always >= 0, and exactly 0 only when
    the critic's input-gradient norm is 1 everywhere.
    """
    z_real = np.atleast_2d(np.asarray(z_real, dtype=np.float64))
    z_fake = np.atleast_2d(np.asarray(z_fake, dtype=np.float64))
    e = np.atleast_2d(np.asarray(e, dtype=np.float64))
    if z_real.shape != z_fake.shape or z_real.shape[0] != e.shape[0]:
        raise ShapeError(
            f"penalty inputs disagree: {z_real.shape}, {z_fake.shape}, {e.shape}"
        )
    beta_col = np.broadcast_to(
        np.asarray(beta, dtype=np.float64).reshape(-1, 1), (z_real.shape[0], 1)
    )
    z_tilde = ad.leaf(beta_col * z_real + (1.0 - beta_col) * z_fake)
    score_sum = ad.sum_all(disc.forward(z_tilde, ad.constant(e)))
    (g,) = ad.grad(score_sum, [z_tilde], create_graph=True)
    if g is None:
        g = ad.constant(np.zeros_like(z_tilde.data))
    norms = ad.sqrt(ad.sum_last(ad.square(g)))
    return ad.mean_all(ad.square(ad.shift(norms, -1.0)))


# ---------------------------------------------------------------------------
# softmax classifier


class SoftmaxClassifier:
    """Linear softmax over an ordered set of class ids."""

    def __init__(self, store: ad.ParamStore, class_ids: list[int], m: int):
        if len(class_ids) < 2:
            raise ContractError("softmax classifier needs at least 2 classes")
        if len(set(class_ids)) != len(class_ids):
            raise ContractError("duplicate class ids")
        self.store = store
        self.class_ids = list(class_ids)
        self.m = m
        self._row = {cid: i for i, cid in enumerate(self.class_ids)}

    @property
    def theta(self) -> ad.Tensor:
        return self.store["W"]

    def logits(self, z: ad.Tensor) -> ad.Tensor:
        return ad.add_bias(ad.matmul(z, ad.transpose(self.store["W"])), self.store["b"])

    def predict_ids(self, z: np.ndarray, candidate_ids=None) -> np.ndarray:
        """Argmax labels, optionally restricted to a candidate subset."""
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        scores = self.logits(ad.constant(z)).data
        if candidate_ids is None:
            cols = np.arange(len(self.class_ids))
        else:
            missing = [c for c in candidate_ids if c not in self._row]
            if missing:
                raise ContractError(f"classifier does not cover classes {missing}")
            cols = np.array(sorted(self._row[c] for c in candidate_ids))
        picked = cols[np.argmax(scores[:, cols], axis=1)]
        ids = np.array(self.class_ids, dtype=np.int64)
        return ids[picked]


def init_classifier(m: int, class_ids: list[int], seed: int) -> SoftmaxClassifier:
    rng = np.random.default_rng(seed)
    store = ad.ParamStore()
    k = len(class_ids)
    store.add("W", rng.uniform(-1, 1, size=(k, m)) * np.sqrt(6.0 / (k + m)))
    store.add("b", np.zeros(k))
    return SoftmaxClassifier(store, class_ids, m)


def cls_loss_batch(
    classifier: SoftmaxClassifier, z_hat: ad.Tensor, labels
) -> ad.Tensor:
    """Mean negative log softmax probability of the true classes.

    ``z_hat`` may be a generator output, in which case the gradient
    flows back into the generator.
    """
    rows = []
    for label in np.atleast_1d(np.asarray(labels)):
        if int(label) not in classifier._row:
            raise ContractError(f"label {int(label)} outside the classifier's classes")
        rows.append(classifier._row[int(label)])
    logits = classifier.logits(z_hat)
    n, k = logits.shape
    if len(rows) != n:
        raise ContractError(f"{len(rows)} labels for {n} rows")
    # stable log-sum-exp with a constant per-row shift
    shift_const = ad.constant(logits.data.max(axis=1, keepdims=True))
    shifted = ad.sub(logits, ad.tile_cols(shift_const, k))
    lse = ad.add(ad.log(ad.sum_last(ad.exp(shifted))), shift_const)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), rows] = 1.0
    true_logit = ad.sum_last(ad.mul(logits, ad.constant(onehot)))
    return ad.mean_all(ad.sub(lse, true_logit))


def cls_loss(classifier: SoftmaxClassifier, z_hat, label: int) -> ad.Tensor:
    """Negative log-likelihood of one (synthetic) feature vector."""
    if isinstance(z_hat, ad.Tensor):
        if z_hat.data.ndim != 2:
            if z_hat.requires_grad:
                raise ShapeError("pass a (1, m) tensor to keep gradients flowing")
            z_hat = ad.constant(z_hat.data[None, :])
        tensor = z_hat
    else:
        tensor = ad.constant(np.atleast_2d(np.asarray(z_hat, dtype=np.float64)))
    return cls_loss_batch(classifier, tensor, [label])


@dataclass
class ClassifierTrainConfig:
    lr: float = 0.05
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0


def _train_softmax(
    features: np.ndarray,
    labels: np.ndarray,
    class_ids: list[int],
    config: ClassifierTrainConfig,
) -> SoftmaxClassifier:
    clf = init_classifier(features.shape[1], class_ids, config.seed)
    state = ad.AdamState(clf.store)
    rng = np.random.default_rng(config.seed)
    n = features.shape[0]
    for _ in range(config.epochs):
        order = np.arange(n)
        if n > config.batch_size:
            rng.shuffle(order)
        for start in range(0, n, config.batch_size):
            rows = order[start : start + config.batch_size]
            loss = cls_loss_batch(clf, ad.constant(features[rows]), labels[rows])
            ad.backward(loss, clf.store)
            ad.adam_step(clf.store, state, config.lr)
    return clf


def pretrain_classifier(
    seen_data: FeatureSet, config: ClassifierTrainConfig
) -> SoftmaxClassifier:
    """Train the frozen regularizer classifier on real seen features."""
    present = sorted(int(c) for c in np.unique(seen_data.labels))
    outside = set(present) - set(seen_data.seen_ids)
    if outside:
        raise ManifestError(f"pretraining features contain non-seen classes {sorted(outside)}")
    if len(present) < 2:
        raise ContractError("need at least 2 classes to pretrain the classifier")
    return _train_softmax(seen_data.features, seen_data.labels, present, config)


def train_final_classifier(
    real_seen: FeatureSet | None,
    synth_unseen: FeatureSet,
    config: ClassifierTrainConfig,
) -> SoftmaxClassifier:
    """Final-stage classifier: union of classes when real seen features
    are given (GZSL), synthetic unseen classes only otherwise (ZSL)."""
    synth_classes = set(int(c) for c in np.unique(synth_unseen.labels))
    if real_seen is not None:
        seen_classes = set(int(c) for c in np.unique(real_seen.labels))
        overlap = seen_classes & synth_classes
        if overlap:
            raise ManifestError(
                f"seen and synthetic-unseen label sets overlap: {sorted(overlap)}"
            )
        features = np.vstack([real_seen.features, synth_unseen.features])
        labels = np.concatenate([real_seen.labels, synth_unseen.labels])
        class_ids = sorted(seen_classes | synth_classes)
    else:
        features = synth_unseen.features
        labels = synth_unseen.labels
        class_ids = sorted(synth_classes)
    if len(class_ids) < 2:
        raise ContractError("need at least 2 classes to train a classifier")
    return _train_softmax(features, labels, class_ids, config)


# ---------------------------------------------------------------------------
# adversarial training


@dataclass
class GenTrainConfig:
    noise_dim: int = 16
    hidden_mult: int = 4  # hidden width = hidden_mult * m
    eta: float = 10.0  # gradient-penalty coefficient
    cls_weight: float = 0.01
    n_critic: int = 5
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    batch_size: int = 64
    steps: int = 2000  # generator update cycles
    seed: int = 0
    alpha: float = 0.5
    variation: str = "ours"


@dataclass
class StepRecord:
    critic_loss: float
    wasserstein: float
    penalty: float
    gen_loss: float
    cls_term: float


class GanTrainer:
    """One adversarial training run over seen-class features.

    The generator (and, for the fused variation, the fusion layers)
    update once per cycle after ``n_critic`` critic updates; the
    semantics are treated as constants inside critic updates so the
    critic never trains them.
    """

    def __init__(
        self,
        data: FeatureSet,
        bundles: list[SemanticBundle],
        classifier: SoftmaxClassifier,
        config: GenTrainConfig,
    ):
        check_split_discipline(data.seen_ids, data.unseen_ids)
        if config.eta <= 0:
            raise ContractError("penalty coefficient must be positive")
        outside = set(int(c) for c in np.unique(data.labels)) - set(data.seen_ids)
        if outside:
            raise ManifestError(
                f"generator training features contain non-seen classes {sorted(outside)}"
            )
        by_id = {b.class_id: b for b in bundles}
        missing = sorted(set(int(c) for c in np.unique(data.labels)) - set(by_id))
        if missing:
            raise ManifestError(f"classes without semantics: {missing}")

        self.data = data
        self.config = config
        self.classifier = classifier
        d = bundles[0].dimension
        hidden = [config.hidden_mult * data.m]
        seeds = np.random.SeedSequence(config.seed).spawn(4)
        g_seed, d_seed, f_seed, batch_seed = (int(s.generate_state(1)[0]) for s in seeds)
        self.gen = init_generator(data.m, d, config.noise_dim, g_seed, hidden)
        self.disc = init_discriminator(data.m, d, d_seed, hidden)
        self.fusion = (
            init_fusion(d, f_seed, config.alpha) if config.variation == "ours" else None
        )
        if self.fusion is None:
            bundles = resolve_semantics(bundles, None, config.variation)
            by_id = {b.class_id: b for b in bundles}
        self._ec = np.stack([by_id[int(c)].e_c for c in data.labels])
        self._ep = np.stack([by_id[int(c)].e_p for c in data.labels])
        if self.fusion is None:
            self._e_fixed = np.stack([by_id[int(c)].e for c in data.labels])
        self.rng = np.random.default_rng(batch_seed)

        self._gen_stores = [self.gen.store] + (
            [self.fusion.store] if self.fusion is not None else []
        )
        self._gen_states = [ad.AdamState(s) for s in self._gen_stores]
        self._disc_state = ad.AdamState(self.disc.store)

    def _semantics_for(self, rows: np.ndarray, graph: bool) -> ad.Tensor:
        """Per-row conditioning vectors; ``graph`` keeps fusion trainable."""
        if self.fusion is None:
            return ad.constant(self._e_fixed[rows])
        e = fuse_graph(
            self.fusion, ad.constant(self._ec[rows]), ad.constant(self._ep[rows])
        )
        return e if graph else e.detach()

    def _draw_rows(self) -> np.ndarray:
        n = self.data.n
        take = min(self.config.batch_size, n)
        return self.rng.choice(n, size=take, replace=False)

    def _fake_batch(self, rows: np.ndarray, graph: bool) -> tuple[ad.Tensor, ad.Tensor]:
        h = ad.constant(self.rng.normal(size=(rows.size, self.config.noise_dim)))
        e = self._semantics_for(rows, graph)
        return self.gen.forward(h, e), e

    def wgan_step(self) -> StepRecord:
        """n_critic critic updates, then one generator update."""
        cfg = self.config
        critic_loss = wasserstein = penalty = 0.0
        for _ in range(cfg.n_critic):
            rows = self._draw_rows()
            z_real = self.data.features[rows]
            fake, e = self._fake_batch(rows, graph=False)
            z_fake = fake.detach()
            score_real = ad.mean_all(self.disc.forward(ad.constant(z_real), e))
            score_fake = ad.mean_all(self.disc.forward(z_fake, e))
            beta = self.rng.uniform(size=rows.size)
            gp = gradient_penalty(self.disc, z_real, z_fake.data, e.data, beta)
            loss = ad.add(ad.sub(score_fake, score_real), ad.scale(gp, cfg.eta))
            ad.backward(loss, self.disc.store)
            ad.adam_step(
                self.disc.store, self._disc_state, cfg.lr, cfg.beta1, cfg.beta2
            )
            critic_loss = loss.item()
            wasserstein = score_real.item() - score_fake.item()
            penalty = gp.item()

        rows = self._draw_rows()
        fake, e = self._fake_batch(rows, graph=True)
        score = ad.mean_all(self.disc.forward(fake, e))
        cls_term = cls_loss_batch(self.classifier, fake, self.data.labels[rows])
        gen_loss = ad.add(ad.neg(score), ad.scale(cls_term, cfg.cls_weight))
        ad.backward(gen_loss, *self._gen_stores)
        for store, state in zip(self._gen_stores, self._gen_states):
            ad.adam_step(store, state, cfg.lr, cfg.beta1, cfg.beta2)
        return StepRecord(
            critic_loss, wasserstein, penalty, gen_loss.item(), cls_term.item()
        )

    def train(self) -> list[StepRecord]:
        return [self.wgan_step() for _ in range(self.config.steps)]


def synthesize(gen: Generator, bundle: SemanticBundle, n: int, seed: int) -> np.ndarray:
    """Draw n synthetic feature vectors for one class; seed-deterministic."""
    if n <= 0:
        raise ContractError("need a positive sample count")
    if bundle.e is None:
        raise ContractError(f"bundle {bundle.name!r} has no fused semantics")
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(n, gen.noise_dim))
    e = np.broadcast_to(bundle.e, (n, bundle.dimension))
    return gen.forward(ad.constant(h), ad.constant(e.copy())).data


def synthesize_set(
    gen: Generator,
    bundles: list[SemanticBundle],
    per_class: int,
    seed: int,
    class_table: dict[int, str],
) -> FeatureSet:
    """Synthetic unseen-class feature set, one block per bundle."""
    if not bundles:
        raise ContractError("no classes to synthesize")
    blocks, labels = [], []
    for b in sorted(bundles, key=lambda b: b.class_id):
        class_seed = int(np.random.SeedSequence([seed, b.class_id]).generate_state(1)[0])
        blocks.append(synthesize(gen, b, per_class, class_seed))
        labels.extend([b.class_id] * per_class)
    return FeatureSet(
        np.vstack(blocks),
        np.array(labels, dtype=np.int64),
        class_table,
        frozenset(),
        frozenset(b.class_id for b in bundles),
    )


class GenPredictor:
    """Evaluation adapter around the final softmax classifier."""

    def __init__(self, classifier: SoftmaxClassifier, variation: str):
        self.classifier = classifier
        self.variation = variation

    def predict_batch(
        self, z: np.ndarray, candidates: list[SemanticBundle]
    ) -> np.ndarray:
        return self.classifier.predict_ids(z, [b.class_id for b in candidates])
