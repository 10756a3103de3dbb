"""Shared fixtures: a tiny on-disk demo dataset for pipeline tests.

The word vectors are built so that class-name and description
embeddings are noisy views of a per-class latent, and features are a
linear image of the same latent, which makes the little pipeline
actually learnable.
"""

from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest

from semfuse.wordvec import tokenize

REPO_ROOT = Path(__file__).resolve().parents[1]
DESCRIPTION_DIR = REPO_ROOT / "data" / "descriptions"

SEEN = ["bed", "chair", "desk", "sofa"]
UNSEEN = ["table", "toilet"]


def _read_description(name: str) -> str:
    return (DESCRIPTION_DIR / f"{name}.txt").read_text(encoding="utf-8")


def build_demo_dataset(root: Path, d: int = 8, m: int = 12, seed: int = 0) -> Path:
    """Write word vectors, features, and a split manifest under root.

    Returns the manifest path.
    """
    rng = np.random.default_rng(seed)
    classes = SEEN + UNSEEN
    latents = {c: rng.normal(size=d) for c in classes}
    texts = {c: _read_description(c) for c in classes}

    token_owners: dict[str, list[str]] = defaultdict(list)
    for c in classes:
        for tok in tokenize(c):
            token_owners[tok].append(c)
        for tok in tokenize(texts[c]):
            token_owners[tok].append(c)
    lines = []
    for tok in sorted(token_owners):
        vec = np.mean([latents[c] for c in token_owners[tok]], axis=0)
        vec = vec + 0.05 * rng.normal(size=d)
        lines.append(tok + " " + " ".join(f"{v:.6f}" for v in vec))
    (root / "word_vectors.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    mix = rng.normal(size=(m, d)) / np.sqrt(d)
    rows = {"train": [], "test": []}
    for c in classes:
        n_train, n_test = (15, 8) if c in SEEN else (0, 8)
        for kind, count in (("train", n_train), ("test", n_test)):
            for _ in range(count):
                z = mix @ latents[c] + 0.05 * rng.normal(size=m)
                rows[kind].append(c + "," + ",".join(f"{v:.6f}" for v in z))
    (root / "train.csv").write_text("\n".join(rows["train"]) + "\n", encoding="utf-8")
    (root / "test.csv").write_text("\n".join(rows["test"]) + "\n", encoding="utf-8")

    manifest = root / "split.cfg"
    manifest.write_text(
        "dataset = demo\n"
        f"seen = {', '.join(SEEN)}\n"
        f"unseen = {', '.join(UNSEEN)}\n"
        "train_features = train.csv\n"
        "test_features = test.csv\n"
        f"descriptions = {DESCRIPTION_DIR}\n",
        encoding="utf-8",
    )
    return manifest


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("demo")
    build_demo_dataset(root)
    return root
