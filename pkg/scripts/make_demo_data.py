#!/usr/bin/env python3
"""Generate a small self-contained demo dataset for the CLI walkthrough.

Writes word vectors, train/test feature CSVs, a split manifest wired to
the committed description cache, and a starter run config. The word
vectors and features share per-class latents, so the demo pipeline has
real signal to learn.
"""

import argparse
from collections import defaultdict
from pathlib import Path

import numpy as np

from semfuse.wordvec import tokenize

REPO_ROOT = Path(__file__).resolve().parents[1]
DESCRIPTIONS = REPO_ROOT / "data" / "descriptions"

SEEN = ["bathtub", "bed", "chair", "desk", "dresser", "monitor", "sofa"]
UNSEEN = ["night stand", "table", "toilet"]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="demo")
    parser.add_argument("--dimension", type=int, default=12)
    parser.add_argument("--feature-dim", type=int, default=24)
    parser.add_argument("--per-class", type=int, default=30)
    parser.add_argument("--latent-rank", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    classes = SEEN + UNSEEN
    # latents share a low-rank subspace so unseen classes are reachable
    # from what the seen classes teach
    basis, _ = np.linalg.qr(rng.normal(size=(args.dimension, args.latent_rank)))
    scale = np.sqrt(args.dimension / args.latent_rank)
    latents = {
        c: basis @ rng.normal(size=args.latent_rank) * scale for c in classes
    }

    from semfuse.llm_client import DescriptionCache

    cache = DescriptionCache(DESCRIPTIONS)
    token_owners = defaultdict(list)
    for c in classes:
        text = cache.get(c)
        if text is None:
            raise SystemExit(f"no cached description for {c!r}")
        for tok in tokenize(c) + tokenize(text):
            token_owners[tok].append(c)
    lines = []
    for tok in sorted(token_owners):
        vec = np.mean([latents[c] for c in token_owners[tok]], axis=0)
        vec = vec + 0.05 * rng.normal(size=args.dimension)
        lines.append(tok + " " + " ".join(f"{v:.6f}" for v in vec))
    (out / "word_vectors.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    mix = rng.normal(size=(args.feature_dim, args.dimension)) / np.sqrt(args.dimension)
    rows = {"train": [], "test": []}
    for c in classes:
        splits = (("train", args.per_class), ("test", 10)) if c in SEEN else (("test", 10),)
        for kind, count in splits:
            for _ in range(count):
                z = mix @ latents[c] + 0.05 * rng.normal(size=args.feature_dim)
                rows[kind].append(c + "," + ",".join(f"{v:.6f}" for v in z))
    (out / "train.csv").write_text("\n".join(rows["train"]) + "\n", encoding="utf-8")
    (out / "test.csv").write_text("\n".join(rows["test"]) + "\n", encoding="utf-8")

    (out / "split.cfg").write_text(
        "dataset = demo\n"
        f"seen = {', '.join(SEEN)}\n"
        f"unseen = {', '.join(UNSEEN)}\n"
        "train_features = train.csv\n"
        "test_features = test.csv\n"
        f"descriptions = {DESCRIPTIONS}\n",
        encoding="utf-8",
    )
    (out / "run.cfg").write_text(
        "split = split.cfg\n"
        "word_vectors = word_vectors.txt\n"
        "variation = ours\n"
        "alpha = 0.5\n"
        "method = embed\n"
        "lr = 0.01\n"
        "epochs = 200\n"
        "lam = 0.0001\n"
        "seed = 1\n"
        "out_dir = runs/demo\n",
        encoding="utf-8",
    )
    print(f"demo data written under {out}/ ({len(classes)} classes, "
          f"{len(rows['train'])} train rows, {len(rows['test'])} test rows)")


if __name__ == "__main__":
    main()
