"""Feature ingestion, split manifests, and seeded synthetic data.

Features come precomputed from upstream extractors; this module only
reads them (CSV or a small binary layout) and tags each class as seen
or unseen according to a split manifest. A synthetic generator provides
desk-scale datasets with controllable semantic and feature noise.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, FormatError, ManifestError, SplitViolationError
from .fusion import SemanticBundle

_BINARY_MAGIC = b"FSET"


@dataclass
class FeatureSet:
    """Feature matrix with labels and per-class seen/unseen roles."""

    features: np.ndarray  # (n, m)
    labels: np.ndarray  # (n,) int class ids
    class_table: dict[int, str]
    seen_ids: frozenset[int]
    unseen_ids: frozenset[int]

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise ContractError(
                f"features {self.features.shape} do not match labels {self.labels.shape}"
            )
        self.seen_ids = frozenset(self.seen_ids)
        self.unseen_ids = frozenset(self.unseen_ids)
        check_split_discipline(self.seen_ids, self.unseen_ids)
        known = self.seen_ids | self.unseen_ids
        for cid in np.unique(self.labels):
            if int(cid) not in self.class_table:
                raise ManifestError(f"label id {cid} missing from class table")
            if int(cid) not in known:
                raise ManifestError(f"label id {cid} has no seen/unseen role")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    def rows_for(self, class_ids) -> "FeatureSet":
        """Subset containing only rows whose label is in ``class_ids``."""
        wanted = np.isin(self.labels, list(class_ids))
        return FeatureSet(
            self.features[wanted],
            self.labels[wanted],
            self.class_table,
            self.seen_ids,
            self.unseen_ids,
        )


def check_split_discipline(seen_ids, unseen_ids) -> None:
    """Raise unless the seen and unseen id sets are disjoint."""
    overlap = set(seen_ids) & set(unseen_ids)
    if overlap:
        raise SplitViolationError(f"classes {sorted(overlap)} are both seen and unseen")


@dataclass
class SplitSpec:
    """Named dataset split: class lists plus locations of its files.

    Class ids are assigned by position: seen classes get 0..S-1 in list
    order, unseen classes continue from S.
    """

    dataset: str
    seen: list[str]
    unseen: list[str]
    train_features: Path | None = None
    test_features: Path | None = None
    description_dir: Path | None = None

    def __post_init__(self) -> None:
        if not self.seen or not self.unseen:
            raise ManifestError(f"split {self.dataset!r}: empty class list")
        if set(self.seen) & set(self.unseen):
            raise SplitViolationError(
                f"split {self.dataset!r}: seen and unseen class names overlap"
            )
        names = self.seen + self.unseen
        if len(set(names)) != len(names):
            raise ManifestError(f"split {self.dataset!r}: duplicate class name")

    @property
    def class_ids(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.seen + self.unseen)}

    @property
    def class_table(self) -> dict[int, str]:
        return {i: name for i, name in enumerate(self.seen + self.unseen)}

    @property
    def seen_ids(self) -> frozenset[int]:
        return frozenset(range(len(self.seen)))

    @property
    def unseen_ids(self) -> frozenset[int]:
        return frozenset(range(len(self.seen), len(self.seen) + len(self.unseen)))


def read_kv_file(path) -> dict[str, str]:
    """Parse a ``key = value`` text file; '#' starts a comment line."""
    out: dict[str, str] = {}
    path = Path(path)
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in out:
            raise FormatError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_split(path) -> SplitSpec:
    """Read a split manifest; relative paths resolve against the manifest."""
    path = Path(path)
    kv = read_kv_file(path)
    try:
        dataset = kv.pop("dataset")
        seen = [c.strip() for c in kv.pop("seen").split(",") if c.strip()]
        unseen = [c.strip() for c in kv.pop("unseen").split(",") if c.strip()]
    except KeyError as exc:
        raise ManifestError(f"{path}: missing manifest key {exc}") from exc

    def _path(key: str) -> Path | None:
        value = kv.pop(key, None)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else path.parent / p

    spec = SplitSpec(
        dataset=dataset,
        seen=seen,
        unseen=unseen,
        train_features=_path("train_features"),
        test_features=_path("test_features"),
        description_dir=_path("descriptions"),
    )
    if kv:
        raise ManifestError(f"{path}: unknown manifest keys {sorted(kv)}")
    return spec


# ---------------------------------------------------------------------------
# feature files
#
# CSV rows: label,v1,...,vm with the label being a class name from the
# split. Binary layout (little-endian): magic "FSET", uint32 row count,
# uint32 dimension, then per row a uint32 name length, the UTF-8 name,
# and m float64 values.


def load_features(path, split: SplitSpec) -> FeatureSet:
    """Read a feature file (CSV or binary) and tag roles from the split."""
    path = Path(path)
    with path.open("rb") as handle:
        magic = handle.read(4)
    if magic == _BINARY_MAGIC:
        names, matrix = _read_binary(path)
    else:
        names, matrix = _read_csv(path)
    ids = split.class_ids
    labels = []
    for row, name in enumerate(names):
        if name not in ids:
            raise ManifestError(
                f"{path}: row {row + 1} label {name!r} is not in split "
                f"{split.dataset!r}"
            )
        labels.append(ids[name])
    return FeatureSet(
        matrix,
        np.array(labels, dtype=np.int64),
        split.class_table,
        split.seen_ids,
        split.unseen_ids,
    )


def _read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    names: list[str] = []
    rows: list[np.ndarray] = []
    width: int | None = None
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) < 2:
            raise FormatError(f"{path}:{lineno}: expected 'label,v1,...'")
        try:
            values = np.array([float(v) for v in fields[1:]], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
        if width is None:
            width = values.size
        elif values.size != width:
            raise FormatError(
                f"{path}:{lineno}: ragged row, expected {width} values, "
                f"got {values.size}"
            )
        names.append(fields[0].strip())
        rows.append(values)
    if not rows:
        raise FormatError(f"{path}: no feature rows")
    return names, np.vstack(rows)


def _read_binary(path: Path) -> tuple[list[str], np.ndarray]:
    blob = path.read_bytes()
    if len(blob) < 12 or blob[:4] != _BINARY_MAGIC:
        raise FormatError(f"{path}: bad binary header")
    n, m = struct.unpack_from("<II", blob, 4)
    offset = 12
    names: list[str] = []
    rows = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        if offset + 4 > len(blob):
            raise FormatError(f"{path}: truncated at row {i + 1}")
        (name_len,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        end = offset + name_len
        if end + 8 * m > len(blob):
            raise FormatError(f"{path}: truncated at row {i + 1}")
        names.append(blob[offset:end].decode("utf-8"))
        offset = end
        rows[i] = np.frombuffer(blob, dtype="<f8", count=m, offset=offset)
        offset += 8 * m
    if offset != len(blob):
        raise FormatError(f"{path}: {len(blob) - offset} trailing bytes")
    return names, rows


def write_features_csv(path, names: list[str], matrix: np.ndarray) -> None:
    lines = []
    for name, row in zip(names, matrix):
        lines.append(name + "," + ",".join(format(v, ".17g") for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_features_binary(path, names: list[str], matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype=np.float64)
    parts = [_BINARY_MAGIC, struct.pack("<II", matrix.shape[0], matrix.shape[1])]
    for name, row in zip(names, matrix):
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(row.astype("<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


# ---------------------------------------------------------------------------
# synthetic data


@dataclass
class SynthConfig:
    """Desk-scale synthetic dataset knobs.

    Each class has a latent vector; class-name and description
    embeddings are noisy views of it (sigma_c, sigma_p) and features are
    a fixed random linear image of it plus noise (sigma_z). Making
    sigma_p < sigma_c emulates descriptions carrying cleaner signal than
    bare class names.

    With ``latent_rank`` set, class latents share a random subspace of
    that rank; keeping it below the seen-class count makes unseen
    semantics linear combinations of seen ones, so zero-shot transfer
    is achievable by construction. ``None`` means full rank.
    """

    seen: int = 7
    unseen: int = 3
    m: int = 32
    d: int = 16
    per_class: int = 40
    sigma_c: float = 0.5
    sigma_p: float = 0.05
    sigma_z: float = 0.05
    latent_rank: int | None = None
    seed: int = 0


def synth_dataset(config: SynthConfig) -> tuple[FeatureSet, list[SemanticBundle]]:
    """Seeded synthetic (features, semantics); deterministic in the seed."""
    if config.seen < 2 or config.unseen < 2:
        raise ContractError("need at least 2 seen and 2 unseen classes")
    rank = config.latent_rank if config.latent_rank is not None else config.d
    if not 1 <= rank <= config.d:
        raise ContractError(f"latent rank {rank} outside [1, {config.d}]")
    rng = np.random.default_rng(config.seed)
    total = config.seen + config.unseen
    if rank < config.d:
        basis, _ = np.linalg.qr(rng.normal(size=(config.d, rank)))
        latents = rng.normal(size=(total, rank)) @ basis.T * np.sqrt(config.d / rank)
    else:
        latents = rng.normal(size=(total, config.d))
    mixing = rng.normal(size=(config.m, config.d)) / np.sqrt(config.d)

    bundles = []
    for cid in range(total):
        e_c = latents[cid] + config.sigma_c * rng.normal(size=config.d)
        e_p = latents[cid] + config.sigma_p * rng.normal(size=config.d)
        bundles.append(SemanticBundle(cid, f"class_{cid:02d}", e_c, e_p))

    n = total * config.per_class
    labels = np.repeat(np.arange(total), config.per_class)
    noise = config.sigma_z * rng.normal(size=(n, config.m))
    features = latents[labels] @ mixing.T + noise

    fs = FeatureSet(
        features,
        labels,
        {cid: f"class_{cid:02d}" for cid in range(total)},
        frozenset(range(config.seen)),
        frozenset(range(config.seen, total)),
    )
    return fs, bundles


def split_for_eval(
    data: FeatureSet, seed: int, train_fraction: float = 0.5
) -> tuple[FeatureSet, FeatureSet]:
    """Partition rows into a seen-only training set and a test set.

    Per seen class, a ``train_fraction`` share of rows (at least one,
    never all) goes to training; the rest plus every unseen-class row
    forms the test set.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ContractError("train_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train_mask = np.zeros(data.n, dtype=bool)
    for cid in sorted(data.seen_ids):
        rows = np.flatnonzero(data.labels == cid)
        if rows.size < 2:
            raise ContractError(f"class {cid} has too few rows to split")
        rng.shuffle(rows)
        take = min(max(1, int(round(train_fraction * rows.size))), rows.size - 1)
        train_mask[rows[:take]] = True
    def subset(mask):
        return FeatureSet(
            data.features[mask],
            data.labels[mask],
            data.class_table,
            data.seen_ids,
            data.unseen_ids,
        )

    return subset(train_mask), subset(~train_mask)
