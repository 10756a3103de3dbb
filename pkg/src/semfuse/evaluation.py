"""Metrics and reports: per-class top-1 accuracy, GZSL harmonic mean,
and Borda-count comparison across semantic variations."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .datasets import FeatureSet
from .errors import ContractError, ManifestError
from .fusion import SemanticBundle

METRIC_ORDER = ("acc", "acc_s", "acc_u", "hm")


@dataclass
class EvalReport:
    """Metric row for one variation; accuracies are percentages."""

    variation: str
    mode: str  # "zsl" | "gzsl"
    averaging: str = "macro"  # macro (per-class) or micro (per-sample)
    acc: float | None = None
    acc_s: float | None = None
    acc_u: float | None = None
    hm: float | None = None
    borda: int | None = None

    def __post_init__(self) -> None:
        for value in (self.acc, self.acc_s, self.acc_u, self.hm):
            if value is not None and not 0.0 <= value <= 100.0:
                raise ContractError(f"accuracy {value} outside [0, 100]")
        if (self.hm is not None) != (self.acc_s is not None and self.acc_u is not None):
            raise ContractError("hm must be present exactly when acc_s and acc_u are")

    def metrics(self) -> dict[str, float]:
        return {
            name: getattr(self, name)
            for name in METRIC_ORDER
            if getattr(self, name) is not None
        }


def per_class_top1(
    predictions: Sequence[int],
    labels: Sequence[int],
    class_ids,
    micro: bool = False,
) -> float:
    """Mean over classes of within-class top-1 accuracy, as a percent.

    Classes from ``class_ids`` without test samples are left out of the
    mean; with ``micro`` the plain per-sample accuracy is returned
    instead.
    """
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape or predictions.ndim != 1:
        raise ContractError(
            f"predictions {predictions.shape} do not match labels {labels.shape}"
        )
    class_ids = sorted(set(int(c) for c in class_ids))
    unknown = set(labels.tolist()) - set(class_ids)
    if unknown:
        raise ContractError(f"labels {sorted(unknown)} missing from the class set")
    counts = {c: int((labels == c).sum()) for c in class_ids}
    populated = [c for c in class_ids if counts[c] > 0]
    if not populated:
        raise ContractError("no class in the set has test samples")
    if micro:
        return 100.0 * float((predictions == labels).mean())
    per_class = [
        float((predictions[labels == c] == c).mean()) for c in populated
    ]
    return 100.0 * float(np.mean(per_class))


def harmonic_mean(acc_s: float, acc_u: float) -> float:
    """2 * acc_s * acc_u / (acc_s + acc_u), with 0 when both are 0."""
    for value in (acc_s, acc_u):
        if not 0.0 <= value <= 100.0:
            raise ContractError(f"accuracy {value} outside [0, 100]")
    if acc_s + acc_u == 0.0:
        return 0.0
    return 2.0 * acc_s * acc_u / (acc_s + acc_u)


def borda_count(reports) -> dict[str, int]:
    """One point per metric to every variation achieving its maximum.

    Accepts a list of EvalReports or a mapping variation -> metrics.
    All variations must carry the same metric set.
    """
    if isinstance(reports, Mapping):
        table = {name: dict(metrics) for name, metrics in reports.items()}
    else:
        table = {r.variation: r.metrics() for r in reports}
    if len(table) < 2:
        raise ContractError("borda count needs at least 2 variations")
    names = list(table)
    metric_sets = [frozenset(table[name]) for name in names]
    if len(set(metric_sets)) != 1:
        raise ContractError("variations carry different metric sets")
    points = {name: 0 for name in names}
    known = {m: i for i, m in enumerate(METRIC_ORDER)}
    for metric in sorted(metric_sets[0], key=lambda m: (known.get(m, len(known)), m)):
        best = max(table[name][metric] for name in names)
        for name in names:
            if table[name][metric] == best:
                points[name] += 1
    return points


class Predictor(Protocol):
    variation: str

    def predict_batch(
        self, z: np.ndarray, candidates: list[SemanticBundle]
    ) -> np.ndarray: ...


def evaluate_run(
    artifacts: Predictor,
    test_set: FeatureSet,
    bundles: list[SemanticBundle],
    mode: str,
    micro: bool = False,
) -> EvalReport:
    """Score a trained model on a test set.

    ZSL restricts both the samples and the candidate classes to unseen
    ones; GZSL predicts every sample over the union and reports seen
    and unseen accuracy plus their harmonic mean.
    """
    if mode not in ("zsl", "gzsl"):
        raise ContractError(f"unknown mode {mode!r}")
    by_id = {b.class_id: b for b in bundles}
    averaging = "micro" if micro else "macro"

    if mode == "zsl":
        candidates = _candidates(by_id, test_set.unseen_ids, test_set)
        subset = test_set.rows_for(test_set.unseen_ids)
        if subset.n == 0:
            raise ManifestError("no unseen-class samples in the test set")
        preds = artifacts.predict_batch(subset.features, candidates)
        acc = per_class_top1(preds, subset.labels, test_set.unseen_ids, micro)
        return EvalReport(artifacts.variation, mode, averaging, acc=acc)

    candidates = _candidates(
        by_id, test_set.seen_ids | test_set.unseen_ids, test_set
    )
    seen_rows = test_set.rows_for(test_set.seen_ids)
    unseen_rows = test_set.rows_for(test_set.unseen_ids)
    if seen_rows.n == 0 or unseen_rows.n == 0:
        raise ManifestError("gzsl test set needs both seen and unseen samples")
    acc_s = per_class_top1(
        artifacts.predict_batch(seen_rows.features, candidates),
        seen_rows.labels,
        test_set.seen_ids,
        micro,
    )
    acc_u = per_class_top1(
        artifacts.predict_batch(unseen_rows.features, candidates),
        unseen_rows.labels,
        test_set.unseen_ids,
        micro,
    )
    return EvalReport(
        artifacts.variation,
        mode,
        averaging,
        acc_s=acc_s,
        acc_u=acc_u,
        hm=harmonic_mean(acc_s, acc_u),
    )


def _candidates(by_id, wanted_ids, test_set: FeatureSet) -> list[SemanticBundle]:
    present = set(int(c) for c in np.unique(test_set.labels))
    missing = sorted((set(wanted_ids) & present) - set(by_id))
    if missing:
        raise ManifestError(f"test classes without semantics: {missing}")
    out = [by_id[c] for c in sorted(wanted_ids) if c in by_id]
    if not out:
        raise ManifestError("no candidate classes with semantics")
    return out


# ---------------------------------------------------------------------------
# report output


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return f"{value:.4f}"


def write_report_csv(path, reports: list[EvalReport]) -> None:
    """Deterministic CSV: fixed column order and float formatting."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["variation", "mode", "averaging", "acc", "acc_s", "acc_u", "hm", "borda"]
        )
        for r in reports:
            writer.writerow(
                [r.variation, r.mode, r.averaging]
                + [_fmt(v) for v in (r.acc, r.acc_s, r.acc_u, r.hm, r.borda)]
            )


def read_report_csv(path) -> list[EvalReport]:
    reports = []
    with Path(path).open(encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            reports.append(
                EvalReport(
                    row["variation"],
                    row["mode"],
                    row["averaging"],
                    acc=float(row["acc"]) if row["acc"] else None,
                    acc_s=float(row["acc_s"]) if row["acc_s"] else None,
                    acc_u=float(row["acc_u"]) if row["acc_u"] else None,
                    hm=float(row["hm"]) if row["hm"] else None,
                    borda=int(row["borda"]) if row["borda"] else None,
                )
            )
    return reports


def format_report_table(reports: list[EvalReport]) -> str:
    """Aligned text block: one row per variation, one column per metric."""
    headers = ["Variation", "Mode", "Acc", "Acc_s", "Acc_u", "HM", "BC"]
    rows = [
        [
            r.variation,
            r.mode,
            _fmt_cell(r.acc),
            _fmt_cell(r.acc_s),
            _fmt_cell(r.acc_u),
            _fmt_cell(r.hm),
            "-" if r.borda is None else str(r.borda),
        ]
        for r in reports
    ]
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines)


def _fmt_cell(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"
