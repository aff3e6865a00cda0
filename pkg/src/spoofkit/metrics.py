"""Detection metrics: ROC, AUC, EER, result tables, detection overlap.

Conventions: the fake class (label 1) is the positive class; a record is
classified fake when score >= threshold, with tied scores moving across
the threshold together. FPR is the fraction of bona fide records
classified fake. All computation runs on unrounded values; two-decimal
rounding is display only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np


class MetricsError(Exception):
    pass


@dataclass(frozen=True)
class ScoreRecord:
    id: str
    score: float
    label: int
    dataset: str = ""


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    fpr: float
    tpr: float


@dataclass(frozen=True)
class RocCurve:
    points: tuple[RocPoint, ...]


def _split_scores(records) -> tuple[np.ndarray, np.ndarray]:
    fakes = np.array([r.score for r in records if r.label == 1], dtype=np.float64)
    reals = np.array([r.score for r in records if r.label == 0], dtype=np.float64)
    if len(fakes) == 0 or len(reals) == 0:
        raise MetricsError(
            f"both classes required, got fake={len(fakes)} real={len(reals)}"
        )
    return reals, fakes


def roc(records) -> RocCurve:
    """Operating points at every distinct score, thresholds descending.

    The first point (threshold +inf) classifies nothing as fake; at the
    lowest observed score every record is classified fake, giving (1, 1).
    """
    reals, fakes = _split_scores(records)
    n_real, n_fake = len(reals), len(fakes)
    points = [RocPoint(math.inf, 0.0, 0.0)]
    for thr in sorted(set(np.concatenate([reals, fakes])), reverse=True):
        fpr = float(np.count_nonzero(reals >= thr)) / n_real
        tpr = float(np.count_nonzero(fakes >= thr)) / n_fake
        points.append(RocPoint(float(thr), fpr, tpr))
    return RocCurve(points=tuple(points))


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve, in percent."""
    fpr = np.array([p.fpr for p in curve.points])
    tpr = np.array([p.tpr for p in curve.points])
    return float(np.trapezoid(tpr, fpr)) * 100.0


def auc_from_records(records) -> float:
    return auc(roc(records))


def eer(records) -> tuple[float, float]:
    """Equal error rate in percent plus the threshold achieving it.

    Between discrete operating points the (FPR - FNR) difference is
    interpolated linearly to locate the crossing.
    """
    curve = roc(records)
    pts = curve.points
    diffs = [p.fpr - (1.0 - p.tpr) for p in pts]
    for i, d in enumerate(diffs):
        if d == 0.0:
            return pts[i].fpr * 100.0, pts[i].threshold
    for i in range(len(pts) - 1):
        if diffs[i] < 0.0 < diffs[i + 1]:
            t = -diffs[i] / (diffs[i + 1] - diffs[i])
            rate = pts[i].fpr + t * (pts[i + 1].fpr - pts[i].fpr)
            if math.isinf(pts[i].threshold):
                thr = pts[i + 1].threshold
            else:
                thr = pts[i].threshold + t * (pts[i + 1].threshold - pts[i].threshold)
            return rate * 100.0, thr
    raise MetricsError("no EER crossing found")  # unreachable on valid curves


@dataclass(frozen=True)
class DatasetMetrics:
    dataset: str
    eer: float  # percent, unrounded
    auc: float  # percent, unrounded


@dataclass(frozen=True)
class MetricsReport:
    model_tag: str
    rows: tuple[DatasetMetrics, ...]
    average_eer: float
    average_auc: float

    def display_rows(self) -> list[tuple[str, float, float]]:
        out = [(r.dataset, round(r.eer, 2), round(r.auc, 2)) for r in self.rows]
        out.append(("Average", round(self.average_eer, 2), round(self.average_auc, 2)))
        return out


def build_report(rows: list[DatasetMetrics], model_tag: str = "") -> MetricsReport:
    """Assemble the per-dataset table; averages are unweighted means."""
    if not rows:
        raise MetricsError("report needs at least one dataset")
    return MetricsReport(
        model_tag=model_tag,
        rows=tuple(rows),
        average_eer=float(np.mean([r.eer for r in rows])),
        average_auc=float(np.mean([r.auc for r in rows])),
    )


def table(records_by_dataset: dict[str, list[ScoreRecord]], model_tag: str = "") -> MetricsReport:
    rows = []
    for name, records in records_by_dataset.items():
        try:
            e, _ = eer(records)
            a = auc_from_records(records)
        except MetricsError as exc:
            raise MetricsError(f"dataset {name!r}: {exc}") from exc
        rows.append(DatasetMetrics(dataset=name, eer=e, auc=a))
    return build_report(rows, model_tag)


@dataclass(frozen=True)
class OverlapMatrix:
    tags: tuple[str, ...]
    # values[a][b] = % of tracks missed by a that b detects; NaN when a
    # misses nothing (flagged in `undefined`, never silently zeroed)
    values: np.ndarray
    thresholds: dict[str, float] = field(default_factory=dict)
    undefined: tuple[str, ...] = ()


def detected_set(records, threshold: float) -> set[str]:
    """Ids correctly classified under `threshold` (score >= thr -> fake)."""
    return {r.id for r in records if (1 if r.score >= threshold else 0) == r.label}


def overlap(runs: dict[str, list[ScoreRecord]], thresholds: dict[str, float] | None = None) -> OverlapMatrix:
    """Pairwise rescue rates: how often model B detects what model A missed.

    Default per-model threshold is the model's own EER threshold on the
    evaluated records.
    """
    if len(runs) < 2:
        raise MetricsError("overlap needs at least two runs")
    tags = tuple(runs)
    id_sets = {tag: {r.id for r in records} for tag, records in runs.items()}
    base = id_sets[tags[0]]
    for tag in tags[1:]:
        if id_sets[tag] != base:
            diff = sorted(id_sets[tag] ^ base)
            raise MetricsError(
                f"runs {tags[0]!r} and {tag!r} cover different utterances; "
                f"symmetric difference: {diff[:20]}{'...' if len(diff) > 20 else ''}"
            )

    if thresholds is None:
        thresholds = {tag: eer(records)[1] for tag, records in runs.items()}
    detected = {tag: detected_set(runs[tag], thresholds[tag]) for tag in tags}
    missed = {tag: base - detected[tag] for tag in tags}

    n = len(tags)
    values = np.zeros((n, n))
    undefined = []
    for i, a in enumerate(tags):
        if not missed[a]:
            undefined.append(a)
            values[i, :] = np.nan
            values[i, i] = 0.0
            continue
        for j, b in enumerate(tags):
            if i == j:
                continue
            values[i, j] = 100.0 * len(missed[a] & detected[b]) / len(missed[a])
    return OverlapMatrix(tags=tags, values=values, thresholds=dict(thresholds), undefined=tuple(undefined))


# ---------------------------------------------------------------------------
# File formats

def write_scores(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "score", "label", "dataset"])
        for r in records:
            writer.writerow([r.id, repr(r.score), r.label, r.dataset])


def read_scores(path) -> list[ScoreRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["id", "score", "label", "dataset"]:
        raise MetricsError(f"{path}: expected header id,score,label,dataset")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise MetricsError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
        uid, score_s, label_s, dataset = row
        try:
            score = float(score_s)
        except ValueError as exc:
            raise MetricsError(f"{path}:{lineno}: bad score {score_s!r}") from exc
        if label_s not in ("0", "1"):
            raise MetricsError(f"{path}:{lineno}: label must be 0 or 1, got {label_s!r}")
        if not math.isfinite(score) or not 0.0 <= score <= 1.0:
            raise MetricsError(f"{path}:{lineno}: score {score} outside [0, 1]")
        out.append(ScoreRecord(uid, score, int(label_s), dataset))
    return out


def write_roc_csv(curve: RocCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "fpr", "tpr"])
        for p in curve.points:
            writer.writerow([repr(p.threshold), repr(p.fpr), repr(p.tpr)])


def write_report_csv(report: MetricsReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "eer", "auc"])
        for name, e, a in report.display_rows():
            writer.writerow([name, f"{e:.2f}", f"{a:.2f}"])


def write_report_text(report: MetricsReport, path) -> None:
    """Machine-readable key=value variant with full-precision values."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"model={report.model_tag}\n")
        for r in report.rows:
            fh.write(f"dataset.{r.dataset}.eer={r.eer!r}\n")
            fh.write(f"dataset.{r.dataset}.auc={r.auc!r}\n")
        fh.write(f"average.eer={report.average_eer!r}\n")
        fh.write(f"average.auc={report.average_auc!r}\n")


def write_overlap_csv(matrix: OverlapMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for tag in matrix.tags:
            fh.write(f"# threshold {tag}={matrix.thresholds.get(tag)!r}\n")
        for tag in matrix.undefined:
            fh.write(f"# undefined {tag}: misses nothing\n")
        writer = csv.writer(fh)
        writer.writerow(["model"] + list(matrix.tags))
        for i, tag in enumerate(matrix.tags):
            row = [tag]
            for j in range(len(matrix.tags)):
                v = matrix.values[i, j]
                row.append("undefined" if np.isnan(v) else f"{v:.2f}")
            writer.writerow(row)
