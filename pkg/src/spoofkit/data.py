"""Manifest-driven dataset bookkeeping.

A manifest is a CSV file with header ``id,path,label,dataset,partition``
describing one utterance per row. Label 0 is authentic speech, label 1
is synthetic. Manifests are immutable after load.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

MANIFEST_HEADER = ["id", "path", "label", "dataset", "partition"]
PARTITIONS = ("train", "dev", "eval")

REAL = 0
FAKE = 1


class ManifestError(Exception):
    """Malformed or inconsistent manifest file."""


@dataclass(frozen=True)
class Utterance:
    id: str
    path: str
    label: int
    dataset: str
    partition: str


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    entries: tuple[Utterance, ...] = field(default_factory=tuple)

    @property
    def class_counts(self) -> tuple[int, int]:
        """(n_real, n_fake)."""
        n_fake = sum(u.label for u in self.entries)
        return len(self.entries) - n_fake, n_fake

    def __len__(self):
        return len(self.entries)

    def by_label(self, label: int) -> list[Utterance]:
        return [u for u in self.entries if u.label == label]


def load_manifest(path, name: str | None = None) -> DatasetManifest:
    """Parse a manifest CSV, validating labels, partitions and id uniqueness."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc

    if not rows or rows[0] != MANIFEST_HEADER:
        raise ManifestError(
            f"{path}: expected header {','.join(MANIFEST_HEADER)}, "
            f"got {','.join(rows[0]) if rows else '<empty file>'}"
        )

    entries = []
    seen: dict[str, int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(MANIFEST_HEADER):
            raise ManifestError(f"{path}:{lineno}: expected {len(MANIFEST_HEADER)} columns, got {len(row)}")
        uid, upath, label_s, dataset, partition = row
        if label_s not in ("0", "1"):
            raise ManifestError(f"{path}:{lineno}: label must be 0 or 1, got {label_s!r}")
        if partition not in PARTITIONS:
            raise ManifestError(f"{path}:{lineno}: partition must be one of {PARTITIONS}, got {partition!r}")
        if uid in seen:
            raise ManifestError(f"{path}: duplicate id {uid!r} at rows {seen[uid]} and {lineno}")
        seen[uid] = lineno
        entries.append(Utterance(uid, upath, int(label_s), dataset, partition))

    manifest_name = name if name is not None else _stem(path)
    return DatasetManifest(name=manifest_name, entries=tuple(entries))


def write_manifest(m: DatasetManifest, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for u in m.entries:
            writer.writerow([u.id, u.path, u.label, u.dataset, u.partition])


def split(m: DatasetManifest, partition: str) -> DatasetManifest:
    """Filter to one partition, preserving manifest order."""
    if partition not in PARTITIONS:
        raise ValueError(f"partition must be one of {PARTITIONS}, got {partition!r}")
    entries = tuple(u for u in m.entries if u.partition == partition)
    return DatasetManifest(name=f"{m.name}:{partition}", entries=entries)


def imbalance_ratio(m: DatasetManifest) -> float:
    """n_fake / n_real; raises if either class is empty."""
    n_real, n_fake = m.class_counts
    if n_real == 0 or n_fake == 0:
        raise ManifestError(f"{m.name}: imbalance undefined with counts real={n_real} fake={n_fake}")
    return n_fake / n_real


def missing_paths(m: DatasetManifest) -> list[Utterance]:
    """Entries whose referenced file does not exist (lazy path check)."""
    import os

    return [u for u in m.entries if not os.path.exists(u.path)]


def _stem(path) -> str:
    import os

    return os.path.splitext(os.path.basename(str(path)))[0]
