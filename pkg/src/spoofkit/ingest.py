"""One-shot converters from external dataset layouts to the CSV manifest.

Each converter walks a dataset root and returns a DatasetManifest; the
CLI writes it out. Supported layouts:

* ``asvspoof19-la``: ASVspoof 2019 LA with ``ASVspoof2019_LA_cm_protocols``
  protocol files and per-partition ``flac/`` directories.
* ``asvspoof21-df``: ASVspoof 2021 DF keys file (``trial_metadata.txt`` or
  ``ASVspoof2021.DF.cm.keys.txt``) plus ``ASVspoof2021_DF_eval/flac``.
* ``inthewild``: ``meta.csv`` with ``file,speaker,label`` rows, labels
  ``bona-fide``/``spoof``.
* ``timit-tts+ljspeech``: root containing ``timit_tts/`` (fake) and
  ``ljspeech/`` (real) audio trees, merged into one corpus tag.
* ``fakeorreal``: ``for-original`` layout with
  ``{training,validation,testing}/{real,fake}`` subdirectories.
* ``generic-csv``: root containing ``labels.csv`` with header
  ``path,label[,partition]``, paths relative to the root.
"""

from __future__ import annotations

import csv
import os

from .data import PARTITIONS, DatasetManifest, ManifestError, Utterance

DATASET_KINDS = (
    "asvspoof19-la",
    "asvspoof21-df",
    "inthewild",
    "timit-tts+ljspeech",
    "fakeorreal",
    "generic-csv",
)

_AUDIO_EXTS = (".wav", ".flac")


class IngestError(Exception):
    pass


def ingest(kind: str, root: str) -> DatasetManifest:
    if kind not in DATASET_KINDS:
        raise IngestError(f"unrecognized dataset kind {kind!r}; choose from {DATASET_KINDS}")
    if not os.path.isdir(root):
        raise IngestError(f"dataset root does not exist: {root}")
    manifest = _CONVERTERS[kind](root)
    if len(manifest) == 0:
        raise IngestError(f"no utterances found under {root} for kind {kind!r}")
    return manifest


def _walk_audio(root: str) -> list[str]:
    out = []
    for dirpath, _dirnames, filenames in os.walk(root):
        for name in sorted(filenames):
            if name.lower().endswith(_AUDIO_EXTS):
                out.append(os.path.join(dirpath, name))
    return sorted(out)


def _ingest_asvspoof19(root: str) -> DatasetManifest:
    proto_dir = os.path.join(root, "ASVspoof2019_LA_cm_protocols")
    specs = [
        ("train", "ASVspoof2019.LA.cm.train.trn.txt", "ASVspoof2019_LA_train"),
        ("dev", "ASVspoof2019.LA.cm.dev.trl.txt", "ASVspoof2019_LA_dev"),
        ("eval", "ASVspoof2019.LA.cm.eval.trl.txt", "ASVspoof2019_LA_eval"),
    ]
    entries = []
    for partition, proto_name, audio_dir in specs:
        proto = os.path.join(proto_dir, proto_name)
        if not os.path.exists(proto):
            raise IngestError(f"missing protocol file {proto}")
        with open(proto, encoding="utf-8") as fh:
            for line in fh:
                fields = line.split()
                if not fields:
                    continue
                if len(fields) < 5:
                    raise IngestError(f"{proto}: malformed line {line.rstrip()!r}")
                _speaker, utt_id, _sys, _attack, key = fields[:5]
                label = 0 if key == "bonafide" else 1
                path = os.path.join(root, audio_dir, "flac", utt_id + ".flac")
                entries.append(Utterance(utt_id, path, label, "asvspoof2019-la", partition))
    return DatasetManifest(name="asvspoof2019-la", entries=tuple(entries))


def _ingest_asvspoof21(root: str) -> DatasetManifest:
    keys = None
    for candidate in ("trial_metadata.txt", "ASVspoof2021.DF.cm.keys.txt",
                      os.path.join("keys", "DF", "CM", "trial_metadata.txt")):
        path = os.path.join(root, candidate)
        if os.path.exists(path):
            keys = path
            break
    if keys is None:
        raise IngestError(f"no ASVspoof 2021 DF keys file found under {root}")
    entries = []
    with open(keys, encoding="utf-8") as fh:
        for line in fh:
            fields = line.split()
            if not fields:
                continue
            if len(fields) < 6:
                raise IngestError(f"{keys}: malformed line {line.rstrip()!r}")
            # trial_metadata.txt: speaker, utt, codec, source, attack, key, ...
            utt_id, key = fields[1], fields[5]
            label = 0 if key == "bonafide" else 1
            path = os.path.join(root, "ASVspoof2021_DF_eval", "flac", utt_id + ".flac")
            entries.append(Utterance(utt_id, path, label, "asvspoof2021-df", "eval"))
    return DatasetManifest(name="asvspoof2021-df", entries=tuple(entries))


def _ingest_inthewild(root: str) -> DatasetManifest:
    meta = os.path.join(root, "meta.csv")
    if not os.path.exists(meta):
        raise IngestError(f"missing meta.csv under {root}")
    entries = []
    with open(meta, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "file" not in reader.fieldnames or "label" not in reader.fieldnames:
            raise IngestError(f"{meta}: expected columns file,label")
        for row in reader:
            label_s = row["label"].strip().lower()
            if label_s not in ("bona-fide", "spoof"):
                raise IngestError(f"{meta}: unexpected label {row['label']!r}")
            label = 0 if label_s == "bona-fide" else 1
            fname = row["file"].strip()
            utt_id = os.path.splitext(fname)[0]
            entries.append(Utterance(utt_id, os.path.join(root, fname), label, "inthewild", "eval"))
    return DatasetManifest(name="inthewild", entries=tuple(entries))


def _ingest_timit_lj(root: str) -> DatasetManifest:
    # Both corpora feature the same speaker, so they are merged into a
    # single tag: TIMIT-TTS supplies the fakes, LJspeech the reals.
    fake_root = os.path.join(root, "timit_tts")
    real_root = os.path.join(root, "ljspeech")
    if not os.path.isdir(fake_root) or not os.path.isdir(real_root):
        raise IngestError(f"expected timit_tts/ and ljspeech/ under {root}")
    entries = []
    for path in _walk_audio(fake_root):
        utt_id = "timit-tts/" + os.path.splitext(os.path.relpath(path, fake_root))[0]
        entries.append(Utterance(utt_id, path, 1, "timit-tts+ljspeech", "eval"))
    for path in _walk_audio(real_root):
        utt_id = "ljspeech/" + os.path.splitext(os.path.relpath(path, real_root))[0]
        entries.append(Utterance(utt_id, path, 0, "timit-tts+ljspeech", "eval"))
    return DatasetManifest(name="timit-tts+ljspeech", entries=tuple(entries))


def _ingest_fakeorreal(root: str) -> DatasetManifest:
    base = os.path.join(root, "for-original") if os.path.isdir(os.path.join(root, "for-original")) else root
    part_map = {"training": "train", "validation": "dev", "testing": "eval"}
    entries = []
    for src_part, partition in part_map.items():
        for label_name, label in (("real", 0), ("fake", 1)):
            subdir = os.path.join(base, src_part, label_name)
            if not os.path.isdir(subdir):
                continue
            for path in _walk_audio(subdir):
                utt_id = f"{src_part}/{label_name}/" + os.path.splitext(os.path.basename(path))[0]
                entries.append(Utterance(utt_id, path, label, "fakeorreal", partition))
    return DatasetManifest(name="fakeorreal", entries=tuple(entries))


def _ingest_generic_csv(root: str) -> DatasetManifest:
    labels = os.path.join(root, "labels.csv")
    if not os.path.exists(labels):
        raise IngestError(f"missing labels.csv under {root}")
    entries = []
    with open(labels, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "path" not in reader.fieldnames or "label" not in reader.fieldnames:
            raise IngestError(f"{labels}: expected columns path,label[,partition]")
        for lineno, row in enumerate(reader, start=2):
            label_s = row["label"].strip()
            if label_s not in ("0", "1"):
                raise IngestError(f"{labels}:{lineno}: label must be 0 or 1, got {label_s!r}")
            partition = (row.get("partition") or "eval").strip()
            if partition not in PARTITIONS:
                raise IngestError(f"{labels}:{lineno}: bad partition {partition!r}")
            rel = row["path"].strip()
            utt_id = os.path.splitext(rel)[0]
            entries.append(Utterance(utt_id, os.path.join(root, rel), int(label_s), "generic", partition))
    return DatasetManifest(name="generic", entries=tuple(entries))


_CONVERTERS = {
    "asvspoof19-la": _ingest_asvspoof19,
    "asvspoof21-df": _ingest_asvspoof21,
    "inthewild": _ingest_inthewild,
    "timit-tts+ljspeech": _ingest_timit_lj,
    "fakeorreal": _ingest_fakeorreal,
    "generic-csv": _ingest_generic_csv,
}
