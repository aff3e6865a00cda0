import pytest

from conftest import make_manifest_csv
from spoofkit.data import (
    DatasetManifest,
    ManifestError,
    Utterance,
    imbalance_ratio,
    load_manifest,
    split,
    write_manifest,
)


def test_class_counts(tmp_path):
    path = make_manifest_csv(tmp_path / "m.csv", [
        ("a", "a.wav", 0, "d", "train"),
        ("b", "b.wav", 1, "d", "train"),
        ("c", "c.wav", 1, "d", "dev"),
    ])
    m = load_manifest(path)
    assert m.class_counts == (1, 2)
    assert len(m) == 3


def test_duplicate_id_names_both_rows(tmp_path):
    path = make_manifest_csv(tmp_path / "m.csv", [
        ("LA_0001", "a.wav", 0, "d", "train"),
        ("LA_0002", "b.wav", 1, "d", "train"),
        ("LA_0001", "c.wav", 1, "d", "dev"),
    ])
    with pytest.raises(ManifestError, match=r"LA_0001.*rows 2 and 4"):
        load_manifest(path)


def test_header_only_is_valid(tmp_path):
    path = make_manifest_csv(tmp_path / "m.csv", [])
    m = load_manifest(path)
    assert len(m) == 0
    assert m.class_counts == (0, 0)


def test_bad_header_rejected(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("id,path,label\n")
    with pytest.raises(ManifestError, match="header"):
        load_manifest(path)


def test_bad_label_rejected(tmp_path):
    path = make_manifest_csv(tmp_path / "m.csv", [("a", "a.wav", 2, "d", "train")])
    with pytest.raises(ManifestError, match="label"):
        load_manifest(path)


def test_bad_partition_rejected(tmp_path):
    path = make_manifest_csv(tmp_path / "m.csv", [("a", "a.wav", 0, "d", "test")])
    with pytest.raises(ManifestError, match="partition"):
        load_manifest(path)


def test_wrong_column_count_reports_row(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("id,path,label,dataset,partition\na,b.wav,0,d,train,extra\n")
    with pytest.raises(ManifestError, match=":2"):
        load_manifest(path)


def _sample_manifest():
    return DatasetManifest(name="m", entries=(
        Utterance("a", "a.wav", 0, "d", "train"),
        Utterance("b", "b.wav", 1, "d", "train"),
        Utterance("c", "c.wav", 1, "d", "dev"),
        Utterance("d", "d.wav", 0, "d", "eval"),
    ))


def test_split_filters_and_preserves_order():
    m = _sample_manifest()
    tr = split(m, "train")
    assert [u.id for u in tr.entries] == ["a", "b"]
    assert len(split(m, "dev")) == 1


def test_split_absent_partition_empty():
    m = DatasetManifest(name="m", entries=(Utterance("a", "a.wav", 0, "d", "train"),))
    assert len(split(m, "eval")) == 0


def test_split_is_a_partition():
    m = _sample_manifest()
    parts = [split(m, p) for p in ("train", "dev", "eval")]
    ids = [u.id for part in parts for u in part.entries]
    assert sorted(ids) == sorted(u.id for u in m.entries)


def test_imbalance_ratio():
    m = DatasetManifest(name="m", entries=tuple(
        [Utterance(f"r{i}", "", 0, "d", "train") for i in range(10)]
        + [Utterance(f"f{i}", "", 1, "d", "train") for i in range(10)]
    ))
    assert imbalance_ratio(m) == 1.0


def test_imbalance_ratio_asvspoof_counts():
    # ASVspoof 2019 LA train protocol counts: 2580 bona fide, 22800 spoofed
    m = DatasetManifest(name="m", entries=tuple(
        [Utterance(f"r{i}", "", 0, "d", "train") for i in range(2580)]
        + [Utterance(f"f{i}", "", 1, "d", "train") for i in range(22800)]
    ))
    assert imbalance_ratio(m) == pytest.approx(22800 / 2580)
    assert imbalance_ratio(m) == pytest.approx(8.837, abs=5e-4)


def test_imbalance_ratio_empty_class():
    m = DatasetManifest(name="m", entries=tuple(
        Utterance(f"r{i}", "", 0, "d", "train") for i in range(5)
    ))
    with pytest.raises(ManifestError):
        imbalance_ratio(m)


def test_round_trip(tmp_path):
    m = _sample_manifest()
    path = tmp_path / "rt.csv"
    write_manifest(m, path)
    back = load_manifest(path, name="m")
    assert back.entries == m.entries
