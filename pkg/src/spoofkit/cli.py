"""Command-line surface: ingest, train, eval, compare, roc.

Configuration comes from an INI file with sections mirroring the module
names; command-line flags override file values, and the fully resolved
config is persisted next to the outputs for provenance. Outputs are
written atomically (temp file + rename), so failed commands leave no
partial artifacts.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
import tempfile

from . import data, embedding, head, ingest, metrics, trainer
from .audio import AudioError

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


def _atomic_write(path: str, write_fn) -> None:
    """Run write_fn against a temp path, then rename over `path`."""
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    os.close(fd)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


DEFAULT_CONFIG = {
    "train": {
        "max_epochs": "100",
        "patience": "10",
        "batch_size": "64",
        "learning_rate": "1e-4",
        "weight_decay": "0.01",
        "seed": "0",
    },
    "model": {
        "architecture": "wav2vec",  # or whisper
        "input_dim": "80",
        "hidden": "512",
        "num_layers": "0",
    },
    "data": {
        "provider": "toy",  # or files
        "extractor_tag": "toy-logmel",
        "embeddings_root": "",
        "train_manifest": "",
        "dev_manifest": "",
    },
}


def load_config(path: str | None, overrides: list[str], seed: int | None) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    cfg.read_dict(DEFAULT_CONFIG)
    if path is not None:
        if not os.path.exists(path):
            raise UsageError(f"config file not found: {path}")
        cfg.read(path)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise UsageError(f"override must look like section.key=value, got {item!r}")
        key, value = item.split("=", 1)
        section, option = key.split(".", 1)
        if not cfg.has_section(section):
            cfg.add_section(section)
        cfg.set(section, option, value)
    if seed is not None:
        cfg.set("train", "seed", str(seed))
    return cfg


def _build_provider(cfg: configparser.ConfigParser):
    kind = cfg.get("data", "provider")
    if kind == "toy":
        return embedding.ToyLogMelProvider()
    if kind == "files":
        tag = cfg.get("data", "extractor_tag")
        root = cfg.get("data", "embeddings_root") or None
        return embedding.FileProvider(tag, root=root)
    raise UsageError(f"data.provider must be 'toy' or 'files', got {kind!r}")


def _build_arch(cfg: configparser.ConfigParser):
    kind = cfg.get("model", "architecture")
    input_dim = cfg.getint("model", "input_dim")
    if kind == "whisper":
        return head.WhisperArch(input_dim=input_dim, hidden=cfg.getint("model", "hidden"))
    if kind == "wav2vec":
        return head.Wav2VecArch(input_dim=input_dim, num_layers=cfg.getint("model", "num_layers"))
    raise UsageError(f"model.architecture must be 'whisper' or 'wav2vec', got {kind!r}")


def cmd_ingest(args) -> int:
    manifest = ingest.ingest(args.kind, args.root)
    _atomic_write(args.out, lambda tmp: data.write_manifest(manifest, tmp))
    n_real, n_fake = manifest.class_counts
    print(f"wrote {args.out}: {len(manifest)} utterances (real={n_real}, fake={n_fake})")
    if n_real and n_fake:
        print(f"imbalance ratio fake/real = {n_fake / n_real:.3f}")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config, args.set or [], args.seed)
    train_path = cfg.get("data", "train_manifest")
    dev_path = cfg.get("data", "dev_manifest")
    if not train_path or not dev_path:
        raise UsageError("data.train_manifest and data.dev_manifest are required")
    batch_size = cfg.getint("train", "batch_size")
    if batch_size % 2 != 0:
        raise UsageError(f"batch size must be even for balanced batches, got {batch_size}")

    train_manifest = data.load_manifest(train_path)
    dev_manifest = data.load_manifest(dev_path)
    provider = _build_provider(cfg)
    arch = _build_arch(cfg)
    tcfg = trainer.TrainConfig(
        max_epochs=cfg.getint("train", "max_epochs"),
        patience=cfg.getint("train", "patience"),
        batch_size=batch_size,
        learning_rate=cfg.getfloat("train", "learning_rate"),
        weight_decay=cfg.getfloat("train", "weight_decay"),
        seed=cfg.getint("train", "seed"),
    )
    model = head.init_head(arch, tcfg.seed)
    best, log = trainer.fit(model, provider, train_manifest, dev_manifest, tcfg)

    os.makedirs(args.out, exist_ok=True)
    _atomic_write(os.path.join(args.out, "checkpoint.spf1"), lambda tmp: head.save_head(best, tmp))
    _atomic_write(os.path.join(args.out, "trainlog.csv"), lambda tmp: log.write_csv(tmp))

    def write_cfg(tmp):
        with open(tmp, "w", encoding="utf-8") as fh:
            cfg.write(fh)

    _atomic_write(os.path.join(args.out, "config.resolved.ini"), write_cfg)
    best_rec = log.records[log.best_epoch - 1]
    print(f"trained {len(log.records)} epochs; best epoch {log.best_epoch} "
          f"(dev loss {best_rec.dev_loss:.6f}, dev EER {best_rec.dev_eer:.2f}%)")
    print(f"artifacts in {args.out}")
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.config, args.set or [], args.seed)
    model = head.load_head(args.checkpoint)
    provider = _build_provider(cfg)
    os.makedirs(args.out, exist_ok=True)

    records_by_dataset: dict[str, list[metrics.ScoreRecord]] = {}
    for manifest_path in args.manifest:
        manifest = data.load_manifest(manifest_path)
        try:
            _, records = trainer.evaluate_loss(model, provider, manifest)
        except trainer.TrainError as exc:
            raise trainer.TrainError(f"dataset {manifest.name!r}: {exc}") from exc
        records_by_dataset[manifest.name] = records
        _atomic_write(
            os.path.join(args.out, f"scores_{manifest.name}.csv"),
            lambda tmp, r=records: metrics.write_scores(r, tmp),
        )

    report = metrics.table(records_by_dataset, model_tag=os.path.basename(args.checkpoint))
    _atomic_write(os.path.join(args.out, "report.csv"), lambda tmp: metrics.write_report_csv(report, tmp))
    _atomic_write(os.path.join(args.out, "report.txt"), lambda tmp: metrics.write_report_text(report, tmp))
    for name, e, a in report.display_rows():
        print(f"{name:>24}  EER {e:6.2f}%  AUC {a:6.2f}%")
    return 0


def _parse_threshold_rule(rule: str):
    if rule == "eer":
        return None
    if rule.startswith("fixed:"):
        try:
            return float(rule.split(":", 1)[1])
        except ValueError as exc:
            raise UsageError(f"bad threshold rule {rule!r}") from exc
    raise UsageError(f"--threshold-rule must be 'eer' or 'fixed:<v>', got {rule!r}")


def cmd_compare(args) -> int:
    if len(args.scores) < 2:
        raise UsageError("compare needs at least two score files")
    tags = args.tags
    if tags is None:
        tags = [os.path.splitext(os.path.basename(p))[0] for p in args.scores]
    if len(tags) != len(args.scores):
        raise UsageError(f"{len(args.scores)} score files but {len(tags)} tags")
    runs = {tag: metrics.read_scores(path) for tag, path in zip(tags, args.scores)}
    fixed = _parse_threshold_rule(args.threshold_rule)
    thresholds = None if fixed is None else {tag: fixed for tag in tags}
    matrix = metrics.overlap(runs, thresholds)
    _atomic_write(args.out, lambda tmp: metrics.write_overlap_csv(matrix, tmp))
    print(f"wrote {args.out}")
    for tag in matrix.undefined:
        print(f"note: model {tag!r} misses nothing; its row is undefined")
    return 0


def cmd_roc(args) -> int:
    records = metrics.read_scores(args.scores)
    curve = metrics.roc(records)
    _atomic_write(args.out, lambda tmp: metrics.write_roc_csv(curve, tmp))
    print(f"wrote {args.out} ({len(curve.points)} points)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spoofkit",
                                     description="Speech deepfake detection harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert a dataset layout to a CSV manifest")
    p.add_argument("--kind", required=True, choices=ingest.DATASET_KINDS)
    p.add_argument("--root", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ingest)

    for name, fn, help_ in (("train", cmd_train, "train a classifier head"),
                            ("eval", cmd_eval, "score manifests and build the report")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None)
        p.add_argument("--set", action="append", metavar="section.key=value",
                       help="override a config value")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", required=True)
        if name == "eval":
            p.add_argument("--checkpoint", required=True)
            p.add_argument("--manifest", action="append", required=True)
        p.set_defaults(fn=fn)

    p = sub.add_parser("compare", help="detection-overlap matrix between score files")
    p.add_argument("--scores", action="append", required=True)
    p.add_argument("--tags", nargs="*", default=None)
    p.add_argument("--threshold-rule", default="eer")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("roc", help="export a ROC curve CSV from a score file")
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_roc)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (data.ManifestError, ingest.IngestError, embedding.EmbeddingError,
            AudioError, metrics.MetricsError, head.CheckpointVersionError,
            head.CheckpointCorruptError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (trainer.TrainError, head.HeadError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
