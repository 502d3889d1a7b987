"""Command line front end: ``colorlbp {extract,classify,noise-bench,opcount,synth}``.

Every artifact embeds the fully resolved run configuration; passing an
artifact back through ``--config`` reproduces it byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from colorlbp import bench, noise, opcount, synth
from colorlbp.bench import DatasetIndex, ExtractorConfig, ProtocolError
from colorlbp.image import ImageFormatError, OperatorParams, load_image
from colorlbp.sps import significance_mask

log = logging.getLogger("colorlbp")

OUTPUT_ENV = "COLORLBP_OUTPUT_DIR"
EXTRACTOR_PRESETS = ("per-plane", "hclbp", "hclbp-only", "hclbp+sps", "per-plane+sps")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = ""
    input: str = ""
    schedule: list = field(default_factory=lambda: [[8, 1]])
    include_hclbp: bool = True
    hclbp_only: bool = False
    sps: bool = False
    lsv_mode: str = "absolute"
    metric: str = "l2"
    protocol: str = "kfold"
    folds: int = 10
    k: list = field(default_factory=lambda: [1])
    train_fractions: list = field(default_factory=lambda: [0.2, 0.4, 0.6, 0.8])
    ratios: list = field(default_factory=lambda: [0.05, 0.1, 0.2, 0.3, 0.4])
    extractors: list = field(default_factory=lambda: ["per-plane", "hclbp+sps"])
    noisy_train: bool = True
    seed: int = 0
    crop: int | None = None
    size: int = 128
    per_class: int = 25
    image_size: int = 64
    out: str = ""
    format: str = "json"

    def validate(self) -> "RunConfig":
        if not self.schedule:
            raise ConfigError("empty schedule")
        for P, R in self.schedule:
            try:
                OperatorParams(P, R)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        radii = [r for _, r in self.schedule]
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ConfigError(f"schedule radii must be strictly increasing, got {radii}")
        if any(not 0.0 <= r <= 1.0 for r in self.ratios):
            raise ConfigError(f"noise ratios must lie in [0, 1], got {self.ratios}")
        if any(not 0.0 < f < 1.0 for f in self.train_fractions):
            raise ConfigError(f"train fractions must lie in (0, 1), got {self.train_fractions}")
        if self.metric not in bench.METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.lsv_mode not in ("absolute", "signed"):
            raise ConfigError(f"unknown LSV mode {self.lsv_mode!r}")
        if self.protocol not in ("kfold", "sweep", "grouped"):
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"unknown format {self.format!r}")
        if any(k < 1 for k in self.k):
            raise ConfigError(f"k values must be >= 1, got {self.k}")
        for e in self.extractors:
            if e not in EXTRACTOR_PRESETS:
                raise ConfigError(f"unknown extractor {e!r}, expected one of {EXTRACTOR_PRESETS}")
        return self

    def extractor(self) -> ExtractorConfig:
        return ExtractorConfig(
            tuple(tuple(s) for s in self.schedule),
            self.include_hclbp, self.sps, self.lsv_mode, self.hclbp_only,
        )

    def preset(self, name: str) -> ExtractorConfig:
        return ExtractorConfig(
            tuple(tuple(s) for s in self.schedule),
            include_hclbp=name.startswith("hclbp"),
            sps=name.endswith("+sps"),
            lsv_mode=self.lsv_mode,
            hclbp_only=name == "hclbp-only",
        )

    def to_dict(self) -> dict:
        return asdict(self)


# -- formatting --------------------------------------------------------------


def round_floats(obj):
    """Round every float to 12 significant digits (NaN/inf become null)."""
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.12g}") if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist())
    return obj


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return "" if v is None else str(v)


def dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(round_floats(obj), indent=1, sort_keys=True) + "\n")


def dump_csv(path: Path, rows: list[dict], config: RunConfig, columns=None) -> None:
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(round_floats(config.to_dict()), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])
    path.write_text(buf.getvalue())


def out_dir(config: RunConfig) -> Path:
    d = Path(config.out or os.environ.get(OUTPUT_ENV, "colorlbp-out"))
    d.mkdir(parents=True, exist_ok=True)
    return d


def write_report(config: RunConfig, stem: str, payload: dict, rows: list[dict], columns=None) -> Path:
    d = out_dir(config)
    if config.format == "json":
        path = d / f"{stem}.json"
        dump_json(path, {"config": config.to_dict(), **payload})
    else:
        path = d / f"{stem}.csv"
        dump_csv(path, rows, config, columns)
    log.info("wrote %s", path)
    return path


# -- commands ----------------------------------------------------------------


def _require_input(config: RunConfig) -> Path:
    if not config.input:
        raise ConfigError("--input is required")
    path = Path(config.input)
    if not path.exists():
        raise ConfigError(f"input path does not exist: {path}")
    return path


def _index(config: RunConfig) -> DatasetIndex:
    path = _require_input(config)
    if path.is_file() and path.suffix == ".json":
        return DatasetIndex.read(path)
    if path.is_file():
        return DatasetIndex([bench.SampleEntry(path.name, "unlabeled", str(path))], ["unlabeled"],
                            {"source": str(path)})
    return bench.build_dataset_index(path, config.crop)


def cmd_extract(config: RunConfig, workers: int = 1, mask_dir=None, cache_dir=None) -> Path:
    index = _index(config)
    extractor = config.extractor()
    X = bench.extract_descriptors(index, extractor, workers, cache_dir=cache_dir)
    template = extractor.extract(index.load(0))
    order = sorted(range(len(index)), key=lambda i: index.entries[i].sample_id)
    if mask_dir is not None and config.sps:
        mask_dir = Path(mask_dir)
        mask_dir.mkdir(parents=True, exist_ok=True)
        for i in order:
            for params in extractor.params():
                mask = significance_mask(index.load(i), params, config.lsv_mode)
                name = index.entries[i].sample_id.replace("/", "_").replace("#", "_")
                mask.to_pgm(mask_dir / f"{name}_P{params.P}R{params.R}.pgm")
    rows = []
    for i in order:
        e = index.entries[i]
        row = {"sample_id": e.sample_id, "label": e.label, "extractor": extractor.key}
        row.update(zip(template.column_names(), X[i]))
        rows.append(row)
    payload = {
        "extractor": extractor.to_dict(),
        "extractor_key": extractor.key,
        "normalization": template.meta.get("normalization"),
        "descriptors": [
            {"sample_id": index.entries[i].sample_id, "label": index.entries[i].label,
             **_with_bins(template, X[i]).to_json_dict()}
            for i in order
        ],
    }
    return write_report(config, "descriptors", payload, rows)


def _with_bins(template, bins):
    from colorlbp.color import Descriptor

    return Descriptor(np.asarray(bins), template.blocks)


def cmd_classify(config: RunConfig, workers: int = 1, cache_dir=None) -> Path:
    index = _index(config)
    extractor = config.extractor()
    y = index.labels
    if config.protocol == "kfold":
        bench.stratified_folds(y, config.folds, config.seed)
    X = bench.extract_descriptors(index, extractor, workers, cache_dir=cache_dir)
    results, rows = [], []
    if config.protocol == "sweep":
        table = bench.train_size_sweep(X, y, config.train_fractions, config.k, config.metric, config.seed)
        for r in table:
            rows.append({"extractor": extractor.name, **r})
        results = table
    else:
        for k in config.k:
            if config.protocol == "grouped":
                rep = bench.grouped_cv(X, y, index.groups, k, config.metric, index.classes)
            else:
                rep = bench.cross_validate(X, y, config.folds, k, config.metric, config.seed, index.classes)
            rep.protocol["extractor"] = extractor.to_dict()
            results.append({"k": k, **rep.to_dict()})
            rows.append({"extractor": extractor.name, "k": k, "accuracy": rep.accuracy,
                         "mean_fold_accuracy": rep.mean_fold_accuracy})
    payload = {
        "index": {"samples": len(index), "classes": index.classes, "provenance": index.provenance},
        "results": results,
    }
    return write_report(config, "classification", payload, rows)


def cmd_noise_bench(config: RunConfig, workers: int = 1, save_noisy=None) -> Path:
    index = _index(config)
    extractors = [config.preset(name) for name in config.extractors]
    out = bench.noise_benchmark(index, extractors, config.ratios, config.folds, config.k[0],
                                config.metric, config.seed, config.noisy_train, workers)
    stats = []
    for ratio, s in out["channel_stats"]:
        expected = noise.expected_channel_effect(ratio) if 0 < ratio < 1 else {}
        stats.append({
            "ratio": ratio,
            "total_noisy": s.total_noisy,
            "counts": s.counts,
            "fractions": s.fractions,
            "expected_fractions": expected,
        })
    if save_noisy is not None:
        d = Path(save_noisy)
        d.mkdir(parents=True, exist_ok=True)
        from colorlbp.image import save_image

        for ratio in config.ratios:
            save_image(d / f"sample0_ratio{ratio:g}.png", bench.noisy_image(index, 0, ratio, config.seed))
    rows = []
    for s in stats:
        row = {"table": "channel_effect", "ratio": s["ratio"], "total_noisy": s["total_noisy"]}
        for k in (1, 2, 3):
            row[f"fraction_{k}"] = s["fractions"].get(k)
            row[f"expected_{k}"] = s["expected_fractions"].get(k)
        rows.append(row)
    for a in out["accuracy"]:
        rows.append({"table": "accuracy", **a})
    columns = ["table", "ratio", "total_noisy", "fraction_1", "fraction_2", "fraction_3",
               "expected_1", "expected_2", "expected_3", "extractor", "accuracy"]
    payload = {"channel_stats": stats, "accuracy": out["accuracy"],
               "extractors": {name: e.to_dict() for name, e in zip(config.extractors, extractors)}}
    return write_report(config, "noise_bench", payload, rows, columns)


def cmd_opcount(config: RunConfig) -> Path:
    if config.input:
        image = load_image(_require_input(config))
    else:
        if config.size < 3:
            raise ConfigError(f"--size must be at least 3, got {config.size}")
        rng = np.random.default_rng(config.seed)
        image = rng.integers(0, 256, size=(config.size, config.size, 3), dtype=np.uint8)
    h, w = image.shape[:2]
    rows, report = [], []
    for P, R in config.schedule:
        params = OperatorParams(P, R)
        runs = [("hclbp", False), ("lbp", False)]
        if config.sps:
            runs.append(("hclbp", True))
        for operator, use_sps in runs:
            measured = opcount.measure_ops(image, operator, params, sps=use_sps)
            selected = measured.context["neighborhoods"] if use_sps else None
            predicted = opcount.predict_ops(operator, params, w, h, selected)
            label = f"{'HCLBP' if operator == 'hclbp' else 'MLBP'}_{P},{R}" + ("+SPS" if use_sps else "")
            rows.extend(opcount.table_rows([(label, predicted, measured)]))
            report.append({
                "operator": label,
                "predicted": predicted.modeled,
                "modeled": measured.modeled,
                "auxiliary": measured.to_dict()["auxiliary"],
                "context": measured.context,
            })
    payload = {
        "rows": report,
        "notes": [
            "MLBP division count 12708 in the reference table is excluded: the thresholding loop "
            "performs no division; histogram normalization divisions are reported under auxiliary.histogram",
        ],
    }
    return write_report(config, "opcount", payload, rows)


def cmd_synth(config: RunConfig) -> Path:
    root = Path(config.out or os.environ.get(OUTPUT_ENV, "colorlbp-synth"))
    paths = synth.write_corpus(root, config.seed, config.per_class, config.image_size)
    manifest = root / "corpus.json"
    dump_json(manifest, {"config": config.to_dict(), "classes": list(synth.CLASSES),
                         "files": [p.relative_to(root).as_posix() for p in paths]})
    log.info("wrote %d images under %s", len(paths), root)
    return manifest


# -- argument parsing --------------------------------------------------------


def _pairs(text: str) -> list:
    try:
        return [[int(a) for a in part.split(",")] for part in text.split(";") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad schedule {text!r}, expected 'P,R;P,R'") from exc


def _ints(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _names(text: str) -> list:
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="colorlbp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config or any artifact embedding one")
    common.add_argument("--input", "-i", help="dataset root, index JSON, or single image")
    common.add_argument("--out", "-o", help=f"output directory (default ${OUTPUT_ENV} or ./colorlbp-out)")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, default=1, help="parallel extraction workers")

    extractor = argparse.ArgumentParser(add_help=False)
    extractor.add_argument("--schedule", type=_pairs, help="resolution schedule, e.g. '8,1;16,2'")
    extractor.add_argument("--hclbp", dest="include_hclbp", action="store_true", default=None)
    extractor.add_argument("--no-hclbp", dest="include_hclbp", action="store_false")
    extractor.add_argument("--hclbp-only", action="store_true", default=None)
    extractor.add_argument("--sps", action="store_true", default=None)
    extractor.add_argument("--lsv-mode", choices=("absolute", "signed"))
    extractor.add_argument("--crop", type=int, help="crop each image into square windows of this size")
    extractor.add_argument("--cache-dir", help="descriptor cache directory")

    classify = argparse.ArgumentParser(add_help=False)
    classify.add_argument("--metric", choices=bench.METRICS)
    classify.add_argument("--folds", type=int)
    classify.add_argument("--k", type=_ints, help="comma separated neighbor counts")

    p = sub.add_parser("extract", parents=[common, extractor], help="write descriptors")
    p.add_argument("--mask-dir", help="export significance masks as PGM here")

    p = sub.add_parser("classify", parents=[common, extractor, classify], help="k-NN evaluation")
    p.add_argument("--protocol", choices=("kfold", "sweep", "grouped"))
    p.add_argument("--train-fractions", type=_floats)

    p = sub.add_parser("noise-bench", parents=[common, extractor, classify],
                       help="impulse noise statistics and robustness")
    p.add_argument("--ratios", type=_floats)
    p.add_argument("--extractors", type=_names, help=f"subset of {','.join(EXTRACTOR_PRESETS)}")
    p.add_argument("--test-only-noise", dest="noisy_train", action="store_false", default=None)
    p.add_argument("--save-noisy", help="write noisy copies of the first sample here")

    p = sub.add_parser("opcount", parents=[common, extractor], help="operation counts")
    p.add_argument("--size", type=int, help="side of a random square test image")

    p = sub.add_parser("synth", parents=[common], help="write the synthetic corpus")
    p.add_argument("--per-class", type=int)
    p.add_argument("--image-size", type=int)
    return parser


RUNTIME_ONLY = {"config", "workers", "verbose", "mask_dir", "cache_dir", "save_noisy"}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base = {}
    if args.config:
        try:
            obj = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        base = obj.get("config", obj)
        if base.get("command") not in (None, "", args.command):
            raise ConfigError(f"config is for {base['command']!r}, not {args.command!r}")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(base) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    config = RunConfig(**base)
    for key, value in vars(args).items():
        if key in RUNTIME_ONLY or value is None or key not in known:
            continue
        setattr(config, key, value)
    config.command = args.command
    return config.validate()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        config = resolve_config(args)
        if args.command == "extract":
            cmd_extract(config, args.workers, args.mask_dir, args.cache_dir)
        elif args.command == "classify":
            cmd_classify(config, args.workers, args.cache_dir)
        elif args.command == "noise-bench":
            cmd_noise_bench(config, args.workers, args.save_noisy)
        elif args.command == "opcount":
            cmd_opcount(config)
        elif args.command == "synth":
            cmd_synth(config)
    except (ConfigError, ProtocolError, FileNotFoundError) as exc:
        print(f"colorlbp: error: {exc}", file=sys.stderr)
        return 2
    except (ImageFormatError, ValueError, ArithmeticError) as exc:
        print(f"colorlbp: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
