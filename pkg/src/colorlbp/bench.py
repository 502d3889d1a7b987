"""Dataset indexing, k-NN classification and the evaluation protocols.

Descriptors are extracted once per sample; the folds then only re-slice the
descriptor matrix, which is what makes cross-validation cheap.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from colorlbp.color import Descriptor, multiresolution_descriptor
from colorlbp.image import OperatorParams, crop_windows, load_image, window_grid
from colorlbp.noise import NoiseSpec, apply_impulse_noise, channel_effect_stats, ChannelEffectStats

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".ppm", ".pgm", ".pnm"}
METRICS = ("l2", "chi2")
CHI2_EPS = 1e-10


class ProtocolError(ValueError):
    """Raised when a dataset cannot support the requested split."""


# -- dataset index -----------------------------------------------------------


@dataclass
class SampleEntry:
    sample_id: str
    label: str
    source: str
    window: tuple | None = None  # (x, y, w, h)
    group: str | None = None
    image: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "label": self.label,
            "source": self.source,
            "window": list(self.window) if self.window else None,
            "group": self.group,
        }


@dataclass
class DatasetIndex:
    entries: list[SampleEntry]
    classes: list[str]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [e.sample_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate sample ids in index")
        unknown = {e.label for e in self.entries} - set(self.classes)
        if unknown:
            raise ValueError(f"entries reference unknown classes {sorted(unknown)}")

    def __len__(self):
        return len(self.entries)

    @property
    def labels(self) -> np.ndarray:
        lookup = {c: i for i, c in enumerate(self.classes)}
        return np.array([lookup[e.label] for e in self.entries], dtype=np.int64)

    @property
    def groups(self) -> list:
        return [e.group for e in self.entries]

    def load(self, i: int) -> np.ndarray:
        e = self.entries[i]
        if e.image is not None:
            return e.image
        img = _load_cached(e.source)
        if e.window:
            x, y, w, h = e.window
            img = img[y:y + h, x:x + w]
        return img

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "provenance": self.provenance,
            "entries": [e.to_dict() for e in self.entries],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, obj) -> "DatasetIndex":
        entries = [
            SampleEntry(
                e["sample_id"], e["label"], e["source"],
                tuple(e["window"]) if e.get("window") else None, e.get("group"),
            )
            for e in obj["entries"]
        ]
        return cls(entries, list(obj["classes"]), dict(obj.get("provenance", {})))

    @classmethod
    def read(cls, path) -> "DatasetIndex":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @classmethod
    def from_arrays(cls, images, labels, groups=None) -> "DatasetIndex":
        """In-memory index; nothing is read from disk."""
        classes = sorted(set(labels))
        groups = groups or [None] * len(images)
        entries = [
            SampleEntry(f"mem/{i:05d}", lab, "<memory>", None, g, np.asarray(img))
            for i, (img, lab, g) in enumerate(zip(images, labels, groups))
        ]
        return cls(entries, classes, {"source": "memory"})


@lru_cache(maxsize=64)
def _load_cached(path: str) -> np.ndarray:
    return load_image(path)


def _image_files(d: Path):
    return sorted(p for p in d.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def build_dataset_index(root, crop: int | None = None) -> DatasetIndex:
    """Index ``root/<class>/...`` with one sample per image or per crop window.

    Images directly inside a class directory have no group; images inside
    ``root/<class>/<group>/`` carry that group name (grouped split protocols).
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root not found: {root}")
    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise ProtocolError(f"{root} holds no class directories")
    stray = [p.name for p in root.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES]
    if stray:
        raise ProtocolError(f"{root} must contain only class directories, found files {stray[:3]}")

    entries = []
    for cdir in class_dirs:
        files = [(None, f) for f in _image_files(cdir)]
        for gdir in sorted(p for p in cdir.iterdir() if p.is_dir()):
            files += [(gdir.name, f) for f in _image_files(gdir)]
        if not files:
            raise ProtocolError(f"class directory {cdir.name} holds no images")
        for group, f in files:
            rel = f.relative_to(root).as_posix()
            img = load_image(f)
            if crop is None:
                entries.append(SampleEntry(rel, cdir.name, str(f), None, group))
                continue
            h, w = img.shape[:2]
            if crop > w or crop > h:
                raise ProtocolError(f"{rel}: {w}x{h} smaller than crop window {crop}")
            for r, c in window_grid(w, h, crop, crop):
                entries.append(
                    SampleEntry(f"{rel}#{r}_{c}", cdir.name, str(f), (c * crop, r * crop, crop, crop), group)
                )
    entries.sort(key=lambda e: e.sample_id)
    return DatasetIndex(entries, [d.name for d in class_dirs], {"root": str(root), "crop": crop})


# -- extractor configuration -------------------------------------------------


@dataclass(frozen=True)
class ExtractorConfig:
    schedule: tuple = ((8, 1),)
    include_hclbp: bool = True
    sps: bool = False
    lsv_mode: str = "absolute"
    hclbp_only: bool = False

    @property
    def name(self) -> str:
        parts = ["+".join(f"{p},{r}" for p, r in self.schedule)]
        if self.hclbp_only:
            parts.append("hclbp-only")
        elif self.include_hclbp:
            parts.append("hclbp")
        else:
            parts.append("per-plane")
        if self.sps:
            parts.append("sps" if self.lsv_mode == "absolute" else "sps-signed")
        return ":".join(parts)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schedule"] = [list(s) for s in self.schedule]
        return d

    @classmethod
    def from_dict(cls, d) -> "ExtractorConfig":
        d = dict(d)
        d["schedule"] = tuple(tuple(s) for s in d.get("schedule", ((8, 1),)))
        return cls(**d)

    @property
    def key(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha1(blob).hexdigest()[:12]

    def params(self) -> list[OperatorParams]:
        return [OperatorParams(p, r) for p, r in self.schedule]

    def extract(self, image) -> Descriptor:
        return multiresolution_descriptor(
            image, self.params(), self.include_hclbp, self.sps, self.lsv_mode, self.hclbp_only
        )


PER_PLANE = ExtractorConfig(include_hclbp=False)
HCLBP = ExtractorConfig()
HCLBP_SPS = ExtractorConfig(sps=True)


def noise_seed(seed: int, ratio: float, i: int) -> int:
    ss = np.random.SeedSequence([seed, int(round(ratio * 1_000_000)), i])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def noisy_image(index: DatasetIndex, i: int, ratio: float, seed: int) -> np.ndarray:
    img = index.load(i)
    if ratio == 0:
        return img
    return apply_impulse_noise(img, NoiseSpec(ratio, noise_seed(seed, ratio, i)))


def extract_descriptors(
    index: DatasetIndex,
    config: ExtractorConfig,
    workers: int = 1,
    ratio: float = 0.0,
    seed: int = 0,
    cache_dir=None,
) -> np.ndarray:
    """Descriptor matrix ``(n_samples, n_bins)`` in index order."""
    cache = None
    if cache_dir is not None and ratio == 0:
        cache = Path(cache_dir) / f"descriptors_{config.key}.csv"
        cached = _read_cache(cache, index)
        if cached is not None:
            return cached

    def one(i):
        return config.extract(noisy_image(index, i, ratio, seed)).bins

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(len(index))))
    else:
        rows = [one(i) for i in range(len(index))]
    X = np.vstack(rows)
    if cache is not None:
        _write_cache(cache, index, X)
    return X


def _read_cache(path: Path, index: DatasetIndex):
    if not path.is_file():
        return None
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    got = {r[0]: np.array([float(v) for v in r[1:]]) for r in rows}
    if any(e.sample_id not in got for e in index.entries):
        return None
    log.debug("descriptor cache hit: %s", path)
    return np.vstack([got[e.sample_id] for e in index.entries])


def _write_cache(path: Path, index: DatasetIndex, X: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id"] + [f"b{j}" for j in range(X.shape[1])])
        for e, row in zip(index.entries, X):
            w.writerow([e.sample_id] + [repr(float(v)) for v in row])


# -- k-NN --------------------------------------------------------------------


def distances(train: np.ndarray, query: np.ndarray, metric: str = "l2") -> np.ndarray:
    train = np.atleast_2d(np.asarray(train, dtype=np.float64))
    query = np.asarray(query, dtype=np.float64)
    if train.shape[1] != query.shape[-1]:
        raise ValueError(f"dimension mismatch: train {train.shape[1]} vs query {query.shape[-1]}")
    diff = train - query
    if metric == "l2":
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if metric == "chi2":
        return (diff**2 / (train + query + CHI2_EPS)).sum(axis=1)
    raise ValueError(f"unknown metric {metric!r}, expected one of {METRICS}")


def knn_classify(train_X, train_y, query, k: int = 1, metric: str = "l2"):
    """Majority vote of the ``k`` nearest training descriptors.

    Vote ties go to the class whose voters have the smaller summed distance,
    then to the smallest class id. Equidistant candidates at the cut are taken
    in class id order, so the result never depends on training set order.
    """
    train_y = np.asarray(train_y)
    n = len(train_y)
    if n == 0:
        raise ValueError("empty training set")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    d = distances(train_X, query, metric)
    nearest = np.lexsort((train_y, d))[:k]
    votes: dict = {}
    for j in nearest:
        cnt, total = votes.get(train_y[j], (0, 0.0))
        votes[train_y[j]] = (cnt + 1, total + d[j])
    return min(votes, key=lambda c: (-votes[c][0], votes[c][1], c))


def knn_predict(train_X, train_y, test_X, k: int = 1, metric: str = "l2") -> np.ndarray:
    return np.array([knn_classify(train_X, train_y, q, k, metric) for q in test_X])


# -- protocols ---------------------------------------------------------------


@dataclass
class ClassificationReport:
    confusion: np.ndarray
    classes: list[str]
    protocol: dict
    fold_accuracies: list[float] = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        return 100.0 * np.trace(self.confusion) / self.confusion.sum()

    @property
    def per_class(self) -> dict:
        rows = self.confusion.sum(axis=1)
        return {
            c: (100.0 * self.confusion[i, i] / rows[i] if rows[i] else float("nan"))
            for i, c in enumerate(self.classes)
        }

    @property
    def mean_fold_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies)) if self.fold_accuracies else self.accuracy

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "mean_fold_accuracy": self.mean_fold_accuracy,
            "fold_accuracies": list(self.fold_accuracies),
            "per_class": self.per_class,
            "classes": list(self.classes),
            "confusion": self.confusion.tolist(),
            "protocol": self.protocol,
        }


def stratified_folds(y, folds: int, seed: int = 0) -> np.ndarray:
    """Fold id per sample; every class is spread round-robin after a seeded shuffle."""
    y = np.asarray(y)
    if folds < 2:
        raise ProtocolError(f"need at least 2 folds, got {folds}")
    classes, counts = np.unique(y, return_counts=True)
    if counts.min() < folds:
        small = classes[counts.argmin()]
        raise ProtocolError(
            f"class smaller than fold count: class {small} has {counts.min()} samples, folds={folds}"
        )
    rng = np.random.default_rng(seed)
    assign = np.empty(len(y), dtype=np.int64)
    start = 0
    for c in classes:
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        assign[idx] = (start + np.arange(idx.size)) % folds
        # rotate so the surplus samples of each class land on different folds
        start = (start + idx.size) % folds
    return assign


def _evaluate(train_X, train_y, test_X, test_y, k, metric, n_classes, confusion):
    pred = knn_predict(train_X, train_y, test_X, k, metric)
    np.add.at(confusion, (test_y, pred), 1)
    return 100.0 * np.mean(pred == test_y)


def cross_validate(X, y, folds: int = 10, k: int = 1, metric: str = "l2", seed: int = 0,
                   classes=None, test_X=None) -> ClassificationReport:
    """Stratified k-fold CV on a descriptor matrix.

    ``test_X`` optionally supplies the rows used when a sample is in the test
    fold (e.g. a noisy version), ``X`` always supplies training rows.
    """
    X = np.asarray(X)
    y = np.asarray(y)
    test_X = X if test_X is None else np.asarray(test_X)
    n_classes = int(y.max()) + 1 if classes is None else len(classes)
    assign = stratified_folds(y, folds, seed)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    accs = []
    for f in range(folds):
        te = assign == f
        accs.append(_evaluate(X[~te], y[~te], test_X[te], y[te], k, metric, n_classes, confusion))
    protocol = {"protocol": "stratified-kfold", "folds": folds, "k": k, "metric": metric, "seed": seed}
    return ClassificationReport(confusion, list(classes or range(n_classes)), protocol, accs)


def grouped_cv(X, y, groups, k: int = 1, metric: str = "l2", classes=None) -> ClassificationReport:
    """Leave-one-group-out: every group in turn is the test set."""
    X = np.asarray(X)
    y = np.asarray(y)
    groups = np.asarray([str(g) for g in groups])
    uniq = sorted(set(groups))
    if len(uniq) < 2:
        raise ProtocolError("grouped split needs at least two groups")
    n_classes = int(y.max()) + 1 if classes is None else len(classes)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    accs = []
    for g in uniq:
        te = groups == g
        accs.append(_evaluate(X[~te], y[~te], X[te], y[te], k, metric, n_classes, confusion))
    protocol = {"protocol": "leave-one-group-out", "groups": uniq, "k": k, "metric": metric}
    return ClassificationReport(confusion, list(classes or range(n_classes)), protocol, accs)


def kfold_cv(index: DatasetIndex, config: ExtractorConfig, folds: int = 10, k: int = 1,
             metric: str = "l2", seed: int = 0, workers: int = 1, cache_dir=None) -> ClassificationReport:
    y = index.labels
    stratified_folds(y, folds, seed)  # fail before the expensive extraction
    X = extract_descriptors(index, config, workers, cache_dir=cache_dir)
    report = cross_validate(X, y, folds, k, metric, seed, index.classes)
    report.protocol["extractor"] = config.to_dict()
    return report


def split_train_test(y, fraction: float, seed: int = 0) -> np.ndarray:
    """Boolean train mask: ``round(fraction * n_c)`` samples per class, at least one."""
    if not 0 < fraction < 1:
        raise ProtocolError(f"train fraction must lie in (0, 1), got {fraction}")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    train = np.zeros(len(y), dtype=bool)
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        n_train = max(1, int(np.floor(fraction * idx.size + 0.5)))
        if n_train >= idx.size:
            raise ProtocolError(
                f"train fraction {fraction} leaves class {c} ({idx.size} samples) without test samples"
            )
        train[idx[rng.permutation(idx.size)[:n_train]]] = True
    return train


def train_size_sweep(X, y, fractions, ks=(1,), metric: str = "l2", seed: int = 0) -> list[dict]:
    X = np.asarray(X)
    y = np.asarray(y)
    rows = []
    for frac in fractions:
        train = split_train_test(y, frac, seed)
        for k in ks:
            pred = knn_predict(X[train], y[train], X[~train], k, metric)
            rows.append({"fraction": frac, "k": k, "accuracy": 100.0 * float(np.mean(pred == y[~train]))})
    return rows


def noise_benchmark(index: DatasetIndex, configs, ratios, folds: int = 10, k: int = 1,
                    metric: str = "l2", seed: int = 0, noisy_train: bool = True,
                    workers: int = 1) -> dict:
    """Accuracy per (extractor, ratio) on impulse-corrupted copies of the corpus.

    With ``noisy_train`` every image is corrupted; otherwise only the rows used
    as test samples are. Also returns the channel footprint of the injected
    noise per ratio.
    """
    for r in ratios:
        NoiseSpec(r)
    y = index.labels
    rows, stats = [], []
    for ratio in ratios:
        agg = ChannelEffectStats()
        if ratio > 0:
            for i in range(len(index)):
                agg = agg.merge(channel_effect_stats(index.load(i), noisy_image(index, i, ratio, seed)))
        stats.append((ratio, agg))
        for config in configs:
            noisy = extract_descriptors(index, config, workers, ratio, seed)
            clean = noisy if noisy_train or ratio == 0 else extract_descriptors(index, config, workers)
            rep = cross_validate(clean, y, folds, k, metric, seed, index.classes, test_X=noisy)
            rows.append({"extractor": config.name, "ratio": ratio, "accuracy": rep.accuracy})
    return {"accuracy": rows, "channel_stats": stats}
