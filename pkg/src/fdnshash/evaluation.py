"""Experimental protocols: robustness benchmarking and nearest-template classification."""

from __future__ import annotations

import csv
import io
import json
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__, attacks, fdns, imagecore
from .errors import ConfigurationError, IncompatibleHashError
from .fdns import DEFAULT_PARAMS, FdnsParams, HashVector

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")
REJECTED = "<rejected>"


def default_threads() -> int:
    return os.cpu_count() or 1


def _pmap(func, items: Sequence, threads: Optional[int]):
    # results come back in input order whatever the scheduling
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


# ---------------------------------------------------------------- corpora


def list_images(root) -> list:
    """Image files below ``root`` as ``(relative_posix_path, path)``, sorted by relative path."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    found = []
    for p in root.rglob("*"):
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES:
            found.append((p.relative_to(root).as_posix(), p))
    return sorted(found)


def load_labeled_corpus(root) -> list:
    """``(label, identifier, path)`` triples; the label is the top-level directory name.

    Files directly inside ``root`` carry no label and are ignored.
    """
    out = []
    for ident, path in list_images(root):
        parts = ident.split("/")
        if len(parts) >= 2:
            out.append((parts[0], ident, path))
    return out


def _materialize(item):
    if isinstance(item, (str, bytes)) or hasattr(item, "__fspath__"):
        return imagecore.load_image(item)
    return item


def hash_many(images: Sequence, params: FdnsParams = DEFAULT_PARAMS, threads: Optional[int] = None) -> list:
    """Hash arrays or paths, preserving order. HashVectors pass through unchanged."""

    def one(item):
        if isinstance(item, HashVector):
            return item
        return fdns.hash_image(_materialize(item), params)

    return _pmap(one, list(images), threads)


# ---------------------------------------------------------------- robustness


@dataclass
class RobustnessRow:
    kind: str
    parameter: float
    spec: str
    correlations: list = field(default_factory=list)  # (image_id, value)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.correlations], dtype=np.float64)

    @property
    def count(self) -> int:
        return len(self.correlations)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values)) if self.correlations else float("nan")

    @property
    def min(self) -> float:
        return float(np.min(self.values)) if self.correlations else float("nan")

    @property
    def max(self) -> float:
        return float(np.max(self.values)) if self.correlations else float("nan")


@dataclass
class SkippedItem:
    image_id: str
    spec: Optional[str]
    reason: str


@dataclass
class RobustnessReport:
    """Per-attack correlation between each original and its attacked copy."""

    rows: list
    skipped: list
    params_fingerprint: str
    corpus_id: str
    version: str = __version__

    def row(self, spec) -> RobustnessRow:
        text = spec if isinstance(spec, str) else spec.format()
        for r in self.rows:
            if r.spec == text:
                return r
        raise KeyError(text)

    def by_kind(self) -> dict:
        """Pool every row of the same kind: ``{kind: (n, mean, min, max)}``."""
        pooled: dict = {}
        for r in self.rows:
            pooled.setdefault(r.kind, []).extend(v for _, v in r.correlations)
        return {
            k: (len(v), float(np.mean(v)), float(np.min(v)), float(np.max(v)))
            for k, v in pooled.items()
            if v
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# algorithm={fdns.ALGORITHM} version={self.version} fingerprint={self.params_fingerprint}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["kind", "parameter", "n", "mean", "min", "max"])
        for r in self.rows:
            writer.writerow([r.kind, repr(r.parameter), r.count, repr(r.mean), repr(r.min), repr(r.max)])
        return buf.getvalue()

    def to_text(self) -> str:
        """JSON document with every per-image correlation."""
        doc = {
            "algorithm": fdns.ALGORITHM,
            "version": self.version,
            "fingerprint": self.params_fingerprint,
            "corpus": self.corpus_id,
            "rows": [
                {
                    "spec": r.spec,
                    "kind": r.kind,
                    "parameter": r.parameter,
                    "n": r.count,
                    "mean": r.mean,
                    "min": r.min,
                    "max": r.max,
                    "correlations": [[i, v] for i, v in r.correlations],
                }
                for r in self.rows
            ],
            "skipped": [{"image": s.image_id, "spec": s.spec, "reason": s.reason} for s in self.skipped],
        }
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RobustnessReport":
        doc = json.loads(text)
        rows = [
            RobustnessRow(r["kind"], float(r["parameter"]), r["spec"], [(i, float(v)) for i, v in r["correlations"]])
            for r in doc["rows"]
        ]
        skipped = [SkippedItem(s["image"], s["spec"], s["reason"]) for s in doc["skipped"]]
        return cls(rows, skipped, doc["fingerprint"], doc["corpus"], doc["version"])


def _as_items(corpus) -> list:
    if isinstance(corpus, dict):
        items = list(corpus.items())
    else:
        items = list(corpus)
    return sorted(items, key=lambda kv: kv[0])


def robustness_bench(
    corpus,
    grid: Iterable = attacks.DEFAULT_GRID,
    params: FdnsParams = DEFAULT_PARAMS,
    *,
    threads: Optional[int] = None,
    corpus_id: str = "",
) -> RobustnessReport:
    """Correlate every image's hash with the hashes of its attacked copies.

    Parameters
    ----------
    corpus : dict or iterable of (identifier, image)
        Images are arrays (gray or RGB) or paths. Iteration follows the
        sorted identifiers.
    grid : iterable of AttackSpec or str
        Attacks to apply.

    Images that fail to load, and attacks that raise, become entries of
    ``report.skipped`` with the reason.
    """
    items = _as_items(corpus)
    if not items:
        raise ConfigurationError("robustness corpus is empty")
    specs = [attacks.AttackSpec.parse(g) if isinstance(g, str) else g for g in grid]
    if not specs:
        raise ConfigurationError("attack grid is empty")

    def one(item):
        ident, source = item
        try:
            gray = imagecore.to_grayscale(_materialize(source))
            original = fdns.hash_image(gray, params)
        except (OSError, ValueError) as exc:
            return ident, None, f"{type(exc).__name__}: {exc}"
        scores = []
        for spec in specs:
            try:
                scores.append(fdns.correlation(original, fdns.hash_image(spec.apply(gray), params)))
            except ValueError as exc:
                scores.append(f"{type(exc).__name__}: {exc}")
        return ident, scores, None

    results = _pmap(one, items, threads)

    rows = [RobustnessRow(s.kind, s.parameter, s.format()) for s in specs]
    skipped = []
    for ident, scores, err in results:
        if scores is None:
            skipped.append(SkippedItem(ident, None, err))
            continue
        for row, score in zip(rows, scores):
            if isinstance(score, str):
                skipped.append(SkippedItem(ident, row.spec, score))
            else:
                row.correlations.append((ident, score))
    return RobustnessReport(rows, skipped, params.fingerprint, corpus_id)


# ---------------------------------------------------------------- templates


@dataclass(frozen=True)
class TemplateEntry:
    label: str
    source: str
    hash: HashVector


@dataclass
class TemplateDb:
    """Labeled template hashes sharing one parameter fingerprint."""

    params_fingerprint: str
    entries: list = field(default_factory=list)
    params: Optional[FdnsParams] = None

    def add(self, label: str, source: str, h: HashVector) -> None:
        if h.params_fingerprint != self.params_fingerprint:
            raise IncompatibleHashError(
                f"template {source!r} has fingerprint {h.params_fingerprint}, database uses {self.params_fingerprint}"
            )
        self.entries.append(TemplateEntry(str(label), str(source), h))

    @property
    def labels(self) -> list:
        return sorted({e.label for e in self.entries})

    def __len__(self) -> int:
        return len(self.entries)


def classify(query: HashVector, db: TemplateDb, threshold: Optional[float] = None):
    """Label of the most correlated template, and that correlation.

    Ties go to the lexicographically smallest label, then source. With a
    ``threshold``, a best score below it yields ``(None, score)``.
    """
    if not db.entries:
        raise ConfigurationError("template database is empty")
    if query.params_fingerprint != db.params_fingerprint:
        raise IncompatibleHashError(
            f"query fingerprint {query.params_fingerprint} does not match database {db.params_fingerprint}"
        )
    scored = [(fdns.correlation(query, e.hash), e.label, e.source) for e in db.entries]
    score, label, _ = min(scored, key=lambda t: (-t[0], t[1], t[2]))
    if threshold is not None and score < threshold:
        return None, score
    return label, score


def _group(corpus) -> dict:
    groups: dict = {}
    for label, ident, item in corpus:
        groups.setdefault(str(label), []).append((str(ident), item))
    for members in groups.values():
        members.sort(key=lambda t: t[0])
    return dict(sorted(groups.items()))


def _draw(groups: dict, k: int, rng: np.random.Generator) -> dict:
    return {label: sorted(rng.choice(len(members), size=k, replace=False).tolist()) for label, members in groups.items()}


def build_template_db(
    corpus,
    templates_per_class: int = 1,
    seed: int = 0,
    params: FdnsParams = DEFAULT_PARAMS,
    *,
    threads: Optional[int] = None,
) -> TemplateDb:
    """Pick ``templates_per_class`` random images per label and hash them.

    ``corpus`` is an iterable of ``(label, identifier, image)``.
    """
    if templates_per_class < 1:
        raise ConfigurationError("templates_per_class must be at least 1")
    groups = _group(corpus)
    if not groups:
        raise ConfigurationError("template corpus is empty")
    for label, members in groups.items():
        if len(members) < templates_per_class:
            raise ConfigurationError(
                f"class {label!r} has {len(members)} images, fewer than templates_per_class={templates_per_class}"
            )
    chosen = _draw(groups, templates_per_class, np.random.default_rng(seed))
    picks = [(label, *groups[label][i]) for label in groups for i in chosen[label]]
    hashes = hash_many([item for _, _, item in picks], params, threads)
    db = TemplateDb(params.fingerprint, params=params)
    for (label, ident, _), h in zip(picks, hashes):
        db.add(label, ident, h)
    return db


@dataclass
class ClassificationResult:
    accuracies: list
    confusion: dict  # (true, predicted) -> count, pooled over repetitions
    per_repetition_confusion: list
    repetitions: int
    seed: int
    templates_per_class: int
    params_fingerprint: str
    version: str = __version__

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def pooled_accuracy(self) -> float:
        total = sum(self.confusion.values())
        correct = sum(n for (t, p), n in self.confusion.items() if t == p)
        return correct / total if total else float("nan")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# algorithm={fdns.ALGORITHM} version={self.version} fingerprint={self.params_fingerprint}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["repetition", "n", "correct", "accuracy"])
        for i, (acc, conf) in enumerate(zip(self.accuracies, self.per_repetition_confusion)):
            n = sum(conf.values())
            correct = sum(c for (t, p), c in conf.items() if t == p)
            writer.writerow([i, n, correct, repr(acc)])
        return buf.getvalue()

    def to_text(self) -> str:
        def pairs(conf):
            return [[t, p, n] for (t, p), n in sorted(conf.items())]

        doc = {
            "algorithm": fdns.ALGORITHM,
            "version": self.version,
            "fingerprint": self.params_fingerprint,
            "seed": self.seed,
            "repetitions": self.repetitions,
            "templates_per_class": self.templates_per_class,
            "mean_accuracy": self.mean_accuracy,
            "pooled_accuracy": self.pooled_accuracy,
            "accuracies": self.accuracies,
            "confusion": pairs(self.confusion),
            "per_repetition_confusion": [pairs(c) for c in self.per_repetition_confusion],
        }
        return json.dumps(doc, indent=1) + "\n"


def confusion_table(confusion: dict) -> str:
    """Render ``{(true, predicted): n}`` as an aligned text table."""
    truths = sorted({t for t, _ in confusion})
    preds = sorted({p for _, p in confusion} | set(truths))
    width = max([len(x) for x in truths + preds] + [5])
    lines = [" " * width + " " + " ".join(p.rjust(width) for p in preds)]
    for t in truths:
        cells = " ".join(str(confusion.get((t, p), 0)).rjust(width) for p in preds)
        lines.append(t.rjust(width) + " " + cells)
    return "\n".join(lines)


def classification_eval(
    corpus,
    templates_per_class: int = 1,
    repetitions: int = 20,
    seed: int = 0,
    params: FdnsParams = DEFAULT_PARAMS,
    *,
    threads: Optional[int] = None,
    threshold: Optional[float] = None,
) -> ClassificationResult:
    """Repeated nearest-template classification with random template draws.

    ``corpus`` is an iterable of ``(label, identifier, image)`` where image
    is an array, a path or a precomputed HashVector. Each repetition draws
    ``templates_per_class`` templates per label, classifies every other
    image and records the accuracy. Templates are never scored.
    """
    if repetitions < 1:
        raise ConfigurationError("repetitions must be at least 1")
    if templates_per_class < 1:
        raise ConfigurationError("templates_per_class must be at least 1")
    groups = _group(corpus)
    if not groups:
        raise ConfigurationError("classification corpus is empty")
    for label, members in groups.items():
        if len(members) <= templates_per_class:
            raise ConfigurationError(
                f"class {label!r} has {len(members)} images; needs more than templates_per_class={templates_per_class}"
            )

    flat = [(label, ident, item) for label, members in groups.items() for ident, item in members]
    hashes = hash_many([item for _, _, item in flat], params, threads)
    fingerprints = {h.params_fingerprint for h in hashes}
    if fingerprints != {params.fingerprint}:
        raise IncompatibleHashError(f"corpus hashes carry fingerprints {sorted(fingerprints)}, expected {params.fingerprint}")
    by_label: dict = {}
    for (label, ident, _), h in zip(flat, hashes):
        by_label.setdefault(label, []).append((ident, h))

    rng = np.random.default_rng(seed)
    accuracies, per_rep = [], []
    pooled: Counter = Counter()
    for _ in range(repetitions):
        chosen = _draw(groups, templates_per_class, rng)
        db = TemplateDb(params.fingerprint, params=params)
        for label, idx in chosen.items():
            for i in idx:
                db.add(label, *by_label[label][i])
        conf: Counter = Counter()
        for label, members in by_label.items():
            skip = set(chosen[label])
            for i, (_, h) in enumerate(members):
                if i in skip:
                    continue
                pred, _ = classify(h, db, threshold)
                conf[(label, REJECTED if pred is None else pred)] += 1
        total = sum(conf.values())
        correct = sum(n for (t, p), n in conf.items() if t == p)
        accuracies.append(correct / total)
        per_rep.append(dict(conf))
        pooled.update(conf)
    return ClassificationResult(
        accuracies, dict(pooled), per_rep, repetitions, seed, templates_per_class, params.fingerprint
    )
