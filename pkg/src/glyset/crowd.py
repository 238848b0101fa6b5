"""Inter-annotator agreement and Dawid-Skene aggregation of crowd judgments."""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from glyset import kernels

logger = logging.getLogger(__name__)

NOT_SURE = "NS"
CLASSES: tuple[Union[int, str], ...] = (1, 2, 3, 4, 5, NOT_SURE)
_CLASS_INDEX = {c: i for i, c in enumerate(CLASSES)}

Rating = Union[int, str]


class CrowdError(ValueError):
    pass


def parse_rating(value: object) -> Rating:
    if isinstance(value, str):
        v = value.strip()
        if v.upper() in ("NS", "NOT_SURE", "NOT SURE"):
            return NOT_SURE
        value = v
    try:
        r = int(value)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise CrowdError(f"invalid rating {value!r}") from None
    if r not in _CLASS_INDEX:
        raise CrowdError(f"rating {r} outside 1..5")
    return r


@dataclass(frozen=True)
class Judgment:
    worker_id: str
    recipe_id: str
    rating: Rating


class JudgmentSet:
    """Judgments indexed by recipe and by worker; one per (worker, recipe)."""

    def __init__(self, judgments: Iterable[Judgment]):
        self.judgments: list[Judgment] = []
        self.by_recipe: dict[str, list[Judgment]] = defaultdict(list)
        self.by_worker: dict[str, list[Judgment]] = defaultdict(list)
        seen = set()
        for j in judgments:
            key = (j.worker_id, j.recipe_id)
            if key in seen:
                raise CrowdError(f"duplicate judgment for worker {j.worker_id} on recipe {j.recipe_id}")
            seen.add(key)
            rating = parse_rating(j.rating)
            j = Judgment(j.worker_id, j.recipe_id, rating)
            self.judgments.append(j)
            self.by_recipe[j.recipe_id].append(j)
            self.by_worker[j.worker_id].append(j)

    def __len__(self) -> int:
        return len(self.judgments)

    @property
    def recipes(self) -> list[str]:
        return sorted(self.by_recipe)

    @property
    def workers(self) -> list[str]:
        return sorted(self.by_worker)

    @classmethod
    def from_triples(cls, triples: Iterable[tuple[str, str, Rating]]) -> "JudgmentSet":
        return cls(Judgment(str(w), str(r), v) for w, r, v in triples)


def read_judgments(path: str | Path) -> JudgmentSet:
    """Read ``worker_id,recipe_id,rating`` CSV (rating 1..5 or NS)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"worker_id", "recipe_id", "rating"} - set(reader.fieldnames or ())
        if missing:
            raise CrowdError(f"judgments file lacks column(s): {', '.join(sorted(missing))}")
        rows = [(row["worker_id"], row["recipe_id"], row["rating"]) for row in reader]
    return JudgmentSet.from_triples(rows)


# --------------------------------------------------------------------------
# Krippendorff's alpha
# --------------------------------------------------------------------------


def _delta_matrix(values: np.ndarray, marginals: np.ndarray, metric: str) -> np.ndarray:
    m = len(values)
    if metric == "nominal":
        return 1.0 - np.eye(m)
    if metric == "interval":
        return (values[:, None] - values[None, :]) ** 2
    if metric == "ordinal":
        cum = np.concatenate([[0.0], np.cumsum(marginals)])
        d = np.zeros((m, m))
        for c in range(m):
            for k in range(c + 1, m):
                s = cum[k + 1] - cum[c] - (marginals[c] + marginals[k]) / 2.0
                d[c, k] = d[k, c] = s * s
        return d
    raise CrowdError(f"unknown metric {metric!r}")


def alpha_from_units(units: Mapping[Hashable, Sequence[float]], metric: str = "ordinal") -> float:
    """Krippendorff's alpha from per-unit value lists (missing values already dropped)."""
    values = sorted({float(v) for vals in units.values() for v in vals})
    vidx = {v: i for i, v in enumerate(values)}
    unit_idx, value_idx = [], []
    for u, vals in enumerate(units.values()):
        for v in vals:
            unit_idx.append(u)
            value_idx.append(vidx[float(v)])
    o = kernels.coincidence_matrix(
        np.asarray(unit_idx, dtype=np.intp),
        np.asarray(value_idx, dtype=np.intp),
        len(units),
        len(values),
    )
    marg = o.sum(axis=1)
    n = marg.sum()
    if n == 0:
        raise CrowdError("no overlap")
    delta = _delta_matrix(np.asarray(values), marg, metric)
    observed = float((o * delta).sum())
    expected = float((np.outer(marg, marg) * delta).sum()) / (n - 1.0)
    if expected == 0.0:
        raise CrowdError("degenerate data")
    return 1.0 - observed / expected


def krippendorff_alpha(js: JudgmentSet, metric: str = "ordinal") -> float:
    """Chance-corrected agreement over recipes; NOT_SURE counts as missing."""
    units = {
        rid: [j.rating for j in js.by_recipe[rid] if j.rating != NOT_SURE]
        for rid in js.recipes
    }
    return alpha_from_units(units, metric)


# --------------------------------------------------------------------------
# Dawid-Skene
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AggregatedLabel:
    recipe_id: str
    label: Rating
    posterior: tuple[float, ...]


@dataclass
class DawidSkeneResult:
    labels: list[AggregatedLabel]
    workers: list[str]
    confusion: np.ndarray  # (workers, true class, observed class)
    priors: np.ndarray
    log_likelihoods: list[float] = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False

    def worker_confusion(self, worker_id: str) -> np.ndarray:
        return self.confusion[self.workers.index(worker_id)]


def dawid_skene(
    js: JudgmentSet,
    max_iters: int = 100,
    tol: float = 1e-6,
    smoothing: float = 0.01,
) -> DawidSkeneResult:
    """EM estimate of true labels, class priors and per-worker confusion matrices.

    Posteriors start at normalized vote counts. ``smoothing`` is added to every
    confusion-matrix count in the M-step, which makes each iteration a MAP step;
    ``log_likelihoods`` tracks the matching penalized objective (data
    log-likelihood plus ``smoothing * sum(log confusion)``), one value per
    E-step, and is non-decreasing.
    """
    if len(js) == 0:
        raise CrowdError("empty judgment set")
    items = js.recipes
    workers = js.workers
    K = len(CLASSES)
    iidx = {r: i for i, r in enumerate(items)}
    widx = {w: i for i, w in enumerate(workers)}
    item_idx = np.array([iidx[j.recipe_id] for j in js.judgments], dtype=np.intp)
    worker_idx = np.array([widx[j.worker_id] for j in js.judgments], dtype=np.intp)
    obs = np.array([_CLASS_INDEX[j.rating] for j in js.judgments], dtype=np.intp)
    # fixed reduction order keeps results bit-stable
    order = np.lexsort((worker_idx, item_idx))
    item_idx, worker_idx, obs = item_idx[order], worker_idx[order], obs[order]

    post = np.zeros((len(items), K))
    np.add.at(post, (item_idx, obs), 1.0)
    post /= post.sum(axis=1, keepdims=True)

    history: list[float] = []
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        priors, theta = _m_step(post, item_idx, worker_idx, obs, len(workers), smoothing)
        new_post, ll = _e_step(priors, theta, item_idx, worker_idx, obs, len(items))
        with np.errstate(divide="ignore"):
            penalty = smoothing * float(np.log(theta).sum())
        history.append(ll + penalty)
        change = float(np.max(np.abs(new_post - post)))
        post = new_post
        if change < tol:
            converged = True
            break
    priors, theta = _m_step(post, item_idx, worker_idx, obs, len(workers), smoothing)
    labels = [
        AggregatedLabel(rid, CLASSES[int(np.argmax(post[i]))], tuple(float(p) for p in post[i]))
        for i, rid in enumerate(items)
    ]
    if not converged:
        logger.warning("Dawid-Skene stopped after %d iterations without converging", n_iter)
    return DawidSkeneResult(labels, workers, theta, priors, history, n_iter, converged)


def _m_step(post, item_idx, worker_idx, obs, n_workers, smoothing):
    priors = post.sum(axis=0) / post.shape[0]
    counts = kernels.ds_confusion_counts(item_idx, worker_idx, obs, np.ascontiguousarray(post), n_workers)
    counts += smoothing
    theta = counts / counts.sum(axis=2, keepdims=True)
    return priors, theta


def _e_step(priors, theta, item_idx, worker_idx, obs, n_items):
    with np.errstate(divide="ignore"):
        log_theta = np.log(theta)
        log_prior = np.log(priors)
    log_post = log_prior + kernels.ds_log_terms(item_idx, worker_idx, obs, np.ascontiguousarray(log_theta), n_items)
    norm = logsumexp(log_post, axis=1, keepdims=True)
    post = np.exp(log_post - norm)
    return post, float(norm.sum())


def write_aggregation(labels: Sequence[AggregatedLabel], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["recipe_id", "label", "p1", "p2", "p3", "p4", "p5", "pNS"])
        for lab in labels:
            w.writerow([lab.recipe_id, lab.label, *(repr(p) for p in lab.posterior)])


def read_aggregation(path: str | Path) -> list[AggregatedLabel]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            post = tuple(float(row[k]) for k in ("p1", "p2", "p3", "p4", "p5", "pNS"))
            out.append(AggregatedLabel(row["recipe_id"], parse_rating(row["label"]), post))
    return out


# --------------------------------------------------------------------------
# Binarization
# --------------------------------------------------------------------------


class BinaryClass(str, Enum):
    UD = "UD"  # unhealthy for diabetics, positive class
    HD = "HD"


@dataclass(frozen=True)
class BinaryLabel:
    recipe_id: str
    cls: BinaryClass

    @property
    def positive(self) -> bool:
        return self.cls is BinaryClass.UD


def binarize(labels: Iterable[AggregatedLabel]) -> tuple[list[BinaryLabel], int]:
    """Ratings <= 3 become UD, >= 4 HD; NOT_SURE is dropped and counted."""
    out: list[BinaryLabel] = []
    excluded = 0
    for lab in labels:
        if lab.label == NOT_SURE:
            excluded += 1
            continue
        out.append(BinaryLabel(lab.recipe_id, BinaryClass.UD if int(lab.label) <= 3 else BinaryClass.HD))
    return out, excluded


def write_binary_labels(labels: Sequence[BinaryLabel], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["recipe_id", "class"])
        for lab in labels:
            w.writerow([lab.recipe_id, lab.cls.value])
