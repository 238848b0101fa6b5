"""Nested stratified cross-validation, threshold/C grid search and variant comparison."""

from __future__ import annotations

import csv
import json
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from glyset.classifier import predict_proba, train_lr
from glyset.features import FeatureSet
from glyset.stats import StatsError, dunn_test, kruskal_wallis

logger = logging.getLogger(__name__)

C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)
THRESHOLD_GRID = tuple(round(0.45 + 0.01 * i, 2) for i in range(11))
N_OUTER = 5
N_INNER = 5


class EvaluationError(ValueError):
    pass


def substream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Independent generator derived from the run seed and a stream name."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode("utf-8")), *extra])


# --------------------------------------------------------------------------
# fold plans
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Fold:
    train: np.ndarray
    test: np.ndarray


@dataclass(frozen=True)
class FoldPlan:
    seed: int
    outer: tuple[Fold, ...]
    inner: tuple[tuple[Fold, ...], ...]


def _stratified_folds(rows: np.ndarray, y: np.ndarray, k: int, rng: np.random.Generator) -> tuple[Fold, ...]:
    pos = rows[y[rows]]
    neg = rows[~y[rows]]
    order = np.concatenate([rng.permutation(pos), rng.permutation(neg)])
    assign = np.arange(len(order)) % k
    folds = []
    for f in range(k):
        test = np.sort(order[assign == f])
        train = np.sort(order[assign != f])
        folds.append(Fold(train, test))
    return tuple(folds)


def make_fold_plan(labels, seed: int, n_outer: int = N_OUTER, n_inner: int = N_INNER) -> FoldPlan:
    """Stratified outer folds and, inside each outer training set, stratified inner folds.

    Each class is shuffled and dealt round-robin, continuing across classes, so
    fold sizes differ by at most one and so do per-class counts.
    """
    y = np.asarray(labels).astype(bool)
    n = len(y)
    if n < 10:
        raise EvaluationError("need at least 10 rows for nested cross-validation")
    if min(int(y.sum()), int((~y).sum())) < n_outer:
        raise EvaluationError(f"each class needs at least {n_outer} rows to stratify")
    rows = np.arange(n)
    outer = _stratified_folds(rows, y, n_outer, substream(seed, "folds"))
    inner = tuple(
        _stratified_folds(f.train, y, n_inner, substream(seed, "inner-folds", i)) for i, f in enumerate(outer)
    )
    return FoldPlan(int(seed), outer, inner)


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0


def confusion(y_true, y_pred) -> Metrics:
    t = np.asarray(y_true).astype(bool)
    p = np.asarray(y_pred).astype(bool)
    return Metrics(int(np.sum(t & p)), int(np.sum(~t & p)), int(np.sum(t & ~p)), int(np.sum(~t & ~p)))


def f1_by_threshold(prob, y_true, thresholds: Sequence[float]) -> np.ndarray:
    return np.array([confusion(y_true, prob >= t).f1 for t in thresholds])


def baseline_f1(labels) -> float:
    """F1 of predicting UD for every row: ``2*pi/(1+pi)`` for positive rate ``pi``."""
    y = np.asarray(labels).astype(bool)
    pi = y.mean()
    return 2 * pi / (1 + pi)


# --------------------------------------------------------------------------
# grid search
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainOptions:
    tol: float = 1e-6
    max_iters: int = 1000


@dataclass
class GridResult:
    C: float
    threshold: float
    scores: np.ndarray | None  # mean inner F1, shape (len(C_grid), len(threshold_grid))


def select_best(scores: np.ndarray, C_grid: Sequence[float], threshold_grid: Sequence[float]) -> tuple[float, float]:
    """Highest mean F1; ties go to the smaller C, then the threshold nearest 0.50 (lower on a draw)."""
    best = None
    for i, c in enumerate(C_grid):
        for j, t in enumerate(threshold_grid):
            key = (-scores[i, j], c, abs(round(t - 0.5, 10)), t)
            if best is None or key < best[0]:
                best = (key, c, t)
    assert best is not None
    return float(best[1]), float(best[2])


def grid_search(
    feature_set: FeatureSet,
    y,
    inner_folds: Sequence[Fold],
    C_grid: Sequence[float] = C_GRID,
    threshold_grid: Sequence[float] = THRESHOLD_GRID,
    opts: TrainOptions = TrainOptions(),
) -> GridResult:
    """Pick (C, threshold) by mean F1 over the inner folds.

    Features are refit on every inner training split; only the labels of
    rows inside the inner folds are read.
    """
    if not C_grid or not threshold_grid:
        raise EvaluationError("empty hyperparameter grid")
    if len(C_grid) == 1 and len(threshold_grid) == 1:
        return GridResult(float(C_grid[0]), float(threshold_grid[0]), None)
    y = np.asarray(y).astype(bool)
    scores = np.zeros((len(C_grid), len(threshold_grid)))
    for k, fold in enumerate(inner_folds):
        fitted = feature_set.fit(fold.train, y)
        Xtr = fitted.transform(fold.train)
        Xva = fitted.transform(fold.test)
        for i, c in enumerate(C_grid):
            try:
                model = train_lr(Xtr, y[fold.train], c, opts.tol, opts.max_iters)
            except Exception as exc:
                raise EvaluationError(f"inner fold {k}, C={c}: {exc}") from exc
            scores[i] += f1_by_threshold(predict_proba(model, Xva), y[fold.test], threshold_grid)
    scores /= len(inner_folds)
    c, t = select_best(scores, C_grid, threshold_grid)
    return GridResult(c, t, scores)


# --------------------------------------------------------------------------
# nested CV
# --------------------------------------------------------------------------


@dataclass
class FoldResult:
    variant: str
    fold: int
    C: float
    threshold: float
    metrics: Metrics
    artifacts: list[dict] = field(default_factory=list, repr=False)

    @property
    def precision(self) -> float:
        return self.metrics.precision

    @property
    def recall(self) -> float:
        return self.metrics.recall

    @property
    def f1(self) -> float:
        return self.metrics.f1


@dataclass
class Significance:
    statistic: float
    p_value: float
    best: str
    pairwise: list[dict]


@dataclass
class EvalReport:
    variants: list[str]
    folds: list[FoldResult]
    failures: dict[str, str] = field(default_factory=dict)
    significance: Significance | None = None

    def for_variant(self, variant: str) -> list[FoldResult]:
        return [f for f in self.folds if f.variant == variant]

    def f1s(self, variant: str) -> list[float]:
        return [f.f1 for f in self.for_variant(variant)]

    def means(self, variant: str) -> dict[str, float]:
        rows = self.for_variant(variant)
        return {
            "precision": math.fsum(r.precision for r in rows) / len(rows),
            "recall": math.fsum(r.recall for r in rows) / len(rows),
            "F1": math.fsum(r.f1 for r in rows) / len(rows),
        }

    @property
    def completed(self) -> list[str]:
        return [v for v in self.variants if v not in self.failures]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["variant", "fold", "precision", "recall", "F1", "C", "threshold"])
            for r in self.folds:
                w.writerow([r.variant, r.fold, repr(r.precision), repr(r.recall), repr(r.f1), repr(r.C), repr(r.threshold)])

    def summary(self) -> dict:
        out: dict = {"variants": {}, "failures": dict(sorted(self.failures.items()))}
        for v in self.completed:
            out["variants"][v] = self.means(v)
        if self.significance is not None:
            s = self.significance
            out["significance"] = {
                "kruskal_wallis_H": s.statistic,
                "p_value": s.p_value,
                "best": s.best,
                "pairwise": s.pairwise,
            }
        return out

    def write_json(self, path: str | Path, extra: dict | None = None) -> None:
        data = self.summary()
        if extra:
            data.update(extra)
        Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def evaluate_fold(
    feature_set: FeatureSet,
    y,
    plan: FoldPlan,
    k: int,
    C_grid: Sequence[float] = C_GRID,
    threshold_grid: Sequence[float] = THRESHOLD_GRID,
    opts: TrainOptions = TrainOptions(),
) -> FoldResult:
    """Tune on outer fold ``k``'s training rows, refit there, score its test rows."""
    y = np.asarray(y).astype(bool)
    outer = plan.outer[k]
    best = grid_search(feature_set, y, plan.inner[k], C_grid, threshold_grid, opts)
    fitted = feature_set.fit(outer.train, y)
    model = train_lr(fitted.transform(outer.train), y[outer.train], best.C, opts.tol, opts.max_iters, best.threshold)
    prob = predict_proba(model, fitted.transform(outer.test))
    metrics = confusion(y[outer.test], prob >= best.threshold)
    return FoldResult(feature_set.name, k, best.C, best.threshold, metrics, fitted.artifacts())


def _run_task(args):
    fs, y, plan, k, C_grid, threshold_grid, opts = args
    try:
        return evaluate_fold(fs, y, plan, k, C_grid, threshold_grid, opts)
    except Exception as exc:
        return f"fold {k}: {exc}"


def run_nested_cv(
    feature_sets: Sequence[FeatureSet],
    labels,
    plan: FoldPlan,
    C_grid: Sequence[float] = C_GRID,
    threshold_grid: Sequence[float] = THRESHOLD_GRID,
    opts: TrainOptions = TrainOptions(),
    jobs: int = 1,
) -> EvalReport:
    """Evaluate every feature set on every outer fold of ``plan``.

    A failing fold drops its variant (reason kept in ``failures``); the other
    variants continue. Results are assembled in (variant, fold) order, so the
    report does not depend on ``jobs``.
    """
    y = np.asarray(labels).astype(bool)
    tasks = [(fs, y, plan, k, tuple(C_grid), tuple(threshold_grid), opts) for fs in feature_sets for k in range(len(plan.outer))]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    report = EvalReport([fs.name for fs in feature_sets], [])
    for (fs, *_rest), res in zip(tasks, results):
        if fs.name in report.failures:
            continue
        if isinstance(res, str):
            logger.error("variant %s failed: %s", fs.name, res)
            report.failures[fs.name] = res
        else:
            report.folds.append(res)
    report.folds = [f for f in report.folds if f.variant not in report.failures]
    report.significance = compare_variants(report)
    return report


def compare_variants(report: EvalReport, alpha: float = 0.05, adjustment: str = "bonferroni") -> Significance | None:
    """Kruskal-Wallis over per-fold F1 by variant, then Dunn of each variant against the best mean."""
    variants = report.completed
    if len(variants) < 2:
        return None
    groups = [report.f1s(v) for v in variants]
    means = [math.fsum(g) / len(g) for g in groups]
    best_i = min(range(len(variants)), key=lambda i: (-means[i], i))
    pairs = [(best_i, i) for i in range(len(variants)) if i != best_i]
    try:
        kw = kruskal_wallis(groups)
        dunn = dunn_test(groups, adjustment, pairs)
    except StatsError:
        # every fold score identical: nothing to distinguish
        return Significance(
            0.0,
            1.0,
            variants[best_i],
            [{"variant": variants[i], "z": 0.0, "p": 1.0, "adjusted_p": 1.0, "significant": False} for _, i in pairs],
        )
    pairwise = [
        {
            "variant": variants[i],
            "z": d.z,
            "p": d.p,
            "adjusted_p": d.adjusted_p,
            "significant": bool(d.adjusted_p < alpha),
        }
        for (_, i), d in zip(pairs, dunn)
    ]
    return Significance(kw.statistic, kw.p_value, variants[best_i], pairwise)


def fit_final_model(feature_set: FeatureSet, labels, C: float, threshold: float, opts: TrainOptions = TrainOptions()):
    """Refit on every labeled row; returns (model, fitted features)."""
    y = np.asarray(labels).astype(bool)
    rows = np.arange(len(y))
    fitted = feature_set.fit(rows, y)
    model = train_lr(fitted.transform(rows), y, C, opts.tol, opts.max_iters, threshold, fitted.columns)
    model.meta["variant"] = feature_set.name
    return model, fitted
