"""Command-line entry point: ``glyset {ingest,curate,aggregate,analyze,evaluate,inspect}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from collections import Counter
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from glyset import corpus as corpus_mod
from glyset import crowd, evaluation, features, healthiness, stats
from glyset.classifier import TrainedClassifier, predict_proba, train_lr
from glyset.textprep import load_stoplist

logger = logging.getLogger("glyset")

SUBCOMMANDS = ("ingest", "curate", "aggregate", "analyze", "evaluate", "inspect")
DEFAULT_VARIANTS = ("nb-bow", "nu", "nu+nb-bow")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    corpus: str | None = None
    judgments: str | None = None
    labels: str | None = None
    embeddings: str | None = None
    stoplist: str | None = None
    thresholds: str | None = None
    model: str | None = None
    seed: int = 0
    c_grid: list[float] = field(default_factory=lambda: list(evaluation.C_GRID))
    threshold_grid: list[float] = field(default_factory=lambda: list(evaluation.THRESHOLD_GRID))
    variants: list[str] = field(default_factory=lambda: list(DEFAULT_VARIANTS))
    out: str = "glyset-out"
    n_candidates: int = 1000
    top_k: int = 20
    tol: float = 1e-6
    max_iters: int = 1000
    jobs: int = 1

    @classmethod
    def from_file(cls, path: str | None) -> "RunConfig":
        if path is None:
            return cls()
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        base = Path(path).parent
        for key in ("corpus", "judgments", "labels", "embeddings", "stoplist", "thresholds", "model"):
            # relative paths in a config file resolve against the file's directory
            if data.get(key) is not None and not os.path.isabs(data[key]):
                data[key] = str(base / data[key])
        return cls(**data)

    def require(self, *keys: str) -> None:
        for key in keys:
            value = getattr(self, key)
            if value is None:
                raise ConfigError(f"missing required setting '{key}'")
            if not Path(value).is_file():
                raise ConfigError(f"{key} file not found: {value}")

    def check_optional(self, *keys: str) -> None:
        for key in keys:
            value = getattr(self, key)
            if value is not None and not Path(value).is_file():
                raise ConfigError(f"{key} file not found: {value}")

    def validate_common(self) -> None:
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if not self.c_grid or any(c <= 0 for c in self.c_grid):
            raise ConfigError("c_grid must be nonempty and positive")
        if not self.threshold_grid or any(not 0 < t < 1 for t in self.threshold_grid):
            raise ConfigError("threshold_grid must be nonempty with values in (0, 1)")


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _load_valid_corpus(path: str) -> list[corpus_mod.Recipe]:
    recipes, rejections = corpus_mod.load_corpus(path)
    if rejections:
        logger.warning("%s: %d line(s) rejected", path, len(rejections))
    return recipes


def _binary_labels(cfg: RunConfig, recipes: Sequence[corpus_mod.Recipe]):
    """Recipes with a UD/HD label, their labels and their aggregated ratings, in corpus order."""
    aggregated = {lab.recipe_id: lab for lab in crowd.read_aggregation(cfg.labels)}
    binary, excluded = crowd.binarize(aggregated.values())
    cls = {b.recipe_id: b.positive for b in binary}
    known = {r.id for r in recipes}
    stray = sorted(set(aggregated) - known)
    if stray:
        logger.warning("%d labeled recipe(s) not in the corpus, e.g. %s", len(stray), stray[0])
    kept = [r for r in recipes if r.id in cls]
    y = np.array([cls[r.id] for r in kept], dtype=bool)
    ratings = np.array([int(aggregated[r.id].label) for r in kept], dtype=float)
    return kept, y, ratings, excluded


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_ingest(cfg: RunConfig) -> dict:
    cfg.require("corpus")
    try:
        recipes, rejections = corpus_mod.load_corpus(cfg.corpus)
    except OSError as exc:
        raise ConfigError(f"cannot read corpus: {exc}") from None
    # recipes failing derivation are rejected too; line numbers come from a rescan
    line_of = {}
    with open(cfg.corpus, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                line_of.setdefault(str(json.loads(line).get("id")), lineno)
            except (json.JSONDecodeError, AttributeError):
                continue
    accepted = []
    histogram = Counter({p.value: 0 for p in corpus_mod.SfPartition})
    for r in recipes:
        try:
            d = corpus_mod.derive_nutrition(r)
        except corpus_mod.CorpusError as exc:
            rejections.append(corpus_mod.Rejection(line_of.get(r.id, 0), str(exc)))
            continue
        accepted.append(r)
        histogram[corpus_mod.partition_by_sf(d).value] += 1
    rejections.sort(key=lambda rej: rej.line)
    out = _out_dir(cfg)
    corpus_mod.write_corpus(accepted, out / "corpus.jsonl")
    corpus_mod.write_rejections(rejections, out / "rejections.csv")
    summary = {
        "accepted": len(accepted),
        "rejected": len(rejections),
        "sf_partitions": dict(histogram),
    }
    _write_json(out / "ingest_summary.json", summary)
    return summary


def _noisy_source_probs(X: np.ndarray, y: np.ndarray) -> np.ndarray | None:
    """Probability each row's own noisy label gets from a C=1 model on standardized features."""
    if y.all() or not y.any():
        return None
    mean, std = X.mean(axis=0), X.std(axis=0)
    Xs = (X - mean) / np.where(std > 0, std, 1.0)
    model = train_lr(Xs, y, C=1.0)
    p = predict_proba(model, Xs)
    return np.where(y, p, 1.0 - p)


def cmd_curate(cfg: RunConfig) -> list[str]:
    cfg.require("corpus")
    recipes = _load_valid_corpus(cfg.corpus)
    if not 0 <= cfg.n_candidates <= len(recipes):
        raise ConfigError(f"n_candidates={cfg.n_candidates} outside [0, {len(recipes)}]")
    X = features.nutritional_matrix(recipes).values
    derived = [corpus_mod.derive_nutrition(r) for r in recipes]
    y_tag = np.array([corpus_mod.LOW_GLYCEMIC_TAG in r.category_tags for r in recipes])
    y_sf = np.array([d.sf_ratio < corpus_mod.SF_CUTOFFS[0] for d in derived])
    pa = _noisy_source_probs(X, y_tag)
    pb = _noisy_source_probs(X, y_sf)
    if pa is None and pb is None:
        raise ConfigError("neither noisy label source has both classes")
    if pa is None:
        logger.warning("category tags give a single class; falling back to the S/F source only")
        pa = pb
    if pb is None:
        logger.warning("S/F labels give a single class; using the category-tag source only")
        pb = pa
    ids = [r.id for r in recipes]
    probs_a = dict(zip(ids, map(float, pa)))
    probs_b = dict(zip(ids, map(float, pb)))
    chosen = corpus_mod.select_annotation_candidates(recipes, probs_a, probs_b, cfg.n_candidates)
    sums = corpus_mod.rank_sums(sorted(ids), probs_a, probs_b)
    part = {r.id: corpus_mod.partition_by_sf(d).value for r, d in zip(recipes, derived)}
    out = _out_dir(cfg)
    with open(out / "candidates.csv", "w", encoding="utf-8", newline="") as fh:
        w = _csv_writer(fh)
        w.writerow(["recipe_id", "partition", "rank_sum", "prob_tag_source", "prob_sf_source"])
        for rid in chosen:
            w.writerow([rid, part[rid], repr(sums[rid]), repr(probs_a[rid]), repr(probs_b[rid])])
    return chosen


def cmd_aggregate(cfg: RunConfig) -> dict:
    cfg.require("judgments")
    js = crowd.read_judgments(cfg.judgments)
    alphas = {}
    for metric in ("ordinal", "interval"):
        try:
            alphas[metric] = crowd.krippendorff_alpha(js, metric)
        except crowd.CrowdError as exc:
            logger.warning("alpha (%s) undefined: %s", metric, exc)
            alphas[metric] = None
    result = crowd.dawid_skene(js)
    binary, excluded = crowd.binarize(result.labels)
    out = _out_dir(cfg)
    crowd.write_aggregation(result.labels, out / "labels.csv")
    crowd.write_binary_labels(binary, out / "binary_labels.csv")
    with open(out / "worker_confusion.csv", "w", encoding="utf-8", newline="") as fh:
        w = _csv_writer(fh)
        w.writerow(["worker_id", "true_label", *(f"p_{c}" for c in crowd.CLASSES)])
        for wi, worker in enumerate(result.workers):
            for k, c in enumerate(crowd.CLASSES):
                w.writerow([worker, c, *(repr(float(x)) for x in result.confusion[wi, k])])
    summary = {
        "alpha_ordinal": alphas["ordinal"],
        "alpha_interval": alphas["interval"],
        "n_judgments": len(js),
        "n_recipes": len(js.recipes),
        "n_workers": len(js.workers),
        "n_ud": sum(b.positive for b in binary),
        "n_hd": sum(not b.positive for b in binary),
        "n_not_sure": excluded,
        "em_iterations": result.n_iter,
        "em_converged": result.converged,
        "class_priors": dict(zip(map(str, crowd.CLASSES), map(float, result.priors))),
    }
    _write_json(out / "agreement.json", summary)
    return summary


COMPONENTS = ("fat", "satfat", "sugars", "salt", "total")


def cmd_analyze(cfg: RunConfig) -> dict:
    cfg.require("corpus", "labels")
    cfg.check_optional("thresholds")
    thresholds = healthiness.FsaThresholds.from_csv(cfg.thresholds)
    recipes = _load_valid_corpus(cfg.corpus)
    kept, y, ratings, excluded = _binary_labels(cfg, recipes)
    scores = [healthiness.fsa_score(corpus_mod.derive_nutrition(r).per_100g, thresholds) for r in kept]
    table = np.array([s.as_row() for s in scores], dtype=float).reshape(-1, len(COMPONENTS))
    out = _out_dir(cfg)
    healthiness.write_scores(zip((r.id for r in kept), scores), out / "fsa_scores.csv")
    report: dict = {"n_recipes": len(kept), "n_not_sure": excluded, "correlations": {}, "group_tests": {}}
    with open(out / "healthiness_correlations.csv", "w", encoding="utf-8", newline="") as fh:
        w = _csv_writer(fh)
        w.writerow(["component", "r", "p", "n", "note"])
        for j, comp in enumerate(COMPONENTS):
            try:
                r, p = stats.pearson_r(ratings, table[:, j])
                w.writerow([comp, repr(r), repr(p), len(kept), ""])
                report["correlations"][comp] = {"r": r, "p": p}
            except stats.StatsError as exc:
                w.writerow([comp, "", "", len(kept), str(exc)])
                report["correlations"][comp] = None
    with open(out / "healthiness_group_tests.csv", "w", encoding="utf-8", newline="") as fh:
        w = _csv_writer(fh)
        w.writerow(["component", "mean_ud", "mean_hd", "H", "p", "dunn_z", "dunn_p", "significant", "note"])
        for j, comp in enumerate(COMPONENTS):
            ud, hd = table[y, j], table[~y, j]
            means = [repr(float(ud.mean())) if len(ud) else "", repr(float(hd.mean())) if len(hd) else ""]
            try:
                kw = stats.kruskal_wallis({"UD": ud, "HD": hd})
                (d,) = stats.dunn_test({"UD": ud, "HD": hd}, "bonferroni")
                sig = d.adjusted_p < 0.05
                w.writerow([comp, *means, repr(kw.statistic), repr(kw.p_value), repr(d.z), repr(d.adjusted_p), sig, ""])
                report["group_tests"][comp] = {"H": kw.statistic, "p": kw.p_value, "z": d.z, "dunn_p": d.adjusted_p}
            except stats.StatsError as exc:
                w.writerow([comp, *means, "", "", "", "", False, str(exc)])
                report["group_tests"][comp] = None
    _write_json(out / "healthiness_summary.json", report)
    return report


def _factory(cfg: RunConfig, recipes) -> features.FeatureFactory:
    emb = features.load_embeddings(cfg.embeddings) if cfg.embeddings else None
    stop = load_stoplist(cfg.stoplist) if cfg.stoplist else None
    return features.FeatureFactory(recipes, stoplist=stop, embeddings=emb)


def _modal_setting(folds: Sequence[evaluation.FoldResult]) -> tuple[float, float]:
    counts = Counter((f.C, f.threshold) for f in folds)
    return min(counts, key=lambda k: (-counts[k], k[0], abs(k[1] - 0.5), k[1]))


def cmd_evaluate(cfg: RunConfig) -> evaluation.EvalReport:
    cfg.require("corpus", "labels")
    cfg.check_optional("embeddings", "stoplist")
    unknown = [v for v in cfg.variants if v not in features.VARIANTS]
    if unknown:
        raise ConfigError(f"unknown variant(s) {', '.join(unknown)}; valid: {', '.join(features.VARIANTS)}")
    if not cfg.variants:
        raise ConfigError("no variants requested")
    if any("embedding" in v for v in cfg.variants) and not cfg.embeddings:
        raise ConfigError("embedding variants need the 'embeddings' setting")
    recipes = _load_valid_corpus(cfg.corpus)
    kept, y, _, _ = _binary_labels(cfg, recipes)
    factory = _factory(cfg, kept)
    sets = [factory.feature_set(v) for v in cfg.variants]
    plan = evaluation.make_fold_plan(y, cfg.seed)
    opts = evaluation.TrainOptions(cfg.tol, cfg.max_iters)
    report = evaluation.run_nested_cv(sets, y, plan, cfg.c_grid, cfg.threshold_grid, opts, jobs=cfg.jobs)
    out = _out_dir(cfg)
    report.write_csv(out / "report.csv")
    report.write_json(
        out / "summary.json",
        {
            "seed": cfg.seed,
            "n_recipes": len(kept),
            "n_ud": int(y.sum()),
            "c_grid": list(cfg.c_grid),
            "threshold_grid": list(cfg.threshold_grid),
        },
    )
    models = out / "models"
    models.mkdir(exist_ok=True)
    for fs in sets:
        if fs.name in report.failures:
            continue
        C, t = _modal_setting(report.for_variant(fs.name))
        model, fitted = evaluation.fit_final_model(fs, y, C, t, opts)
        model.save(models / f"{fs.name}.json")
    return report


def cmd_inspect(cfg: RunConfig) -> dict:
    cfg.require("corpus", "labels")
    cfg.check_optional("stoplist")
    model = None
    if cfg.model is not None:
        try:
            model = TrainedClassifier.load(cfg.model)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot read model {cfg.model}: {exc}") from None
    recipes = _load_valid_corpus(cfg.corpus)
    kept, y, _, _ = _binary_labels(cfg, recipes)
    factory = _factory(cfg, kept)
    block = factory.block("nb-bow")
    nb = features.fit_nb_weights(block.matrix, y, np.arange(len(y)))
    tokens = factory.vocabulary(False).tokens
    k = cfg.top_k
    pos = sorted(range(len(tokens)), key=lambda i: (-nb.r[i], tokens[i]))
    neg = sorted(range(len(tokens)), key=lambda i: (nb.r[i], tokens[i]))
    out = _out_dir(cfg)
    with open(out / "nb_weights_top.csv", "w", encoding="utf-8", newline="") as fh:
        w = _csv_writer(fh)
        w.writerow(["direction", "rank", "token", "r"])
        for direction, order in (("UD", pos), ("HD", neg)):
            for rank, i in enumerate(order[:k], start=1):
                w.writerow([direction, rank, tokens[i], repr(float(nb.r[i]))])
    result = {
        "ud_tokens": [tokens[i] for i in pos[:k]],
        "hd_tokens": [tokens[i] for i in neg[:k]],
    }
    if model is not None:
        nu = [(c, float(wt)) for c, wt in zip(model.columns, model.weights) if c.startswith("nu:")]
        nu.sort(key=lambda cw: (-abs(cw[1]), cw[0]))
        with open(out / "nu_weights_top.csv", "w", encoding="utf-8", newline="") as fh:
            w = _csv_writer(fh)
            w.writerow(["rank", "column", "weight"])
            for rank, (c, wt) in enumerate(nu[:k], start=1):
                w.writerow([rank, c, repr(wt)])
        result["nu_weights"] = nu[:k]
    return result


COMMANDS = {
    "ingest": cmd_ingest,
    "curate": cmd_curate,
    "aggregate": cmd_aggregate,
    "analyze": cmd_analyze,
    "evaluate": cmd_evaluate,
    "inspect": cmd_inspect,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glyset", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--variants", help="comma-separated variant names")
        p.add_argument("--corpus")
        p.add_argument("--judgments")
        p.add_argument("--labels")
        p.add_argument("--embeddings")
        p.add_argument("--stoplist")
        p.add_argument("--thresholds")
        if name == "curate":
            p.add_argument("-n", "--n", dest="n_candidates", type=int)
        if name == "inspect":
            p.add_argument("--model")
            p.add_argument("--top-k", dest="top_k", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_file(args.config)
    for key in ("seed", "jobs", "out", "corpus", "judgments", "labels", "embeddings", "stoplist", "thresholds", "n_candidates", "model", "top_k"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if args.variants is not None:
        cfg.variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    cfg.validate_common()
    return cfg


def _setup_logging() -> None:
    level = os.environ.get("GLYSET_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        result = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"glyset {args.command}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"glyset {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if args.command == "evaluate":
        print(json.dumps(result.summary(), indent=2, sort_keys=True))
    elif args.command == "curate":
        print(f"{len(result)} candidates written to {Path(cfg.out) / 'candidates.csv'}")
    else:
        print(json.dumps(result, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
