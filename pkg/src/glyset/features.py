"""Feature construction: bag-of-words, NB-weighted BoW, embedding averages, nutrition.

Label-free matrices are built once per corpus. Anything fitted (NB log-count
ratios, standardizers) takes an explicit set of training rows and never reads
labels or statistics of other rows.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from glyset.corpus import DerivedNutrition, Recipe, derive_nutrition
from glyset.textprep import TokenizedRecipe, Vocabulary, build_vocabulary, tokenize

logger = logging.getLogger(__name__)

COUNT = "count"
NB_WEIGHTED = "nb_weighted"
EMBEDDING = "embedding"
NUTRITIONAL = "nutritional"

# 19 nutrient properties in column order; dry weight is appended as the 20th
NUTRIENT_COLUMNS = (
    "calories",
    "fat",
    "saturated_fat",
    "cholesterol",
    "sodium",
    "potassium",
    "carbohydrates",
    "fiber",
    "sugars",
    "protein",
    "vitamin_a",
    "vitamin_c",
    "calcium",
    "iron",
    "thiamin",
    "niacin",
    "vitamin_b6",
    "magnesium",
    "folate",
)
NU_COLUMNS = NUTRIENT_COLUMNS + ("dry_weight",)


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureMatrix:
    ids: tuple[str, ...]
    values: np.ndarray
    columns: tuple[str, ...]
    kinds: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise FeatureError("feature values must be 2-D")
        if v.shape != (len(self.ids), len(self.columns)) or len(self.kinds) != len(self.columns):
            raise FeatureError(
                f"shape {v.shape} does not match {len(self.ids)} rows x {len(self.columns)} columns"
            )
        if not np.all(np.isfinite(v)):
            raise FeatureError("feature matrix contains NaN or infinite entries")
        object.__setattr__(self, "values", v)

    @property
    def standardizable(self) -> np.ndarray:
        return np.array([k != NB_WEIGHTED for k in self.kinds], dtype=bool)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def rows(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=np.intp)
        return FeatureMatrix(tuple(self.ids[i] for i in idx), self.values[idx], self.columns, self.kinds)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", *self.columns])
            for rid, row in zip(self.ids, self.values):
                w.writerow([rid, *(repr(float(x)) for x in row)])


def concat(features: Sequence[FeatureMatrix]) -> FeatureMatrix:
    """Append columns of matrices that share row ids in the same order."""
    if not features:
        raise FeatureError("nothing to concatenate")
    ids = features[0].ids
    for fm in features[1:]:
        if fm.ids != ids:
            raise FeatureError("row ids differ between feature matrices")
    if len(features) == 1:
        return features[0]
    return FeatureMatrix(
        ids,
        np.hstack([fm.values for fm in features]),
        tuple(c for fm in features for c in fm.columns),
        tuple(k for fm in features for k in fm.kinds),
    )


# --------------------------------------------------------------------------
# bag of words
# --------------------------------------------------------------------------


def bow_counts(tr: TokenizedRecipe, v: Vocabulary) -> np.ndarray:
    """Occurrence count of each vocabulary token; out-of-vocabulary tokens are ignored.

    Whether this is the basic or parsed variant depends on how ``tr`` was
    tokenized (``tokenize(r, parsed=True)``) and which corpus ``v`` came from.
    """
    out = np.zeros(len(v))
    index = v.index
    for tok in tr.all_tokens:
        i = index.get(tok)
        if i is not None:
            out[i] += 1.0
    return out


def bow_matrix(corpus: Sequence[TokenizedRecipe], v: Vocabulary, prefix: str = "bow", kind: str = COUNT) -> FeatureMatrix:
    values = np.vstack([bow_counts(tr, v) for tr in corpus]) if corpus else np.zeros((0, len(v)))
    return FeatureMatrix(
        tuple(tr.id for tr in corpus),
        values,
        tuple(f"{prefix}:{t}" for t in v.tokens),
        (kind,) * len(v),
    )


@dataclass(frozen=True)
class NbWeights:
    r: np.ndarray
    alpha: float = 1.0

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "r": [repr(float(x)) for x in self.r]}


def fit_nb_weights(X, y, train_rows, alpha: float = 1.0) -> NbWeights:
    """Naive Bayes log-count ratios from the training rows only.

    ``y`` is truthy for the positive (UD) class. Only ``y[train_rows]`` is read.
    """
    X = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=float)
    rows = np.asarray(train_rows, dtype=np.intp)
    Xt = X[rows]
    yt = np.asarray([bool(y[i]) for i in rows])
    if yt.all() or not yt.any():
        raise FeatureError("NB weights need both classes in the training rows")
    p = alpha + Xt[yt].sum(axis=0)
    q = alpha + Xt[~yt].sum(axis=0)
    r = np.log((p / p.sum()) / (q / q.sum()))
    return NbWeights(r, alpha)


def apply_nb_weights(x, w: NbWeights) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(w.r):
        raise FeatureError(f"dimension mismatch: {x.shape[-1]} counts vs {len(w.r)} weights")
    return x * w.r


# --------------------------------------------------------------------------
# embeddings
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingTable:
    vectors: Mapping[str, np.ndarray]
    dim: int

    def __contains__(self, token: str) -> bool:
        return token in self.vectors


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read a whitespace-separated text vector file, optional ``count dim`` header."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                dim = int(parts[1])
                continue
            token, raw = parts[0], parts[1:]
            if dim is None:
                dim = len(raw)
            if len(raw) != dim or dim == 0:
                raise FeatureError(f"line {lineno}: expected {dim} values, got {len(raw)}")
            try:
                vec = np.array([float(x) for x in raw])
            except ValueError:
                raise FeatureError(f"line {lineno}: non-numeric vector entry") from None
            if token in vectors:
                warnings.warn(f"duplicate embedding for {token!r} at line {lineno}; keeping the last", stacklevel=2)
            vectors[token] = vec
    if dim is None:
        raise FeatureError(f"{path}: no vectors")
    return EmbeddingTable(vectors, dim)


def embed_recipe(tr: TokenizedRecipe, table: EmbeddingTable) -> np.ndarray:
    """Unweighted mean of the in-table token vectors; zeros if none match."""
    hits = [table.vectors[t] for t in tr.all_tokens if t in table.vectors]
    if not hits:
        warnings.warn(f"recipe {tr.id}: no tokens found in the embedding table", stacklevel=2)
        return np.zeros(table.dim)
    return np.mean(hits, axis=0)


def embedding_matrix(corpus: Sequence[TokenizedRecipe], table: EmbeddingTable) -> FeatureMatrix:
    values = np.vstack([embed_recipe(tr, table) for tr in corpus])
    return FeatureMatrix(
        tuple(tr.id for tr in corpus),
        values,
        tuple(f"emb:{i}" for i in range(table.dim)),
        (EMBEDDING,) * table.dim,
    )


# --------------------------------------------------------------------------
# nutrition
# --------------------------------------------------------------------------


def nutritional_vector(r: Recipe, d: DerivedNutrition | None = None, columns: Sequence[str] = NUTRIENT_COLUMNS) -> np.ndarray:
    d = derive_nutrition(r) if d is None else d
    missing = [c for c in columns if c not in d.normalized]
    if missing:
        raise FeatureError(f"recipe {r.id}: missing nutrient {missing[0]}")
    return np.array([d.normalized[c] for c in columns] + [d.dry_weight])


def nutritional_matrix(recipes: Sequence[Recipe], columns: Sequence[str] = NUTRIENT_COLUMNS) -> FeatureMatrix:
    values = np.vstack([nutritional_vector(r, columns=columns) for r in recipes])
    names = tuple(columns) + ("dry_weight",)
    return FeatureMatrix(
        tuple(r.id for r in recipes),
        values,
        tuple(f"nu:{c}" for c in names),
        (NUTRITIONAL,) * len(names),
    )


# --------------------------------------------------------------------------
# standardization
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray
    mask: np.ndarray  # columns actually transformed

    def apply(self, values: np.ndarray) -> np.ndarray:
        out = np.array(values, dtype=float, copy=True)
        out[:, self.mask] = (out[:, self.mask] - self.mean[self.mask]) / self.scale[self.mask]
        return out

    def invert(self, values: np.ndarray) -> np.ndarray:
        out = np.array(values, dtype=float, copy=True)
        out[:, self.mask] = out[:, self.mask] * self.scale[self.mask] + self.mean[self.mask]
        return out

    def to_json(self) -> dict:
        return {
            "mean": [repr(float(x)) for x in self.mean],
            "scale": [repr(float(x)) for x in self.scale],
            "mask": [bool(x) for x in self.mask],
        }


def fit_standardizer(X: FeatureMatrix, train_rows) -> Standardizer:
    """Per-column mean and population std over ``train_rows``.

    NB-weighted columns and zero-variance columns are left untouched.
    """
    rows = np.asarray(train_rows, dtype=np.intp)
    sub = X.values[rows]
    mean = sub.mean(axis=0)
    std = sub.std(axis=0)
    mask = X.standardizable.copy()
    const = mask & (std == 0)
    if const.any():
        logger.warning("%d constant column(s) left unscaled", int(const.sum()))
        mask &= ~const
    scale = np.where(std > 0, std, 1.0)
    return Standardizer(mean, scale, mask)


def apply_standardizer(s: Standardizer, X: FeatureMatrix) -> FeatureMatrix:
    return FeatureMatrix(X.ids, s.apply(X.values), X.columns, X.kinds)


# --------------------------------------------------------------------------
# feature sets (variants)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Block:
    """A label-free raw matrix plus how it is fitted per training split."""

    matrix: FeatureMatrix
    nb: bool = False


@dataclass
class FittedFeatures:
    blocks: list[Block]
    transforms: list[NbWeights | Standardizer]

    def transform(self, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.intp)
        parts = []
        for block, t in zip(self.blocks, self.transforms):
            raw = block.matrix.values[rows]
            parts.append(apply_nb_weights(raw, t) if isinstance(t, NbWeights) else t.apply(raw))
        return np.ascontiguousarray(np.hstack(parts))

    @property
    def columns(self) -> list[str]:
        return [c for b in self.blocks for c in b.matrix.columns]

    def artifacts(self) -> list[dict]:
        return [t.to_json() for t in self.transforms]


@dataclass(frozen=True)
class FeatureSet:
    name: str
    blocks: tuple[Block, ...]

    @property
    def n_rows(self) -> int:
        return len(self.blocks[0].matrix.ids)

    def fit(self, train_rows, y) -> FittedFeatures:
        """Fit NB weights / standardizers on ``train_rows``; reads only ``y[train_rows]``."""
        transforms: list[NbWeights | Standardizer] = []
        for b in self.blocks:
            if b.nb:
                transforms.append(fit_nb_weights(b.matrix, y, train_rows))
            else:
                transforms.append(fit_standardizer(b.matrix, train_rows))
        return FittedFeatures(list(self.blocks), transforms)


VARIANTS: dict[str, tuple[str, ...]] = {
    "bow-basic": ("bow-basic",),
    "bow-parsed": ("bow-parsed",),
    "nb-bow": ("nb-bow",),
    "embedding": ("embedding",),
    "nu": ("nu",),
    "nu+nb-bow": ("nu", "nb-bow"),
    "nu+embedding": ("nu", "embedding"),
}


@dataclass
class FeatureFactory:
    """Builds and caches the label-free blocks for one corpus."""

    recipes: Sequence[Recipe]
    stoplist: frozenset[str] | None = None
    embeddings: EmbeddingTable | None = None
    min_count: int = 5
    _cache: dict = field(default_factory=dict, repr=False)

    def tokenized(self, parsed: bool) -> list[TokenizedRecipe]:
        key = ("tok", parsed)
        if key not in self._cache:
            self._cache[key] = [tokenize(r, parsed=parsed, stoplist=self.stoplist) for r in self.recipes]
        return self._cache[key]

    def vocabulary(self, parsed: bool = False) -> Vocabulary:
        key = ("vocab", parsed)
        if key not in self._cache:
            self._cache[key] = build_vocabulary(self.tokenized(parsed), self.min_count)
        return self._cache[key]

    def block(self, name: str) -> Block:
        if name in self._cache:
            return self._cache[name]
        if name == "bow-basic":
            b = Block(bow_matrix(self.tokenized(False), self.vocabulary(False), "bow"))
        elif name == "bow-parsed":
            b = Block(bow_matrix(self.tokenized(True), self.vocabulary(True), "pbow"))
        elif name == "nb-bow":
            b = Block(bow_matrix(self.tokenized(False), self.vocabulary(False), "nbbow", NB_WEIGHTED), nb=True)
        elif name == "embedding":
            if self.embeddings is None:
                raise FeatureError("the embedding variant needs an embeddings file")
            b = Block(embedding_matrix(self.tokenized(False), self.embeddings))
        elif name == "nu":
            b = Block(nutritional_matrix(self.recipes))
        else:
            raise FeatureError(f"unknown feature block {name!r}")
        self._cache[name] = b
        return b

    def feature_set(self, variant: str) -> FeatureSet:
        if variant not in VARIANTS:
            raise FeatureError(f"unknown variant {variant!r}; valid: {', '.join(VARIANTS)}")
        return FeatureSet(variant, tuple(self.block(n) for n in VARIANTS[variant]))
