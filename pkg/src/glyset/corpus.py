"""Recipe corpus loading, derived nutrition and annotation-candidate selection."""

from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from glyset.stats import midranks

logger = logging.getLogger(__name__)

REQUIRED_NUTRIENTS = (
    "fat",
    "saturated_fat",
    "carbohydrates",
    "sugars",
    "fiber",
    "protein",
    "sodium",
)
# energy is not a mass and never enters the dry weight
ENERGY_KEYS = frozenset({"calories", "energy"})
LOW_GLYCEMIC_TAG = "low-glycemic-impact"
SF_CUTOFFS = (1.0, 13.0)


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Recipe:
    id: str
    title: str
    ingredients: tuple[str, ...]
    directions: tuple[str, ...]
    nutrients: Mapping[str, float]
    category_tags: frozenset[str] = frozenset()

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "ingredients": list(self.ingredients),
            "directions": list(self.directions),
            "nutrients": dict(self.nutrients),
            "category_tags": sorted(self.category_tags),
        }


@dataclass(frozen=True)
class Rejection:
    line: int
    reason: str


@dataclass(frozen=True)
class DerivedNutrition:
    dry_weight: float
    normalized: Mapping[str, float]
    per_100g: Mapping[str, float]
    sf_ratio: float


class SfPartition(str, Enum):
    LOW = "LOW"
    MID = "MID"
    HIGH = "HIGH"


def validate_recipe(obj: object) -> Recipe:
    """Build a Recipe from a decoded JSON object, raising CorpusError with a reason."""
    if not isinstance(obj, dict):
        raise CorpusError("not a JSON object")
    for key in ("id", "title", "ingredients", "directions", "nutrients"):
        if key not in obj:
            raise CorpusError(f"missing field {key}")
    ingredients = obj["ingredients"]
    directions = obj["directions"]
    if not isinstance(ingredients, list) or not all(isinstance(s, str) for s in ingredients):
        raise CorpusError("ingredients must be a list of strings")
    if not isinstance(directions, list) or not all(isinstance(s, str) for s in directions):
        raise CorpusError("directions must be a list of strings")
    if len(ingredients) < 2:
        raise CorpusError("fewer than two ingredients")
    if len(directions) < 2:
        raise CorpusError("fewer than two direction sentences")
    raw = obj["nutrients"]
    if not isinstance(raw, dict):
        raise CorpusError("nutrients must be an object")
    nutrients: dict[str, float] = {}
    for name, value in raw.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise CorpusError(f"non-numeric nutrient {name}")
        value = float(value)
        if not math.isfinite(value):
            raise CorpusError(f"non-finite nutrient {name}")
        if value < 0:
            raise CorpusError("negative nutrient")
        nutrients[str(name)] = value
    missing = [n for n in REQUIRED_NUTRIENTS if n not in nutrients]
    if missing:
        raise CorpusError(f"missing required nutrient {missing[0]}")
    tags = obj.get("category_tags", [])
    if not isinstance(tags, list):
        raise CorpusError("category_tags must be a list")
    return Recipe(
        id=str(obj["id"]),
        title=str(obj["title"]),
        ingredients=tuple(ingredients),
        directions=tuple(directions),
        nutrients=nutrients,
        category_tags=frozenset(str(t) for t in tags),
    )


def load_corpus(path: str | Path) -> tuple[list[Recipe], list[Rejection]]:
    """Read a JSON Lines corpus.

    Malformed or invalid lines become :class:`Rejection` records (1-based line
    numbers); blank lines are skipped. An unreadable file raises ``OSError``.
    """
    recipes: list[Recipe] = []
    rejections: list[Rejection] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                rejections.append(Rejection(lineno, f"invalid JSON: {exc.msg}"))
                continue
            try:
                recipe = validate_recipe(obj)
            except CorpusError as exc:
                rejections.append(Rejection(lineno, str(exc)))
                continue
            if recipe.id in seen:
                rejections.append(Rejection(lineno, "duplicate id"))
                continue
            seen.add(recipe.id)
            recipes.append(recipe)
    return recipes, rejections


def write_corpus(recipes: Iterable[Recipe], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in recipes:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")


def write_rejections(rejections: Iterable[Rejection], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["line", "reason"])
        for rej in rejections:
            w.writerow([rej.line, rej.reason])


def derive_nutrition(r: Recipe) -> DerivedNutrition:
    dry_weight = math.fsum(v for k, v in r.nutrients.items() if k not in ENERGY_KEYS)
    if dry_weight <= 0:
        raise CorpusError("zero dry weight")
    normalized = {k: v / dry_weight for k, v in r.nutrients.items()}
    per_100g = {k: 100.0 * v for k, v in normalized.items()}
    return DerivedNutrition(
        dry_weight=dry_weight,
        normalized=normalized,
        per_100g=per_100g,
        sf_ratio=sf_ratio(r.nutrients["sugars"], r.nutrients["fiber"]),
    )


def sf_ratio(sugars: float, fiber: float) -> float:
    if fiber > 0:
        return sugars / fiber
    return math.inf if sugars > 0 else 0.0


def partition_by_sf(d: DerivedNutrition | float) -> SfPartition:
    ratio = d.sf_ratio if isinstance(d, DerivedNutrition) else float(d)
    if math.isnan(ratio) or ratio < 0:
        raise CorpusError(f"invalid S/F ratio {ratio}")
    low, high = SF_CUTOFFS
    if ratio < low:
        return SfPartition.LOW
    if ratio < high:
        return SfPartition.MID
    return SfPartition.HIGH


def rank_sums(ids: Sequence[str], probs_a: Mapping[str, float], probs_b: Mapping[str, float]) -> dict[str, float]:
    """Sum of ascending midranks of each id under the two probability sources."""
    ra = midranks([probs_a[i] for i in ids])
    rb = midranks([probs_b[i] for i in ids])
    return {i: float(a + b) for i, a, b in zip(ids, ra, rb)}


def select_annotation_candidates(
    recipes: Sequence[Recipe],
    probs_a: Mapping[str, float],
    probs_b: Mapping[str, float],
    n_total: int,
) -> list[str]:
    """Pick the hardest-to-classify recipes, balanced over the S/F partitions.

    ``probs_a``/``probs_b`` hold each noisy-source model's probability of the
    recipe's own noisy label, so low values mean the model got it wrong. Each
    partition gets ``ceil(n_total/3)`` slots (the last one the remainder);
    within a partition the lowest rank-sums win, ties going to the smaller id.
    Partitions short of their quota give their slack to the others. Returns
    ids grouped by partition (LOW, MID, HIGH) in selection order.
    """
    if n_total < 0 or n_total > len(recipes):
        raise CorpusError(f"n_total={n_total} outside [0, {len(recipes)}]")
    ids = sorted(r.id for r in recipes)
    by_id = {r.id: r for r in recipes}
    sums = rank_sums(ids, probs_a, probs_b)
    members: dict[SfPartition, list[str]] = {p: [] for p in SfPartition}
    for i in ids:
        members[partition_by_sf(derive_nutrition(by_id[i]))].append(i)
    for p in members:
        members[p].sort(key=lambda i: (sums[i], i))

    parts = list(SfPartition)
    per = math.ceil(n_total / len(parts))
    quotas = {}
    left = n_total
    for p in parts[:-1]:
        quotas[p] = min(per, left)
        left -= quotas[p]
    quotas[parts[-1]] = left

    chosen = {p: members[p][: quotas[p]] for p in parts}
    deficit = sum(quotas[p] - len(chosen[p]) for p in parts)
    if deficit:
        short = [p.value for p in parts if len(chosen[p]) < quotas[p]]
        warnings.warn(
            f"partition(s) {', '.join(short)} below quota; redistributing {deficit} slot(s)",
            stacklevel=2,
        )
        spare = sorted(
            ((sums[i], i, p) for p in parts for i in members[p][len(chosen[p]) :]),
        )
        for _, i, p in spare[:deficit]:
            chosen[p].append(i)
    return [i for p in parts for i in chosen[p]]
