"""Seeded generators for synthetic corpora, crowd judgments and embedding files.

The planted label is a steep logistic function of normalized carbohydrates
minus normalized protein, and class-dependent words are mixed into the text,
so both the nutritional and the text features carry signal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from glyset.corpus import LOW_GLYCEMIC_TAG, Recipe
from glyset.crowd import CLASSES, Judgment, JudgmentSet
from glyset.features import NUTRIENT_COLUMNS, Block, FeatureMatrix, FeatureSet, NUTRITIONAL

UD_WORDS = ("linguine", "pasta", "cake", "chocolate", "cookies", "rice", "bread", "potato", "syrup", "noodles")
HD_WORDS = ("steak", "swordfish", "rub", "chicken", "salmon", "spinach", "eggs", "tofu", "broccoli", "zucchini")
NEUTRAL_WORDS = (
    "salt", "pepper", "garlic", "onion", "oil", "water", "butter", "lemon", "cheese", "herbs",
    "stir", "bake", "heat", "mix", "serve", "minutes", "bowl", "pan", "oven", "chop",
    "add", "until", "golden", "fresh", "sauce", "slowly", "gently", "combine", "cover", "simmer",
)
UNITS = ("cup", "cups", "tablespoon", "teaspoon", "ounce", "pound", "pinch", "clove", "can", "package")
AMOUNTS = ("1", "2", "3", "1/2", "1 1/2", "½", "0.5", "4")


@dataclass(frozen=True)
class SyntheticCorpus:
    recipes: list[Recipe]
    labels: np.ndarray  # True = UD
    ratings: dict[str, int]


def planted_probability(carbs_norm, protein_norm, steepness: float = 60.0, offset: float = 0.0):
    z = steepness * (np.asarray(carbs_norm) - np.asarray(protein_norm) - offset)
    return 1.0 / (1.0 + np.exp(-z))


def make_corpus(n: int, seed: int, steepness: float = 60.0, token_signal: float = 0.6) -> SyntheticCorpus:
    """``n`` recipes carrying all 19 nutrients, a planted UD label and a 1..5 rating."""
    rng = np.random.default_rng([seed, 7919])
    recipes: list[Recipe] = []
    labels = np.zeros(n, dtype=bool)
    ratings: dict[str, int] = {}
    width = len(str(n))
    for i in range(n):
        rid = f"r{i:0{width}d}"
        carb, protein, fat = rng.dirichlet([2.0, 2.0, 2.0])
        dry = float(rng.lognormal(np.log(150.0), 0.5))
        macro = 0.9 * dry
        carbs_g, protein_g, fat_g = carb * macro, protein * macro, fat * macro
        sugar_share = rng.uniform(0.05, 0.6)
        fiber_share = rng.uniform(0.0, 0.25)
        micro = rng.dirichlet(np.ones(12)) * 0.1 * dry
        nutrients = {
            "calories": 4 * carbs_g + 4 * protein_g + 9 * fat_g,
            "fat": fat_g * 0.6,
            "saturated_fat": fat_g * 0.4,
            # total carbohydrate; sugars and fiber are parts of it, as on nutrition labels
            "carbohydrates": carbs_g,
            "sugars": carbs_g * sugar_share,
            "fiber": carbs_g * fiber_share,
            "protein": protein_g,
        }
        for name, amount in zip(
            [c for c in NUTRIENT_COLUMNS if c not in nutrients], micro
        ):
            nutrients[name] = float(amount)
        nutrients = {k: round(float(v), 6) for k, v in nutrients.items()}
        total = sum(v for k, v in nutrients.items() if k != "calories")
        carbs_norm = nutrients["carbohydrates"] / total
        protein_norm = nutrients["protein"] / total
        p = float(planted_probability(carbs_norm, protein_norm, steepness))
        ud = bool(rng.random() < p)
        labels[i] = ud
        ratings[rid] = int(rng.integers(1, 4)) if ud else int(rng.integers(4, 6))

        def word():
            u = rng.random()
            if u < token_signal / 2:
                pool = UD_WORDS if ud else HD_WORDS
            elif u < token_signal / 2 + 0.1:
                pool = HD_WORDS if ud else UD_WORDS
            else:
                pool = NEUTRAL_WORDS
            return str(pool[rng.integers(len(pool))])

        title = " ".join(word() for _ in range(3)).title()
        ingredients = [
            f"{AMOUNTS[rng.integers(len(AMOUNTS))]} {UNITS[rng.integers(len(UNITS))]} {word()}"
            + (" (chopped)" if rng.random() < 0.2 else "")
            for _ in range(int(rng.integers(3, 8)))
        ]
        directions = [
            " ".join(word() for _ in range(int(rng.integers(4, 9)))).capitalize() + "."
            for _ in range(int(rng.integers(2, 5)))
        ]
        tags = [LOW_GLYCEMIC_TAG] if (not ud and rng.random() < 0.4) or (ud and rng.random() < 0.05) else []
        recipes.append(Recipe(rid, title, tuple(ingredients), tuple(directions), nutrients, frozenset(tags)))
    return SyntheticCorpus(recipes, labels, ratings)


def write_jsonl(recipes: Sequence[Recipe], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in recipes:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")


def diagonal_confusion(accuracy: float, k: int = len(CLASSES)) -> np.ndarray:
    off = (1.0 - accuracy) / (k - 1)
    m = np.full((k, k), off)
    np.fill_diagonal(m, accuracy)
    return m


def simulate_judgments(
    truth: dict[str, int | str],
    confusions: Sequence[np.ndarray],
    seed: int,
    per_item: int | None = None,
) -> JudgmentSet:
    """Each item is judged by ``per_item`` distinct workers (all of them by default)."""
    rng = np.random.default_rng([seed, 104729])
    index = {c: i for i, c in enumerate(CLASSES)}
    n_workers = len(confusions)
    per_item = n_workers if per_item is None else per_item
    out = []
    for rid in sorted(truth):
        workers = rng.choice(n_workers, size=per_item, replace=False) if per_item < n_workers else range(n_workers)
        row = index[truth[rid]]
        for w in sorted(int(x) for x in workers):
            obs = int(rng.choice(len(CLASSES), p=confusions[w][row]))
            out.append(Judgment(f"w{w}", rid, CLASSES[obs]))
    return JudgmentSet(out)


def write_judgments(js: JudgmentSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("worker_id,recipe_id,rating\n")
        for j in js.judgments:
            fh.write(f"{j.worker_id},{j.recipe_id},{j.rating}\n")


def write_embeddings(tokens: Sequence[str], path: str | Path, dim: int, seed: int, header: bool = True) -> None:
    rng = np.random.default_rng([seed, 1299709])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(f"{len(tokens)} {dim}\n")
        for tok in tokens:
            vec = rng.normal(size=dim)
            fh.write(tok + " " + " ".join(f"{x:.6f}" for x in vec) + "\n")


def noise_feature_set(ids: Sequence[str], n_cols: int, seed: int, name: str = "noise") -> FeatureSet:
    """Gaussian columns independent of everything else; a no-signal control variant."""
    rng = np.random.default_rng([seed, 15485863])
    m = FeatureMatrix(
        tuple(ids),
        rng.normal(size=(len(ids), n_cols)),
        tuple(f"noise:{i}" for i in range(n_cols)),
        (NUTRITIONAL,) * n_cols,
    )
    return FeatureSet(name, (Block(m),))
