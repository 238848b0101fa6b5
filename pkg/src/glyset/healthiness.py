"""FSA front-of-pack traffic-light scoring."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

SALT_PER_SODIUM = 2.54
SCORED = ("fat", "saturated_fat", "sugars", "salt")


class HealthinessError(ValueError):
    pass


@dataclass(frozen=True)
class FsaThresholds:
    """Per-nutrient ``(green_max, amber_max)`` in g per 100 g."""

    bands: Mapping[str, tuple[float, float]]

    def __post_init__(self):
        for name in SCORED:
            if name not in self.bands:
                raise HealthinessError(f"thresholds missing nutrient {name}")
        for name, (green, amber) in self.bands.items():
            if not green < amber:
                raise HealthinessError(f"{name}: green_max {green} must be below amber_max {amber}")

    @classmethod
    def from_csv(cls, path: str | Path | None = None) -> "FsaThresholds":
        """Read ``nutrient,green_max,amber_max``; ``None`` loads the shipped food defaults."""
        if path is None:
            text = resources.files("glyset").joinpath("data/fsa_thresholds.csv").read_text("utf-8")
        else:
            text = Path(path).read_text("utf-8")
        bands = {}
        for row in csv.DictReader(io.StringIO(text)):
            bands[row["nutrient"].strip()] = (float(row["green_max"]), float(row["amber_max"]))
        return cls(bands)


DEFAULT_THRESHOLDS = FsaThresholds.from_csv()


@dataclass(frozen=True)
class FsaScore:
    fat_pts: int
    satfat_pts: int
    sugars_pts: int
    salt_pts: int

    @property
    def total(self) -> int:
        return self.fat_pts + self.satfat_pts + self.sugars_pts + self.salt_pts

    def as_row(self) -> list[int]:
        return [self.fat_pts, self.satfat_pts, self.sugars_pts, self.salt_pts, self.total]


def salt_from_sodium(sodium_g: float) -> float:
    if sodium_g < 0:
        raise HealthinessError("sodium must be nonnegative")
    return SALT_PER_SODIUM * sodium_g


def band_points(amount: float, green_max: float, amber_max: float) -> int:
    # boundaries fall in the healthier band
    if amount <= green_max:
        return 1
    if amount <= amber_max:
        return 2
    return 3


def fsa_score(per_100g: Mapping[str, float], thresholds: FsaThresholds = DEFAULT_THRESHOLDS) -> FsaScore:
    """Score fat, saturated fat, sugars and salt (from sodium) on green/amber/red = 1/2/3."""
    for name in ("fat", "saturated_fat", "sugars", "sodium"):
        if name not in per_100g:
            raise HealthinessError(f"missing nutrient {name}")
    amounts = {
        "fat": per_100g["fat"],
        "saturated_fat": per_100g["saturated_fat"],
        "sugars": per_100g["sugars"],
        "salt": salt_from_sodium(per_100g["sodium"]),
    }
    pts = [band_points(amounts[n], *thresholds.bands[n]) for n in SCORED]
    return FsaScore(*pts)


def write_scores(rows: Iterable[tuple[str, FsaScore]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["recipe_id", "fat_pts", "satfat_pts", "sugars_pts", "salt_pts", "total"])
        for rid, score in rows:
            w.writerow([rid, *score.as_row()])
