"""Synthetic observation campaigns with planted structure.

Atmospheric variables (P, T, H) follow a per-night level plus small jitter,
reproducing the within-night correlation of real campaigns. Star geometry
and CCD quality variables are drawn per observation.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from deflect_stats.errors import ValidationError
from deflect_stats.ingest import ACTIVE_COLUMNS, Dataset, Observation
from deflect_stats.standardize import standardize

_GREEK = "αβγδεζηθικλμ"
_CONSTELLATIONS = (
    "Cas", "Ori", "Cep", "Hya", "UMi", "UMa", "Lib", "Vir", "Boo", "Leo",
    "Cyg", "Lyr", "Aql", "Aur", "Gem", "Tau", "Per", "Dra", "Her", "Peg",
)
_MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")

# night-level spread and within-night jitter per unit of scale, for P (hPa), T (C), H (%)
_ATMOS_MEAN = np.array([1003.0, 12.0, 55.0])
_ATMOS_SPREAD = np.array([5.0, 7.0, 15.0])
_ATMOS_JITTER = np.array([1.0, 1.0, 2.0])


@dataclass(frozen=True)
class CampaignSpec:
    nights: int = 12
    obs_per_night: tuple = (40, 45)
    night_effect_scale: float = 1.0
    noise_scale: float = 0.1
    planted_coefficients: Optional[Sequence[float]] = None
    seed: int = 0
    stars: int = 40

    def __post_init__(self):
        lo, hi = self.obs_per_night
        if self.nights < 2:
            raise ValidationError(f"need at least 2 nights, got {self.nights}")
        if not 1 <= lo <= hi:
            raise ValidationError(f"invalid obs_per_night range {self.obs_per_night}")
        if self.noise_scale < 0 or self.night_effect_scale < 0:
            raise ValidationError("scales must be non-negative")
        if self.stars < 1:
            raise ValidationError("need at least one star")
        if self.planted_coefficients is not None and len(self.planted_coefficients) != len(ACTIVE_COLUMNS):
            raise ValidationError(
                f"planted_coefficients needs {len(ACTIVE_COLUMNS)} values, "
                f"got {len(self.planted_coefficients)}"
            )


def star_names(count: int) -> list:
    names = []
    for i in range(count):
        letter = _GREEK[i // len(_CONSTELLATIONS) % len(_GREEK)]
        names.append(letter + _CONSTELLATIONS[i % len(_CONSTELLATIONS)])
    if count > len(_GREEK) * len(_CONSTELLATIONS):
        names = [f"{n}{i}" for i, n in enumerate(names)]
    return names


def night_labels(count: int, rng) -> list:
    day = dt.date(2015, 3, 24)
    labels = []
    for _ in range(count):
        label = f"{day.day:02d}-{_MONTHS[day.month - 1]}"
        if day.year != 2015:
            label += f"-{day.year}"
        labels.append(label)
        day += dt.timedelta(days=int(rng.integers(1, 15)))
    return labels


def generate(spec: CampaignSpec = CampaignSpec()) -> Dataset:
    """Draw a campaign; identical ``spec`` gives a bitwise-identical dataset."""
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.obs_per_night
    nights = night_labels(spec.nights, rng)
    counts = rng.integers(lo, hi + 1, size=spec.nights)
    stars = star_names(spec.stars)

    night_level = _ATMOS_MEAN + spec.night_effect_scale * _ATMOS_SPREAD * rng.standard_normal(
        (spec.nights, 3)
    )
    night_idx = np.repeat(np.arange(spec.nights), counts)
    n = int(counts.sum())
    atmos = night_level[night_idx] + spec.noise_scale * _ATMOS_JITTER * rng.standard_normal((n, 3))
    atmos[:, 2] = np.clip(atmos[:, 2], 20.0, 95.0)

    rms1 = rng.uniform(0.1, 0.3, n)
    img = rng.integers(100, 601, n)
    rms2 = rng.uniform(0.1, 0.3, n)
    azimuth = rng.uniform(0.0, 360.0, n)
    zenith = rng.uniform(30.0, 70.0, n)
    velocity = rng.uniform(2.0, 16.0, n)
    star_idx = rng.integers(0, spec.stars, n)

    matrix = np.column_stack(
        [atmos[:, 0], atmos[:, 1], atmos[:, 2], rms1, img, rms2, azimuth, zenith, velocity]
    )
    xi_noise = spec.noise_scale * rng.standard_normal(n)
    eta = spec.noise_scale * rng.standard_normal(n)
    if spec.planted_coefficients is not None:
        z = standardize(matrix).values
        xi = z @ np.asarray(spec.planted_coefficients, dtype=float) + xi_noise
    else:
        xi = xi_noise

    observations = [
        Observation(
            star=stars[star_idx[i]],
            night=nights[night_idx[i]],
            pressure=float(matrix[i, 0]),
            temperature=float(matrix[i, 1]),
            humidity=float(matrix[i, 2]),
            rms1=float(rms1[i]),
            img_count=int(img[i]),
            rms2=float(rms2[i]),
            azimuth=float(azimuth[i]),
            zenith_distance=float(zenith[i]),
            velocity=float(velocity[i]),
            xi=float(xi[i]),
            eta=float(eta[i]),
        )
        for i in range(n)
    ]
    return Dataset(tuple(observations))


def intraclass_correlation(values, groups) -> float:
    """Share of the total variance of ``values`` explained by group means."""
    values = np.asarray(values, dtype=float)
    labels = np.asarray(groups)
    total = np.sum((values - values.mean()) ** 2)
    within = sum(
        np.sum((values[labels == g] - values[labels == g].mean()) ** 2) for g in np.unique(labels)
    )
    return float(1.0 - within / total)
