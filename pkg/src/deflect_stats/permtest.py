"""Label-permutation test on group median centres in PCA coordinates.

For each replicate the group labels are shuffled over the fixed point cloud
and every group's componentwise median is recomputed. A group's observed
median is judged against the interval spanned by the 2nd-smallest and
2nd-largest replicate medians.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from deflect_stats.errors import ValidationError
from deflect_stats.seeding import replicate_rng

DEFAULT_REPLICATES = 50
COVERAGE_LABEL = "96%"


@dataclass(frozen=True)
class GroupMedianResult:
    group: str
    dimension: int
    observed_median: float
    lower_bound: float
    upper_bound: float
    inside: bool


@dataclass(frozen=True)
class PermutationTestReport:
    results: tuple
    replicates: int
    seed: int
    dimensions_tested: tuple
    groups: tuple
    coverage_label: str = COVERAGE_LABEL

    def rejection_fraction(self) -> float:
        return sum(not r.inside for r in self.results) / len(self.results)


def is_inside(observed: float, lower: float, upper: float) -> bool:
    """Inclusive membership; a tie with a bound does not reject."""
    return lower <= observed <= upper


def group_indices(labels: Sequence) -> dict:
    """Map label -> row indices, in order of first appearance."""
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    return {g: np.array(idx, dtype=np.intp) for g, idx in groups.items()}


def _medians(coords, groups):
    return np.stack([np.median(coords[idx], axis=0) for idx in groups.values()])


def median_center(coords, labels) -> dict:
    """Componentwise median of each group's coordinates.

    Even-sized groups take the mean of the two central order statistics.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    labels = list(labels)
    if not labels:
        raise ValidationError("empty label set")
    if len(labels) != coords.shape[0]:
        raise ValidationError(f"{len(labels)} labels for {coords.shape[0]} points")
    groups = group_indices(labels)
    return {g: np.median(coords[idx], axis=0) for g, idx in groups.items()}


def permutation_test(
    coords,
    labels,
    B: int = DEFAULT_REPLICATES,
    dims: Sequence[int] = (2, 3),
    seed: int = 0,
    workers: int = 1,
) -> PermutationTestReport:
    """Run the median-centre permutation test.

    Parameters
    ----------
    coords : array_like, shape (I, K)
        Individual coordinates (e.g. ``PcaModel.individual_coords``).
    labels : sequence of length I
        Group label per point.
    B : int
        Number of label permutations, at least 3.
    dims : sequence of int
        1-based dimensions to test.
    seed : int
        Replicate ``b`` shuffles with a generator keyed by ``(seed, b)``.
    workers : int
        Thread count for the replicate loop; output does not depend on it.
    """
    coords = np.asarray(coords, dtype=float)
    labels = list(labels)
    if coords.ndim != 2 or coords.shape[0] != len(labels):
        raise ValidationError("coords must be I x K with one label per row")
    if B < 3:
        raise ValidationError(f"need at least 3 replicates, got {B}")
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise ValidationError("no dimensions to test")
    for d in dims:
        if not 1 <= d <= coords.shape[1]:
            raise ValidationError(f"dimension {d} outside 1..{coords.shape[1]}")
    groups = group_indices(labels)
    if len(groups) < 2:
        raise ValidationError(f"need at least 2 groups, got {len(groups)}")

    sub = coords[:, [d - 1 for d in dims]]
    n = sub.shape[0]
    observed = _medians(sub, groups)

    def replicate(b):
        perm = replicate_rng(seed, b).permutation(n)
        return _medians(sub[perm], groups)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reps = list(pool.map(replicate, range(B)))
    else:
        reps = [replicate(b) for b in range(B)]
    reps = np.sort(np.stack(reps), axis=0)
    lower = reps[1]
    upper = reps[B - 2]

    results = []
    for gi, g in enumerate(groups):
        for di, d in enumerate(dims):
            obs = float(observed[gi, di])
            lo = float(lower[gi, di])
            hi = float(upper[gi, di])
            results.append(GroupMedianResult(str(g), d, obs, lo, hi, is_inside(obs, lo, hi)))
    return PermutationTestReport(
        results=tuple(results),
        replicates=B,
        seed=int(seed),
        dimensions_tested=dims,
        groups=tuple(str(g) for g in groups),
    )
