"""Synthetic election generator with known ground truth.

Stations are built in groups that share a column-stochastic transition
matrix: each reference party's voters (and previous nonvoters) are
distributed over the current parties including nonvoters. The generator
quantizes matrix entries to multiples of 1/64 and snaps electorates and
reference votes to multiples of 64, so that in the noiseless case every
current vote vector is *exactly* the matrix product of the reference
votes. That exactness is what makes the generator usable as a
recovery oracle for the regression machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Constituency, Dataset, PartySet, ValidationError
from .regression import TransitionMatrix

# Mixing denominator: dyadic so entry sums are exact in binary floats.
MIX_DENOMINATOR = 64


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for one synthetic election."""

    n_groups: int
    stations_per_group: int
    ref_party_count: int
    cur_party_count: int
    electorate_range: tuple[int, int] = (500, 2000)
    noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("n_groups", "stations_per_group", "ref_party_count", "cur_party_count"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        lo, hi = self.electorate_range
        if lo < 1 or lo > hi:
            raise ValidationError("electorate_range must satisfy 1 <= min <= max")
        if self.noise_sd < 0:
            raise ValidationError("noise_sd must be nonnegative")
        if self.n_groups * self.stations_per_group < 2:
            raise ValidationError("need at least 2 stations in total")


def _apportion(weights: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder rounding of `weights` scaled to sum to `total`."""
    w = np.asarray(weights, dtype=float)
    if w.sum() <= 0:
        out = np.zeros(len(w), dtype=int)
        out[-1] = total
        return out
    target = w / w.sum() * total
    base = np.floor(target).astype(int)
    leftover = total - int(base.sum())
    if leftover > 0:
        # Stable order: by descending fractional part, index as tie-break.
        order = np.lexsort((np.arange(len(w)), -(target - base)))
        base[order[:leftover]] += 1
    return base


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _draw_transition(rng: np.random.Generator, n_cur: int, n_ref: int) -> np.ndarray:
    """Column-stochastic matrix with positive entries in multiples of 1/64."""
    cols = np.empty((n_ref, n_cur))
    for j in range(n_ref):
        spread = _apportion(rng.random(n_cur), MIX_DENOMINATOR - n_cur)
        cols[j] = (1 + spread) / MIX_DENOMINATOR
    return cols.T


def generate_synthetic(spec: SynthSpec):
    """Build a dataset plus its generating grouping and matrices.

    Returns ``(dataset, true_labels, true_matrices)``. With
    ``noise_sd == 0`` every station's current votes equal the exact
    matrix product of its reference votes; with noise, votes are rounded
    half away from zero, clipped to the electorate and apportioned back
    to an exact electorate total. Deterministic for a given seed.
    """
    if MIX_DENOMINATOR < max(spec.cur_party_count, spec.ref_party_count) + 1:
        raise ValidationError("party count too large for the mixing grid")
    rng = np.random.default_rng(spec.seed)
    parties = PartySet.from_counted(
        [f"P{i + 1}" for i in range(spec.ref_party_count)],
        [f"C{i + 1}" for i in range(spec.cur_party_count)],
    )
    n_ref, n_cur = parties.n_ref, parties.n_cur

    matrices = [
        TransitionMatrix(entries=_draw_transition(rng, n_cur, n_ref), group_id=str(g))
        for g in range(spec.n_groups)
    ]

    lo, hi = spec.electorate_range
    stations: list[Constituency] = []
    labels: list[int] = []
    k = 0
    for g in range(spec.n_groups):
        x = matrices[g].entries
        for _ in range(spec.stations_per_group):
            electorate = max(MIX_DENOMINATOR, int(rng.integers(lo, hi + 1)))
            electorate -= electorate % MIX_DENOMINATOR
            blocks = _apportion(rng.random(n_ref), electorate // MIX_DENOMINATOR)
            ref_votes = blocks * MIX_DENOMINATOR

            exact = x @ ref_votes.astype(float)
            if spec.noise_sd > 0:
                noisy = _round_half_away(exact + rng.normal(0.0, spec.noise_sd, n_cur))
                noisy = np.clip(noisy, 0, electorate)
                cur_votes = _apportion(noisy, electorate)
            else:
                cur_votes = np.rint(exact).astype(int)

            stations.append(
                Constituency(
                    id=f"st{k:04d}",
                    name=f"Station {k:04d}",
                    electorate_ref=electorate,
                    electorate_cur=electorate,
                    ref_votes=tuple(int(v) for v in ref_votes),
                    cur_votes=tuple(int(v) for v in cur_votes),
                )
            )
            labels.append(g)
            k += 1

    dataset = Dataset(
        parties=parties,
        constituencies=tuple(stations),
        metadata={"name": "synthetic", "seed": str(spec.seed)},
    )
    return dataset, tuple(labels), matrices
