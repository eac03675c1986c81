"""Solution-quality reports: deviation tables and group characteristics.

Deviations are summarized across parties, one distribution per grouping
strategy and share metric, mirroring how the forecast error of competing
groupings is usually compared. Group profiles are plot-ready data, not
rendered images.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .model import Dataset, DeclarationState, ValidationError
from .regression import assemble_forecast, to_elec_shares, to_vald_shares

METRICS = ("elec", "vald")


@dataclass(frozen=True)
class DeviationSummary:
    """Per-strategy, per-metric absolute deviation distributions.

    ``per_party[strategy][metric]`` maps party code to its absolute
    forecast deviation in percentage points; ``stats`` holds the
    median/mean/max/standard deviation over those parties.
    """

    per_party: dict
    stats: dict

    def to_csv(self) -> str:
        lines = ["strategy,metric,party,deviation_pp"]
        for strategy in self.per_party:
            for metric in METRICS:
                for party, dev in self.per_party[strategy][metric].items():
                    lines.append(f"{strategy},{metric},{party},{dev!r}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {"per_party": self.per_party, "stats": self.stats}


def _distribution(values: np.ndarray) -> dict:
    return {
        "median": float(np.median(values)),
        "mean": float(values.mean()),
        "max": float(values.max()),
        "st_dev": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
    }


def deviation_summary(
    dataset: Dataset,
    declarations: DeclarationState,
    groupings: Mapping[str, Sequence[int]],
) -> DeviationSummary:
    """Forecast-vs-truth deviations per party for each named grouping."""
    if not dataset.has_full_cur_votes:
        raise ValidationError("deviation summary needs full current votes")
    truth = dataset.true_totals()
    parties = dataset.parties.cur_parties

    per_party: dict = {}
    stats: dict = {}
    for name, grouping in groupings.items():
        forecast = assemble_forecast(dataset, declarations, grouping)
        rows: dict = {}
        strategy_stats: dict = {}
        for metric in METRICS:
            if metric == "elec":
                dev = np.abs(to_elec_shares(forecast.party_totals) - to_elec_shares(truth))
                names = parties
            else:
                dev = np.abs(to_vald_shares(forecast.party_totals) - to_vald_shares(truth))
                names = parties[:-1]
            rows[metric] = {p: float(d) for p, d in zip(names, dev)}
            strategy_stats[metric] = _distribution(dev)
        per_party[name] = rows
        stats[name] = strategy_stats
    return DeviationSummary(per_party=per_party, stats=stats)


@dataclass(frozen=True)
class GroupProfile:
    """Per-group party performance against the overall mean."""

    parties: tuple[str, ...]
    member_counts: dict
    group_means: dict
    global_means: dict

    def to_csv(self) -> str:
        lines = ["group,party,mean_pct_vald,global_mean"]
        for group in sorted(self.group_means):
            for party in self.parties:
                lines.append(
                    f"{group},{party},{self.group_means[group][party]!r},"
                    f"{self.global_means[party]!r}"
                )
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "parties": list(self.parties),
            "member_counts": self.member_counts,
            "group_means": self.group_means,
            "global_means": self.global_means,
        }


def group_profile(
    dataset: Dataset, grouping: Sequence[int], election: str = "cur"
) -> GroupProfile:
    """Electorate-weighted mean valid-vote shares per group and party.

    Electorate weighting makes the global means the exact weighted
    combination of the group means. ``election="ref"`` profiles the
    reference election instead, for sessions where current votes are
    not (yet) known.
    """
    labels = [int(g) for g in grouping]
    if len(labels) != dataset.n_stations:
        raise ValidationError(
            f"grouping has {len(labels)} labels for {dataset.n_stations} stations"
        )
    if election == "cur":
        if not dataset.has_full_cur_votes:
            raise ValidationError("current-election profile needs full current votes")
        votes = np.array([st.cur_votes for st in dataset.constituencies], dtype=float)
        weights = np.array([st.electorate_cur for st in dataset.constituencies], dtype=float)
        parties = dataset.parties.cur_parties[:-1]
    elif election == "ref":
        votes = np.asarray(dataset.ref_matrix)
        weights = np.array([st.electorate_ref for st in dataset.constituencies], dtype=float)
        parties = dataset.parties.ref_parties[:-1]
    else:
        raise ValidationError(f"unknown election {election!r}")

    valid = votes[:, :-1].sum(axis=1)
    shares = np.zeros((dataset.n_stations, len(parties)))
    nonzero = valid > 0
    shares[nonzero] = votes[nonzero, :-1] / valid[nonzero, None] * 100.0

    w_total = weights.sum()
    global_means = {
        p: float(np.average(shares[:, j], weights=weights)) if w_total > 0 else 0.0
        for j, p in enumerate(parties)
    }

    arr = np.asarray(labels)
    member_counts: dict = {}
    group_means: dict = {}
    for g in sorted(set(labels)):
        mask = arr == g
        member_counts[str(g)] = int(mask.sum())
        w = weights[mask]
        if w.sum() > 0:
            group_means[str(g)] = {
                p: float(np.average(shares[mask, j], weights=w))
                for j, p in enumerate(parties)
            }
        else:
            group_means[str(g)] = {p: 0.0 for p in parties}
    return GroupProfile(
        parties=parties,
        member_counts=member_counts,
        group_means=group_means,
        global_means=global_means,
    )
