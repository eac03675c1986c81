"""Vote-transition estimation and forecast assembly.

Within a group of constituencies, the current-election result of each
party is modeled as a linear combination (no intercept) of all reference
election parties' results at the same station, nonvoters included as an
ordinary party on both sides. Fitting that model over the group's
declared stations yields a transition matrix; applying it to the
reference votes of undeclared stations yields their projection.

Coefficients are deliberately unbounded; physical plausibility is
restored at projection time by clipping to [0, electorate] and rescaling
to the station's electorate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .model import Dataset, DeclarationState


class NoDeclaredStationsError(Exception):
    """No declared station is available to fit a transition matrix."""


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Linear map from reference vote vectors to current vote vectors.

    ``entries`` has one row per current party and one column per
    reference party, nonvoters included on both axes.
    """

    entries: np.ndarray
    group_id: str = ""
    n_stations_used: int = 0

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.entries)):
            raise ValueError(f"group {self.group_id!r}: non-finite matrix entries")
        self.entries.flags.writeable = False


def estimate_transition(
    dataset: Dataset,
    declarations: DeclarationState,
    member_ids: Iterable[str],
    group_id: str = "",
) -> TransitionMatrix:
    """Least-squares fit of the transition matrix over declared members.

    Solves, for every current party, current votes as a no-intercept
    linear combination of all reference parties' votes across the
    declared member stations. Rank-deficient designs get the
    minimum-norm solution.

    Raises NoDeclaredStationsError when no member has declared, so the
    caller can fall back to the pooled global matrix.
    """
    declared_members = sorted(set(member_ids) & declarations.declared)
    if not declared_members:
        raise NoDeclaredStationsError(f"group {group_id!r} has no declared stations")

    idx = dataset.station_index
    design = np.array(
        [dataset.constituencies[idx[sid]].ref_votes for sid in declared_members],
        dtype=float,
    )
    target = np.array([declarations.votes[sid] for sid in declared_members], dtype=float)
    solution, *_ = np.linalg.lstsq(design, target, rcond=None)
    return TransitionMatrix(
        entries=solution.T.copy(),
        group_id=group_id,
        n_stations_used=len(declared_members),
    )


def global_transition(dataset: Dataset, declarations: DeclarationState) -> TransitionMatrix:
    """Pooled fit over every declared station; the empty-group fallback."""
    return estimate_transition(
        dataset, declarations, (st.id for st in dataset.constituencies), group_id="global"
    )


def project_station(
    matrix: TransitionMatrix, ref_votes, electorate_cur: int | float
) -> np.ndarray:
    """Project one station's reference votes into the current election.

    The raw product is clipped to [0, electorate_cur] and uniformly
    rescaled so the components sum to the electorate. If clipping wipes
    out every component, the whole electorate is assigned to nonvoters.
    """
    ref = np.asarray(ref_votes, dtype=float)
    if ref.shape[0] != matrix.entries.shape[1]:
        raise ValueError(
            f"ref vector has {ref.shape[0]} entries, matrix expects "
            f"{matrix.entries.shape[1]}"
        )
    raw = matrix.entries @ ref
    clipped = np.clip(raw, 0.0, float(electorate_cur))
    total = clipped.sum()
    if electorate_cur <= 0:
        return np.zeros_like(clipped)
    if total <= 0.0:
        out = np.zeros_like(clipped)
        out[-1] = float(electorate_cur)
        return out
    scaled = clipped * (float(electorate_cur) / total)
    # rescaling can overshoot the electorate by an ulp; bounds are a contract
    return np.minimum(scaled, float(electorate_cur))


@dataclass(frozen=True, eq=False)
class ForecastResult:
    """Projected totals plus the per-station breakdown behind them."""

    parties: tuple[str, ...]
    party_totals: np.ndarray
    declared_totals: np.ndarray
    station_projections: Mapping[str, np.ndarray]
    declared_count: int

    def __post_init__(self) -> None:
        self.party_totals.flags.writeable = False
        self.declared_totals.flags.writeable = False

    @property
    def undeclared_count(self) -> int:
        return len(self.station_projections)

    def pct_elec(self) -> np.ndarray:
        return to_elec_shares(self.party_totals)

    def pct_vald(self) -> np.ndarray:
        return to_vald_shares(self.party_totals)

    def to_json_dict(self) -> dict:
        try:
            vald = [float(v) for v in self.pct_vald()]
        except ValueError:
            vald = None
        return {
            "cur_parties": list(self.parties),
            "party_totals": [float(v) for v in self.party_totals],
            "pct_elec": [float(v) for v in self.pct_elec()],
            "pct_vald": vald,
            "declared_count": self.declared_count,
            "undeclared_count": self.undeclared_count,
            "per_station": {
                sid: [float(v) for v in vec]
                for sid, vec in sorted(self.station_projections.items())
            },
        }


def assemble_forecast(
    dataset: Dataset, declarations: DeclarationState, grouping
) -> ForecastResult:
    """Combine declared results with per-group projections.

    Each group is fitted over its own declared stations; groups with
    none fall back to the pooled global matrix. Declared stations
    contribute their reported votes verbatim.
    """
    labels = list(grouping)
    if len(labels) != dataset.n_stations:
        raise ValueError(
            f"grouping has {len(labels)} labels for {dataset.n_stations} stations"
        )

    members: dict[int, list[str]] = {}
    for st, g in zip(dataset.constituencies, labels):
        members.setdefault(int(g), []).append(st.id)

    fallback: TransitionMatrix | None = None
    matrices: dict[int, TransitionMatrix] = {}
    for g, ids in members.items():
        try:
            matrices[g] = estimate_transition(dataset, declarations, ids, group_id=str(g))
        except NoDeclaredStationsError:
            if fallback is None:
                fallback = global_transition(dataset, declarations)
            matrices[g] = fallback

    n_cur = dataset.parties.n_cur
    declared_totals = np.zeros(n_cur)
    party_totals = np.zeros(n_cur)
    projections: dict[str, np.ndarray] = {}
    for st, g in zip(dataset.constituencies, labels):
        if st.id in declarations.declared:
            actual = np.asarray(declarations.votes[st.id], dtype=float)
            declared_totals += actual
            party_totals += actual
        else:
            proj = project_station(matrices[int(g)], st.ref_votes, st.electorate_cur)
            projections[st.id] = proj
            party_totals += proj

    return ForecastResult(
        parties=dataset.parties.cur_parties,
        party_totals=party_totals,
        declared_totals=declared_totals,
        station_projections=projections,
        declared_count=len(declarations.declared),
    )


def to_elec_shares(totals) -> np.ndarray:
    """Percent of the electorate per party, nonvoters included. Sums to 100."""
    t = np.asarray(totals, dtype=float)
    s = t.sum()
    if s <= 0:
        raise ValueError("cannot normalize an all-zero vote vector")
    return t / s * 100.0


def to_vald_shares(totals) -> np.ndarray:
    """Percent of valid votes per party, nonvoters excluded. Sums to 100."""
    t = np.asarray(totals, dtype=float)[:-1]
    s = t.sum()
    if s <= 0:
        raise ValueError("no valid votes to normalize over")
    return t / s * 100.0


_METRICS = ("abs", "elec", "vald")


def rmse(forecast_totals, true_totals, metric: str = "abs") -> float:
    """Root mean squared per-party deviation in the chosen metric.

    ``abs`` compares raw votes, ``elec`` electorate shares in points,
    ``vald`` valid-vote shares in points (nonvoters dropped).
    """
    if metric not in _METRICS:
        raise ValueError(f"unknown metric {metric!r}, expected one of {_METRICS}")
    a = np.asarray(forecast_totals, dtype=float)
    b = np.asarray(true_totals, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if metric == "elec":
        a, b = to_elec_shares(a), to_elec_shares(b)
    elif metric == "vald":
        a, b = to_vald_shares(a), to_vald_shares(b)
    return float(np.sqrt(np.mean((a - b) ** 2)))
