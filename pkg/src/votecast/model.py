"""Core data model for election-night forecasting.

Vote vectors are stored *including* the synthetic nonvoter party ("NV"),
which is always the last entry of each party list. NV counts are never
read from external sources; they are derived as electorate minus the sum
of counted votes, so every full vote vector sums exactly to its
electorate.

All types are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

NONVOTER_CODE = "NV"


class DataError(Exception):
    """Base class for dataset problems."""


class ParseError(DataError):
    """Raised when an input file cannot be decoded into a dataset."""


class ValidationError(DataError):
    """Raised when decoded data violates a model invariant."""


def derive_nonvoters(votes: tuple[int, ...], electorate: int) -> tuple[int, ...]:
    """Append the nonvoter residual to a counted-votes vector.

    The result sums exactly to ``electorate``. Raises ValidationError if
    the counted votes already exceed the electorate.
    """
    if any(v < 0 for v in votes):
        raise ValidationError("vote counts must be nonnegative")
    total = sum(votes)
    if total > electorate:
        raise ValidationError(
            f"votes sum to {total}, exceeding electorate {electorate}"
        )
    return tuple(votes) + (electorate - total,)


@dataclass(frozen=True)
class PartySet:
    """Ordered party codes for both elections, nonvoters last."""

    ref_parties: tuple[str, ...]
    cur_parties: tuple[str, ...]

    def __post_init__(self) -> None:
        for label, parties in (("ref", self.ref_parties), ("cur", self.cur_parties)):
            if len(parties) < 2:
                raise ValidationError(f"{label}_parties needs at least 2 entries")
            if parties.count(NONVOTER_CODE) != 1 or parties[-1] != NONVOTER_CODE:
                raise ValidationError(
                    f"{label}_parties must contain '{NONVOTER_CODE}' exactly once, last"
                )
            if len(set(parties)) != len(parties):
                raise ValidationError(f"duplicate party code in {label}_parties")

    @classmethod
    def from_counted(
        cls, ref_parties: list[str] | tuple[str, ...], cur_parties: list[str] | tuple[str, ...]
    ) -> "PartySet":
        """Build from party lists that do not yet include the NV entry."""
        return cls(
            ref_parties=tuple(ref_parties) + (NONVOTER_CODE,),
            cur_parties=tuple(cur_parties) + (NONVOTER_CODE,),
        )

    @property
    def n_ref(self) -> int:
        return len(self.ref_parties)

    @property
    def n_cur(self) -> int:
        return len(self.cur_parties)


@dataclass(frozen=True)
class Constituency:
    """One reporting unit with reference and (optionally) current votes.

    ``ref_votes`` and ``cur_votes`` include the derived NV component and
    sum exactly to the respective electorate.
    """

    id: str
    name: str
    electorate_ref: int
    electorate_cur: int
    ref_votes: tuple[int, ...]
    cur_votes: tuple[int, ...] | None = None
    declared_rank: int | None = None

    def __post_init__(self) -> None:
        if self.electorate_ref < 1 or self.electorate_cur < 1:
            raise ValidationError(f"station {self.id!r}: electorate must be positive")
        if min(self.ref_votes) < 0:
            raise ValidationError(f"station {self.id!r}: negative reference vote")
        if sum(self.ref_votes) != self.electorate_ref:
            raise ValidationError(
                f"station {self.id!r}: reference votes do not sum to electorate"
            )
        if self.cur_votes is not None:
            if min(self.cur_votes) < 0:
                raise ValidationError(f"station {self.id!r}: negative current vote")
            if sum(self.cur_votes) != self.electorate_cur:
                raise ValidationError(
                    f"station {self.id!r}: current votes do not sum to electorate"
                )
        if self.declared_rank is not None and self.declared_rank < 1:
            raise ValidationError(f"station {self.id!r}: declared_rank must be >= 1")

    @classmethod
    def build(
        cls,
        id: str,
        name: str,
        electorate_ref: int,
        electorate_cur: int,
        ref_votes: tuple[int, ...] | list[int],
        cur_votes: tuple[int, ...] | list[int] | None = None,
        declared_rank: int | None = None,
    ) -> "Constituency":
        """Construct from counted votes (excluding NV), deriving residuals."""
        try:
            full_ref = derive_nonvoters(tuple(ref_votes), electorate_ref)
            full_cur = (
                derive_nonvoters(tuple(cur_votes), electorate_cur)
                if cur_votes is not None
                else None
            )
        except ValidationError as exc:
            raise ValidationError(f"station {id!r}: {exc}") from None
        return cls(
            id=id,
            name=name,
            electorate_ref=electorate_ref,
            electorate_cur=electorate_cur,
            ref_votes=full_ref,
            cur_votes=full_cur,
            declared_rank=declared_rank,
        )


@dataclass(frozen=True)
class Dataset:
    """A validated election dataset: parties plus ordered constituencies."""

    parties: PartySet
    constituencies: tuple[Constituency, ...]
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.constituencies) < 2:
            raise ValidationError("dataset needs at least 2 constituencies")
        seen: set[str] = set()
        for st in self.constituencies:
            if st.id in seen:
                raise ValidationError(f"duplicate station id {st.id!r}")
            seen.add(st.id)
            if len(st.ref_votes) != self.parties.n_ref:
                raise ValidationError(
                    f"station {st.id!r}: reference vote vector length "
                    f"{len(st.ref_votes)} != {self.parties.n_ref} parties"
                )
            if st.cur_votes is not None and len(st.cur_votes) != self.parties.n_cur:
                raise ValidationError(
                    f"station {st.id!r}: current vote vector length "
                    f"{len(st.cur_votes)} != {self.parties.n_cur} parties"
                )

    @property
    def n_stations(self) -> int:
        return len(self.constituencies)

    @cached_property
    def station_index(self) -> dict[str, int]:
        """Map station id to its position in the constituency order."""
        return {st.id: i for i, st in enumerate(self.constituencies)}

    @cached_property
    def ref_matrix(self) -> np.ndarray:
        """Reference votes incl. NV, one row per station (read-only)."""
        m = np.array([st.ref_votes for st in self.constituencies], dtype=float)
        m.flags.writeable = False
        return m

    @cached_property
    def electorates_cur(self) -> np.ndarray:
        m = np.array([st.electorate_cur for st in self.constituencies], dtype=float)
        m.flags.writeable = False
        return m

    @property
    def has_full_cur_votes(self) -> bool:
        return all(st.cur_votes is not None for st in self.constituencies)

    def true_totals(self) -> np.ndarray:
        """Sum of current votes incl. NV across all stations.

        Only defined in simulation mode, when every station carries
        current votes.
        """
        if not self.has_full_cur_votes:
            raise ValidationError("dataset is missing current votes for some stations")
        return np.array(
            [st.cur_votes for st in self.constituencies], dtype=float
        ).sum(axis=0)

    @property
    def total_electorate_cur(self) -> int:
        return sum(st.electorate_cur for st in self.constituencies)


@dataclass(frozen=True)
class DeclarationState:
    """Which stations have reported, with their full current vote vectors."""

    declared: frozenset[str]
    votes: Mapping[str, tuple[int, ...]]

    def __post_init__(self) -> None:
        missing = self.declared - set(self.votes)
        if missing:
            raise ValidationError(
                f"declared stations without votes: {sorted(missing)[:5]}"
            )

    @classmethod
    def from_dataset(cls, dataset: Dataset, declared_ids=None) -> "DeclarationState":
        """Simulation helper: declare ``declared_ids`` with their true votes.

        With ``declared_ids=None`` every station that has current votes is
        declared.
        """
        if declared_ids is None:
            declared_ids = [
                st.id for st in dataset.constituencies if st.cur_votes is not None
            ]
        ids = frozenset(declared_ids)
        votes: dict[str, tuple[int, ...]] = {}
        for sid in ids:
            if sid not in dataset.station_index:
                raise ValidationError(f"unknown station id {sid!r}")
            st = dataset.constituencies[dataset.station_index[sid]]
            if st.cur_votes is None:
                raise ValidationError(f"station {sid!r} has no current votes")
            votes[sid] = st.cur_votes
        return cls(declared=ids, votes=votes)

    def validate_against(self, dataset: Dataset) -> None:
        for sid in self.declared:
            if sid not in dataset.station_index:
                raise ValidationError(f"declared station {sid!r} not in dataset")
            votes = self.votes[sid]
            if len(votes) != dataset.parties.n_cur:
                raise ValidationError(
                    f"declared station {sid!r}: vote vector length mismatch"
                )
            if min(votes) < 0:
                raise ValidationError(f"declared station {sid!r}: negative vote")
            st = dataset.constituencies[dataset.station_index[sid]]
            if sum(votes) != st.electorate_cur:
                raise ValidationError(
                    f"declared station {sid!r}: votes do not sum to electorate"
                )

    def with_declaration(self, station_id: str, votes: tuple[int, ...]) -> "DeclarationState":
        """Return a new state with one more declared station."""
        merged = dict(self.votes)
        merged[station_id] = tuple(votes)
        return DeclarationState(
            declared=self.declared | {station_id}, votes=merged
        )
