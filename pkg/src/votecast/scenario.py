"""Declaration scenarios: simulated partial counts.

A scenario withholds a set of stations whose combined electorate comes
as close as possible to a target fraction of the total, preferring
large stations as the late reporters (cities declare last). When every
station carries a ``declared_rank``, that expected declaration order is
used instead of the size heuristic.
"""

from __future__ import annotations

import numpy as np

from .model import Dataset, DeclarationState, ValidationError


def make_scenario(
    dataset: Dataset, missing_electorate_fraction: float, seed: int = 0
) -> DeclarationState:
    """Declare all stations except a target share of the electorate.

    Deterministic for a given seed; the seed only breaks ordering ties.
    Requires current votes on every station (simulation mode).
    """
    if not 0.0 <= missing_electorate_fraction <= 1.0:
        raise ValidationError("missing_electorate_fraction must be in [0, 1]")
    if not dataset.has_full_cur_votes:
        raise ValidationError("scenario construction needs current votes everywhere")

    stations = dataset.constituencies
    if missing_electorate_fraction == 0.0:
        return DeclarationState.from_dataset(dataset, (st.id for st in stations))

    rng = np.random.default_rng(seed)
    tiebreak = rng.permutation(len(stations))
    use_ranks = all(st.declared_rank is not None for st in stations)
    if use_ranks:
        # Highest expected declaration rank reports last.
        order = sorted(
            range(len(stations)),
            key=lambda i: (-stations[i].declared_rank, tiebreak[i]),
        )
    else:
        order = sorted(
            range(len(stations)),
            key=lambda i: (-stations[i].electorate_cur, tiebreak[i]),
        )

    target = missing_electorate_fraction * dataset.total_electorate_cur
    undeclared: set[str] = set()
    missing = 0
    skipped: list[int] = []
    for i in order:
        e = stations[i].electorate_cur
        if missing + e <= target:
            undeclared.add(stations[i].id)
            missing += e
        else:
            skipped.append(i)

    # One repair step: adding the smallest skipped station may land closer.
    if skipped:
        best = min(skipped, key=lambda i: stations[i].electorate_cur)
        e = stations[best].electorate_cur
        if abs(missing + e - target) < abs(missing - target):
            undeclared.add(stations[best].id)

    declared = (st.id for st in stations if st.id not in undeclared)
    return DeclarationState.from_dataset(dataset, declared)
