"""Dataset file formats: canonical JSON plus a two-file CSV importer.

The on-disk form never contains nonvoter counts; party lists and vote
vectors cover counted parties only and the NV residual is derived at
load time.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .model import (
    Constituency,
    Dataset,
    DeclarationState,
    ParseError,
    PartySet,
    ValidationError,
    derive_nonvoters,
)


def _counted(values, station: str, what: str) -> tuple[int, ...]:
    try:
        votes = tuple(int(v) for v in values)
    except (TypeError, ValueError):
        raise ParseError(f"station {station!r}: non-integer {what}") from None
    return votes


def dataset_from_dict(doc: dict) -> Dataset:
    """Decode the JSON document form into a validated Dataset."""
    if not isinstance(doc, dict):
        raise ParseError("dataset document must be a JSON object")
    try:
        ref_parties = list(doc["ref_parties"])
        cur_parties = list(doc["cur_parties"])
        stations = doc["stations"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"missing or malformed field: {exc}") from None
    if not isinstance(stations, list):
        raise ParseError("'stations' must be a list")

    parties = PartySet.from_counted(ref_parties, cur_parties)
    constituencies = []
    for i, rec in enumerate(stations):
        if not isinstance(rec, dict) or "id" not in rec:
            raise ParseError(f"station record #{i} is malformed")
        sid = str(rec["id"])
        try:
            ref_votes = _counted(rec["ref_votes"], sid, "ref_votes")
            raw_cur = rec.get("cur_votes")
            cur_votes = _counted(raw_cur, sid, "cur_votes") if raw_cur is not None else None
            rank = rec.get("declared_rank")
            constituencies.append(
                Constituency.build(
                    id=sid,
                    name=str(rec.get("name", sid)),
                    electorate_ref=int(rec["electorate_ref"]),
                    electorate_cur=int(rec["electorate_cur"]),
                    ref_votes=ref_votes,
                    cur_votes=cur_votes,
                    declared_rank=int(rank) if rank is not None else None,
                )
            )
        except KeyError as exc:
            raise ParseError(f"station {sid!r}: missing field {exc}") from None
        if len(ref_votes) != len(ref_parties):
            raise ValidationError(
                f"station {sid!r}: {len(ref_votes)} ref_votes for "
                f"{len(ref_parties)} parties"
            )
        if cur_votes is not None and len(cur_votes) != len(cur_parties):
            raise ValidationError(
                f"station {sid!r}: {len(cur_votes)} cur_votes for "
                f"{len(cur_parties)} parties"
            )

    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise ParseError("'meta' must be an object")
    return Dataset(
        parties=parties,
        constituencies=tuple(constituencies),
        metadata={str(k): str(v) for k, v in meta.items()},
    )


def dataset_to_dict(dataset: Dataset) -> dict:
    """Encode a Dataset into the JSON document form (NV stripped)."""
    stations = []
    for st in dataset.constituencies:
        stations.append(
            {
                "id": st.id,
                "name": st.name,
                "electorate_ref": st.electorate_ref,
                "electorate_cur": st.electorate_cur,
                "ref_votes": list(st.ref_votes[:-1]),
                "cur_votes": list(st.cur_votes[:-1]) if st.cur_votes is not None else None,
                "declared_rank": st.declared_rank,
            }
        )
    return {
        "meta": dict(dataset.metadata),
        "ref_parties": list(dataset.parties.ref_parties[:-1]),
        "cur_parties": list(dataset.parties.cur_parties[:-1]),
        "stations": stations,
    }


def load_dataset(path: str | Path) -> Dataset:
    """Load and validate a dataset JSON file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return dataset_from_dict(doc)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write the canonical JSON form. load_dataset(save_dataset(d)) == d."""
    Path(path).write_text(
        json.dumps(dataset_to_dict(dataset), indent=2, sort_keys=False) + "\n",
        encoding="utf-8",
    )


def _read_votes_csv(path: str | Path) -> tuple[list[str], dict[str, dict]]:
    """Read one `id,name,electorate,<party>...` CSV into per-station records."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if len(header) < 4 or [h.strip().lower() for h in header[:3]] != [
            "id",
            "name",
            "electorate",
        ]:
            raise ParseError(f"{path}: header must start with id,name,electorate")
        parties = [h.strip() for h in header[3:]]
        records: dict[str, dict] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} columns")
            sid = row[0].strip()
            if sid in records:
                raise ValidationError(f"{path}: duplicate station id {sid!r}")
            try:
                records[sid] = {
                    "name": row[1].strip(),
                    "electorate": int(row[2]),
                    "votes": [int(c) for c in row[3:]],
                }
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-integer count") from None
    return parties, records


def declarations_to_dict(declarations: DeclarationState) -> dict:
    """Encode declared stations as counted votes, nonvoters stripped."""
    return {
        "declarations": {
            sid: list(declarations.votes[sid][:-1])
            for sid in sorted(declarations.declared)
        }
    }


def declarations_from_dict(doc: dict, dataset: Dataset) -> DeclarationState:
    """Decode a declarations document, deriving each nonvoter residual."""
    if not isinstance(doc, dict) or not isinstance(doc.get("declarations"), dict):
        raise ParseError("declarations document must be {'declarations': {...}}")
    votes: dict[str, tuple[int, ...]] = {}
    for sid, counted in doc["declarations"].items():
        if sid not in dataset.station_index:
            raise ValidationError(f"declaration for unknown station id {sid!r}")
        st = dataset.constituencies[dataset.station_index[sid]]
        counted = _counted(counted, sid, "declared votes")
        if len(counted) != dataset.parties.n_cur - 1:
            raise ValidationError(
                f"station {sid!r}: expected {dataset.parties.n_cur - 1} "
                f"counted parties, got {len(counted)}"
            )
        votes[sid] = derive_nonvoters(counted, st.electorate_cur)
    return DeclarationState(declared=frozenset(votes), votes=votes)


def load_declarations(path: str | Path, dataset: Dataset) -> DeclarationState:
    """Load a declarations JSON file against its dataset."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return declarations_from_dict(doc, dataset)


def save_declarations(declarations: DeclarationState, path: str | Path) -> None:
    """Write the canonical declarations JSON form."""
    Path(path).write_text(
        json.dumps(declarations_to_dict(declarations), indent=2) + "\n",
        encoding="utf-8",
    )


def import_csv(reference_path: str | Path, current_path: str | Path) -> Dataset:
    """Merge reference.csv and current.csv on station id.

    Stations present only in the reference file get null current votes;
    a current-file station unknown to the reference file is an error.
    """
    ref_parties, ref_records = _read_votes_csv(reference_path)
    cur_parties, cur_records = _read_votes_csv(current_path)

    unknown = set(cur_records) - set(ref_records)
    if unknown:
        raise ValidationError(
            f"current results for unknown station id {sorted(unknown)[0]!r}"
        )

    constituencies = []
    for sid, ref in ref_records.items():
        cur = cur_records.get(sid)
        constituencies.append(
            Constituency.build(
                id=sid,
                name=ref["name"],
                electorate_ref=ref["electorate"],
                electorate_cur=cur["electorate"] if cur else ref["electorate"],
                ref_votes=ref["votes"],
                cur_votes=cur["votes"] if cur else None,
            )
        )
    return Dataset(
        parties=PartySet.from_counted(ref_parties, cur_parties),
        constituencies=tuple(constituencies),
        metadata={"source": f"{reference_path}+{current_path}"},
    )
