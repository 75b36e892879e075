"""Match records: CSV ingestion and expansion into binomial observations."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from typing import Iterable, List, Sequence

from ..errors import IngestionError
from ..match import CURLING_TRIALS

REQUIRED_COLUMNS = ("match_id", "team_a", "team_b", "lsfe_holder", "score_a", "score_b")


@dataclass(frozen=True)
class MatchRecord:
    match_id: str
    team_a: str
    team_b: str
    lsfe_holder: str  # "A" or "B"
    score_a: int
    score_b: int


@dataclass(frozen=True)
class ObservationRow:
    """One team's scoring in one match, as a binomial observation."""

    team: str
    opponent: str
    lsfe: int
    successes: int
    trials: int = CURLING_TRIALS


def _parse_score(raw, field, problems, line):
    try:
        value = int(raw.strip())
    except (ValueError, AttributeError):
        problems.append((line, f"{field} is not an integer: {raw!r}"))
        return None
    if value < 0:
        problems.append((line, f"{field} is negative: {value}"))
        return None
    if value > CURLING_TRIALS:
        problems.append((line, f"{field}={value} exceeds the trial budget {CURLING_TRIALS}"))
        return None
    return value


def load_matches(source) -> List[MatchRecord]:
    """Read match records from a CSV path, text stream or string.

    The header row must contain every column in ``REQUIRED_COLUMNS``; extra
    columns (e.g. a winner column for extra ends) are ignored.  All problems
    are collected and raised together as one :class:`IngestionError` whose
    line numbers count the header as line 1.
    """
    if isinstance(source, os.PathLike) or (isinstance(source, str) and "\n" not in source):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_matches(fh)
    if isinstance(source, str):
        source = io.StringIO(source)

    reader = csv.DictReader(source)
    header = reader.fieldnames or []
    missing = [c for c in REQUIRED_COLUMNS if c not in [h.strip() for h in header]]
    if missing:
        raise IngestionError([(1, "missing column(s): " + ", ".join(missing))])
    reader.fieldnames = [h.strip() for h in header]

    problems = []
    records = []
    seen = {}
    for line, row in enumerate(reader, start=2):
        mid = (row.get("match_id") or "").strip()
        a = (row.get("team_a") or "").strip()
        b = (row.get("team_b") or "").strip()
        holder = (row.get("lsfe_holder") or "").strip().upper()
        n_before = len(problems)
        if not mid:
            problems.append((line, "empty match_id"))
        elif mid in seen:
            problems.append((line, f"duplicate match_id {mid!r} (first on line {seen[mid]})"))
        else:
            seen[mid] = line
        if not a or not b:
            problems.append((line, "empty team name"))
        elif a == b:
            problems.append((line, f"team_a and team_b are both {a!r}"))
        if holder not in ("A", "B"):
            problems.append((line, f"lsfe_holder must be A or B, got {row.get('lsfe_holder')!r}"))
        sa = _parse_score(row.get("score_a"), "score_a", problems, line)
        sb = _parse_score(row.get("score_b"), "score_b", problems, line)
        if len(problems) == n_before:
            records.append(MatchRecord(mid, a, b, holder, sa, sb))
    if problems:
        raise IngestionError(problems)
    return records


def write_matches(records: Iterable[MatchRecord], dest) -> None:
    """Write records as CSV to a path or text stream."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            return write_matches(records, fh)
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(REQUIRED_COLUMNS)
    for r in records:
        writer.writerow([r.match_id, r.team_a, r.team_b, r.lsfe_holder, r.score_a, r.score_b])


def expand_records(records: Sequence[MatchRecord], trials: int = CURLING_TRIALS) -> List[ObservationRow]:
    """Two observations per match, one from each team's point of view."""
    rows = []
    for r in records:
        rows.append(ObservationRow(r.team_a, r.team_b, int(r.lsfe_holder == "A"), r.score_a, trials))
        rows.append(ObservationRow(r.team_b, r.team_a, int(r.lsfe_holder == "B"), r.score_b, trials))
    return rows
