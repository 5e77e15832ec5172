"""Corpus ingestion: publications, submissions, reviewer profiles.

A reviewer profile is the concatenation of the tokenized abstracts of the
reviewer's publications, ordered by (year, pub_id). Tokens are kept with
duplicates because downstream relevance scores are frequency-weighted
averages over all words of a document.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

REASON_INACTIVE_VETERAN = "inactive-veteran"
REASON_FEW_PRIOR_PAPERS = "inactive-few-prior-papers"


class RecordFormatError(ValueError):
    """A corpus file violates its schema (bad line, bad field, duplicate id)."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}: "
        if line is not None:
            loc += f"line {line}: "
        super().__init__(f"{loc}{message}")
        self.path = str(path) if path is not None else None
        self.line = line


@dataclass(frozen=True)
class Publication:
    """One publication record; the raw unit behind reviewer profiles."""

    pub_id: str
    reviewer_ids: tuple[str, ...]
    year: int
    title: str
    abstract_text: str

    def __post_init__(self):
        if not self.pub_id:
            raise ValueError("pub_id must be nonempty")
        if self.year <= 0:
            raise ValueError(f"year must be positive, got {self.year}")


@dataclass(frozen=True)
class ReviewerProfile:
    """All abstracts of one reviewer, tokenized and concatenated in order."""

    reviewer_id: str
    tokens: tuple[str, ...]
    source_pub_ids: tuple[str, ...]


@dataclass(frozen=True)
class SubmissionDoc:
    """Tokenized abstract of one submission."""

    submission_id: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class FilterPolicy:
    """Reviewer eligibility windows, in calendar years.

    A reviewer with no publication in the last `inactivity_window` years is
    excluded when they either started publishing at least `veteran_window`
    years ago, or have fewer than `min_prior_papers` publications overall.
    """

    current_year: int
    inactivity_window: int = 10
    veteran_window: int = 40
    min_prior_papers: int = 3

    def __post_init__(self):
        if self.inactivity_window <= 0 or self.veteran_window <= 0:
            raise ValueError("windows must be positive")
        if self.min_prior_papers < 1:
            raise ValueError("min_prior_papers must be >= 1")


def tokenize(text: str) -> list[str]:
    """Split text into lowercased maximal alphanumeric runs.

    Punctuation, whitespace and underscores separate tokens; empty input
    yields an empty list.
    """
    return _TOKEN_RE.findall(text.lower())


def build_profile(reviewer_id: str, publications: Sequence[Publication]) -> ReviewerProfile:
    """Concatenate a reviewer's tokenized abstracts into one profile.

    Publications are ordered by (year, pub_id) so the result does not depend
    on input order. Raises ValueError when the list is empty or contains a
    publication not authored by the reviewer.
    """
    if not publications:
        raise ValueError(f"reviewer {reviewer_id!r} has no publications to build a profile from")
    for pub in publications:
        if reviewer_id not in pub.reviewer_ids:
            raise ValueError(
                f"publication {pub.pub_id!r} does not list reviewer {reviewer_id!r}"
            )
    ordered = sorted(publications, key=lambda p: (p.year, p.pub_id))
    tokens: list[str] = []
    for pub in ordered:
        tokens.extend(tokenize(pub.abstract_text))
    return ReviewerProfile(
        reviewer_id=reviewer_id,
        tokens=tuple(tokens),
        source_pub_ids=tuple(p.pub_id for p in ordered),
    )


def _exclusion_reason(years: Sequence[int], policy: FilterPolicy) -> str | None:
    inactive_since = policy.current_year - policy.inactivity_window
    recent = any(y > inactive_since for y in years)
    if recent:
        return None
    if min(years) <= policy.current_year - policy.veteran_window:
        return REASON_INACTIVE_VETERAN
    if sum(1 for y in years if y <= inactive_since) < policy.min_prior_papers:
        return REASON_FEW_PRIOR_PAPERS
    return None


def filter_decisions(
    candidates: Iterable[tuple[str, Sequence[int]]], policy: FilterPolicy
) -> list[tuple[str, bool, str | None]]:
    """Per-candidate eligibility decisions: (reviewer_id, kept, reason).

    `reason` is None for kept reviewers, otherwise one of the REASON_*
    constants. Candidates must each have at least one publication year.
    """
    decisions = []
    for reviewer_id, years in candidates:
        if not years:
            raise ValueError(f"candidate {reviewer_id!r} has no publication years")
        reason = _exclusion_reason(years, policy)
        decisions.append((reviewer_id, reason is None, reason))
    return decisions


def filter_reviewers(
    candidates: Iterable[tuple[str, Sequence[int]]], policy: FilterPolicy
) -> list[str]:
    """Reviewer ids that pass the eligibility policy, in input order."""
    return [rid for rid, kept, _ in filter_decisions(candidates, policy) if kept]


def _require(obj: dict, field: str, types, path, line):
    if field not in obj:
        raise RecordFormatError(f"missing field {field!r}", path, line)
    value = obj[field]
    if not isinstance(value, types) or isinstance(value, bool):
        raise RecordFormatError(
            f"field {field!r} has wrong type {type(value).__name__}", path, line
        )
    return value


def _parse_publication(obj: dict, path, line) -> Publication:
    reviewer_ids = _require(obj, "reviewer_ids", list, path, line)
    if not all(isinstance(r, str) for r in reviewer_ids):
        raise RecordFormatError("field 'reviewer_ids' must be a list of strings", path, line)
    return Publication(
        pub_id=_require(obj, "pub_id", str, path, line),
        reviewer_ids=tuple(reviewer_ids),
        year=_require(obj, "year", int, path, line),
        title=_require(obj, "title", str, path, line),
        abstract_text=_require(obj, "abstract", str, path, line),
    )


def _parse_submission(obj: dict, path, line) -> SubmissionDoc:
    return SubmissionDoc(
        submission_id=_require(obj, "submission_id", str, path, line),
        tokens=tuple(tokenize(_require(obj, "abstract", str, path, line))),
    )


def _parse_profile(obj: dict, path, line) -> ReviewerProfile:
    tokens = _require(obj, "tokens", list, path, line)
    source = _require(obj, "source_pub_ids", list, path, line)
    if not all(isinstance(t, str) for t in tokens):
        raise RecordFormatError("field 'tokens' must be a list of strings", path, line)
    return ReviewerProfile(
        reviewer_id=_require(obj, "reviewer_id", str, path, line),
        tokens=tuple(tokens),
        source_pub_ids=tuple(str(s) for s in source),
    )


_PARSERS = {
    "publications": (_parse_publication, lambda r: r.pub_id),
    "submissions": (_parse_submission, lambda r: r.submission_id),
    "reviewers": (_parse_profile, lambda r: r.reviewer_id),
}


def load_records(path: str | Path, kind: str) -> list:
    """Load one JSONL corpus file.

    `kind` selects the schema: "publications", "submissions" or "reviewers"
    (profile records as written by the ingest command). Malformed lines and
    duplicate ids raise RecordFormatError naming the offending line.
    """
    if kind not in _PARSERS:
        raise ValueError(f"unknown record kind {kind!r}")
    parse, key = _PARSERS[kind]
    records = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordFormatError(f"invalid JSON ({exc.msg})", path, line_no) from exc
            if not isinstance(obj, dict):
                raise RecordFormatError("line is not a JSON object", path, line_no)
            try:
                record = parse(obj, path, line_no)
            except ValueError as exc:
                if isinstance(exc, RecordFormatError):
                    raise
                raise RecordFormatError(str(exc), path, line_no) from exc
            rid = key(record)
            if rid in seen:
                raise RecordFormatError(f"duplicate id {rid!r}", path, line_no)
            seen.add(rid)
            records.append(record)
    return records


def build_profiles(publications: Sequence[Publication]) -> dict[str, ReviewerProfile]:
    """Group publications by reviewer and build every profile."""
    by_reviewer: dict[str, list[Publication]] = {}
    for pub in publications:
        for rid in pub.reviewer_ids:
            by_reviewer.setdefault(rid, []).append(pub)
    return {rid: build_profile(rid, pubs) for rid, pubs in sorted(by_reviewer.items())}


def reviewer_years(publications: Sequence[Publication]) -> dict[str, list[int]]:
    """Publication years per reviewer, for the eligibility filter."""
    years: dict[str, list[int]] = {}
    for pub in publications:
        for rid in pub.reviewer_ids:
            years.setdefault(rid, []).append(pub.year)
    return years


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a stopword file, one token per line; blank lines ignored."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())


def convert_judgments_to_qrels(jsonl_path: str | Path, tsv_path: str | Path) -> int:
    """Convert JSONL judgment records to the tab-separated qrels format.

    Input lines are objects {"submission_id", "reviewer_id", "grade"}; output
    lines are `submission_id<TAB>reviewer_id<TAB>grade`. Returns the number
    of records written.
    """
    rows = []
    with open(jsonl_path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordFormatError(f"invalid JSON ({exc.msg})", jsonl_path, line_no) from exc
            sid = _require(obj, "submission_id", str, jsonl_path, line_no)
            rid = _require(obj, "reviewer_id", str, jsonl_path, line_no)
            grade = _require(obj, "grade", int, jsonl_path, line_no)
            if grade not in (0, 1, 2, 3):
                raise RecordFormatError(f"grade {grade} outside 0-3", jsonl_path, line_no)
            rows.append((sid, rid, grade))
    with open(tsv_path, "w", encoding="utf-8") as out:
        for sid, rid, grade in rows:
            out.write(f"{sid}\t{rid}\t{grade}\n")
    return len(rows)
