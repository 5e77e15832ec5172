"""Ranking reviewers and measuring precision against graded judgments.

Judgments grade (submission, reviewer) pairs 0-3; a reviewer counts as
relevant at grade >= threshold (default 2). Precision at k is computed after
discarding reviewers the ground truth never judged, over the min(k, judged
survivors) denominator. Mean precisions are reported over three nested
submission subsets: those with at least 1, 2 or 3 relevant reviewers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

GRADES = (0, 1, 2, 3)
DEFAULT_THRESHOLD = 2
GT_LEVELS = (1, 2, 3)


class QrelsFormatError(ValueError):
    """A qrels file violates the submission<TAB>reviewer<TAB>grade schema."""


@dataclass(frozen=True)
class Judgment:
    submission_id: str
    reviewer_id: str
    grade: int

    def __post_init__(self):
        if self.grade not in GRADES:
            raise ValueError(f"grade must be 0-3, got {self.grade}")


@dataclass(frozen=True)
class RankedList:
    """Reviewers in descending predicted relevance for one submission."""

    submission_id: str
    entries: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class SubmissionResult:
    submission_id: str
    judged: int
    relevant: int
    precisions: dict[int, float | None]


@dataclass(frozen=True)
class EvalReport:
    """Mean precision at each cutoff over the GT1/GT2/GT3 submission subsets."""

    method: str
    num_topics: int
    k_list: tuple[int, ...]
    threshold: int
    gt_means: dict[int, dict[int, float | None]]
    gt_counts: dict[int, int]
    per_submission: tuple[SubmissionResult, ...]
    notes: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        out: dict = {"method": self.method, "K": self.num_topics, "threshold": self.threshold}
        for level in GT_LEVELS:
            out[f"gt{level}"] = {
                f"p{k}": self.gt_means[level][k] for k in self.k_list
            }
        out["counts"] = {f"gt{level}": self.gt_counts[level] for level in GT_LEVELS}
        out["per_submission"] = [
            {
                "submission_id": row.submission_id,
                "judged": row.judged,
                "relevant": row.relevant,
                "p": {str(k): row.precisions[k] for k in self.k_list},
            }
            for row in self.per_submission
        ]
        out["notes"] = list(self.notes)
        return out

    def to_text(self) -> str:
        headers = ["Method", "Topics"]
        for level in GT_LEVELS:
            for k in self.k_list:
                headers.append(f"GT{level} P@{k}")
        row = [self.method, str(self.num_topics)]
        for level in GT_LEVELS:
            for k in self.k_list:
                mean = self.gt_means[level][k]
                row.append("-" if mean is None else f"{mean:.1f}")
        widths = [max(len(h), len(v)) for h, v in zip(headers, row)]
        lines = [
            "  ".join(h.rjust(w) for h, w in zip(headers, widths)),
            "  ".join(v.rjust(w) for v, w in zip(row, widths)),
        ]
        counts = ", ".join(f"GT{level}: {self.gt_counts[level]}" for level in GT_LEVELS)
        lines.append(f"(submissions per subset -- {counts}; relevance threshold {self.threshold})")
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines) + "\n"


def load_qrels(path: str | Path) -> list[Judgment]:
    """Read tab-separated judgments; rejects bad grades and duplicate pairs."""
    judgments = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise QrelsFormatError(f"{path}: line {line_no}: expected 3 tab-separated fields")
            sid, rid, grade_str = parts
            try:
                grade = int(grade_str)
            except ValueError as exc:
                raise QrelsFormatError(
                    f"{path}: line {line_no}: grade {grade_str!r} is not an integer"
                ) from exc
            if grade not in GRADES:
                raise QrelsFormatError(f"{path}: line {line_no}: grade {grade} outside 0-3")
            if (sid, rid) in seen:
                raise QrelsFormatError(
                    f"{path}: line {line_no}: duplicate judgment for ({sid}, {rid})"
                )
            seen.add((sid, rid))
            judgments.append(Judgment(sid, rid, grade))
    return judgments


def grades_by_submission(judgments: Iterable[Judgment]) -> dict[str, dict[str, int]]:
    grades: dict[str, dict[str, int]] = {}
    for j in judgments:
        grades.setdefault(j.submission_id, {})[j.reviewer_id] = j.grade
    return grades


def rank_reviewers(
    scores: Mapping[str, float],
    higher_is_better: bool = True,
    submission_id: str = "",
) -> RankedList:
    """Order reviewers by score, ties broken by reviewer id.

    Lower-is-better methods are ranked ascending by value. A NaN score is an
    error naming the reviewer, since it cannot be ordered.
    """
    if not scores:
        raise ValueError("cannot rank an empty score map")
    for rid, value in scores.items():
        if math.isnan(value):
            raise ValueError(f"reviewer {rid!r} has NaN score")
    sign = -1.0 if higher_is_better else 1.0
    ordered = sorted(scores.items(), key=lambda item: (sign * item[1], item[0]))
    return RankedList(submission_id=submission_id, entries=tuple(ordered))


def precision_at_k(
    ranked: RankedList,
    grades: Mapping[str, int],
    k: int,
    threshold: int = DEFAULT_THRESHOLD,
) -> float | None:
    """Fraction of relevant reviewers among the top judged survivors.

    Unjudged reviewers are removed from the ranking first; the denominator is
    min(k, number of judged survivors). Returns None (undefined) when no
    ranked reviewer was judged.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    survivors = [rid for rid, _ in ranked.entries if rid in grades]
    if not survivors:
        return None
    top = survivors[:k]
    relevant = sum(1 for rid in top if grades[rid] >= threshold)
    return relevant / len(top)


def gt_subset(
    judgments: Iterable[Judgment],
    min_relevant: int,
    threshold: int = DEFAULT_THRESHOLD,
) -> set[str]:
    """Submissions with at least `min_relevant` reviewers at grade >= threshold."""
    if min_relevant < 1:
        raise ValueError("min_relevant must be >= 1")
    counts: dict[str, int] = {}
    for j in judgments:
        if j.grade >= threshold:
            counts[j.submission_id] = counts.get(j.submission_id, 0) + 1
    return {sid for sid, n in counts.items() if n >= min_relevant}


def evaluate_rankings(
    rankings: Mapping[str, RankedList],
    judgments: Sequence[Judgment],
    k_list: Sequence[int] = (5, 10),
    threshold: int = DEFAULT_THRESHOLD,
    method: str = "",
    num_topics: int = 0,
    notes: Sequence[str] = (),
) -> EvalReport:
    """Aggregate per-submission precisions into the GT1/GT2/GT3 report.

    Every judged submission needs a ranking; submissions whose ranking
    contains no judged reviewer are excluded from the means and recorded in
    the report notes. Mean precisions are percentages rounded to one decimal.
    """
    if any(k < 1 for k in k_list):
        raise ValueError("every precision cutoff must be >= 1")
    grades = grades_by_submission(judgments)
    missing = sorted(set(grades) - set(rankings))
    if missing:
        raise ValueError(f"no ranking for judged submissions: {', '.join(missing)}")

    rows = []
    skipped = []
    for sid in sorted(grades):
        sub_grades = grades[sid]
        precisions = {
            k: precision_at_k(rankings[sid], sub_grades, k, threshold) for k in k_list
        }
        if all(v is None for v in precisions.values()):
            skipped.append(sid)
        rows.append(SubmissionResult(
            submission_id=sid,
            judged=len(sub_grades),
            relevant=sum(1 for g in sub_grades.values() if g >= threshold),
            precisions=precisions,
        ))

    subsets = {level: gt_subset(judgments, level, threshold) for level in GT_LEVELS}
    gt_means: dict[int, dict[int, float | None]] = {}
    gt_counts: dict[int, int] = {}
    for level in GT_LEVELS:
        members = [r for r in rows if r.submission_id in subsets[level]]
        gt_means[level] = {}
        for k in k_list:
            values = [r.precisions[k] for r in members if r.precisions[k] is not None]
            gt_means[level][k] = round(100.0 * sum(values) / len(values), 1) if values else None
        gt_counts[level] = len(members)

    all_notes = list(notes)
    if skipped:
        all_notes.append(
            f"{len(skipped)} submission(s) had no judged reviewer in the ranking "
            f"and were excluded from means: {', '.join(skipped)}"
        )
    return EvalReport(
        method=method,
        num_topics=num_topics,
        k_list=tuple(k_list),
        threshold=threshold,
        gt_means=gt_means,
        gt_counts=gt_counts,
        per_submission=tuple(rows),
        notes=tuple(all_notes),
    )


def evaluate(
    method: str,
    profiles: Mapping[str, Sequence[str]],
    submissions: Mapping[str, Sequence[str]],
    table,
    judgments: Sequence[Judgment],
    k_list: Sequence[int] = (5, 10),
    num_topics: int = 10,
    threshold: int = DEFAULT_THRESHOLD,
    stopwords: frozenset[str] = frozenset(),
) -> EvalReport:
    """Score every (judged submission, profiled reviewer) pair and report.

    `profiles` and `submissions` map ids to token sequences. Judged ids
    missing a profile or an abstract are an error listing the offenders; the
    candidate pool for each ranking is every profiled reviewer, with unjudged
    ones discarded by the metric.
    """
    from .scoring import BatchScorer  # local import: scoring builds on this module's siblings

    grades = grades_by_submission(judgments)
    judged_reviewers = {j.reviewer_id for j in judgments}
    missing_profiles = sorted(judged_reviewers - set(profiles))
    missing_subs = sorted(set(grades) - set(submissions))
    problems = []
    if missing_profiles:
        problems.append(f"judged reviewers without a profile: {', '.join(missing_profiles)}")
    if missing_subs:
        problems.append(f"judged submissions without an abstract: {', '.join(missing_subs)}")
    if problems:
        raise ValueError("; ".join(problems))

    scorer = BatchScorer(method, table, num_topics=num_topics, stopwords=stopwords)
    prepared_profiles = {rid: scorer.prepare(tokens) for rid, tokens in profiles.items()}
    rankings = {}
    for sid in sorted(grades):
        sub_doc = scorer.prepare(submissions[sid])
        scores = {
            rid: scorer.score(doc, sub_doc).value for rid, doc in prepared_profiles.items()
        }
        rankings[sid] = rank_reviewers(scores, scorer.higher_is_better, submission_id=sid)

    notes = []
    if scorer.adaptation_note:
        notes.append(scorer.adaptation_note)
    return evaluate_rankings(
        rankings, judgments, k_list=k_list, threshold=threshold,
        method=method, num_topics=num_topics, notes=notes,
    )
