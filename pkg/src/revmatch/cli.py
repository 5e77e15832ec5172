"""Command-line pipeline: ingest, train-embeddings, match, rank, evaluate,
explain-topics.

Every command is deterministic for a fixed configuration: randomness exists
only in embedding training and flows from --seed, and batch outputs are
written in a canonical sort order so --jobs never changes bytes. Exit codes:
0 success, 1 internal failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

from . import corpus, evaluation, scoring
from .embeddings import (
    EmbeddingFormatError,
    TrainConfig,
    doc_matrix,
    load_embeddings,
    save_embeddings,
    train_embeddings,
)
from .topics import common_topics, match_score

SCORES_HEADER = (
    "submission_id", "reviewer_id", "method", "K", "score",
    "rel_reviewer", "rel_submission", "k_eff", "degenerate",
)


class UsageError(ValueError):
    """Bad flag combination or unusable input; maps to exit code 2."""


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved settings for one command run (flags over config file)."""

    publications: Path | None = None
    submissions: Path | None = None
    profiles: Path | None = None
    embeddings: Path | None = None
    qrels: Path | None = None
    scores: Path | None = None
    stopwords: Path | None = None
    output: Path | None = None
    output_dir: Path | None = None
    method: str = scoring.METHOD_COMMON_TOPIC
    num_topics: int = 10
    k_list: tuple[int, ...] = (5, 10)
    threshold: int = 2
    seed: int = 1
    jobs: int = 1
    top_n: int = 10
    top_words: int = 10
    current_year: int | None = None
    inactivity_window: int = 10
    veteran_window: int = 40
    min_prior_papers: int = 3

    def __post_init__(self):
        if self.num_topics < 1:
            raise UsageError("--k must be >= 1")
        if not self.k_list or any(k < 1 for k in self.k_list):
            raise UsageError("--at entries must be >= 1")
        if self.threshold not in (1, 2, 3):
            raise UsageError("--threshold must be 1, 2 or 3")
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        if self.method not in scoring.METHODS:
            raise UsageError(f"--method must be one of {', '.join(scoring.METHODS)}")


def _parse_k_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise UsageError(f"--at expects comma-separated integers, got {text!r}") from exc
    if not values:
        raise UsageError("--at expects at least one cutoff")
    return values


_CONFIG_CONVERTERS = {
    "publications": Path, "submissions": Path, "profiles": Path, "embeddings": Path,
    "qrels": Path, "scores": Path, "stopwords": Path, "output": Path, "output_dir": Path,
    "method": str, "num_topics": int, "k_list": _parse_k_list, "threshold": int,
    "seed": int, "jobs": int, "top_n": int, "top_words": int,
    "current_year": int, "inactivity_window": int, "veteran_window": int,
    "min_prior_papers": int,
    # embedding-training hyperparameters
    "dim": int, "window": int, "negatives": int, "epochs": int,
    "min_count": int, "learning_rate": float,
}
# flag spellings accepted in config files alongside field names
_CONFIG_ALIASES = {"k": "num_topics", "at": "k_list"}


def load_config_file(path: str | Path) -> dict:
    """Parse a key=value config file into typed settings."""
    settings = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}: line {line_no}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = _CONFIG_ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
            if key not in _CONFIG_CONVERTERS:
                raise UsageError(f"{path}: line {line_no}: unknown config key {key!r}")
            try:
                settings[key] = _CONFIG_CONVERTERS[key](value)
            except ValueError as exc:
                raise UsageError(f"{path}: line {line_no}: bad value for {key!r}: {value!r}") from exc
    return settings


_FIELD_NAMES = {f.name for f in fields(PipelineConfig)}


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    """Merge config-file settings under explicit flags."""
    file_cfg = load_config_file(args.config) if getattr(args, "config", None) else {}
    kwargs = {k: v for k, v in file_cfg.items() if k in _FIELD_NAMES}
    for name in _FIELD_NAMES:
        value = getattr(args, name, None)
        if value is not None:
            kwargs[name] = value
    return PipelineConfig(**kwargs)


def _require(cfg: PipelineConfig, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(cfg, n) is None]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join(missing)}")


def _info(message: str) -> None:
    print(message, file=sys.stderr)


def _load_stopword_set(cfg: PipelineConfig) -> frozenset[str]:
    return corpus.load_stopwords(cfg.stopwords) if cfg.stopwords else frozenset()


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------

def cmd_ingest(cfg: PipelineConfig) -> int:
    _require(cfg, "publications", "output_dir")
    publications = corpus.load_records(cfg.publications, "publications")
    if not publications:
        raise UsageError(f"{cfg.publications}: no publication records")
    years = corpus.reviewer_years(publications)
    current_year = cfg.current_year or max(max(ys) for ys in years.values())
    policy = corpus.FilterPolicy(
        current_year=current_year,
        inactivity_window=cfg.inactivity_window,
        veteran_window=cfg.veteran_window,
        min_prior_papers=cfg.min_prior_papers,
    )
    decisions = corpus.filter_decisions(sorted(years.items()), policy)
    kept = [rid for rid, ok, _ in decisions if ok]
    excluded = [(rid, reason) for rid, ok, reason in decisions if not ok]

    profiles = corpus.build_profiles(publications)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    profiles_path = out_dir / "profiles.jsonl"
    with open(profiles_path, "w", encoding="utf-8") as fh:
        for rid in kept:
            profile = profiles[rid]
            fh.write(json.dumps({
                "reviewer_id": profile.reviewer_id,
                "tokens": list(profile.tokens),
                "source_pub_ids": list(profile.source_pub_ids),
            }, ensure_ascii=False) + "\n")
    report = {
        "current_year": current_year,
        "policy": {
            "inactivity_window": policy.inactivity_window,
            "veteran_window": policy.veteran_window,
            "min_prior_papers": policy.min_prior_papers,
        },
        "kept": kept,
        "excluded": [{"reviewer_id": rid, "reason": reason} for rid, reason in excluded],
    }
    with open(out_dir / "filter_report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _info(f"ingested {len(publications)} publications; "
          f"kept {len(kept)} reviewers, excluded {len(excluded)}")
    return 0


def cmd_train(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    _require(cfg, "output")
    if cfg.publications is None and args.text_corpus is None:
        raise UsageError("need --publications and/or --text-corpus to train on")
    sentences = []
    if cfg.publications is not None:
        publications = corpus.load_records(cfg.publications, "publications")
        for pub in sorted(publications, key=lambda p: (p.year, p.pub_id)):
            tokens = corpus.tokenize(pub.abstract_text)
            if tokens:
                sentences.append(tokens)
    if args.text_corpus is not None:
        with open(args.text_corpus, encoding="utf-8") as fh:
            for line in fh:
                tokens = corpus.tokenize(line)
                if tokens:
                    sentences.append(tokens)
    config = TrainConfig(
        dim=args.dim, window=args.window, negatives=args.negatives,
        epochs=args.epochs, min_count=args.min_count,
        learning_rate=args.learning_rate, seed=cfg.seed,
    )
    table, losses = train_embeddings(sentences, config, return_losses=True)
    save_embeddings(table, cfg.output)
    _info(f"trained {len(table)} vectors (dim {table.dim}) on {len(sentences)} documents; "
          f"epoch losses {losses[0]:.4f} -> {losses[-1]:.4f}")
    return 0


def _format_value(value: float | None) -> str:
    return "" if value is None else f"{value:.10g}"


def _score_row(sid: str, rid: str, method: str, num_topics: int,
               result: scoring.PairScore) -> str:
    return "\t".join((
        sid, rid, method, str(num_topics),
        _format_value(result.value),
        _format_value(result.rel_reviewer),
        _format_value(result.rel_submission),
        "" if result.k_eff is None else str(result.k_eff),
        "true" if result.degenerate else "false",
    ))


def cmd_match(cfg: PipelineConfig) -> int:
    _require(cfg, "profiles", "embeddings", "submissions", "output")
    table = load_embeddings(cfg.embeddings)
    profiles = corpus.load_records(cfg.profiles, "reviewers")
    submissions = corpus.load_records(cfg.submissions, "submissions")
    if not profiles or not submissions:
        raise UsageError("need at least one profile and one submission to match")
    stopwords = _load_stopword_set(cfg)

    scorer = scoring.BatchScorer(cfg.method, table, num_topics=cfg.num_topics,
                                 stopwords=stopwords)
    prepared_profiles = {p.reviewer_id: scorer.prepare(p.tokens) for p in profiles}
    prepared_subs = {s.submission_id: scorer.prepare(s.tokens) for s in submissions}
    reviewer_ids = sorted(prepared_profiles)
    submission_ids = sorted(prepared_subs)

    def rows_for(sid: str) -> list[str]:
        sub = prepared_subs[sid]
        return [
            _score_row(sid, rid, cfg.method, cfg.num_topics,
                       scorer.score(prepared_profiles[rid], sub))
            for rid in reviewer_ids
        ]

    if cfg.jobs == 1:
        per_submission = [rows_for(sid) for sid in submission_ids]
    else:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            per_submission = list(pool.map(rows_for, submission_ids))

    with open(cfg.output, "w", encoding="utf-8") as fh:
        fh.write("\t".join(SCORES_HEADER) + "\n")
        for rows in per_submission:
            for row in rows:
                fh.write(row + "\n")
    _info(f"scored {len(submission_ids)} submissions x {len(reviewer_ids)} reviewers "
          f"with {cfg.method}")
    return 0


def read_scores(path: str | Path):
    """Parse a scores.tsv file -> (method, num_topics, {submission: {reviewer: value}})."""
    scores: dict[str, dict[str, float]] = {}
    methods: set[str] = set()
    num_topics = 0
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != SCORES_HEADER:
            raise UsageError(f"{path}: unexpected scores header {header}")
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(SCORES_HEADER):
                raise UsageError(f"{path}: line {line_no}: wrong column count")
            sid, rid, method, k_str, value_str = parts[:5]
            methods.add(method)
            try:
                num_topics = int(k_str)
                value = float(value_str)
            except ValueError as exc:
                raise UsageError(f"{path}: line {line_no}: bad numeric field") from exc
            if rid in scores.setdefault(sid, {}):
                raise UsageError(f"{path}: line {line_no}: duplicate pair ({sid}, {rid})")
            scores[sid][rid] = value
    if not scores:
        raise UsageError(f"{path}: no score rows")
    if len(methods) != 1:
        raise UsageError(f"{path}: expected a single method, found {sorted(methods)}")
    return methods.pop(), num_topics, scores


def cmd_rank(cfg: PipelineConfig) -> int:
    _require(cfg, "scores", "output")
    if cfg.top_n < 1:
        raise UsageError("--top-n must be >= 1")
    method, _, scores = read_scores(cfg.scores)
    higher = method != scoring.METHOD_RELAXED_WMD
    with open(cfg.output, "w", encoding="utf-8") as fh:
        fh.write("submission_id\trank\treviewer_id\tscore\n")
        for sid in sorted(scores):
            ranked = evaluation.rank_reviewers(scores[sid], higher, submission_id=sid)
            for position, (rid, value) in enumerate(ranked.entries[:cfg.top_n], start=1):
                fh.write(f"{sid}\t{position}\t{rid}\t{_format_value(value)}\n")
    _info(f"ranked {len(scores)} submissions (top {cfg.top_n}, method {method})")
    return 0


def _write_eval_report(report: evaluation.EvalReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    text = report.to_text()
    (out_dir / "eval_report.txt").write_text(text, encoding="utf-8")
    with open(out_dir / "eval_report.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    sys.stdout.write(text)


def cmd_evaluate(cfg: PipelineConfig) -> int:
    _require(cfg, "qrels", "output_dir")
    judgments = evaluation.load_qrels(cfg.qrels)
    if not judgments:
        raise UsageError(f"{cfg.qrels}: qrels file is empty")

    if cfg.scores is not None:
        method, num_topics, scores = read_scores(cfg.scores)
        higher = method != scoring.METHOD_RELAXED_WMD
        grades = evaluation.grades_by_submission(judgments)
        judged_reviewers = {j.reviewer_id for j in judgments}
        missing_subs = sorted(set(grades) - set(scores))
        if missing_subs:
            raise UsageError(
                f"judged submissions missing from scores: {', '.join(missing_subs)}"
            )
        scored_reviewers = set()
        for per_sub in scores.values():
            scored_reviewers.update(per_sub)
        missing_revs = sorted(judged_reviewers - scored_reviewers)
        if missing_revs:
            raise UsageError(
                f"judged reviewers missing from scores: {', '.join(missing_revs)}"
            )
        rankings = {
            sid: evaluation.rank_reviewers(per_sub, higher, submission_id=sid)
            for sid, per_sub in scores.items()
        }
        notes = [scoring.HIDDEN_TOPIC_NOTE] if method == scoring.METHOD_HIDDEN_TOPIC else []
        report = evaluation.evaluate_rankings(
            rankings, judgments, k_list=cfg.k_list, threshold=cfg.threshold,
            method=method, num_topics=num_topics, notes=notes,
        )
    else:
        _require(cfg, "profiles", "embeddings", "submissions")
        table = load_embeddings(cfg.embeddings)
        profiles = {
            p.reviewer_id: p.tokens for p in corpus.load_records(cfg.profiles, "reviewers")
        }
        submissions = {
            s.submission_id: s.tokens
            for s in corpus.load_records(cfg.submissions, "submissions")
        }
        report = evaluation.evaluate(
            cfg.method, profiles, submissions, table, judgments,
            k_list=cfg.k_list, num_topics=cfg.num_topics, threshold=cfg.threshold,
            stopwords=_load_stopword_set(cfg),
        )
    _write_eval_report(report, Path(cfg.output_dir))
    return 0


def cmd_explain(cfg: PipelineConfig, args: argparse.Namespace) -> int:
    _require(cfg, "profiles", "embeddings", "submissions")
    if cfg.top_words < 1:
        raise UsageError("--top-words must be >= 1")
    table = load_embeddings(cfg.embeddings)
    profiles = {p.reviewer_id: p for p in corpus.load_records(cfg.profiles, "reviewers")}
    submissions = {
        s.submission_id: s for s in corpus.load_records(cfg.submissions, "submissions")
    }
    if args.reviewer_id not in profiles:
        raise UsageError(f"unknown reviewer_id {args.reviewer_id!r}")
    if args.submission_id not in submissions:
        raise UsageError(f"unknown submission_id {args.submission_id!r}")
    stopwords = _load_stopword_set(cfg)

    def tokens_of(seq):
        return [t for t in seq if t not in stopwords] if stopwords else list(seq)

    r_doc = doc_matrix(tokens_of(profiles[args.reviewer_id].tokens), table)
    s_doc = doc_matrix(tokens_of(submissions[args.submission_id].tokens), table)
    if r_doc.is_empty or s_doc.is_empty:
        which = "reviewer profile" if r_doc.is_empty else "submission"
        raise UsageError(f"the {which} has no in-vocabulary words; pair is not scorable")

    ct = common_topics(r_doc, s_doc, cfg.num_topics)
    ms = match_score(r_doc, s_doc, cfg.num_topics)
    out = sys.stdout
    out.write(
        f"submission {args.submission_id}  reviewer {args.reviewer_id}  "
        f"K {cfg.num_topics} -> k_eff {ct.k_eff}\n"
    )
    out.write(
        f"score {ms.score:.6f}  rel_reviewer {ms.rel_reviewer:.6f}  "
        f"rel_submission {ms.rel_submission:.6f}\n"
    )
    sims = (table.vectors @ ct.p_star) ** 2  # squared cosine of every vocab word to each topic
    for k in range(ct.k_eff):
        order = sorted(range(len(table.words)), key=lambda i: (-sims[i, k], table.words[i]))
        words = ", ".join(
            f"{table.words[i]} {sims[i, k]:.3f}" for i in order[:cfg.top_words]
        )
        out.write(f"topic {k + 1} (cosine {ct.cosines[k]:.4f}): {words}\n")
    if args.output is not None:
        payload = {
            "submission_id": args.submission_id,
            "reviewer_id": args.reviewer_id,
            "k_eff": ct.k_eff,
            "cosines": [float(c) for c in ct.cosines],
            "topics": [[float(x) for x in col] for col in ct.p_star.T],
        }
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser, *options: str) -> None:
    add = parser.add_argument
    if "method" in options:
        add("--method", choices=scoring.METHODS, default=None,
            help="matching method (default common-topic)")
    if "k" in options:
        add("--k", dest="num_topics", type=int, default=None,
            help="number of topics K (default 10)")
    if "jobs" in options:
        add("--jobs", type=int, default=None, help="worker threads (default 1)")
    if "stopwords" in options:
        add("--stopwords", type=Path, default=None, help="stopword file, one token per line")
    if "seed" in options:
        add("--seed", type=int, default=None, help="random seed (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revmatch",
        description="Match submissions to reviewers through common topic subspaces.",
    )
    parser.add_argument("--config", type=Path, default=None,
                        help="key=value config file; flags override file values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build reviewer profiles and apply the eligibility filter")
    p.add_argument("--publications", type=Path, default=None)
    p.add_argument("--output-dir", type=Path, default=None)
    p.add_argument("--current-year", type=int, default=None,
                   help="filter reference year (default: latest publication year)")
    p.add_argument("--inactivity-window", type=int, default=None)
    p.add_argument("--veteran-window", type=int, default=None)
    p.add_argument("--min-prior-papers", type=int, default=None)
    p.set_defaults(func=lambda cfg, args: cmd_ingest(cfg))

    p = sub.add_parser("train-embeddings", help="train CBOW embeddings on abstracts")
    p.add_argument("--publications", type=Path, default=None)
    p.add_argument("--text-corpus", type=Path, default=None,
                   help="extra plain-text corpus, one document per line")
    p.add_argument("--output", type=Path, default=None)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--learning-rate", type=float, default=0.025)
    _add_common(p, "seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("match", help="score every (submission, reviewer) pair")
    p.add_argument("--profiles", type=Path, default=None)
    p.add_argument("--embeddings", type=Path, default=None)
    p.add_argument("--submissions", type=Path, default=None)
    p.add_argument("--output", type=Path, default=None)
    _add_common(p, "method", "k", "jobs", "stopwords")
    p.set_defaults(func=lambda cfg, args: cmd_match(cfg))

    p = sub.add_parser("rank", help="emit top-n reviewers per submission from a scores file")
    p.add_argument("--scores", type=Path, default=None)
    p.add_argument("--top-n", type=int, default=None)
    p.add_argument("--output", type=Path, default=None)
    p.set_defaults(func=lambda cfg, args: cmd_rank(cfg))

    p = sub.add_parser("evaluate", help="compute mean P@k against graded judgments")
    p.add_argument("--qrels", type=Path, default=None)
    p.add_argument("--scores", type=Path, default=None,
                   help="precomputed scores.tsv; otherwise score live")
    p.add_argument("--profiles", type=Path, default=None)
    p.add_argument("--embeddings", type=Path, default=None)
    p.add_argument("--submissions", type=Path, default=None)
    p.add_argument("--output-dir", type=Path, default=None)
    p.add_argument("--at", dest="k_list", type=_parse_k_list, default=None,
                   help="comma-separated precision cutoffs (default 5,10)")
    p.add_argument("--threshold", type=int, default=None,
                   help="relevance grade threshold (default 2)")
    _add_common(p, "method", "k", "stopwords")
    p.set_defaults(func=lambda cfg, args: cmd_evaluate(cfg))

    p = sub.add_parser("explain-topics", help="inspect the common topics of one pair")
    p.add_argument("--profiles", type=Path, default=None)
    p.add_argument("--embeddings", type=Path, default=None)
    p.add_argument("--submissions", type=Path, default=None)
    p.add_argument("--submission-id", required=True)
    p.add_argument("--reviewer-id", required=True)
    p.add_argument("--top-words", type=int, default=None)
    p.add_argument("--output", type=Path, default=None,
                   help="also write the topic vectors as JSON")
    _add_common(p, "k", "stopwords")
    p.set_defaults(func=cmd_explain)

    return parser


_INPUT_ERRORS = (
    UsageError,
    corpus.RecordFormatError,
    EmbeddingFormatError,
    evaluation.QrelsFormatError,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
    ValueError,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return args.func(cfg, args)
    except _INPUT_ERRORS as exc:
        print(f"revmatch: error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
