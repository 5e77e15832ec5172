"""Word embeddings: loading, training, and document matrices.

All stored vectors are unit length; a document becomes the matrix whose
columns are the vectors of its in-vocabulary tokens, in token order and with
duplicates preserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

_NORM_TOL = 1e-6
_ZERO_NORM = 1e-12


class EmbeddingFormatError(ValueError):
    """An embedding file violates the word2vec text format."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for CBOW training with negative sampling.

    The learning rate decays linearly from `learning_rate` to 1e-4 over all
    epochs. `seed` fixes every random choice (init, negative draws), so equal
    configs over equal corpora produce identical tables.
    """

    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    min_count: int = 5
    learning_rate: float = 0.025
    seed: int = 1

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.window < 1 or self.negatives < 1 or self.epochs < 1 or self.min_count < 1:
            raise ValueError("window, negatives, epochs and min_count must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


class EmbeddingTable:
    """Immutable vocabulary of unit-norm d-dimensional word vectors."""

    def __init__(self, words: Sequence[str], vectors: np.ndarray, dropped: Sequence[str] = ()):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or len(words) != vectors.shape[0]:
            raise ValueError("need one vector per word")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms < _ZERO_NORM):
            raise ValueError("zero vectors must be dropped before construction")
        self.words: tuple[str, ...] = tuple(words)
        self.vectors: np.ndarray = vectors / norms[:, None]
        self.vectors.setflags(write=False)
        self.dropped: tuple[str, ...] = tuple(dropped)
        self._index: dict[str, int] = {w: i for i, w in enumerate(self.words)}
        if len(self._index) != len(self.words):
            raise ValueError("duplicate words in table")

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[str, np.ndarray]]) -> "EmbeddingTable":
        """Build a table, silently dropping zero vectors but recording them."""
        words, vectors, dropped = [], [], []
        for word, vec in entries:
            vec = np.asarray(vec, dtype=np.float64)
            if np.linalg.norm(vec) < _ZERO_NORM:
                dropped.append(word)
            else:
                words.append(word)
                vectors.append(vec)
        if not words:
            raise ValueError("no nonzero vectors to build a table from")
        return cls(words, np.vstack(vectors), dropped=dropped)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self._index[word]]

    def indices(self, tokens: Iterable[str]) -> list[int]:
        """Table row indices of the in-vocabulary tokens, in order."""
        idx = self._index
        return [idx[t] for t in tokens if t in idx]


@dataclass(frozen=True)
class DocumentMatrix:
    """Unit-norm word vectors of one document, stacked as columns.

    `matrix` has shape (dim, n_words); column order follows token order and
    repeated tokens contribute repeated columns. Tokens without an embedding
    are dropped and counted in `oov_count`.
    """

    dim: int
    matrix: np.ndarray
    kept_tokens: tuple[str, ...]
    oov_count: int = 0

    @property
    def n_words(self) -> int:
        return len(self.kept_tokens)

    @property
    def is_empty(self) -> bool:
        return self.matrix.shape[1] == 0

    @classmethod
    def from_columns(cls, columns: np.ndarray, tokens: Sequence[str] | None = None,
                     oov_count: int = 0) -> "DocumentMatrix":
        """Wrap an existing (dim, n) array of unit columns; validates norms."""
        columns = np.asarray(columns, dtype=np.float64)
        if columns.ndim != 2:
            raise ValueError("columns must be a 2-d array")
        if columns.shape[1] > 0:
            norms = np.linalg.norm(columns, axis=0)
            if np.any(np.abs(norms - 1.0) > _NORM_TOL):
                raise ValueError("columns must have unit norm")
        if tokens is None:
            tokens = tuple(f"w{i}" for i in range(columns.shape[1]))
        if len(tokens) != columns.shape[1]:
            raise ValueError("one token per column required")
        return cls(dim=columns.shape[0], matrix=columns, kept_tokens=tuple(tokens),
                   oov_count=oov_count)


def doc_matrix(tokens: Sequence[str], table: EmbeddingTable) -> DocumentMatrix:
    """Stack the embeddings of in-vocabulary tokens as matrix columns.

    Out-of-vocabulary tokens are dropped and counted; an empty result is
    legal and left to the caller to handle.
    """
    kept = [t for t in tokens if t in table]
    if kept:
        matrix = table.vectors[table.indices(kept)].T.copy()
    else:
        matrix = np.zeros((table.dim, 0))
    return DocumentMatrix(
        dim=table.dim,
        matrix=matrix,
        kept_tokens=tuple(kept),
        oov_count=len(tokens) - len(kept),
    )


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read a word2vec text file: header "vocab_size dim", then one
    "word v1 ... v_dim" line per vector.

    Vectors are renormalized to unit length; zero vectors are dropped and
    reported via `table.dropped`. Format violations raise
    EmbeddingFormatError naming the offending row.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingFormatError(f"{path}: header must be 'vocab_size dim'")
        try:
            vocab_size, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise EmbeddingFormatError(f"{path}: non-integer header {header}") from exc
        entries: list[tuple[str, np.ndarray]] = []
        seen: set[str] = set()
        for row, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise EmbeddingFormatError(
                    f"{path}: row {row}: expected {dim} components, got {len(parts) - 1}"
                )
            word = parts[0]
            if word in seen:
                raise EmbeddingFormatError(f"{path}: row {row}: duplicate word {word!r}")
            seen.add(word)
            try:
                vec = np.array([float(p) for p in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingFormatError(
                    f"{path}: row {row}: non-numeric component"
                ) from exc
            entries.append((word, vec))
    if len(entries) != vocab_size:
        raise EmbeddingFormatError(
            f"{path}: header promises {vocab_size} vectors, file has {len(entries)}"
        )
    return EmbeddingTable.from_entries(entries)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    """Write a table in the word2vec text format (8 significant digits)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for word, vec in zip(table.words, table.vectors):
            comps = " ".join(f"{x:.8g}" for x in vec)
            fh.write(f"{word} {comps}\n")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class _CbowTrainer:
    """Plain-numpy CBOW with negative sampling.

    Center words are predicted from the mean of their context vectors;
    negatives are drawn from the unigram distribution raised to 3/4. Single
    threaded on purpose: the seed fully determines the result.
    """

    MIN_ALPHA = 1e-4

    def __init__(self, sentences: Sequence[Sequence[str]], config: TrainConfig):
        self.config = config
        counts: dict[str, int] = {}
        for sentence in sentences:
            for token in sentence:
                counts[token] = counts.get(token, 0) + 1
        vocab = sorted(
            (w for w, c in counts.items() if c >= config.min_count),
            key=lambda w: (-counts[w], w),
        )
        if not vocab:
            raise ValueError(
                f"no word reaches min_count={config.min_count}; effective vocabulary is empty"
            )
        self.vocab = vocab
        self.word_index = {w: i for i, w in enumerate(vocab)}
        # sentences reduced to in-vocabulary indices; context windows are
        # formed over the surviving words
        self.sentences = [
            ids for ids in (
                [self.word_index[t] for t in s if t in self.word_index] for s in sentences
            ) if len(ids) >= 2
        ]
        freq = np.array([counts[w] for w in vocab], dtype=np.float64)
        self.neg_cdf = np.cumsum(freq ** 0.75)
        self.neg_cdf /= self.neg_cdf[-1]
        self.rng = np.random.default_rng(config.seed)
        self.syn0 = (self.rng.random((len(vocab), config.dim)) - 0.5) / config.dim
        self.syn1 = np.zeros((len(vocab), config.dim))

    def train(self) -> list[float]:
        """Run all epochs; returns the mean loss per epoch."""
        cfg = self.config
        total_words = sum(len(s) for s in self.sentences) * cfg.epochs
        if total_words == 0:
            raise ValueError("corpus has no trainable sentences (need >= 2 in-vocab words)")
        processed = 0
        epoch_losses = []
        for _ in range(cfg.epochs):
            loss_sum = 0.0
            loss_n = 0
            for ids in self.sentences:
                alpha = max(self.MIN_ALPHA, cfg.learning_rate * (1.0 - processed / total_words))
                loss_sum += self._train_sentence(ids, alpha)
                loss_n += len(ids)
                processed += len(ids)
            epoch_losses.append(loss_sum / loss_n)
        return epoch_losses

    def _draw_negatives(self, center: int) -> np.ndarray:
        negs = np.empty(self.config.negatives, dtype=np.int64)
        filled = 0
        while filled < self.config.negatives:
            cand = int(np.searchsorted(self.neg_cdf, self.rng.random(), side="right"))
            if cand != center:
                negs[filled] = cand
                filled += 1
        return negs

    def _train_sentence(self, ids: list[int], alpha: float) -> float:
        window = self.config.window
        loss = 0.0
        for pos, center in enumerate(ids):
            context = ids[max(0, pos - window):pos] + ids[pos + 1:pos + 1 + window]
            if not context:
                continue
            l1 = self.syn0[context].mean(axis=0)
            targets = np.concatenate(([center], self._draw_negatives(center)))
            labels = np.zeros(len(targets))
            labels[0] = 1.0
            l2 = self.syn1[targets]
            prob = _sigmoid(l2 @ l1)
            grad = (labels - prob) * alpha
            # full error is fed back to every context vector (mean-context
            # convention of the original CBOW implementation)
            neu1e = grad @ l2
            self.syn1[targets] += np.outer(grad, l1)
            self.syn0[context] += neu1e
            eps = 1e-10
            loss += -np.log(prob[0] + eps) - np.sum(np.log(1.0 - prob[1:] + eps))
        return loss

    def table(self) -> EmbeddingTable:
        return EmbeddingTable.from_entries(zip(self.vocab, self.syn0))


def train_embeddings(
    sentences: Sequence[Sequence[str]],
    config: TrainConfig,
    return_losses: bool = False,
):
    """Train CBOW embeddings on tokenized sentences.

    Deterministic for a fixed config and corpus. Raises ValueError when the
    corpus is empty or no word reaches `min_count`. With `return_losses`,
    also returns the per-epoch mean loss trace.
    """
    if not sentences:
        raise ValueError("training corpus is empty")
    trainer = _CbowTrainer(sentences, config)
    losses = trainer.train()
    table = trainer.table()
    if return_losses:
        return table, losses
    return table
