import numpy as np
import pytest

from revmatch.embeddings import DocumentMatrix


def unit_columns(rng: np.random.Generator, d: int, n: int) -> np.ndarray:
    cols = rng.standard_normal((d, n))
    return cols / np.linalg.norm(cols, axis=0)


def random_doc(rng: np.random.Generator, d: int, n: int) -> DocumentMatrix:
    return DocumentMatrix.from_columns(unit_columns(rng, d, n))


def basis_doc(d: int, indices) -> DocumentMatrix:
    """Document whose words are the given canonical basis vectors."""
    cols = np.zeros((d, len(indices)))
    for j, i in enumerate(indices):
        cols[i, j] = 1.0
    return DocumentMatrix.from_columns(cols)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
