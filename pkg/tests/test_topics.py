import numpy as np
import pytest

from conftest import basis_doc, random_doc, unit_columns
from _oracles import best_feasible_objective, oracle_match_score

from revmatch.embeddings import DocumentMatrix
from revmatch.topics import (
    common_topics,
    doc_topic_relevance,
    match_score,
    orthonormal_basis,
    pair_topic_similarity,
    word_topic_relevance,
)


class TestCommonTopics:
    def test_identical_one_word_documents(self):
        doc = basis_doc(3, [0])
        ct = common_topics(doc, doc, 1)
        assert ct.k_eff == 1
        assert ct.cosines == pytest.approx([1.0], abs=1e-12)
        assert np.abs(ct.p_star[:, 0]) == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)

    def test_orthogonal_one_word_documents(self):
        r = basis_doc(3, [0])
        s = basis_doc(3, [1])
        ct = common_topics(r, s, 1)
        assert ct.cosines == pytest.approx([0.0], abs=1e-12)

    def test_objective_matches_ascent_oracle(self, rng):
        r = random_doc(rng, 6, 4)
        s = random_doc(rng, 6, 3)
        ct = common_topics(r, s, 2)
        closed = float(np.sum(ct.cosines))
        ascent = best_feasible_objective(r.matrix, s.matrix, 2, rng, restarts=200)
        assert closed == pytest.approx(ascent, abs=1e-6)

    def test_topic_columns_live_in_document_spans(self, rng):
        r = random_doc(rng, 7, 4)
        s = random_doc(rng, 7, 3)
        ct = common_topics(r, s, 3)
        u_r = orthonormal_basis(r.matrix)
        u_s = orthonormal_basis(s.matrix)
        res_p = ct.p_star - u_r @ (u_r.T @ ct.p_star)
        res_q = ct.q_star - u_s @ (u_s.T @ ct.q_star)
        assert np.abs(res_p).max() < 1e-6
        assert np.abs(res_q).max() < 1e-6

    def test_orthonormality_and_cosine_order(self, rng):
        r = random_doc(rng, 8, 5)
        s = random_doc(rng, 8, 4)
        ct = common_topics(r, s, 4)
        eye = np.eye(ct.k_eff)
        assert np.abs(ct.p_star.T @ ct.p_star - eye).max() < 1e-8
        assert np.abs(ct.q_star.T @ ct.q_star - eye).max() < 1e-8
        assert all(np.diff(ct.cosines) <= 1e-12)
        assert np.all(ct.cosines >= -1e-9)
        assert np.all(ct.cosines <= 1 + 1e-9)

    def test_k_eff_shrinks_to_rank(self, rng):
        r = random_doc(rng, 6, 2)
        s = random_doc(rng, 6, 4)
        ct = common_topics(r, s, 5)
        assert ct.k_requested == 5
        assert ct.k_eff == 2

    def test_monotone_objective_in_k(self, rng):
        r = random_doc(rng, 8, 5)
        s = random_doc(rng, 8, 5)
        totals = [float(np.sum(common_topics(r, s, k).cosines)) for k in (1, 2, 3, 4, 5)]
        assert all(b >= a - 1e-12 for a, b in zip(totals, totals[1:]))

    def test_deterministic_output(self, rng):
        r = random_doc(rng, 6, 4)
        s = random_doc(rng, 6, 3)
        ct1 = common_topics(r, s, 2)
        ct2 = common_topics(r, s, 2)
        assert np.array_equal(ct1.p_star, ct2.p_star)
        assert np.array_equal(ct1.q_star, ct2.q_star)

    def test_empty_document_is_an_error(self, rng):
        empty = DocumentMatrix.from_columns(np.zeros((4, 0)))
        full = random_doc(rng, 4, 2)
        with pytest.raises(ValueError, match="empty document"):
            common_topics(empty, full, 1)

    def test_dim_mismatch_is_an_error(self, rng):
        with pytest.raises(ValueError, match="dimension mismatch"):
            common_topics(random_doc(rng, 4, 2), random_doc(rng, 5, 2), 1)


class TestPairTopicSimilarity:
    def test_self_similarity_counts_columns(self, rng):
        p = unit_columns(rng, 5, 3)
        assert pair_topic_similarity(p, p) == pytest.approx(3.0, abs=1e-12)

    def test_orthogonal_columns_sum_to_zero(self):
        p = np.eye(4)[:, :2]
        q = np.eye(4)[:, 2:]
        assert pair_topic_similarity(p, q) == pytest.approx(0.0, abs=1e-12)

    def test_consistent_with_common_topics_cosines(self, rng):
        r = random_doc(rng, 7, 5)
        s = random_doc(rng, 7, 4)
        ct = common_topics(r, s, 3)
        assert pair_topic_similarity(ct.p_star, ct.q_star) == pytest.approx(
            float(np.sum(ct.cosines)), abs=1e-9
        )

    def test_zero_column_is_an_error(self):
        p = np.eye(3)[:, :2]
        q = p.copy()
        q[:, 1] = 0.0
        with pytest.raises(ValueError, match="zero column"):
            pair_topic_similarity(p, q)


class TestWordTopicRelevance:
    def test_word_inside_span(self):
        topics = np.eye(3)[:, :2]
        assert word_topic_relevance(topics[:, 0], topics) == pytest.approx(1.0)

    def test_word_orthogonal_to_span(self):
        topics = np.eye(3)[:, :2]
        assert word_topic_relevance(np.array([0.0, 0.0, 1.0]), topics) == 0.0

    def test_diagonal_word_two_axis_topics(self):
        # projection of (1,1,1)/sqrt(3) onto the e1,e2 plane keeps 2/3 of the mass
        topics = np.eye(3)[:, :2]
        w = np.ones(3) / np.sqrt(3.0)
        assert word_topic_relevance(w, topics) == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_non_unit_word_is_an_error(self):
        topics = np.eye(3)[:, :1]
        with pytest.raises(ValueError, match="unit norm"):
            word_topic_relevance(np.array([1.0, 1.0, 0.0]), topics)


class TestDocTopicRelevance:
    def test_in_span_document_hits_one(self):
        topics = np.eye(4)[:, :2]
        doc = basis_doc(4, [0, 1, 0])
        assert doc_topic_relevance(doc, topics) == 1.0

    def test_orthogonal_document_hits_zero(self):
        topics = np.eye(4)[:, :2]
        doc = basis_doc(4, [2, 3])
        assert doc_topic_relevance(doc, topics) == 0.0

    def test_column_duplication_leaves_mean_unchanged(self, rng):
        doc = random_doc(rng, 5, 3)
        topics = orthonormal_basis(unit_columns(rng, 5, 2))
        doubled = DocumentMatrix.from_columns(np.hstack([doc.matrix, doc.matrix]))
        assert doc_topic_relevance(doubled, topics) == pytest.approx(
            doc_topic_relevance(doc, topics), abs=1e-12
        )

    def test_empty_document_is_an_error(self):
        with pytest.raises(ValueError, match="empty"):
            doc_topic_relevance(DocumentMatrix.from_columns(np.zeros((3, 0))), np.eye(3))


class TestMatchScore:
    def test_identical_documents_score_equals_relevance(self, rng):
        doc = random_doc(rng, 6, 4)
        ms = match_score(doc, doc, 6)
        assert ms.rel_reviewer == pytest.approx(ms.rel_submission, abs=1e-12)
        assert ms.score == pytest.approx(ms.rel_reviewer, abs=1e-12)

    def test_self_match_at_full_rank_is_one(self, rng):
        doc = random_doc(rng, 6, 4)
        ms = match_score(doc, doc, 4)
        assert ms.score == pytest.approx(1.0, abs=1e-8)

    def test_orthogonal_spans_score_zero(self):
        r = basis_doc(4, [0, 1])
        s = basis_doc(4, [2, 3])
        ms = match_score(r, s, 2)
        assert ms.rel_submission == pytest.approx(0.0, abs=1e-12)
        assert ms.score == pytest.approx(0.0, abs=1e-12)

    def test_matches_independent_oracle(self, rng):
        r = random_doc(rng, 4, 3)
        s = random_doc(rng, 4, 3)
        ms = match_score(r, s, 2)
        rel_r, rel_s, score = oracle_match_score(r.matrix, s.matrix, 2)
        assert ms.rel_reviewer == pytest.approx(rel_r, abs=1e-8)
        assert ms.rel_submission == pytest.approx(rel_s, abs=1e-8)
        assert ms.score == pytest.approx(score, abs=1e-8)

    def test_empty_document_degenerates_to_zero(self, rng):
        empty = DocumentMatrix.from_columns(np.zeros((4, 0)))
        full = random_doc(rng, 4, 2)
        ms = match_score(full, empty, 2)
        assert ms.degenerate
        assert ms.score == 0.0
        assert ms.k_eff == 0

    def test_precomputed_bases_give_same_result(self, rng):
        r = random_doc(rng, 6, 4)
        s = random_doc(rng, 6, 3)
        plain = match_score(r, s, 2)
        cached = match_score(
            r, s, 2,
            r_basis=orthonormal_basis(r.matrix),
            s_basis=orthonormal_basis(s.matrix),
        )
        assert cached == plain


class TestInvariants:
    """Fuzzed invariants of the topic extraction and scoring pipeline."""

    def test_permutation_invariance(self, rng):
        for _ in range(25):
            d = int(rng.integers(3, 9))
            m = int(rng.integers(1, 7))
            n = int(rng.integers(1, 7))
            k = int(rng.integers(1, 4))
            r = random_doc(rng, d, m)
            s = random_doc(rng, d, n)
            ms = match_score(r, s, k)
            perm = rng.permutation(m)
            r_shuffled = DocumentMatrix.from_columns(r.matrix[:, perm])
            ms_shuffled = match_score(r_shuffled, s, k)
            assert ms_shuffled.rel_reviewer == pytest.approx(ms.rel_reviewer, abs=1e-9)
            assert ms_shuffled.rel_submission == pytest.approx(ms.rel_submission, abs=1e-9)
            assert ms_shuffled.score == pytest.approx(ms.score, abs=1e-9)
            cos = common_topics(r, s, k).cosines
            cos_shuffled = common_topics(r_shuffled, s, k).cosines
            assert cos_shuffled == pytest.approx(cos, abs=1e-9)

    def test_duplication_invariance(self, rng):
        for _ in range(25):
            d = int(rng.integers(3, 9))
            m = int(rng.integers(1, 6))
            r = random_doc(rng, d, m)
            s = random_doc(rng, d, int(rng.integers(1, 6)))
            k = int(rng.integers(1, 4))
            doubled = DocumentMatrix.from_columns(np.hstack([r.matrix, r.matrix]))
            assert common_topics(doubled, s, k).cosines == pytest.approx(
                common_topics(r, s, k).cosines, abs=1e-9
            )
            assert match_score(doubled, s, k).rel_reviewer == pytest.approx(
                match_score(r, s, k).rel_reviewer, abs=1e-9
            )

    def test_sign_flip_invariance(self, rng):
        for _ in range(25):
            d = int(rng.integers(3, 8))
            r = random_doc(rng, d, int(rng.integers(2, 6)))
            s = random_doc(rng, d, int(rng.integers(2, 6)))
            ct = common_topics(r, s, 2)
            flipped = ct.p_star.copy()
            flipped[:, 0] *= -1.0
            assert doc_topic_relevance(r, flipped) == pytest.approx(
                doc_topic_relevance(r, ct.p_star), abs=1e-12
            )
            assert doc_topic_relevance(s, flipped) == pytest.approx(
                doc_topic_relevance(s, ct.p_star), abs=1e-12
            )

    def test_values_stay_in_range(self, rng):
        for _ in range(50):
            d = int(rng.integers(2, 10))
            r = random_doc(rng, d, int(rng.integers(1, 8)))
            s = random_doc(rng, d, int(rng.integers(1, 8)))
            ms = match_score(r, s, int(rng.integers(1, 5)))
            assert 0.0 <= ms.rel_reviewer <= 1.0
            assert 0.0 <= ms.rel_submission <= 1.0
            assert 0.0 <= ms.score <= 1.0
            low, high = sorted((ms.rel_reviewer, ms.rel_submission))
            assert low - 1e-12 <= ms.score <= high + 1e-12

    def test_closed_form_beats_feasible_samples(self, rng):
        for _ in range(10):
            d = int(rng.integers(3, 9))
            m = int(rng.integers(2, 7))
            n = int(rng.integers(2, 7))
            r = random_doc(rng, d, m)
            s = random_doc(rng, d, n)
            ct = common_topics(r, s, 2)
            k = ct.k_eff
            closed = float(np.sum(ct.cosines[:k]))
            ascent = best_feasible_objective(r.matrix, s.matrix, k, rng, restarts=40)
            assert closed >= ascent - 1e-6
