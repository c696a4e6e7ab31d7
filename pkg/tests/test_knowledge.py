import random

import pytest

from ocuflow.knowledge import (
    DuplicateSourceError,
    EmptyDocumentError,
    EmptyQueryError,
    ingest,
    ingest_dir,
    tokenize,
)
from ocuflow.gateway.runtime import data_path


def words(n, prefix="w"):
    return " ".join(f"{prefix}{i % 97}" for i in range(n))


@pytest.fixture(scope="module")
def standin_index():
    return ingest_dir(data_path("kb"))


class TestIngest:
    def test_two_thousand_word_documents_yield_eight_passages(self):
        # 256-word windows, 64-word overlap, last window absorbs the tail:
        # a 1000-word document chunks to 4 passages, so 2 documents -> 8.
        index = ingest([("a", words(1000)), ("b", words(1000, "x"))])
        assert len(index) == 8

    def test_short_document_is_one_passage(self):
        index = ingest([("a", "tiny document")])
        assert len(index) == 1
        assert index.passages[0].passage_id == "a:0000"

    def test_full_coverage_no_words_dropped(self):
        text = " ".join(f"u{i}" for i in range(1000))  # unique words
        index = ingest([("a", text)])
        covered = set()
        for p in index.passages:
            covered.update(p.text.split())
        assert covered == set(text.split())

    def test_duplicate_source(self):
        with pytest.raises(DuplicateSourceError):
            ingest([("a", "x y z"), ("a", "p q r")])

    def test_empty_document(self):
        with pytest.raises(EmptyDocumentError):
            ingest([("a", "   ")])

    def test_reingest_hash_stable(self):
        docs = [("a", words(700)), ("b", words(450, "y"))]
        assert ingest(docs).content_hash() == ingest(docs).content_hash()

    def test_save_load_round_trip(self, tmp_path, standin_index):
        path = tmp_path / "index.json"
        standin_index.save(path)
        from ocuflow.knowledge import Index

        loaded = Index.load(path)
        assert loaded.content_hash() == standin_index.content_hash()


class TestRetrieve:
    def brute_force_top(self, index, query, k):
        scored = []
        counts = {}
        for t in tokenize(query):
            counts[t] = counts.get(t, 0) + 1
        for p in index.passages:
            tf = {}
            for t in tokenize(p.text):
                tf[t] = tf.get(t, 0) + 1
            score = sum(q * tf.get(t, 0) * index._idf(t) for t, q in counts.items())
            if score > 0:
                scored.append((score, p.passage_id))
        scored.sort(key=lambda sp: (-sp[0], sp[1]))
        return [pid for _, pid in scored[:k]]

    def test_macular_hole_passages_rank_first(self, standin_index):
        hits = standin_index.retrieve("macular hole staging", k=5)
        assert hits, "stand-in corpus must mention macular hole staging"
        assert "macular hole" in hits[0].passage.text.lower()
        with_term = [h for h in hits if "macular hole" in h.passage.text.lower()]
        without = [h for h in hits if "macular hole" not in h.passage.text.lower()]
        if without:
            assert min(h.score for h in with_term[:1]) > max(h.score for h in without)

    def test_matches_brute_force_scan(self, standin_index):
        for query in ("macular hole staging", "diabetic retinopathy laser",
                      "arteriovenous nicking cardiovascular risk", "drusen"):
            hits = standin_index.retrieve(query, k=7)
            assert [h.passage.passage_id for h in hits] == \
                self.brute_force_top(standin_index, query, 7)

    def test_k_larger_than_corpus_returns_everything_ranked(self):
        index = ingest([("a", "alpha beta gamma"), ("b", "alpha delta"),
                        ("c", "alpha beta")])
        hits = index.retrieve("alpha", k=50)
        assert len(hits) == 3
        assert [h.rank for h in hits] == [1, 2, 3]
        scores = [h.score for h in hits]
        assert scores == sorted(scores, reverse=True)

    def test_empty_query(self, standin_index):
        with pytest.raises(EmptyQueryError):
            standin_index.retrieve("", k=3)
        with pytest.raises(EmptyQueryError):
            standin_index.retrieve("   !!  ", k=3)

    def test_prefix_property(self, standin_index):
        rng = random.Random(11)
        vocabulary = ["retina", "macular", "vessel", "laser", "drusen", "glaucoma",
                      "myopia", "hole", "risk", "edema"]
        for _ in range(30):
            query = " ".join(rng.sample(vocabulary, rng.randint(1, 4)))
            for k in (1, 2, 5):
                small = standin_index.retrieve(query, k=k)
                large = standin_index.retrieve(query, k=k + 1)
                assert [h.passage.passage_id for h in small] == \
                    [h.passage.passage_id for h in large][:k]

    def test_ranks_contiguous_and_sorted(self, standin_index):
        hits = standin_index.retrieve("retinal vessel analysis", k=10)
        assert [h.rank for h in hits] == list(range(1, len(hits) + 1))
        scores = [h.score for h in hits]
        assert scores == sorted(scores, reverse=True)


class TestGround:
    def test_verbatim_claim_supported(self, standin_index):
        passage = standin_index.passages[0]
        claim = " ".join(passage.text.split()[:12])
        hits = standin_index.retrieve(claim, k=3)
        result = standin_index.ground(claim, hits)
        assert result.supported
        assert result.citations[0][0] == passage.source_id

    def test_zero_overlap_unsupported(self, standin_index):
        claim = "zzz qqq xyzzy plugh"
        hits = []
        result = standin_index.ground(claim, hits)
        assert not result.supported
        assert result.citations == ()

    def test_floor_is_inclusive(self):
        # all four terms share one document frequency, so the floor
        # (25% of the 4-term self-match) equals one term's score exactly
        index = ingest([
            ("d1", "aterm nothing else here"),
            ("d2", "bterm other words again"),
            ("d3", "cterm more filler text"),
            ("d4", "dterm final filler words"),
        ])
        claim = "aterm bterm cterm dterm"
        hits = index.retrieve(claim, k=4)
        floor = 0.25 * index.self_match_score(claim)
        assert any(abs(h.score - floor) < 1e-12 for h in hits)
        result = index.ground(claim, hits)
        assert result.supported
        assert len(result.citations) == 4  # every hit sits exactly at the floor
