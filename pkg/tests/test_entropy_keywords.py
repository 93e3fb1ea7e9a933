import math

import numpy as np
import pytest

from ewomcausal.corpus import Document, LabeledCorpus
from ewomcausal.entropy_keywords import (
    CountMatrix,
    EntropyTable,
    KeywordConfig,
    KeywordSet,
    ProbabilityTable,
    count_occurrences,
    read_keyword_csv,
    select_keywords,
    select_negative_keywords,
    topic_entropies,
    word_entropy,
    word_probabilities,
    write_keyword_csv,
)

from oracles import brute_force_keywords, random_corpus


def make_corpus(doc_tokens, labels, topics):
    docs = tuple(
        Document(id=i, text=" ".join(toks), tokens=tuple(toks))
        for i, toks in doc_tokens.items()
    )
    return LabeledCorpus(
        documents=docs,
        labels={i: frozenset(v) for i, v in labels.items()},
        topic_catalog=tuple((t, t) for t in topics),
    )


class TestCounts:
    def test_direct_count(self):
        corpus = make_corpus(
            {"d1": ["a", "a", "b"], "d2": ["a"]},
            {"d1": {"T1"}, "d2": {"T2"}},
            ["T1", "T2"],
        )
        cm = count_occurrences(corpus, "T1")
        assert cm.m_pos == 1 and cm.m_neg == 1
        np.testing.assert_array_equal(cm.n_pos["a"], [2])
        np.testing.assert_array_equal(cm.n_pos["b"], [1])
        np.testing.assert_array_equal(cm.n_neg["a"], [1])
        assert "b" not in cm.n_neg

    def test_absent_word_absent_from_maps(self):
        corpus = make_corpus(
            {"d1": ["a"], "d2": ["b"]}, {"d1": {"T1"}, "d2": {"T2"}}, ["T1", "T2"]
        )
        cm = count_occurrences(corpus, "T1")
        assert "zz" not in cm.n_pos and "zz" not in cm.n_neg

    def test_repeated_across_documents(self):
        tokens = {f"d{i}": ["ice"] for i in range(4)}
        tokens["neg"] = ["other"]
        labels = {f"d{i}": {"T1"} for i in range(4)}
        labels["neg"] = {"T2"}
        corpus = make_corpus(tokens, labels, ["T1", "T2"])
        cm = count_occurrences(corpus, "T1")
        np.testing.assert_array_equal(cm.n_pos["ice"], [1, 1, 1, 1])

    def test_zero_positive_documents(self):
        corpus = make_corpus({"d1": ["a"]}, {"d1": {"T1"}}, ["T1", "T2"])
        with pytest.raises(ValueError, match="no positive"):
            count_occurrences(corpus, "T2")

    def test_topic_not_in_catalog(self):
        corpus = make_corpus({"d1": ["a"]}, {"d1": {"T1"}}, ["T1"])
        with pytest.raises(ValueError, match="catalog"):
            count_occurrences(corpus, "T9")


class TestProbabilities:
    def test_symmetric(self):
        cm = CountMatrix("T1", {"w": np.array([2.0, 2.0])}, {}, 2, 0)
        pt = word_probabilities(cm)
        np.testing.assert_allclose(pt.p_pos["w"], [0.5, 0.5])

    def test_direct_evaluation(self):
        cm = CountMatrix("T1", {"w": np.array([3.0, 1.0])}, {}, 2, 0)
        pt = word_probabilities(cm)
        np.testing.assert_allclose(pt.p_pos["w"], [0.75, 0.25])

    def test_zero_total_convention(self):
        cm = CountMatrix("T1", {}, {"w": np.array([0.0, 0.0])}, 2, 2)
        pt = word_probabilities(cm)
        np.testing.assert_array_equal(pt.p_neg["w"], [0.0, 0.0])

    def test_distributions_sum_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            vec = rng.integers(0, 5, size=rng.integers(1, 20)).astype(float)
            if vec.sum() == 0:
                continue
            pt = word_probabilities(CountMatrix("T", {"w": vec}, {}, len(vec), 0))
            assert abs(pt.p_pos["w"].sum() - 1.0) < 1e-9
            assert np.all((pt.p_pos["w"] >= 0) & (pt.p_pos["w"] <= 1))


class TestEntropy:
    def test_single_document_word_is_zero(self):
        # the whole point of the measure: concentrated words carry no spread
        pt = ProbabilityTable("T1", {"w": np.array([1.0, 0.0, 0.0])}, {}, 3, 0)
        assert word_entropy(pt).h_pos["w"] == 0.0

    def test_uniform_over_four(self):
        pt = ProbabilityTable("T1", {"w": np.full(4, 0.25)}, {}, 4, 0)
        assert abs(word_entropy(pt).h_pos["w"] - 2.0) <= 1e-9

    def test_direct_evaluation(self):
        pt = ProbabilityTable("T1", {"w": np.array([0.75, 0.25])}, {}, 2, 0)
        assert word_entropy(pt).h_pos["w"] == pytest.approx(0.8112781244591328, abs=1e-9)

    def test_bounds_and_zero_condition(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            m = int(rng.integers(1, 12))
            counts = rng.integers(0, 4, size=m).astype(float)
            cm = CountMatrix("T", {"w": counts}, {}, m, 0)
            h = word_entropy(word_probabilities(cm)).h_pos["w"]
            assert 0.0 <= h <= math.log2(m) + 1e-12
            assert (h == 0.0) == ((counts > 0).sum() <= 1)

    def test_scaling_counts_leaves_entropy_unchanged(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            counts = rng.integers(0, 6, size=8).astype(float)
            if (counts > 0).sum() < 2:
                continue
            c = float(rng.uniform(0.1, 7.0))
            h1 = word_entropy(
                word_probabilities(CountMatrix("T", {"w": counts}, {}, 8, 0))
            ).h_pos["w"]
            h2 = word_entropy(
                word_probabilities(CountMatrix("T", {"w": counts * c}, {}, 8, 0))
            ).h_pos["w"]
            assert h1 == pytest.approx(h2, abs=1e-12)


class TestSelection:
    def table(self, topic, h_pos, h_neg=None):
        return EntropyTable(topic, h_pos, h_neg or {}, 4, 4)

    def test_binary_keyword(self):
        tables = {"T1": self.table("T1", {"w": 1.0}, {"w": 0.4})}
        cfg = KeywordConfig(alpha=2.0, mode="binary")
        assert select_keywords(tables, cfg)["T1"].keywords == {"w"}

    def test_binary_strict_boundary(self):
        tables = {"T1": self.table("T1", {"w": 0.8}, {"w": 0.4})}
        cfg = KeywordConfig(alpha=2.0, mode="binary")
        assert select_keywords(tables, cfg)["T1"].keywords == frozenset()

    def test_cross_category_all_pairs(self):
        # enumerating the comparisons for topic 1: 1.2 > 2*0.5 and 1.2 > 2*0.1
        tables = {
            "T1": self.table("T1", {"w": 1.2}),
            "T2": self.table("T2", {"w": 0.5}),
            "T3": self.table("T3", {"w": 0.1}),
        }
        out = select_keywords(tables, KeywordConfig(alpha=2.0))
        assert out["T1"].keywords == {"w"}
        assert out["T2"].keywords == frozenset()
        assert out["T3"].keywords == frozenset()

    def test_cross_category_fails_on_one_competitor(self):
        # 1.2 <= 2*0.61 for the second topic, so the word is rejected
        tables = {
            "T1": self.table("T1", {"w": 1.2}),
            "T2": self.table("T2", {"w": 0.61}),
            "T3": self.table("T3", {"w": 0.1}),
        }
        out = select_keywords(tables, KeywordConfig(alpha=2.0))
        assert out["T1"].keywords == frozenset()

    def test_cross_category_zero_everywhere_is_rejected(self):
        tables = {
            "T1": self.table("T1", {"w": 0.0}),
            "T2": self.table("T2", {"w": 0.0}),
        }
        out = select_keywords(tables, KeywordConfig(alpha=2.0))
        assert out["T1"].keywords == frozenset()

    def test_cross_category_needs_two_topics(self):
        tables = {"T1": self.table("T1", {"w": 1.0})}
        with pytest.raises(ValueError, match="2 topics"):
            select_keywords(tables, KeywordConfig(alpha=2.0))

    def test_negative_keywords_symmetric_rule(self):
        table = self.table("T1", {"w": 0.2, "v": 1.0}, {"w": 0.9, "v": 1.0})
        ks = select_negative_keywords(table, KeywordConfig(alpha_neg=2.0, mode="binary"))
        assert ks.keywords == {"w"}

    def test_config_validation(self):
        with pytest.raises(ValueError):
            KeywordConfig(alpha=1.0)
        with pytest.raises(ValueError):
            KeywordConfig(alpha_neg=0.5)
        with pytest.raises(ValueError):
            KeywordConfig(mode="tfidf")


class TestOracleEquivalence:
    @pytest.mark.parametrize("mode", ["binary", "cross-category"])
    def test_matches_brute_force(self, mode):
        rng = np.random.default_rng(11)
        for _ in range(5):
            doc_tokens, labels, topics = random_corpus(rng, n_topics=3, max_docs=20, max_words=40)
            corpus = make_corpus(doc_tokens, labels, topics)
            got = select_keywords(topic_entropies(corpus), KeywordConfig(alpha=2.0, mode=mode))
            want = brute_force_keywords(doc_tokens, labels, topics, 2.0, mode)
            assert {t: set(k.keywords) for t, k in got.items()} == want

    def test_alpha_antitone(self):
        rng = np.random.default_rng(12)
        for _ in range(5):
            doc_tokens, labels, topics = random_corpus(rng, n_topics=3, max_docs=25, max_words=30)
            corpus = make_corpus(doc_tokens, labels, topics)
            tables = topic_entropies(corpus)
            previous = None
            for alpha in (1.01, 1.5, 2.0, 3.0, 5.0):
                sets = {
                    t: k.keywords
                    for t, k in select_keywords(tables, KeywordConfig(alpha=alpha)).items()
                }
                if previous is not None:
                    for t in sets:
                        assert sets[t] <= previous[t]
                previous = sets


class TestCsv:
    def test_round_trip(self, tmp_path):
        ks = KeywordSet(topic="T1", keywords=frozenset({"b", "a"}))
        path = tmp_path / "keywords_T1.csv"
        write_keyword_csv(ks, path)
        assert path.read_text() == "topic_id,word\nT1,a\nT1,b\n"
        assert read_keyword_csv(path) == ks

    def test_header_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("word,topic\nx,T1\n")
        with pytest.raises(ValueError, match="header"):
            read_keyword_csv(path)

    def test_mixed_topics_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("topic_id,word\nT1,a\nT2,b\n")
        with pytest.raises(ValueError, match="multiple topic"):
            read_keyword_csv(path)

    def test_empty_set_round_trips_topic_from_filename(self, tmp_path):
        ks = KeywordSet(topic="T3", keywords=frozenset())
        path = tmp_path / "keywords_T3.csv"
        write_keyword_csv(ks, path)
        assert read_keyword_csv(path) == ks
