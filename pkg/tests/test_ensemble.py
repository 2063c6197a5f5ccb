import itertools
import random

import pytest

from ledgerscan.ensemble import (EnsembleConfig, WordCluster, cluster_words,
                                 ensemble_pages, vote_word)
from ledgerscan.metrics import cer
from ledgerscan.ocr import NoiseModel, OcrPage, OcrWord, mock_ocr


def word(text, bbox=(10, 10, 60, 30), conf=0.9):
    return OcrWord(text=text, bbox=bbox, conf=conf)


def cluster_of(*texts, confs=None):
    confs = confs or [0.9] * len(texts)
    members = [(f"e{i}", word(t, conf=c)) for i, (t, c) in enumerate(zip(texts, confs))]
    return WordCluster(members=members, consensus_bbox=(10, 10, 60, 30))


def page(engine, words, size=(800, 600)):
    return OcrPage(engine=engine, page_size=size, words=words)


class TestVoteWord:
    def test_token_majority_two_of_three(self):
        result = vote_word(cluster_of("123", "120", "123"))
        assert result.text == "123"
        assert result.method == "token_majority"

    def test_right_aligned_character_vote(self):
        result = vote_word(cluster_of("23", "120", "153"))
        assert result.text == "123"
        assert result.method == "char_vote"

    def test_single_member_unanimous(self):
        result = vote_word(cluster_of("Specie"))
        assert result.text == "Specie"
        assert result.method == "unanimous"
        assert result.confidence == 1.0

    def test_unanimous_any_weights(self):
        for weights in ("uniform", "confidence"):
            result = vote_word(cluster_of("77", "77", "77"), weights=weights)
            assert result.text == "77" and result.method == "unanimous"

    def test_confidence_weights_break_token_tie(self):
        result = vote_word(cluster_of("57", "58", confs=[0.6, 0.95]), weights="confidence")
        assert result.text == "58"

    def test_length_spread_falls_back_to_token_vote(self):
        result = vote_word(cluster_of("1", "123456", "123457"))
        assert result.method == "token_majority"
        assert result.low_confidence

    def test_supporters_map(self):
        result = vote_word(cluster_of("123", "120", "123"))
        assert result.supporters == {"e0": True, "e1": False, "e2": True}

    def test_empty_cluster_rejected(self):
        with pytest.raises(ValueError):
            vote_word(WordCluster(members=[], consensus_bbox=(0, 0, 1, 1)))


class TestClusterWords:
    def test_identical_pages_full_clusters(self):
        words = [word("a", (0, 0, 20, 10)), word("b", (30, 0, 50, 10))]
        pages = [page(f"e{i}", [OcrWord(w.text, w.bbox, w.conf) for w in words]) for i in range(3)]
        clusters = cluster_words(pages, iou_min=0.3)
        assert len(clusters) == 2
        assert all(len(c.members) == 3 for c in clusters)

    def test_missing_word_gives_two_member_cluster(self):
        words = [word("a", (0, 0, 20, 10)), word("b", (30, 0, 50, 10))]
        pages = [page("e0", [OcrWord(w.text, w.bbox, w.conf) for w in words]),
                 page("e1", [OcrWord(w.text, w.bbox, w.conf) for w in words]),
                 page("e2", [OcrWord("a", (0, 0, 20, 10), 0.9)])]
        clusters = cluster_words(pages, iou_min=0.3)
        assert sorted(len(c.members) for c in clusters) == [2, 3]

    def test_disjoint_words_stay_singletons(self):
        pages = [page("e0", [word("a", (0, 0, 20, 10))]),
                 page("e1", [word("b", (200, 200, 240, 220))])]
        clusters = cluster_words(pages, iou_min=0.3)
        assert len(clusters) == 2
        assert all(len(c.members) == 1 for c in clusters)

    def test_one_word_per_engine_per_cluster(self):
        pages = [page("e0", [word("x", (0, 0, 20, 10)), word("y", (2, 0, 22, 10))]),
                 page("e1", [word("z", (1, 0, 21, 10))])]
        clusters = cluster_words(pages, iou_min=0.3)
        for c in clusters:
            engines = [e for e, _ in c.members]
            assert len(engines) == len(set(engines))

    def test_mismatched_page_sizes_rejected(self):
        with pytest.raises(ValueError, match="page sizes differ"):
            cluster_words([page("a", [], (10, 10)), page("b", [], (20, 20))])


class TestEnsemblePages:
    def test_single_page_identity_text(self):
        words = [word("Loans", (0, 0, 40, 10)), word("123", (50, 0, 80, 10))]
        out = ensemble_pages([page("e0", words)])
        assert [w.text for w in out.words] == ["Loans", "123"]
        assert out.engine == "ensemble"

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            ensemble_pages([])

    def test_permutation_invariance_for_strict_pluralities(self):
        rng = random.Random(5)
        truth_words = []
        y = 0
        for i in range(20):
            text = "".join(rng.choice("0123456789") for _ in range(5))
            truth_words.append((text, (10, y, 80, y + 18)))
            y += 25
        pages = [mock_ocr(truth_words, NoiseModel(substitution_prob=0.08, seed=s), (200, y))
                 for s in (1, 2, 3)]
        for i, p in enumerate(pages):
            p.engine = f"e{i}"
        baseline = None
        for perm in itertools.permutations(pages):
            out = ensemble_pages(list(perm))
            strict_texts = sorted(w.text for w in out.words)
            if baseline is None:
                baseline = strict_texts
            else:
                assert strict_texts == baseline

    def test_ensemble_beats_single_engines(self):
        rng = random.Random(11)
        truth_words = []
        y = 0
        for i in range(300):
            text = "".join(rng.choice("0123456789") for _ in range(6))
            truth_words.append((text, (10, y, 80, y + 18)))
            y += 25
        size = (200, y + 20)
        pages = [mock_ocr(truth_words, NoiseModel(substitution_prob=0.05, seed=s,
                                                  substitute_unmapped=True), size)
                 for s in (21, 22, 23)]
        for i, p in enumerate(pages):
            p.engine = f"mock{i}"

        def page_cer(p):
            by_box = {w.bbox: w.text for w in p.words}
            total = 0.0
            for text, bbox in truth_words:
                total += cer(by_box.get(tuple(bbox), ""), text)
            return total / len(truth_words)

        singles = [page_cer(p) for p in pages]
        merged = ensemble_pages(pages)
        assert merged.words, "ensemble dropped everything"
        ens = page_cer(merged)
        assert ens <= min(singles)
        assert ens < 0.02

    def test_output_satisfies_page_invariants(self):
        words = [word("a", (0, 0, 20, 10)), word("b", (30, 0, 50, 10))]
        pages = [page(f"e{i}", [OcrWord(w.text, w.bbox, w.conf) for w in words]) for i in range(3)]
        out = ensemble_pages(pages)
        out.validate()
