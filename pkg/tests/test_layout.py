import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import grid_edge_map
from ledgerscan.layout import (LayoutModel, Row, Segment, build_layout,
                               consolidate_delimiters, detect_edges,
                               detect_headers, detect_line_segments,
                               group_words_into_rows,
                               merge_indented_continuations, render_annotated)
from ledgerscan.ocr import OcrWord
from ledgerscan.raster import Raster


def gray(a):
    return Raster(np.asarray(a, dtype=np.uint8))


def word(text, x0, y0, x1, y1, conf=0.9):
    return OcrWord(text=text, bbox=(x0, y0, x1, y1), conf=conf)


class TestDetectEdges:
    def test_constant_image_empty(self):
        out = detect_edges(gray(np.full((40, 40), 120)))
        assert (out.data == 0).all()

    def test_vertical_step_single_column(self):
        img = np.full((40, 60), 0, dtype=np.uint8)
        img[:, 30:] = 255
        out = detect_edges(gray(img), low=20, high=60, sigma=1.0)
        cols = np.unique(np.nonzero(out.data)[1])
        assert len(cols) == 1, cols
        assert abs(int(cols[0]) - 30) <= 1
        # every row fires exactly once
        assert (out.data[:, cols[0]] == 255).all()

    def test_low_must_be_below_high(self):
        with pytest.raises(ValueError):
            detect_edges(gray(np.zeros((10, 10))), low=100, high=100)


class TestHough:
    def test_empty_edge_map(self):
        out = detect_line_segments(gray(np.zeros((50, 50))), vote_threshold=10, min_len=5)
        assert out == []

    def test_grid_lines_recovered(self):
        edges = grid_edge_map()
        segs = detect_line_segments(edges, vote_threshold=80, min_len=120, max_gap=5,
                                    samples=100000, seed=0)
        assert len(segs) >= 7
        h = [s for s in segs if s.orientation == "horizontal"]
        v = [s for s in segs if s.orientation == "vertical"]
        for y in (100, 200, 300):
            assert any(abs((s.y0 + s.y1) / 2 - y) <= 2 for s in h), y
        for x in (50, 170, 290, 410):
            assert any(abs((s.x0 + s.x1) / 2 - x) <= 2 for s in v), x

    def test_seed_determinism(self):
        edges = grid_edge_map(noise_frac=0.01, seed=3)
        a = detect_line_segments(edges, vote_threshold=60, min_len=100, samples=2000, seed=7)
        b = detect_line_segments(edges, vote_threshold=60, min_len=100, samples=2000, seed=7)
        assert a == b


class TestConsolidate:
    def test_collinear_halves_merge(self):
        segs = [Segment(20, 100, 250, 100, support=230, orientation="horizontal"),
                Segment(260, 100, 480, 100, support=220, orientation="horizontal")]
        h, v = consolidate_delimiters(segs, (500, 400), merge_dist=8, min_span_frac=0.5)
        assert v == []
        assert len(h) == 1
        assert abs(h[0] - 100) <= 1

    def test_tilted_segment_discarded(self):
        segs = [Segment(0, 0, 100, 84, support=100, orientation="other")]  # ~40 degrees
        h, v = consolidate_delimiters(segs, (500, 400))
        assert h == [] and v == []

    def test_short_underline_discarded(self):
        segs = [Segment(10, 50, 35, 50, support=25, orientation="horizontal")]
        h, v = consolidate_delimiters(segs, (500, 400), min_span_frac=0.5)
        assert h == []

    def test_positions_weighted_within_cluster(self):
        segs = [Segment(0, 99, 400, 99, support=300, orientation="horizontal"),
                Segment(0, 103, 400, 103, support=100, orientation="horizontal")]
        h, _ = consolidate_delimiters(segs, (500, 400), merge_dist=8)
        assert len(h) == 1
        assert 99 <= h[0] <= 103
        assert abs(h[0] - 100.0) < 0.01  # (99*300 + 103*100) / 400


class TestRows:
    def test_identical_extents_one_row(self):
        rows = group_words_into_rows([word("a", 0, 10, 20, 30), word("b", 30, 10, 50, 30)])
        assert len(rows) == 1
        assert [w.text for w in rows[0].words] == ["a", "b"]

    def test_disjoint_extents_two_rows(self):
        rows = group_words_into_rows([word("a", 0, 0, 20, 10), word("b", 0, 20, 20, 30)])
        assert len(rows) == 2

    def test_staircase_chain_merges_with_flag(self):
        a = word("a", 0, 0, 20, 10)
        b = word("b", 30, 5, 50, 15)
        c = word("c", 60, 10, 80, 20)  # a and c are disjoint
        rows = group_words_into_rows([a, b, c], y_overlap_min=0.5)
        assert len(rows) == 1
        assert "chain_merged" in rows[0].flags

    @given(st.integers(0, 2 ** 31 - 1), st.integers(1, 25))
    @settings(max_examples=30, deadline=None)
    def test_no_word_dropped_or_duplicated(self, seed, n):
        rng = np.random.default_rng(seed)
        words = []
        for i in range(n):
            x0 = int(rng.integers(0, 400))
            y0 = int(rng.integers(0, 300))
            words.append(word(f"w{i}", x0, y0, x0 + int(rng.integers(5, 60)),
                              y0 + int(rng.integers(5, 25))))
        rows = group_words_into_rows(words)
        seen = sorted(i for r in rows for i in r.indices)
        assert seen == list(range(n))


class TestContinuations:
    def test_indented_label_merges(self):
        rows = [
            Row(indices=[0, 1, 2], words=[word("Inventory", 50, 0, 130, 20),
                                          word("of", 140, 0, 160, 20),
                                          word("Portland", 170, 0, 240, 20)],
                baseline_y=20, label_text="Inventory of Portland"),
            Row(indices=[3, 4, 5], words=[word("cement", 110, 30, 170, 50),
                                          word("at", 180, 30, 200, 50),
                                          word("warehouse", 210, 30, 290, 50)],
                baseline_y=50, label_text="cement at warehouse"),
        ]
        out = merge_indented_continuations(rows, label_left=50, indent_min=30)
        assert out[0].label_text == "Inventory of Portland cement at warehouse"
        assert out[1].continuation_of == 0

    def test_non_indented_row_not_merged(self):
        rows = [
            Row(indices=[0], words=[word("Specie", 50, 0, 110, 20)], baseline_y=20,
                label_text="Specie"),
            Row(indices=[1], words=[word("Deposits", 52, 30, 120, 50)], baseline_y=50,
                label_text="Deposits"),
        ]
        out = merge_indented_continuations(rows, label_left=50, indent_min=30)
        assert out[1].continuation_of is None

    def test_numeric_guard_blocks_merge(self):
        rows = [
            Row(indices=[0], words=[word("Specie", 50, 0, 110, 20)], baseline_y=20,
                label_text="Specie"),
            Row(indices=[1], words=[word("1,234", 120, 30, 170, 50)], baseline_y=50,
                label_text="1,234"),
        ]
        out = merge_indented_continuations(rows, label_left=50, indent_min=30)
        assert out[1].continuation_of is None
        assert out[0].label_text == "Specie"

    def test_first_row_continuation_flagged(self):
        rows = [Row(indices=[0], words=[word("orphan", 200, 0, 260, 20)], baseline_y=20,
                    label_text="orphan")]
        out = merge_indented_continuations(rows, label_left=50, indent_min=30)
        assert out[0].continuation_of is None
        assert "continuation_without_prior" in out[0].flags


class TestHeaders:
    def _rows(self):
        # page 600 wide; median word height 20; row pitch leaves gap 20
        body = []
        y = 100
        for i in range(4):
            body.append(Row(indices=[i + 1],
                            words=[word(f"item{i}", 60, y, 200, y + 20)],
                            baseline_y=y + 20, label_text=f"item{i}"))
            y += 40
        return body

    def test_centered_tall_spaced_row_is_header(self):
        # 1.5x the body word height and 3x the median inter-row gap above.
        header = Row(indices=[0], words=[word("REPORT", 240, 60, 360, 90)],
                     baseline_y=90, label_text="REPORT")
        rows = [header] + self._rows()
        result = detect_headers(rows, page_width=600)
        assert result.header_rows == [0]
        assert not result.indeterminate

    def test_left_aligned_tall_row_not_header(self):
        header = Row(indices=[0], words=[word("REPORT", 10, 60, 130, 90)],
                     baseline_y=90, label_text="REPORT")
        result = detect_headers([header] + self._rows(), page_width=600)
        assert 0 not in result.header_rows

    def test_single_row_page_indeterminate(self):
        row = Row(indices=[0], words=[word("alone", 250, 10, 350, 40)],
                  baseline_y=40, label_text="alone")
        result = detect_headers([row], page_width=600)
        assert result.header_rows == []
        assert result.indeterminate


class TestLayoutModel:
    def test_serialization_roundtrip_and_determinism(self):
        words = [word("a", 0, 0, 20, 10), word("b", 30, 0, 50, 10),
                 word("c", 0, 30, 20, 40)]
        img = np.full((60, 80), 255, dtype=np.uint8)
        img[20, 5:75] = 0
        model = build_layout(gray(img), words)
        model2 = build_layout(gray(img), words)
        assert model.to_json_bytes() == model2.to_json_bytes()
        back = LayoutModel.from_dict(
            __import__("json").loads(model.to_json_bytes()), words)
        assert back.to_json_bytes() == model.to_json_bytes()

    def test_render_annotated_marks_delimiters(self):
        model = LayoutModel(h_delims=[10.0], v_delims=[20.0])
        img = gray(np.full((30, 40), 255))
        out = render_annotated(img, model)
        assert tuple(out.data[10, 5]) == (0, 170, 0)
        assert tuple(out.data[5, 20]) == (0, 0, 200)
