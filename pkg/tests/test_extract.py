import pytest

from ledgerscan.extract import (CellGrid, ExtractionConfig,
                                assemble_balance_sheet, canonicalize_sheet,
                                cells_from_layout, extract_page,
                                tokenize_paragraph)
from ledgerscan.layout import LayoutModel, Row
from ledgerscan.ocr import OcrPage, OcrWord
from ledgerscan.records import SIDE_ASSET, SIDE_LIABILITY, SIDE_TOTAL, BalanceSheet

VOCAB = [
    ("Loans and discounts", 120),
    ("Specie", 80),
    ("Due from banks", 60),
    ("Total assets", 100),
    ("Capital stock paid in", 110),
    ("Deposits", 90),
    ("Surplus fund", 70),
    ("Total liabilities", 100),
]


def word(text, x0, y0, x1, y1):
    return OcrWord(text=text, bbox=(x0, y0, x1, y1), conf=0.9)


def layout_for(words, v_delims=(), header_rows=()):
    rows = []
    by_row: dict[int, list[int]] = {}
    for i, w in enumerate(words):
        by_row.setdefault(w.bbox[1], []).append(i)
    for y in sorted(by_row):
        idxs = sorted(by_row[y], key=lambda i: words[i].bbox[0])
        rows.append(Row(indices=idxs, words=[words[i] for i in idxs],
                        baseline_y=max(words[i].bbox[3] for i in idxs),
                        label_text=" ".join(words[i].text for i in idxs)))
    return LayoutModel(v_delims=list(v_delims), rows=rows, header_rows=list(header_rows))


class TestCellsFromLayout:
    def test_two_by_two_grid(self):
        words = [word("a", 10, 0, 40, 20), word("1", 110, 0, 130, 20),
                 word("b", 10, 40, 40, 60), word("2", 110, 40, 130, 60)]
        layout = layout_for(words, v_delims=[100])
        grid = cells_from_layout(layout, OcrPage("t", (200, 100), words))
        assert grid.cells == [["a", "1"], ["b", "2"]]

    def test_straddling_word_goes_to_larger_share(self):
        words = [word("wide", 80, 0, 140, 20)]  # 20 px left of 100, 40 right
        layout = layout_for(words, v_delims=[100])
        grid = cells_from_layout(layout, OcrPage("t", (200, 100), words))
        assert grid.cells == [["", "wide"]]

    def test_multi_word_cells_join_in_x_order(self):
        words = [word("and", 60, 0, 90, 20), word("Loans", 10, 0, 50, 20),
                 word("discounts", 100, 0, 180, 20)]
        layout = layout_for(words, v_delims=[400])
        grid = cells_from_layout(layout, OcrPage("t", (500, 100), words))
        assert grid.cells[0][0] == "Loans and discounts"

    def test_empty_ocr_empty_grid(self):
        layout = LayoutModel(v_delims=[100])
        grid = cells_from_layout(layout, OcrPage("t", (200, 100), []))
        assert grid.cells == []

    def test_unassigned_word_flagged_low_confidence(self):
        words = [word("a", 10, 0, 40, 20), word("stray", 10, 400, 60, 420)]
        layout = layout_for(words[:1], v_delims=[100])
        grid = cells_from_layout(layout, OcrPage("t", (200, 500), words))
        assert any(f.code == "LOW_CONFIDENCE" for flags in grid.row_flags for f in flags)
        assert "stray" in grid.cells[0][0]


def sheet_grid(perturb=0):
    rows = [
        ("FIRST NATIONAL BANK, PORTLAND. No. 1", None),
        ("Loans and discounts", "600"),
        ("Specie", "250"),
        ("Due from banks", "150"),
        ("Total assets", f"{1000 + perturb:,}"),
        ("Capital stock paid in", "400"),
        ("Deposits", "500"),
        ("Surplus fund", "100"),
        ("Total liabilities", "1,000"),
    ]
    cells = []
    for label, amount in rows:
        cells.append([label, amount or ""])
    return CellGrid(cells=cells, row_flags=[[] for _ in cells],
                    continuation_of=[None] * len(cells), n_cols=2)


class TestAssemble:
    def config(self):
        return ExtractionConfig(vocabulary=list(VOCAB), year=1882)

    def test_fixture_sheet_sides_assigned(self):
        sheet = assemble_balance_sheet(sheet_grid(), headers=[0], config=self.config())
        assert len(sheet.records) == 8
        sides = [r.side for r in sheet.records]
        assert sides == [SIDE_ASSET] * 3 + [SIDE_TOTAL] + [SIDE_LIABILITY] * 3 + [SIDE_TOTAL]

    def test_header_identity_extracted(self):
        sheet = assemble_balance_sheet(sheet_grid(), headers=[0], config=self.config())
        assert sheet.bank_name == "FIRST NATIONAL BANK"
        assert sheet.city == "PORTLAND"
        assert sheet.charter == "1"

    def test_empty_grid_missing_charter(self):
        grid = CellGrid(cells=[], row_flags=[], continuation_of=[], n_cols=1)
        sheet = assemble_balance_sheet(grid, headers=[], config=self.config())
        assert sheet.records == []
        assert sheet.charter == ""

    def test_value_token_repaired_before_parse(self):
        grid = sheet_grid()
        grid.cells[1][1] = "6O0"  # O for zero
        sheet = assemble_balance_sheet(grid, headers=[0], config=self.config())
        rec = sheet.records[0]
        assert rec.amount is not None
        assert rec.amount.digits == "600"
        assert rec.amount.repaired

    def test_unparseable_amount_left_unset(self):
        grid = sheet_grid()
        grid.cells[2][1] = "02,50"
        sheet = assemble_balance_sheet(grid, headers=[0], config=self.config())
        rec = sheet.records[1]
        assert rec.amount is None
        assert rec.raw_value == "02,50"

    def test_fuzzy_label_canonicalized(self):
        grid = sheet_grid()
        grid.cells[1][0] = "Lcans and discounts"
        sheet = assemble_balance_sheet(grid, headers=[0], config=self.config())
        assert sheet.records[0].label_canonical == "Loans and discounts"

    def test_csv_roundtrip_preserves_amounts(self):
        sheet = assemble_balance_sheet(sheet_grid(), headers=[0], config=self.config())
        payload = sheet.to_csv_bytes()
        again = BalanceSheet.from_csv_bytes(payload, year=1882)
        canonicalize_sheet(again, self.config())
        assert [r.side for r in again.records] == [r.side for r in sheet.records]
        assert [r.amount.value_cents if r.amount else None for r in again.records] == \
               [r.amount.value_cents if r.amount else None for r in sheet.records]
        assert again.header_raw == sheet.header_raw


class TestExtractPage:
    def test_chain_and_indeterminate_flags_propagate(self):
        words = [word("alone", 10, 0, 60, 20)]
        layout = layout_for(words)
        layout.indeterminate_headers = True
        layout.rows[0].flags.append("chain_merged")
        sheet = extract_page(layout, OcrPage("t", (200, 100), words),
                             ExtractionConfig(vocabulary=list(VOCAB)))
        codes = {f.code for f in sheet.flags}
        assert "INDETERMINATE_HEADER" in codes
        assert "CHAIN_MERGED" in codes


class TestParagraphTokenizer:
    def test_label_then_value_runs(self):
        tokens = "A.-K. 7 300 000, 4% Anleihe 600 096".split()
        runs = tokenize_paragraph(tokens)
        assert runs[0][0] == ["A.-K."]
        assert runs[0][1] == "7300000,"
        assert runs[1][0] == ["4%", "Anleihe"]
        assert runs[1][1] == "600096"
