import re

import pytest

from conftest import build_sheet_workspace
from ledgerscan.cli import _parse_pages, main


class TestPageSelection:
    def test_single_and_ranges(self):
        assert _parse_pages("3") == [3]
        assert _parse_pages("1-4") == [1, 2, 3, 4]
        assert _parse_pages("1,4,7-9") == [1, 4, 7, 8, 9]
        assert _parse_pages("2,2,1") == [1, 2]


class TestCommands:
    def test_process_reports_totals(self, tmp_path, capsys):
        ws, conf = build_sheet_workspace(tmp_path, n_pages=2, substitution_prob=0.0)
        code = main(["process", "--workspace", str(ws.root), "--config", str(conf)])
        out = capsys.readouterr().out
        assert code == 0
        assert "total: 0 red, 0 yellow, 0 failed" in out

    def test_invalid_config_exits_2(self, tmp_path, capsys):
        ws, conf = build_sheet_workspace(tmp_path, n_pages=1)
        bad = tmp_path / "bad.conf"
        bad.write_text("image_ops = sharpen9\n", encoding="utf-8")
        code = main(["process", "--workspace", str(ws.root), "--config", str(bad)])
        assert code == 2
        assert "sharpen9" in capsys.readouterr().err

    def test_report_command(self, tmp_path, capsys):
        ws, conf = build_sheet_workspace(tmp_path, n_pages=1, substitution_prob=0.0)
        main(["process", "--workspace", str(ws.root), "--config", str(conf)])
        capsys.readouterr()
        code = main(["report", "--workspace", str(ws.root)])
        out = capsys.readouterr().out
        assert code == 0
        assert re.search(r"\d+ red, \d+ yellow", out)

    def test_ocr_command(self, tmp_path, capsys):
        ws, conf = build_sheet_workspace(tmp_path, n_pages=1, substitution_prob=0.0)
        code = main(["ocr", "--workspace", str(ws.root), "--engine", "mock-a"])
        out = capsys.readouterr().out
        assert code == 0
        assert "words" in out

    def test_ocr_unavailable_engine_exits_1(self, tmp_path, capsys):
        ws, conf = build_sheet_workspace(tmp_path, n_pages=1)
        code = main(["ocr", "--workspace", str(ws.root), "--engine", "google"])
        assert code == 1
        assert "engine unavailable" in capsys.readouterr().err

    def test_tune_command_writes_table(self, tmp_path, capsys):
        ws, conf = build_sheet_workspace(tmp_path, n_pages=4, substitution_prob=0.0)
        main(["process", "--workspace", str(ws.root), "--config", str(conf)])
        capsys.readouterr()
        spec = tmp_path / "tune.conf"
        spec.write_text(
            "objective = field_accuracy\n"
            "holdout_fraction = 0.25\n"
            "seed = 0\n"
            "grid.image_ops.binarize.tau = 120, 128\n",
            encoding="utf-8",
        )
        code = main(["tune", "--workspace", str(ws.root), "--config", str(conf),
                     "--spec", str(spec)])
        out = capsys.readouterr().out
        assert code == 0
        assert "best:" in out
        assert list((ws.root / "tuning").glob("*.csv"))
