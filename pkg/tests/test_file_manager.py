import csv
import json
import logging

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from errors import GraphFormatError
from file_manager import FileManager, solve_report
from models import Partition
from multilevel import solve
from parser_partition import format_partition, parse_partition


@pytest.fixture
def p3_partition() -> Partition:
    return Partition(
        labels=np.array([0, 2, 1], dtype=np.int8), cost_S=1.0, weight_A=1.0, weight_B=1.0, feasible=True
    )


class TestParsePartition:
    def test_labels(self):
        labels = parse_partition("0\n2\n1\n", 3)
        assert_array_equal(labels, [0, 2, 1])
        assert labels.dtype == np.int8

    def test_comments_and_blank_lines(self):
        assert_array_equal(parse_partition("% header\n0\n\n# note\n1\n", 2), [0, 1])

    def test_bad_label(self):
        with pytest.raises(GraphFormatError, match="not 0, 1 or 2") as exc:
            parse_partition("0\n3\n", 2)
        assert exc.value.line == 2

    def test_not_an_integer(self):
        with pytest.raises(GraphFormatError, match="line 1"):
            parse_partition("A\n", 1)

    def test_count_mismatch(self):
        with pytest.raises(GraphFormatError, match="graph has 3 vertices"):
            parse_partition("0\n1\n", 3)

    def test_format_round_trip(self, p3_partition):
        assert format_partition(p3_partition) == "0\n2\n1\n"
        assert_array_equal(parse_partition(format_partition(p3_partition), 3), p3_partition.labels)


class TestFileManager:
    def test_graph_list_resolves_relative_paths(self, tmp_path):
        sub = tmp_path / "lists"
        sub.mkdir()
        listing = sub / "graphs.txt"
        listing.write_text("# corpus\na.graph\n\n/abs/b.txt\n")
        paths = FileManager().read_graph_list(listing)
        assert paths[0] == sub / "a.graph"
        assert str(paths[1]) == "/abs/b.txt"
        assert len(paths) == 2

    def test_missing_graph_list(self, tmp_path, caplog):
        with caplog.at_level(logging.ERROR, logger="vsep"):
            with pytest.raises(OSError):
                FileManager().read_graph_list(tmp_path / "nope.txt")
        assert "Error reading graph list" in caplog.text

    def test_write_csv(self, tmp_path):
        out = tmp_path / "rows.csv"
        count = FileManager().write_csv(out, [["g", 1, "heavy_edge", 3, 2, 1.0, 1.0, 1.0, 1, "0.5", 1]])
        assert count == 1
        with out.open(newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:3] == ["graph", "seed", "rule"]
        assert rows[1][2] == "heavy_edge"

    def test_write_json(self, tmp_path):
        out = tmp_path / "r.json"
        FileManager().write_json(out, {"cost": np.float64(2.5)})
        assert json.loads(out.read_text()) == {"cost": 2.5}

    def test_write_partition(self, tmp_path, p3_partition):
        out = tmp_path / "p3.part"
        FileManager().write_partition(out, p3_partition)
        assert out.read_text() == "0\n2\n1\n"

    def test_copy_to_clipboard(self, monkeypatch):
        pyperclip = pytest.importorskip("pyperclip")
        copied = []
        monkeypatch.setattr(pyperclip, "copy", copied.append)
        assert FileManager().copy_to_clipboard(["a", "b"])
        assert copied == ["a\nb"]

    def test_copy_nothing(self):
        assert not FileManager().copy_to_clipboard([])

    def test_clipboard_failure(self, monkeypatch):
        pyperclip = pytest.importorskip("pyperclip")

        def broken(_text):
            raise pyperclip.PyperclipException("no clipboard")

        monkeypatch.setattr(pyperclip, "copy", broken)
        assert not FileManager().copy_to_clipboard(["a"])


def test_solve_report(p4):
    partition, stats = solve(p4)
    report = solve_report("p4.graph", partition, stats)
    assert report["graph"] == "p4.graph"
    assert report["cost_S"] == 1.0
    assert report["size_A"] + report["size_B"] + report["size_S"] == 4
    assert len(report["levels"]) == 1
    assert report["levels"][0]["improvement"] == pytest.approx(75.0)
    assert report["total_ms"] == pytest.approx(report["coarsen_ms"] + report["solve_ms"])
    json.dumps(report, default=float)
