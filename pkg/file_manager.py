# file_manager.py

import csv
import json
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Sequence

from config import logger, Config
from models import Partition, RunStats
from parser_partition import format_partition


class FileManager:
    """Handles reading graph lists and writing reports, partitions and clipboard exports."""

    def read_graph_list(self, path: Path) -> list[Path]:
        """One graph path per line; relative entries resolve against the list's folder."""
        list_path = Path(path)
        try:
            content = list_path.read_text(encoding="utf-8", errors="ignore")
        except OSError:
            logger.exception("Error reading graph list %s", list_path)
            raise

        graphs = []
        for raw in content.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            entry = Path(line)
            graphs.append(entry if entry.is_absolute() else list_path.parent / entry)
        logger.info("Graph list %s: %d entries", list_path, len(graphs))
        return graphs

    def write_csv(self, path: Path, rows: Iterable[Sequence[object]]) -> int:
        """Header plus rows in Config.CSV_COLUMNS order; returns the row count."""
        out = Path(path)
        count = 0
        try:
            with out.open("w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(Config.CSV_COLUMNS)
                for row in rows:
                    writer.writerow(row)
                    count += 1
        except OSError:
            logger.exception("Failed to write CSV %s", out)
            raise
        logger.info("Wrote %d rows to %s", count, out)
        return count

    def write_json(self, path: Path, payload: dict) -> None:
        out = Path(path)
        try:
            out.write_text(json.dumps(payload, indent=2, default=float) + "\n", encoding="utf-8")
        except OSError:
            logger.exception("Failed to write JSON %s", out)
            raise

    def write_partition(self, path: Path, partition: Partition) -> None:
        out = Path(path)
        try:
            out.write_text(format_partition(partition), encoding="utf-8")
        except OSError:
            logger.exception("Failed to write partition %s", out)
            raise
        logger.info("Wrote partition of %d vertices to %s", len(partition.labels), out)

    def copy_to_clipboard(self, lines: Sequence[str]) -> bool:
        """Copy lines to the system clipboard; False when no clipboard is available."""
        if not lines:
            logger.info("Nothing to copy")
            return False
        try:
            import pyperclip

            pyperclip.copy("\n".join(lines))
            logger.info("Copied %d lines to clipboard", len(lines))
            return True
        except Exception:
            logger.exception("Copy to clipboard failed")
            return False


def solve_report(graph_name: str, partition: Partition, stats: RunStats) -> dict:
    """JSON-ready summary of one solve."""
    return {
        "graph": graph_name,
        "cost_S": partition.cost_S,
        "weight_A": partition.weight_A,
        "weight_B": partition.weight_B,
        "size_A": int(len(partition.A)),
        "size_B": int(len(partition.B)),
        "size_S": int(len(partition.S)),
        "feasible": partition.feasible,
        "separator": (partition.S + 1).tolist(),
        "levels": [
            {**asdict(level), "improvement": round(level.improvement, 2)}
            for level in stats.levels
        ],
        "coarsen_ms": stats.coarsen_ms,
        "solve_ms": stats.solve_ms,
        "total_ms": stats.total_ms,
    }
