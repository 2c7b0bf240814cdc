# parser_partition.py

from pathlib import Path

import numpy as np

from config import logger
from errors import GraphFormatError
from models import Partition


def read_text(path: Path) -> str:
    return Path(path).read_text(encoding="utf-8", errors="ignore")


def parse_partition(content: str, n: int) -> np.ndarray:
    """
    Parse a partition file: one label per vertex, in vertex order.
    - 0 = A, 1 = B, 2 = S
    - '%' and '#' start comment lines, blank lines are skipped
    """
    labels: list[int] = []
    for line_no, raw in enumerate(content.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "%#":
            continue
        try:
            label = int(line.split()[0])
        except ValueError:
            raise GraphFormatError(f"cannot parse label {line!r}", line_no) from None
        if label not in (Partition.LABEL_A, Partition.LABEL_B, Partition.LABEL_S):
            raise GraphFormatError(f"label {label} is not 0, 1 or 2", line_no)
        labels.append(label)

    if len(labels) != n:
        raise GraphFormatError(f"partition has {len(labels)} labels, graph has {n} vertices")

    result = np.asarray(labels, dtype=np.int8)
    logger.info(
        "Parsed partition: |A|=%d, |B|=%d, |S|=%d",
        int(np.sum(result == Partition.LABEL_A)),
        int(np.sum(result == Partition.LABEL_B)),
        int(np.sum(result == Partition.LABEL_S)),
    )
    return result


def format_partition(partition: Partition) -> str:
    return "".join(f"{int(label)}\n" for label in partition.labels)
