# parser_graph.py

from pathlib import Path
from typing import Optional

import numpy as np

from config import logger, Config
from errors import GraphFormatError
from models import WeightedGraph


def read_text(path: Path) -> str:
    return Path(path).read_text(encoding="utf-8", errors="ignore")


def infer_format(path: Path) -> str:
    return "metis" if Path(path).suffix.lower() in Config.METIS_EXTENSIONS else "edgelist"


def load_graph(path: Path, fmt: Optional[str] = None) -> WeightedGraph:
    """Read a graph file in METIS/Chaco or edge-list format."""
    fmt = fmt or infer_format(path)
    content = read_text(path)
    if fmt == "metis":
        graph = parse_metis(content)
    elif fmt == "edgelist":
        graph = parse_edgelist(content)
    else:
        raise ValueError(f"unknown graph format {fmt!r}")
    logger.info("Loaded %s (%s): n=%d, m=%d", path, fmt, graph.n, graph.m)
    return graph


def _parse_number(token: str, line: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise GraphFormatError(f"cannot parse {what} {token!r}", line) from None


def _parse_index(token: str, line: int, n: int) -> int:
    try:
        idx = int(token)
    except ValueError:
        raise GraphFormatError(f"cannot parse vertex index {token!r}", line) from None
    if idx < 1 or idx > n:
        raise GraphFormatError(f"vertex index {idx} out of range 1..{n}", line)
    return idx - 1


def parse_metis(content: str) -> WeightedGraph:
    """
    Parse a METIS/Chaco graph:
    - header "n m [fmt [ncon]]", m counting undirected edges
    - one line per vertex (1-indexed neighbors), blank line = isolated vertex
    - fmt digits: vertex sizes (unsupported), vertex weights, edge weights
    - '%' starts a comment line
    """
    body: list[tuple[int, str]] = []
    header: Optional[tuple[int, list[str]]] = None
    for lineno, raw in enumerate(content.splitlines(), start=1):
        if raw.lstrip().startswith("%"):
            continue
        if header is None:
            if not raw.strip():
                continue
            header = (lineno, raw.split())
            continue
        body.append((lineno, raw))

    if header is None:
        raise GraphFormatError("missing header line", 1)
    header_line, tokens = header
    if len(tokens) < 2:
        raise GraphFormatError("header must contain n and m", header_line)
    try:
        n = int(tokens[0])
        m_header = int(tokens[1])
    except ValueError:
        raise GraphFormatError("header n and m must be integers", header_line) from None
    fmt_code = tokens[2] if len(tokens) > 2 else "0"
    if not fmt_code.isdigit() or len(fmt_code) > 3:
        raise GraphFormatError(f"bad fmt code {fmt_code!r}", header_line)
    fmt_code = fmt_code.zfill(3)
    if fmt_code[0] == "1":
        raise GraphFormatError("vertex sizes (fmt 1xx) are not supported", header_line)
    has_vweight = fmt_code[1] == "1"
    has_eweight = fmt_code[2] == "1"
    ncon = int(tokens[3]) if len(tokens) > 3 else 1
    if ncon != 1:
        raise GraphFormatError("only one vertex weight per vertex is supported", header_line)

    # Trailing blank lines may be stripped from files ending in isolated vertices
    while len(body) > n and not body[-1][1].strip():
        body.pop()
    if len(body) > n:
        raise GraphFormatError(f"more than {n} vertex lines", body[n][0])
    if len(body) < n:
        logger.warning("METIS file lists %d of %d vertices; rest isolated", len(body), n)

    vertex_weight = np.ones(n, dtype=np.float64)
    edges: dict[tuple[int, int], tuple[float, int]] = {}
    self_loops = 0
    for i, (lineno, raw) in enumerate(body):
        fields = raw.split()
        if has_vweight:
            if not fields:
                raise GraphFormatError("missing vertex weight", lineno)
            vertex_weight[i] = _parse_number(fields[0], lineno, "vertex weight")
            if vertex_weight[i] <= 0:
                raise GraphFormatError(f"vertex {i + 1} has non-positive weight", lineno)
            fields = fields[1:]
        step = 2 if has_eweight else 1
        if has_eweight and len(fields) % 2:
            raise GraphFormatError("edge-weighted line needs neighbor/weight pairs", lineno)
        seen: set[int] = set()
        for k in range(0, len(fields), step):
            j = _parse_index(fields[k], lineno, n)
            w = _parse_number(fields[k + 1], lineno, "edge weight") if has_eweight else 1.0
            if w <= 0:
                raise GraphFormatError("edge weights must be positive", lineno)
            if j == i:
                self_loops += 1
                continue
            if j in seen:
                raise GraphFormatError(f"duplicate edge ({i + 1}, {j + 1})", lineno)
            seen.add(j)
            edges[(i, j)] = (w, lineno)

    rows, cols, weights = [], [], []
    for (i, j), (w, lineno) in edges.items():
        back = edges.get((j, i))
        if back is None:
            raise GraphFormatError(f"edge ({i + 1}, {j + 1}) missing its reverse", lineno)
        if back[0] != w:
            raise GraphFormatError(f"asymmetric weight on edge ({i + 1}, {j + 1})", lineno)
        if i < j:
            rows.append(i)
            cols.append(j)
            weights.append(w)

    m = len(rows)
    if m_header not in (m, m + self_loops // 2, m + self_loops):
        raise GraphFormatError(f"header says {m_header} edges, found {m}", header_line)
    if self_loops:
        logger.warning("Dropped %d self-loop entries", self_loops)

    logger.info(
        "Parsed METIS graph: n=%d, m=%d, fmt=%s, self_loops_dropped=%d",
        n,
        m,
        fmt_code,
        self_loops,
    )
    return WeightedGraph.from_edges(n, rows, cols, weights, vertex_weight=vertex_weight)


def parse_edgelist(content: str) -> WeightedGraph:
    """Parse "i j [weight]" lines, 1-indexed, each undirected edge once."""
    rows, cols, weights = [], [], []
    seen: dict[tuple[int, int], int] = {}
    self_loops = 0
    n = 0
    for lineno, raw in enumerate(content.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped[0] in "#%":
            continue
        fields = stripped.split()
        if len(fields) not in (2, 3):
            raise GraphFormatError("expected 'i j [weight]'", lineno)
        try:
            i, j = int(fields[0]), int(fields[1])
        except ValueError:
            raise GraphFormatError("vertex indices must be integers", lineno) from None
        if i < 1 or j < 1:
            raise GraphFormatError("vertex indices are 1-based", lineno)
        w = _parse_number(fields[2], lineno, "edge weight") if len(fields) == 3 else 1.0
        if w <= 0:
            raise GraphFormatError("edge weights must be positive", lineno)
        n = max(n, i, j)
        if i == j:
            self_loops += 1
            continue
        key = (min(i, j), max(i, j))
        if key in seen:
            raise GraphFormatError(
                f"duplicate edge ({i}, {j}), first seen on line {seen[key]}", lineno
            )
        seen[key] = lineno
        rows.append(i - 1)
        cols.append(j - 1)
        weights.append(w)

    if self_loops:
        logger.warning("Dropped %d self-loops", self_loops)
    logger.info("Parsed edge list: n=%d, m=%d", n, len(rows))
    return WeightedGraph.from_edges(n, rows, cols, weights)


def write_metis(graph: WeightedGraph, path: Path) -> None:
    """Write a graph in METIS format, choosing fmt from its non-unit data."""
    adj = graph.adjacency
    vweighted = bool(np.any(graph.vertex_weight != 1))
    eweighted = bool(np.any(adj.data != 1))
    if np.any(graph.vertex_cost != 1):
        logger.warning("METIS has no vertex cost field; costs are not written")
    fmt_code = f"0{int(vweighted)}{int(eweighted)}"

    lines = [f"{graph.n} {graph.m} {fmt_code}" if fmt_code != "000" else f"{graph.n} {graph.m}"]
    for i in range(graph.n):
        tokens: list[str] = []
        if vweighted:
            tokens.append(f"{graph.vertex_weight[i]:g}")
        start, end = adj.indptr[i], adj.indptr[i + 1]
        for j, w in zip(adj.indices[start:end], adj.data[start:end]):
            tokens.append(str(j + 1))
            if eweighted:
                tokens.append(f"{w:g}")
        lines.append(" ".join(tokens))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("Wrote METIS graph %s: n=%d, m=%d, fmt=%s", path, graph.n, graph.m, fmt_code)
