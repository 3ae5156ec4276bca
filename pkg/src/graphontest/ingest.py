"""Reading and writing networks as edge lists or adjacency CSV files."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .core import Graph
from .errors import InputError

_SYM_TOL = 1e-9


def parse_edge_list(path) -> Graph:
    """Read an undirected simple graph from a text file with one
    whitespace-separated pair of node tokens per line ('#' starts a comment).

    Duplicate edges and both orientations collapse to one edge; node indices
    follow first appearance and the tokens become labels.
    """
    labels: list[str] = []
    index: dict[str, int] = {}
    edges: set[tuple[int, int]] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise InputError(f"{path}:{lineno}: expected two node tokens, got {len(tokens)}")
            a, b = tokens
            if a == b:
                raise InputError(f"{path}:{lineno}: self-loop on node {a!r} is not allowed")
            for tok in (a, b):
                if tok not in index:
                    index[tok] = len(labels)
                    labels.append(tok)
            i, j = index[a], index[b]
            edges.add((min(i, j), max(i, j)))
    if len(labels) < 2:
        raise InputError(f"{path}: needs at least 2 nodes, found {len(labels)}")
    adj = np.zeros((len(labels), len(labels)), dtype=np.uint8)
    for i, j in edges:
        adj[i, j] = adj[j, i] = 1
    return Graph(adj, labels=tuple(labels))


def write_edge_list(graph: Graph, path) -> None:
    """Write the edges as label pairs, one per line (isolated nodes do not
    appear; the written file reproduces the adjacency of graphs without
    them)."""
    labels = graph.labels or tuple(f"v{i + 1}" for i in range(graph.n))
    ii, jj = np.nonzero(np.triu(graph.adj, k=1))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# edge list: one 'u v' pair per line\n")
        for i, j in zip(ii.tolist(), jj.tolist()):
            fh.write(f"{labels[i]} {labels[j]}\n")


def parse_adjacency(path, threshold: float | None = None) -> Graph:
    """Read a graph from a square numeric CSV matrix, optionally binarizing.

    Without a threshold, entries must already be 0/1. With threshold tau an
    edge exists where the value is strictly greater than tau. The matrix must
    be symmetric within 1e-9; the diagonal is forced to zero. An optional
    non-numeric first row is taken as node labels.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise InputError(f"{path}: empty file")

    labels = None
    first = rows[0]
    if not _all_numeric(first):
        labels = tuple(tok.strip() for tok in first)
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no data rows")
    try:
        mat = np.array([[float(tok) for tok in row] for row in rows])
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric matrix entry ({exc})") from None
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InputError(f"{path}: matrix must be square, got {mat.shape}")
    if labels is not None and len(labels) != mat.shape[0]:
        raise InputError(f"{path}: header has {len(labels)} labels for {mat.shape[0]} columns")
    if np.max(np.abs(mat - mat.T)) > _SYM_TOL:
        raise InputError(f"{path}: matrix is not symmetric within {_SYM_TOL}")
    mat = (mat + mat.T) / 2.0

    if threshold is None:
        off = ~np.eye(mat.shape[0], dtype=bool)
        if not np.isin(mat[off], (0.0, 1.0)).all():
            raise InputError(f"{path}: entries must be 0/1 when no threshold is given")
        adj = mat.astype(np.uint8)
    else:
        adj = (mat > threshold).astype(np.uint8)
    np.fill_diagonal(adj, 0)
    return Graph(adj, labels=labels)


def _all_numeric(tokens) -> bool:
    try:
        for tok in tokens:
            float(tok)
    except ValueError:
        return False
    return True


def write_adjacency(graph: Graph, path) -> None:
    """Write the 0/1 adjacency as CSV, preceded by a label header row when
    the labels are distinguishable from a numeric data row."""
    labels = graph.labels or tuple(f"v{i + 1}" for i in range(graph.n))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if not _all_numeric(labels):
            writer.writerow(labels)
        for row in graph.adj:
            writer.writerow([int(x) for x in row])
