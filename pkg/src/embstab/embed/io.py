"""Embedding files.

Text: first line ``N d``, then N lines ``node_id v1 ... vd``; values may be
decimal or hex floats (``float.hex``), and ``save_embedding`` writes hex so
a round trip is exact.  Binary: magic ``EMB1``, little-endian u64 N, u64 d,
then N*d float64 values in row-major order.
"""

from __future__ import annotations

import math
import os
import struct
from pathlib import Path
from typing import BinaryIO, TextIO

import numpy as np

from ..errors import ParseError
from .types import Embedding

MAGIC = b"EMB1"


def _parse_float(token: str) -> float:
    if "0x" in token.lower():
        return float.fromhex(token)
    return float(token)


def save_embedding(e: Embedding, sink: TextIO) -> None:
    n, d = e.matrix.shape
    sink.write(f"{n} {d}\n")
    for i, row in enumerate(e.matrix.tolist()):
        sink.write(f"{i} " + " ".join(float.hex(x) for x in row) + "\n")


def save_embedding_binary(e: Embedding, sink: BinaryIO) -> None:
    n, d = e.matrix.shape
    sink.write(MAGIC + struct.pack("<QQ", n, d))
    sink.write(np.ascontiguousarray(e.matrix, dtype="<f8").tobytes())


def load_embedding(source: TextIO, expected_n: int | None = None, algorithm: str = "external",
                   seed: int | None = None) -> Embedding:
    header = source.readline().split()
    if len(header) != 2:
        raise ParseError("header must be 'N d'", 1)
    try:
        n, d = int(header[0]), int(header[1])
    except ValueError:
        raise ParseError("header must be 'N d'", 1) from None
    if expected_n is not None and n != expected_n:
        raise ParseError(f"embedding has {n} nodes, graph has {expected_n}", 1)
    matrix = np.zeros((n, d))
    seen = np.zeros(n, dtype=bool)
    rows = 0
    for lineno, line in enumerate(source, start=2):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != d + 1:
            raise ParseError(f"expected node id and {d} values, got {len(fields)} fields", lineno)
        try:
            u = int(fields[0])
        except ValueError:
            raise ParseError(f"node id {fields[0]!r} is not an integer", lineno) from None
        if not 0 <= u < n or seen[u]:
            raise ParseError(f"node id {u} out of range or repeated", lineno)
        try:
            vals = [_parse_float(t) for t in fields[1:]]
        except ValueError:
            raise ParseError("unparseable value", lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError("non-finite value", lineno)
        matrix[u] = vals
        seen[u] = True
        rows += 1
    if rows != n:
        raise ParseError(f"truncated file: header says {n} rows, found {rows}")
    return Embedding(matrix, algorithm, seed)


def load_embedding_binary(source: BinaryIO, expected_n: int | None = None,
                          algorithm: str = "external", seed: int | None = None) -> Embedding:
    head = source.read(20)
    if len(head) != 20 or head[:4] != MAGIC:
        raise ParseError("not an EMB1 container")
    n, d = struct.unpack("<QQ", head[4:])
    if expected_n is not None and n != expected_n:
        raise ParseError(f"embedding has {n} nodes, graph has {expected_n}")
    raw = source.read()
    if len(raw) != 8 * n * d:
        raise ParseError(f"truncated file: expected {n * d} values, found {len(raw) // 8}")
    matrix = np.frombuffer(raw, dtype="<f8").reshape(n, d).astype(np.float64)
    if not np.all(np.isfinite(matrix)):
        raise ParseError("non-finite value")
    return Embedding(matrix, algorithm, seed)


def read_embedding_file(path, expected_n: int | None = None, algorithm: str = "external",
                        seed: int | None = None) -> Embedding:
    path = Path(path)
    with open(path, "rb") as fh:
        binary = fh.read(4) == MAGIC
    if binary:
        with open(path, "rb") as fh:
            return load_embedding_binary(fh, expected_n, algorithm, seed)
    with open(path, encoding="utf-8") as fh:
        return load_embedding(fh, expected_n, algorithm, seed)


def write_embedding_file(e: Embedding, path, binary: bool = False) -> None:
    """Write atomically through a temporary sibling file."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    if binary:
        with open(tmp, "wb") as fh:
            save_embedding_binary(e, fh)
    else:
        with open(tmp, "w", encoding="utf-8") as fh:
            save_embedding(e, fh)
    os.replace(tmp, path)
