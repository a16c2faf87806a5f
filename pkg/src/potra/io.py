"""Binary and text graph file formats.

Binary layout (little-endian): magic "POTG", u8 version=1, u8 id_width in
{4, 8}, u8 orientation (0=CSR, 1=CSC), u8 pad, u64 num_vertices, u64
num_edges, then (num_vertices+1) u64 offsets, then num_edges edge IDs of
id_width bytes. The id width is forced by the vertex count: 4 bytes up to
2^32 vertices, 8 beyond.

Text layout: one "src dst" pair per line; blank lines and lines starting
with '#' are ignored.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import GraphFormatError
from .graph import CsrGraph, edge_id_dtype

__all__ = ["load_graph", "store_graph", "MAGIC", "HEADER_SIZE"]

MAGIC = b"POTG"
_HEADER = struct.Struct("<4sBBBBQQ")
HEADER_SIZE = _HEADER.size  # 24
_ORIENT_CODE = {"CSR": 0, "CSC": 1}
_ORIENT_NAME = {0: "CSR", 1: "CSC"}


def store_graph(g: CsrGraph, path) -> None:
    """Write g in the binary format; load_graph round-trips bit-for-bit."""
    dt = edge_id_dtype(g.num_vertices)
    with open(path, "wb") as f:
        f.write(
            _HEADER.pack(
                MAGIC, 1, dt.itemsize, _ORIENT_CODE[g.orientation], 0,
                g.num_vertices, g.num_edges,
            )
        )
        g.offsets.astype("<u8", copy=False).tofile(f)
        g.edges.astype(dt.newbyteorder("<"), copy=False).tofile(f)


def load_graph(path, format: str = "binary") -> CsrGraph:
    """Read a graph file; format is "binary" or "edge-list-text"."""
    if format == "binary":
        return _load_binary(path)
    if format == "edge-list-text":
        return _load_text(path)
    raise ValueError(f"unknown format {format!r}")


def _load_binary(path) -> CsrGraph:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < HEADER_SIZE:
        raise GraphFormatError(
            f"truncated file: {len(data)} bytes is shorter than the {HEADER_SIZE}-byte header",
            byte_offset=len(data),
        )
    magic, version, id_width, orient, _pad, nv, ne = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise GraphFormatError(f"malformed header: bad magic {magic!r}", byte_offset=0)
    if version != 1:
        raise GraphFormatError(f"malformed header: unsupported version {version}", byte_offset=4)
    if id_width not in (4, 8):
        raise GraphFormatError(f"malformed header: id width {id_width} not in {{4, 8}}", byte_offset=5)
    if orient not in _ORIENT_NAME:
        raise GraphFormatError(f"malformed header: orientation code {orient}", byte_offset=6)
    if id_width == 4 and nv > 2**32:
        raise GraphFormatError(
            "malformed header: 4-byte edge IDs cannot address "
            f"{nv} vertices", byte_offset=5,
        )

    offsets_bytes = (nv + 1) * 8
    expected = HEADER_SIZE + offsets_bytes + ne * id_width
    if len(data) < expected:
        raise GraphFormatError(
            f"truncated file: expected {expected} bytes, got {len(data)}",
            byte_offset=len(data),
        )

    offsets = np.frombuffer(data, dtype="<u8", count=nv + 1, offset=HEADER_SIZE)
    offsets = np.ascontiguousarray(offsets, dtype=np.uint64)
    if offsets[0] != 0:
        raise GraphFormatError("offsets[0] must be 0", byte_offset=HEADER_SIZE)
    deltas = np.diff(offsets.view(np.int64))
    bad = np.nonzero(deltas < 0)[0]
    if bad.size:
        i = int(bad[0]) + 1
        raise GraphFormatError(
            f"non-monotone offsets at index {i}", byte_offset=HEADER_SIZE + 8 * i
        )
    if int(offsets[-1]) != ne:
        raise GraphFormatError(
            f"offsets[-1] is {int(offsets[-1])} but header says {ne} edges",
            byte_offset=HEADER_SIZE + 8 * nv,
        )

    edt = np.dtype("<u4") if id_width == 4 else np.dtype("<u8")
    edges_off = HEADER_SIZE + offsets_bytes
    edges = np.frombuffer(data, dtype=edt, count=ne, offset=edges_off)
    edges = np.ascontiguousarray(edges, dtype=np.uint32 if id_width == 4 else np.uint64)
    if ne:
        bad_edge = np.nonzero(edges.astype(np.uint64) >= np.uint64(nv))[0]
        if bad_edge.size:
            i = int(bad_edge[0])
            raise GraphFormatError(
                f"edge ID {int(edges[i])} >= num_vertices {nv} at edge index {i}",
                byte_offset=edges_off + i * id_width,
            )
    return CsrGraph(int(nv), int(ne), offsets, edges, _ORIENT_NAME[orient])


def _load_text(path) -> CsrGraph:
    src: list[int] = []
    dst: list[int] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            body = line.strip()
            if not body or body.startswith("#"):
                continue
            parts = body.split()
            if len(parts) != 2:
                raise GraphFormatError(f"line {lineno}: expected 'src dst', got {body!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: non-integer vertex ID in {body!r}") from None
            if u < 0 or v < 0:
                raise GraphFormatError(f"line {lineno}: negative vertex ID in {body!r}")
            src.append(u)
            dst.append(v)
    if not src:
        return CsrGraph(0, 0, np.zeros(1, dtype=np.uint64), np.empty(0, dtype=np.uint32))
    src_a = np.asarray(src, dtype=np.int64)
    dst_a = np.asarray(dst, dtype=np.int64)
    nv = int(max(src_a.max(), dst_a.max())) + 1
    return CsrGraph.from_edge_pairs(src_a, dst_a, nv)
