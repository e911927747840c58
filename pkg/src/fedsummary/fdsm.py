"""FDSM binary files: little-endian serialization of datasets and summaries.

Record layout (all integers little-endian):

    magic "FDSM" | version u16 = 1 | record type u8 | id_len u16 + client_id
    | C u32 | dim u32 | payload

Dataset records (type 0) carry a sample count u32 followed by one
(label u32, dim float32 values) block per sample. Summary records (type 1)
carry a kind byte (0 encoder, 1 label, 2 conditional) and then:

    encoder:     C u32, H u32, C*H+C float32
    label:       C float32
    conditional: B u32, lo f32, hi f32, C*dim*B float32 (row-normalized
                 histograms, absent classes all-zero), C float32 label dist

Summary files may hold several records back to back. All writes are bit-exact
round trips of the in-memory values.
"""

from __future__ import annotations

import struct
from typing import BinaryIO, Iterable

import numpy as np

from .datamodel import EMBEDDED, RAW, ClientDataset
from .summary import CONDITIONAL, ENCODER, LABEL, DistributionSummary, HistogramSummary

MAGIC = b"FDSM"
VERSION = 1
REC_DATASET = 0
REC_SUMMARY = 1

_KIND_CODES = {ENCODER: 0, LABEL: 1, CONDITIONAL: 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


class FormatError(ValueError):
    """Malformed FDSM content; the message names the failing byte offset."""


class CountingWriter:
    """Write sink that only counts bytes (used for size measurements)."""

    def __init__(self):
        self.count = 0

    def write(self, data) -> int:
        self.count += len(data)
        return len(data)


class _Reader:
    def __init__(self, f: BinaryIO):
        self.f = f
        self.offset = 0

    def read_exact(self, n: int, what: str) -> bytes:
        data = self.f.read(n)
        if len(data) != n:
            raise FormatError(
                f"truncated file: expected {n} bytes for {what} at offset {self.offset}"
            )
        self.offset += n
        return data

    def unpack(self, fmt: str, what: str):
        size = struct.calcsize(fmt)
        return struct.unpack(fmt, self.read_exact(size, what))

    def at_eof(self) -> bool:
        data = self.f.read(1)
        if not data:
            return True
        self.f.seek(-1, 1)
        return False


def _sample_dtype(dim: int) -> np.dtype:
    return np.dtype([("label", "<u4"), ("features", "<f4", (dim,))])


def _write_header(f, rectype: int, client_id: str, num_classes: int, dim: int) -> None:
    cid = client_id.encode("utf-8")
    f.write(MAGIC)
    f.write(struct.pack("<HBH", VERSION, rectype, len(cid)))
    f.write(cid)
    f.write(struct.pack("<II", num_classes, dim))


def _read_header(r: _Reader) -> tuple[int, str, int, int]:
    start = r.offset
    magic = r.read_exact(4, "magic")
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r} at offset {start}")
    version, rectype, id_len = r.unpack("<HBH", "header")
    if version != VERSION:
        raise FormatError(f"unsupported version {version} at offset {start + 4}")
    if rectype not in (REC_DATASET, REC_SUMMARY):
        raise FormatError(f"unknown record type {rectype} at offset {start + 6}")
    client_id = r.read_exact(id_len, "client_id").decode("utf-8")
    num_classes, dim = r.unpack("<II", "class/dim header")
    return rectype, client_id, num_classes, dim


# ---------------------------------------------------------------- datasets

def write_dataset_record(f, ds: ClientDataset) -> None:
    _write_header(f, REC_DATASET, ds.client_id, ds.num_classes, ds.feature_dim)
    f.write(struct.pack("<I", ds.num_samples))
    records = np.empty(ds.num_samples, dtype=_sample_dtype(ds.feature_dim))
    records["label"] = ds.labels
    records["features"] = ds.features
    f.write(records.tobytes())


def write_dataset(path, ds: ClientDataset) -> None:
    with open(path, "wb") as f:
        write_dataset_record(f, ds)


def read_dataset_record(r: _Reader, kind: str) -> ClientDataset:
    rectype, client_id, num_classes, dim = _read_header(r)
    if rectype != REC_DATASET:
        raise FormatError(f"expected dataset record, got summary at offset {r.offset}")
    (count,) = r.unpack("<I", "sample count")
    raw = r.read_exact(count * (4 + 4 * dim), "samples")
    records = np.frombuffer(raw, dtype=_sample_dtype(dim))
    return ClientDataset(
        client_id=client_id,
        features=records["features"].copy(),
        labels=records["label"].astype(np.int64),
        num_classes=num_classes,
        kind=kind,
    )


def read_dataset(path, kind: str = RAW) -> ClientDataset:
    with open(path, "rb") as f:
        r = _Reader(f)
        ds = read_dataset_record(r, kind)
        if not r.at_eof():
            raise FormatError(f"trailing bytes at offset {r.offset}")
        return ds


def import_embedded_dataset(path) -> ClientDataset:
    """Load an embedded dataset produced by export/the offline encoder tool."""
    return read_dataset(path, kind=EMBEDDED)


def export_embedded_dataset(path, ds: ClientDataset) -> None:
    write_dataset(path, ds)


def dataset_record_size(ds: ClientDataset) -> int:
    sink = CountingWriter()
    write_dataset_record(sink, ds)
    return sink.count


# ---------------------------------------------------------------- summaries

def write_summary_record(f, s: DistributionSummary | HistogramSummary) -> None:
    if isinstance(s, DistributionSummary):
        _write_header(f, REC_SUMMARY, s.client_id, s.num_classes, s.embed_dim)
        f.write(struct.pack("<B", _KIND_CODES[ENCODER]))
        f.write(struct.pack("<II", s.num_classes, s.embed_dim))
        f.write(np.ascontiguousarray(s.values, dtype="<f4").tobytes())
        return

    if s.kind == LABEL:
        _write_header(f, REC_SUMMARY, s.client_id, s.num_classes, 0)
        f.write(struct.pack("<B", _KIND_CODES[LABEL]))
        f.write(np.ascontiguousarray(s.label_dist, dtype="<f4").tobytes())
        return

    _write_header(f, REC_SUMMARY, s.client_id, s.num_classes, s.feature_dim)
    f.write(struct.pack("<B", _KIND_CODES[CONDITIONAL]))
    f.write(struct.pack("<Iff", s.bins, s.lo, s.hi))
    zeros = np.zeros((s.feature_dim, s.bins), dtype="<f4").tobytes()
    for c in range(s.num_classes):
        hist = s.class_hists.get(c)
        if hist is None:
            f.write(zeros)
        else:
            f.write(np.ascontiguousarray(hist, dtype="<f4").tobytes())
    f.write(np.ascontiguousarray(s.label_dist, dtype="<f4").tobytes())


def read_summary_record(r: _Reader) -> DistributionSummary | HistogramSummary:
    rectype, client_id, num_classes, dim = _read_header(r)
    if rectype != REC_SUMMARY:
        raise FormatError(f"expected summary record, got dataset at offset {r.offset}")
    (kind_code,) = r.unpack("<B", "summary kind")
    kind = _KIND_NAMES.get(kind_code)
    if kind is None:
        raise FormatError(f"unknown summary kind {kind_code} at offset {r.offset - 1}")

    if kind == ENCODER:
        c, h = r.unpack("<II", "encoder dims")
        if c != num_classes or h != dim:
            raise FormatError(f"inconsistent encoder dims at offset {r.offset - 8}")
        raw = r.read_exact(4 * (c * h + c), "encoder values")
        values = np.frombuffer(raw, dtype="<f4").copy()
        return DistributionSummary(client_id, c, h, values)

    if kind == LABEL:
        raw = r.read_exact(4 * num_classes, "label distribution")
        dist = np.frombuffer(raw, dtype="<f4").copy()
        return HistogramSummary(client_id, LABEL, num_classes, dist)

    bins, lo, hi = r.unpack("<Iff", "histogram params")
    class_hists: dict[int, np.ndarray] = {}
    for c in range(num_classes):
        raw = r.read_exact(4 * dim * bins, f"class {c} histogram")
        hist = np.frombuffer(raw, dtype="<f4").reshape(dim, bins)
        if hist.any():
            class_hists[c] = hist.copy()
    raw = r.read_exact(4 * num_classes, "label distribution")
    dist = np.frombuffer(raw, dtype="<f4").copy()
    return HistogramSummary(
        client_id, CONDITIONAL, num_classes, dist,
        feature_dim=dim, bins=bins, lo=lo, hi=hi, class_hists=class_hists,
    )


def write_summaries(path, summaries: Iterable[DistributionSummary | HistogramSummary]) -> None:
    with open(path, "wb") as f:
        for s in summaries:
            write_summary_record(f, s)


def read_summaries(path) -> list[DistributionSummary | HistogramSummary]:
    out = []
    with open(path, "rb") as f:
        r = _Reader(f)
        while not r.at_eof():
            out.append(read_summary_record(r))
    return out


def summary_record_size(s: DistributionSummary | HistogramSummary) -> int:
    sink = CountingWriter()
    write_summary_record(sink, s)
    return sink.count
