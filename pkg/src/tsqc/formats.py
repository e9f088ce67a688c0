"""Serialization of compressed artifacts, as canonical JSON text or compact binary.

Binary layout, all integers little-endian::

    "TSQC"                 4 bytes magic
    version                u8
    kind                   u8   (1 quantile_a, 2 banded_b, 3 coverage_c)
    body_length            u32
    body                   body_length bytes, kind specific (see _write_*)
    crc32                  u32 over every preceding byte

Counts are u32, timestamps i64 epoch-ms, reals IEEE-754 binary64.
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .core import Codebook, CompressedSeries

MAGIC = b"TSQC"
VERSION = 1
KINDS = ("quantile_a", "banded_b", "coverage_c")
_KIND_CODE = {k: i + 1 for i, k in enumerate(KINDS)}
_HEADER = struct.Struct("<4sBBI")
_CRC = struct.Struct("<I")
_STATS = ("median", "mean")
_BAND_MODES = ("constant", "rolling", "external")


class FormatError(ValueError):
    code = "format"


class ParseError(FormatError):
    code = "parse"

    def __init__(self, msg: str, line: int = 0, column: int = 0):
        super().__init__(f"{msg} (line {line}, column {column})" if line else msg)
        self.line = line
        self.column = column


class BadMagicError(FormatError):
    code = "bad_magic"


class ChecksumError(FormatError):
    code = "checksum"


class TruncatedError(FormatError):
    code = "truncated"


class UnsupportedVersionError(FormatError):
    code = "unsupported_version"


class UnknownKindError(FormatError):
    code = "unknown_kind"


class InvalidPayloadError(FormatError):
    code = "invalid_payload"


def _finite(x, what="value") -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InvalidPayloadError(f"{what} must be a number, got {x!r}")
    x = float(x)
    if not math.isfinite(x):
        raise InvalidPayloadError(f"{what} must be finite")
    return x + 0.0


def _integer(x, what="integer") -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise InvalidPayloadError(f"{what} must be an integer, got {x!r}")
    return x


@dataclass(frozen=True)
class QuantileArtifact:
    levels: Tuple[float, ...]
    compressed: CompressedSeries

    def __post_init__(self):
        try:
            levels = Codebook(tuple(_finite(v, "level") for v in self.levels)).levels
        except ValueError as exc:
            raise InvalidPayloadError(str(exc)) from exc
        object.__setattr__(self, "levels", levels)


@dataclass(frozen=True)
class BandSpec:
    """How the threshold band was obtained, enough to rebuild or describe it."""

    mode: str = "external"
    lower: Optional[float] = None
    upper: Optional[float] = None
    window: Optional[int] = None
    lower_q: Optional[float] = None
    upper_q: Optional[float] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.mode not in _BAND_MODES:
            raise InvalidPayloadError(f"unknown band mode {self.mode!r}")
        need = {
            "constant": ("lower", "upper"),
            "rolling": ("window", "lower_q", "upper_q", "epsilon"),
            "external": (),
        }[self.mode]
        for name in ("lower", "upper", "window", "lower_q", "upper_q", "epsilon"):
            v = getattr(self, name)
            if name in need and v is None:
                raise InvalidPayloadError(f"{self.mode} band needs {name}")
            if name not in need and v is not None:
                raise InvalidPayloadError(f"{self.mode} band takes no {name}")
            if v is not None:
                v = _integer(v, name) if name == "window" else _finite(v, name)
                object.__setattr__(self, name, v)


@dataclass(frozen=True)
class BandedArtifact:
    n_slices: int
    statistic: str
    band: BandSpec
    slice_stats: Tuple[Tuple[int, float], ...]
    compressed: CompressedSeries
    exact: Tuple[bool, ...]

    def __post_init__(self):
        if self.statistic not in _STATS:
            raise InvalidPayloadError(f"unknown statistic {self.statistic!r}")
        if _integer(self.n_slices, "n_slices") < 1:
            raise InvalidPayloadError("n_slices must be >= 1")
        stats = tuple((_integer(j, "slice"), _finite(m)) for j, m in self.slice_stats)
        if any(not 0 <= j < self.n_slices for j, _ in stats):
            raise InvalidPayloadError("slice index out of range")
        if len(self.exact) != len(self.compressed):
            raise InvalidPayloadError("exact flags do not match change-points")
        object.__setattr__(self, "slice_stats", stats)
        object.__setattr__(self, "exact", tuple(bool(e) for e in self.exact))


@dataclass(frozen=True)
class CoverageArtifact:
    """Encoded point cloud: centroid codes per point, outliers stored verbatim."""

    delta: Optional[float]
    centroids: Tuple[Tuple[float, ...], ...]
    timestamps: Tuple[int, ...]
    codes: Tuple[int, ...]
    outlier_points: Tuple[Tuple[float, ...], ...] = field(default=())

    def __post_init__(self):
        if not self.centroids:
            raise InvalidPayloadError("coverage needs at least one centroid")
        dim = len(self.centroids[0])
        if dim == 0:
            raise InvalidPayloadError("zero-dimensional centroids")
        cents = tuple(tuple(_finite(c) for c in row) for row in self.centroids)
        outs = tuple(tuple(_finite(c) for c in row) for row in self.outlier_points)
        if any(len(r) != dim for r in cents + outs):
            raise InvalidPayloadError("inconsistent point dimension")
        codes = tuple(_integer(c, "code") for c in self.codes)
        if len(codes) != len(self.timestamps) or not codes:
            raise InvalidPayloadError("one code per timestamp required")
        if any(not -1 <= c < len(cents) for c in codes):
            raise InvalidPayloadError("code refers to a missing centroid")
        if sum(c == -1 for c in codes) != len(outs):
            raise InvalidPayloadError("outlier count does not match codes")
        ts = tuple(_integer(t, "timestamp") for t in self.timestamps)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidPayloadError("timestamps must be strictly increasing")
        if self.delta is not None:
            d = _finite(self.delta, "delta")
            if d < 0:
                raise InvalidPayloadError("delta must be >= 0")
            object.__setattr__(self, "delta", d)
        object.__setattr__(self, "centroids", cents)
        object.__setattr__(self, "outlier_points", outs)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "timestamps", ts)

    @property
    def dim(self) -> int:
        return len(self.centroids[0])

    def decoded_points(self) -> np.ndarray:
        """The encoded cloud: centroid per coded point, exact value per outlier."""
        c = np.asarray(self.centroids, dtype=float)
        out = np.empty((len(self.codes), self.dim))
        outliers = iter(self.outlier_points)
        for i, code in enumerate(self.codes):
            out[i] = next(outliers) if code == -1 else c[code]
        return out


Payload = Union[QuantileArtifact, BandedArtifact, CoverageArtifact]
_PAYLOAD_KIND = {QuantileArtifact: "quantile_a", BandedArtifact: "banded_b", CoverageArtifact: "coverage_c"}


@dataclass(frozen=True)
class Artifact:
    kind: str
    payload: Payload
    version: int = VERSION

    def __post_init__(self):
        if self.version != VERSION:
            raise UnsupportedVersionError(f"unsupported artifact version {self.version}")
        if self.kind not in KINDS:
            raise UnknownKindError(f"unknown artifact kind {self.kind!r}")
        if _PAYLOAD_KIND.get(type(self.payload)) != self.kind:
            raise InvalidPayloadError(f"payload does not match kind {self.kind}")

    @classmethod
    def wrap(cls, payload: Payload) -> "Artifact":
        return cls(_PAYLOAD_KIND[type(payload)], payload)


def _compressed(points, original_length, last_ts) -> CompressedSeries:
    try:
        pts = tuple((_integer(t, "timestamp"), _finite(v)) for t, v in points)
        return CompressedSeries(pts, _integer(original_length), _integer(last_ts))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise InvalidPayloadError(str(exc)) from exc


# ---------------------------------------------------------------- text


def _payload_to_obj(p: Payload) -> dict:
    if isinstance(p, QuantileArtifact):
        c = p.compressed
        return {
            "levels": list(p.levels),
            "original_length": c.original_length,
            "original_last_timestamp": c.original_last_timestamp,
            "points": [[t, v] for t, v in c.points],
        }
    if isinstance(p, BandedArtifact):
        c = p.compressed
        band = {"mode": p.band.mode}
        for name in ("lower", "upper", "window", "lower_q", "upper_q", "epsilon"):
            if getattr(p.band, name) is not None:
                band[name] = getattr(p.band, name)
        return {
            "n_slices": p.n_slices,
            "statistic": p.statistic,
            "band": band,
            "slice_stats": [[j, m] for j, m in p.slice_stats],
            "original_length": c.original_length,
            "original_last_timestamp": c.original_last_timestamp,
            "points": [[t, v, e] for (t, v), e in zip(c.points, p.exact)],
        }
    return {
        "delta": p.delta,
        "centroids": [list(r) for r in p.centroids],
        "timestamps": list(p.timestamps),
        "codes": list(p.codes),
        "outlier_points": [list(r) for r in p.outlier_points],
    }


def _obj_to_payload(kind: str, obj) -> Payload:
    if not isinstance(obj, dict):
        raise InvalidPayloadError("payload must be an object")
    try:
        if kind == "quantile_a":
            levels = tuple(_finite(v, "level") for v in obj["levels"])
            comp = _compressed(obj["points"], obj["original_length"], obj["original_last_timestamp"])
            return QuantileArtifact(levels, comp)
        if kind == "banded_b":
            pts = obj["points"]
            if any(not isinstance(p, list) or len(p) != 3 or not isinstance(p[2], bool) for p in pts):
                raise InvalidPayloadError("banded points are [timestamp, value, exact]")
            comp = _compressed(
                [p[:2] for p in pts], obj["original_length"], obj["original_last_timestamp"]
            )
            band = obj["band"]
            if not isinstance(band, dict):
                raise InvalidPayloadError("band must be an object")
            return BandedArtifact(
                obj["n_slices"],
                obj["statistic"],
                BandSpec(**band),
                tuple(tuple(s) for s in obj["slice_stats"]),
                comp,
                tuple(p[2] for p in pts),
            )
        return CoverageArtifact(
            obj["delta"],
            tuple(tuple(r) for r in obj["centroids"]),
            tuple(obj["timestamps"]),
            tuple(obj["codes"]),
            tuple(tuple(r) for r in obj["outlier_points"]),
        )
    except (KeyError, TypeError) as exc:
        raise InvalidPayloadError(f"malformed {kind} payload: {exc!r}") from exc


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def encode_text(artifact: Artifact) -> str:
    body = {"kind": artifact.kind, "payload": _payload_to_obj(artifact.payload), "version": artifact.version}
    doc = dict(body, crc32=zlib.crc32(_canonical(body).encode()))
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ParseError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _reject_constant(name):
    raise ParseError(f"non-finite number {name} not allowed")


def _parse_float(s: str) -> float:
    x = float(s)
    if not math.isfinite(x):
        raise ParseError(f"number {s} overflows binary64")
    return x


def decode_text(text: str) -> Artifact:
    if not text.strip():
        raise ParseError("empty document", 1, 1)
    try:
        doc = json.loads(
            text,
            object_pairs_hook=_no_duplicates,
            parse_constant=_reject_constant,
            parse_float=_parse_float,
        )
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", 1, 1)
    missing = {"version", "kind", "payload", "crc32"} - doc.keys()
    if missing:
        raise ParseError(f"missing keys {sorted(missing)}")
    extra = doc.keys() - {"version", "kind", "payload", "crc32"}
    if extra:
        raise ParseError(f"unexpected keys {sorted(extra)}")
    if doc["version"] != VERSION or isinstance(doc["version"], bool):
        raise UnsupportedVersionError(f"unsupported artifact version {doc['version']!r}")
    if doc["kind"] not in KINDS:
        raise UnknownKindError(f"unknown artifact kind {doc['kind']!r}")
    body = {k: doc[k] for k in ("kind", "payload", "version")}
    if zlib.crc32(_canonical(body).encode()) != doc["crc32"]:
        raise ChecksumError("text artifact checksum mismatch")
    return Artifact(doc["kind"], _obj_to_payload(doc["kind"], doc["payload"]), doc["version"])


# ---------------------------------------------------------------- binary


class _Writer:
    def __init__(self):
        self.parts = []

    def pack(self, fmt: str, *args):
        self.parts.append(struct.pack("<" + fmt, *args))

    def reals(self, xs):
        self.pack("I", len(xs))
        self.parts.append(np.asarray(xs, dtype="<f8").tobytes())

    def bytes(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def unpack(self, fmt: str):
        s = struct.Struct("<" + fmt)
        if self.pos + s.size > len(self.buf):
            raise TruncatedError("artifact body ends early")
        out = s.unpack_from(self.buf, self.pos)
        self.pos += s.size
        return out

    def one(self, fmt: str):
        return self.unpack(fmt)[0]

    def reals(self, count: Optional[int] = None) -> Tuple[float, ...]:
        if count is None:
            count = self.one("I")
        if self.pos + 8 * count > len(self.buf):
            raise TruncatedError("artifact body ends early")
        xs = np.frombuffer(self.buf, dtype="<f8", count=count, offset=self.pos)
        self.pos += 8 * count
        return tuple(_finite(x) for x in xs.tolist())


def _write_compressed(w: _Writer, c: CompressedSeries, exact=None):
    w.pack("Iq", c.original_length, c.original_last_timestamp)
    w.pack("I", len(c))
    for i, (t, v) in enumerate(c.points):
        if exact is None:
            w.pack("qd", t, v)
        else:
            w.pack("qdB", t, v, int(exact[i]))


def _read_compressed(r: _Reader, with_exact: bool):
    n, last = r.unpack("Iq")
    m = r.one("I")
    pts, exact = [], []
    for _ in range(m):
        if with_exact:
            t, v, e = r.unpack("qdB")
            if e > 1:
                raise InvalidPayloadError("exact flag must be 0 or 1")
            exact.append(bool(e))
        else:
            t, v = r.unpack("qd")
        pts.append((t, _finite(v)))
    return _compressed(pts, n, last), tuple(exact)


def _write_body(p: Payload) -> bytes:
    w = _Writer()
    if isinstance(p, QuantileArtifact):
        w.reals(p.levels)
        _write_compressed(w, p.compressed)
    elif isinstance(p, BandedArtifact):
        b = p.band
        w.pack("IBB", p.n_slices, _STATS.index(p.statistic), _BAND_MODES.index(b.mode))
        if b.mode == "constant":
            w.pack("dd", b.lower, b.upper)
        elif b.mode == "rolling":
            w.pack("Iddd", b.window, b.lower_q, b.upper_q, b.epsilon)
        w.pack("I", len(p.slice_stats))
        for j, m in p.slice_stats:
            w.pack("Id", j, m)
        _write_compressed(w, p.compressed, p.exact)
    else:
        w.pack("IBd", p.dim, p.delta is not None, 0.0 if p.delta is None else p.delta)
        w.pack("I", len(p.centroids))
        for row in p.centroids:
            w.pack(f"{p.dim}d", *row)
        w.pack("I", len(p.codes))
        for t, code in zip(p.timestamps, p.codes):
            w.pack("qi", t, code)
        w.pack("I", len(p.outlier_points))
        for row in p.outlier_points:
            w.pack(f"{p.dim}d", *row)
    return w.bytes()


def _read_body(kind: str, body: bytes) -> Payload:
    r = _Reader(body)
    if kind == "quantile_a":
        levels = r.reals()
        comp, _ = _read_compressed(r, False)
        payload: Payload = QuantileArtifact(levels, comp)
    elif kind == "banded_b":
        n, stat, mode = r.unpack("IBB")
        if stat >= len(_STATS) or mode >= len(_BAND_MODES):
            raise InvalidPayloadError("bad statistic or band mode code")
        mode_name = _BAND_MODES[mode]
        if mode_name == "constant":
            lo, hi = r.unpack("dd")
            band = BandSpec(mode_name, lower=lo, upper=hi)
        elif mode_name == "rolling":
            win, lq, uq, eps = r.unpack("Iddd")
            band = BandSpec(mode_name, window=win, lower_q=lq, upper_q=uq, epsilon=eps)
        else:
            band = BandSpec()
        stats = tuple(r.unpack("Id") for _ in range(r.one("I")))
        comp, exact = _read_compressed(r, True)
        payload = BandedArtifact(n, _STATS[stat], band, stats, comp, exact)
    else:
        dim, has_delta, delta = r.unpack("IBd")
        if has_delta > 1 or dim == 0:
            raise InvalidPayloadError("bad coverage header")
        k = r.one("I")
        cents = tuple(r.reals(dim) for _ in range(k))
        rows = [r.unpack("qi") for _ in range(r.one("I"))]
        outs = tuple(r.reals(dim) for _ in range(r.one("I")))
        payload = CoverageArtifact(
            delta if has_delta else None,
            cents,
            tuple(t for t, _ in rows),
            tuple(c for _, c in rows),
            outs,
        )
    if r.pos != len(body):
        raise InvalidPayloadError(f"{len(body) - r.pos} unread bytes after payload")
    return payload


def encode_binary(artifact: Artifact) -> bytes:
    body = _write_body(artifact.payload)
    head = _HEADER.pack(MAGIC, artifact.version, _KIND_CODE[artifact.kind], len(body))
    data = head + body
    return data + _CRC.pack(zlib.crc32(data))


def decode_binary(data: bytes) -> Artifact:
    data = bytes(data)
    if len(data) < _HEADER.size + _CRC.size:
        if not MAGIC.startswith(data[:4]):
            raise BadMagicError("not a TSQC artifact")
        raise TruncatedError(f"artifact is only {len(data)} bytes")
    magic, version, kind_code, body_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError("not a TSQC artifact")
    expected = _HEADER.size + body_len + _CRC.size
    (crc,) = _CRC.unpack_from(data, len(data) - _CRC.size)
    if zlib.crc32(data[: -_CRC.size]) != crc:
        if len(data) < expected:
            raise TruncatedError(f"artifact has {len(data)} of {expected} bytes")
        raise ChecksumError("CRC-32 mismatch: artifact is corrupted")
    if len(data) != expected:
        raise InvalidPayloadError("declared body length disagrees with file size")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported artifact version {version}")
    if not 1 <= kind_code <= len(KINDS):
        raise UnknownKindError(f"unknown artifact kind code {kind_code}")
    kind = KINDS[kind_code - 1]
    try:
        payload = _read_body(kind, data[_HEADER.size: _HEADER.size + body_len])
    except struct.error as exc:
        raise TruncatedError(str(exc)) from exc
    return Artifact(kind, payload, version)


def looks_binary(data: bytes) -> bool:
    return data[:4] == MAGIC


def decode(data: bytes) -> Artifact:
    """Decode either encoding, sniffing the magic bytes."""
    if looks_binary(data):
        return decode_binary(data)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise BadMagicError("neither a binary nor a text TSQC artifact") from exc
    return decode_text(text)
