"""File formats: corpus JSONL in, embedding NDJSON in, reports out.

Loaders validate and reject rather than repair; every error names the line
it came from.  Reports serialize through a canonical JSON writer (sorted
keys, 17-significant-digit floats) so that equal payloads are byte-equal,
which is what makes fixed-seed runs reproducible at the file level.
"""

from __future__ import annotations

import json
import re
from typing import IO

import numpy as np

from .core import Corpus, EvalInstance
from .distances import DistanceMatrix
from .errors import CorpusFormatError
from .kbm import EmbeddingTable

_KEY_RE = re.compile(r"^[0-9a-f]{64}$")

EMBEDDING_FORMAT_VERSION = 1


def load_corpus(path: str) -> Corpus:
    """Read a JSONL corpus: one {id, candidates, references} object per line.

    Blank lines are allowed; anything else malformed raises
    :class:`CorpusFormatError` naming the line.
    """
    instances = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid json ({exc.msg})", lineno) from None
            if not isinstance(rec, dict):
                raise CorpusFormatError("each line must be a json object", lineno)
            unknown = set(rec) - {"id", "candidates", "references"}
            if unknown:
                raise CorpusFormatError(
                    f"unknown fields {sorted(unknown)}", lineno
                )
            missing = {"id", "candidates", "references"} - set(rec)
            if missing:
                raise CorpusFormatError(f"missing fields {sorted(missing)}", lineno)
            inst_id = rec["id"]
            if not isinstance(inst_id, str) or not inst_id:
                raise CorpusFormatError("id must be a non-empty string", lineno)
            if inst_id in seen:
                raise CorpusFormatError(f"duplicate id {inst_id!r}", lineno)
            for fieldname in ("candidates", "references"):
                vals = rec[fieldname]
                if (
                    not isinstance(vals, list)
                    or not vals
                    or not all(isinstance(t, str) for t in vals)
                ):
                    raise CorpusFormatError(
                        f"{fieldname} must be a non-empty list of strings", lineno
                    )
            seen.add(inst_id)
            instances.append(
                EvalInstance.from_texts(inst_id, rec["candidates"], rec["references"])
            )
    if not instances:
        raise CorpusFormatError("corpus contains no instances")
    return Corpus(instances)


def load_embeddings(path: str) -> EmbeddingTable:
    """Read an embedding NDJSON file: a header line, then key/vector lines.

    The header pins {format_version, dim, encoder_name, pooling}; each entry
    is {key: sha256 hex, vector: [floats]} with the vector unit-norm within
    1e-4.  Duplicate keys, wrong dimensions, and norm violations all reject.
    """
    header = None
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid json ({exc.msg})", lineno) from None
            if not isinstance(rec, dict):
                raise CorpusFormatError("each line must be a json object", lineno)
            if header is None:
                header = _parse_embedding_header(rec, lineno)
                continue
            unknown = set(rec) - {"key", "vector"}
            if unknown:
                raise CorpusFormatError(f"unknown fields {sorted(unknown)}", lineno)
            if set(rec) != {"key", "vector"}:
                raise CorpusFormatError("entries need exactly {key, vector}", lineno)
            key = rec["key"]
            if not isinstance(key, str) or not _KEY_RE.match(key):
                raise CorpusFormatError(
                    "key must be 64 lowercase hex characters (sha-256)", lineno
                )
            if key in vectors:
                raise CorpusFormatError(f"duplicate key {key}", lineno)
            raw_vec = rec["vector"]
            if not isinstance(raw_vec, list) or len(raw_vec) != header["dim"]:
                raise CorpusFormatError(
                    f"vector must be a list of {header['dim']} numbers", lineno
                )
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw_vec):
                raise CorpusFormatError("vector entries must be numbers", lineno)
            vec = np.asarray(raw_vec, dtype=np.float64)
            if not np.isfinite(vec).all():
                raise CorpusFormatError("vector entries must be finite", lineno)
            norm = float(np.linalg.norm(vec))
            if abs(norm - 1.0) > 1e-4:
                raise CorpusFormatError(
                    f"vector norm {norm:.6f} is not 1 within 1e-4", lineno
                )
            vectors[key] = vec
    if header is None:
        raise CorpusFormatError("embedding file has no header line")
    if not vectors:
        raise CorpusFormatError("embedding file has no entries")
    return EmbeddingTable(
        dim=header["dim"],
        encoder_name=header["encoder_name"],
        pooling=header["pooling"],
        vectors=vectors,
    )


def _parse_embedding_header(rec: dict, lineno: int) -> dict:
    required = {"format_version", "dim", "encoder_name", "pooling"}
    if set(rec) != required:
        raise CorpusFormatError(
            f"header needs exactly the fields {sorted(required)}", lineno
        )
    if rec["format_version"] != EMBEDDING_FORMAT_VERSION:
        raise CorpusFormatError(
            f"unsupported format_version {rec['format_version']!r} "
            f"(expected {EMBEDDING_FORMAT_VERSION})",
            lineno,
        )
    if not isinstance(rec["dim"], int) or isinstance(rec["dim"], bool) or rec["dim"] < 1:
        raise CorpusFormatError("dim must be a positive integer", lineno)
    for fieldname in ("encoder_name", "pooling"):
        if not isinstance(rec[fieldname], str) or not rec[fieldname]:
            raise CorpusFormatError(f"{fieldname} must be a non-empty string", lineno)
    return rec


def _format_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError(f"reports only carry finite numbers, got {x}")
    return format(x, ".17g")


def _emit(obj, out: list) -> None:
    if isinstance(obj, dict):
        out.append("{")
        for idx, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"report keys must be strings, got {key!r}")
            if idx:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for idx, item in enumerate(obj):
            if idx:
                out.append(",")
            _emit(item, out)
        out.append("]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif obj is None:
        out.append("null")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} into a report")


def canonical_json(payload) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    out: list[str] = []
    _emit(payload, out)
    return "".join(out)


def write_report(payload: dict, fh: IO[str]) -> None:
    """Write one canonical-JSON report object plus a trailing newline."""
    fh.write(canonical_json(payload))
    fh.write("\n")


def write_curve_csv(points, fh: IO[str]) -> None:
    """Write sensitivity-curve rows as ``k,hmp,log10_hmp``."""
    fh.write("k,hmp,log10_hmp\n")
    for pt in points:
        fh.write(f"{pt.k},{_format_float(pt.hmp)},{_format_float(pt.log10_hmp)}\n")


def write_matrix_csv(matrix: DistanceMatrix, fh: IO[str]) -> None:
    """Write a labeled distance matrix; labels are the raw texts."""
    labels = (
        [u.raw for u in matrix.labels]
        if matrix.labels is not None
        else [f"text_{i}" for i in range(matrix.size)]
    )
    fh.write(",".join([""] + [_csv_quote(s) for s in labels]))
    fh.write("\n")
    for i, label in enumerate(labels):
        row = [_csv_quote(label)] + [
            _format_float(float(v)) for v in matrix.values[i]
        ]
        fh.write(",".join(row))
        fh.write("\n")


def _csv_quote(s: str) -> str:
    if any(ch in s for ch in ",\"\n\r"):
        return '"' + s.replace('"', '""') + '"'
    return s
