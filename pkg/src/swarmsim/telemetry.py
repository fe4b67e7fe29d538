"""Canonical telemetry serialization: JSON-lines records and stable hashes.

A telemetry record is a flat dict {t, source, kind, payload}. The
canonical form fixes key order and whitespace and uses Python's shortest
round-trip float repr, so equal record streams produce byte-identical
files. That makes a run's full output hashable: the analysis hash is a
pure function of (scenario, seed), and re-serializing a parsed file is
a byte-level no-op.
"""

import csv
import hashlib
import json


def canonical_line(record) -> str:
    """One record as canonical JSON text (no trailing newline).

    Keys sorted, separators fixed, NaN/Inf rejected. Foreign scalar
    types that json does not know (e.g. numpy integers) raise TypeError
    rather than silently widening the schema; records must be built
    from plain Python values.
    """
    return json.dumps(record, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def write_jsonl(records, path) -> int:
    """Write records one canonical line each. Returns the record count."""
    n = 0
    with open(path, "w") as fh:
        for rec in records:
            fh.write(canonical_line(rec))
            fh.write("\n")
            n += 1
    return n


def read_jsonl(path) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def analysis_hash(records) -> str:
    """sha256 hex digest of the canonical serialization of all records.

    Identical to hashing the bytes of the file write_jsonl produces.
    """
    h = hashlib.sha256()
    for rec in records:
        h.update(canonical_line(rec).encode("ascii"))
        h.update(b"\n")
    return h.hexdigest()


def file_hash(path) -> str:
    """sha256 hex digest of a file's exact bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def export_csv(records, path, kind=None) -> int:
    """Flatten records (optionally one kind only) into a CSV time series.

    Columns are t, source, kind plus the sorted union of payload keys
    seen in the selected records; containers are embedded as canonical
    JSON text. Returns the number of data rows written.
    """
    rows = [r for r in records if kind is None or r["kind"] == kind]
    keys = sorted({k for r in rows for k in (r.get("payload") or {})})
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "source", "kind"] + keys)
        for r in rows:
            payload = r.get("payload") or {}
            cells = [r["t"], r["source"], r["kind"]]
            for k in keys:
                v = payload.get(k, "")
                if isinstance(v, (dict, list, tuple)):
                    v = canonical_line(v)
                cells.append(v)
            writer.writerow(cells)
    return len(rows)
