"""Provenance hashing and per-stage manifests.

Every pipeline stage records what went in and what came out.  Hashes are
sha256 hex digests truncated to 16 characters; enough to pin identity in a
manifest without bloating headers.
"""

import hashlib
import json
import time


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def hash_json(obj) -> str:
    """Hash of the canonical JSON encoding (sorted keys)."""
    return sha256_bytes(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8"))


def hash_arrays(*arrays) -> str:
    h = hashlib.sha256()
    for arr in arrays:
        h.update(str(arr.dtype).encode())
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()[:16]


def write_manifest(path, stage: str, seed, inputs: dict, outputs: dict, extra: dict | None = None):
    """Write a stage manifest JSON.

    ``inputs``/``outputs`` map label -> hash or path.  The manifest is the
    only artifact allowed to carry wall-clock time; data containers must be
    bitwise reproducible.
    """
    doc = {
        "stage": stage,
        "seed": seed,
        "inputs": inputs,
        "outputs": outputs,
        "wall_clock_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc
