"""Versioned binary container used by every on-disk artifact.

Layout: an ASCII magic line, the UTF-8 JSON header length in bytes on its
own line, the JSON header, then the raw array payloads concatenated in the
order they are listed in the header.  The header's ``arrays`` entry records
name, dtype and shape for each payload block, so files are self-describing
and can be rewritten bit-for-bit from the same inputs (no timestamps are
ever stored here; wall-clock times belong to stage manifests).
"""

import json
import io

import numpy as np

MAGIC = b"MORPHUQ1"
CONTAINER_VERSION = 1


class ContainerError(ValueError):
    """Raised for malformed, truncated, or wrong-kind container files."""


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def write_container(path, kind: str, meta: dict, arrays: dict) -> None:
    """Write ``arrays`` (name -> ndarray) with JSON metadata to ``path``.

    ``kind`` tags the artifact type (dataset, checkpoint, posterior, result)
    and is checked again on read.  Array payloads are stored little-endian,
    C-order.  Writing is deterministic: same inputs, same bytes.
    """
    specs = []
    blobs = []
    for name in arrays:
        arr = np.ascontiguousarray(arrays[name])
        dt = arr.dtype.newbyteorder("<")
        arr = arr.astype(dt, copy=False)
        specs.append({"name": name, "dtype": dt.str, "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    header = {
        "container_version": CONTAINER_VERSION,
        "kind": kind,
        "meta": meta,
        "arrays": specs,
    }
    head = _canonical_json(header)
    with open(path, "wb") as fh:
        fh.write(MAGIC + b"\n")
        fh.write(str(len(head)).encode("ascii") + b"\n")
        fh.write(head)
        for blob in blobs:
            fh.write(blob)


def read_container(path, expect_kind: str | None = None):
    """Read a container; returns (meta, arrays dict).

    Raises ContainerError on bad magic, truncation, or kind mismatch.
    """
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != MAGIC:
            raise ContainerError(f"{path}: not a morphuq container (bad magic)")
        try:
            hlen = int(fh.readline().strip())
        except ValueError as exc:
            raise ContainerError(f"{path}: corrupt header length") from exc
        head = fh.read(hlen)
        if len(head) != hlen:
            raise ContainerError(f"{path}: truncated header")
        try:
            header = json.loads(head.decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise ContainerError(f"{path}: corrupt JSON header") from exc
        if header.get("container_version") != CONTAINER_VERSION:
            raise ContainerError(
                f"{path}: unsupported container version {header.get('container_version')}"
            )
        kind = header.get("kind")
        if expect_kind is not None and kind != expect_kind:
            raise ContainerError(f"{path}: kind is {kind!r}, expected {expect_kind!r}")
        arrays = {}
        for spec in header["arrays"]:
            dt = np.dtype(spec["dtype"])
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            blob = fh.read(count * dt.itemsize)
            if len(blob) != count * dt.itemsize:
                raise ContainerError(f"{path}: truncated payload for {spec['name']!r}")
            arrays[spec["name"]] = np.frombuffer(blob, dtype=dt).reshape(shape).copy()
    return header["meta"], arrays


def pack_container_bytes(kind: str, meta: dict, arrays: dict) -> bytes:
    """Same encoding as write_container but to memory (used for hashing)."""
    buf = io.BytesIO()
    specs = []
    blobs = []
    for name in arrays:
        arr = np.ascontiguousarray(arrays[name])
        dt = arr.dtype.newbyteorder("<")
        arr = arr.astype(dt, copy=False)
        specs.append({"name": name, "dtype": dt.str, "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    header = {
        "container_version": CONTAINER_VERSION,
        "kind": kind,
        "meta": meta,
        "arrays": specs,
    }
    head = _canonical_json(header)
    buf.write(MAGIC + b"\n")
    buf.write(str(len(head)).encode("ascii") + b"\n")
    buf.write(head)
    for blob in blobs:
        buf.write(blob)
    return buf.getvalue()
