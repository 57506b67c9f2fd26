"""Binary and delimited-text products.

Binary layout (all integers little-endian)::

    offset  size  content
    0       8     magic b"CQPMDAT\\0"
    8       2     format version (uint16, currently 1)
    10      4     header length in bytes (uint32)
    14      n     header: UTF-8 text, one ``key=value`` per line
    14+n    ...   payload: float64 little-endian, row-major; complex arrays
                  interleave real and imaginary parts

Header keys always include ``kind``, ``dtype`` (``float64`` or
``complex128``) and ``shape`` (comma separated).  Floats are written with
``repr`` so they read back exactly.
"""
from __future__ import annotations

import hashlib
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .biphoton import FrequencyGrid, JsaGrid
from .errors import ProductIntegrityError

MAGIC = b"CQPMDAT\0"
VERSION = 1
_PREAMBLE = struct.Struct("<8sHI")


def atomic_write(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def encode_product(kind: str, array, header: dict | None = None) -> bytes:
    array = np.asarray(array)
    if np.iscomplexobj(array):
        dtype = "complex128"
        payload = np.ascontiguousarray(array, dtype="<c16")
    else:
        dtype = "float64"
        payload = np.ascontiguousarray(array, dtype="<f8")
    fields = {"kind": kind, "dtype": dtype, "shape": ",".join(str(n) for n in array.shape)}
    for key, value in (header or {}).items():
        if "=" in key or "\n" in key:
            raise ValueError(f"invalid header key {key!r}")
        text = _fmt(value)
        if "\n" in text:
            raise ValueError(f"header value for {key!r} spans lines")
        fields[key] = text
    head = "".join(f"{k}={v}\n" for k, v in fields.items()).encode("utf-8")
    return _PREAMBLE.pack(MAGIC, VERSION, len(head)) + head + payload.tobytes()


def write_product(path, kind, array, header=None):
    atomic_write(path, encode_product(kind, array, header))


def read_product(path):
    """Return ``(header, array)``; header values are strings."""
    data = Path(path).read_bytes()
    if len(data) < _PREAMBLE.size:
        raise ProductIntegrityError(f"{path}: truncated product file")
    magic, version, n_head = _PREAMBLE.unpack_from(data)
    if magic != MAGIC:
        raise ProductIntegrityError(f"{path}: bad magic bytes {magic!r}")
    if version != VERSION:
        raise ProductIntegrityError(f"{path}: unsupported format version {version}")
    start = _PREAMBLE.size
    try:
        text = data[start:start + n_head].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ProductIntegrityError(f"{path}: corrupt header") from exc
    header = dict(line.split("=", 1) for line in text.splitlines() if line)
    shape = tuple(int(n) for n in header["shape"].split(",") if n)
    dtype = "<c16" if header["dtype"] == "complex128" else "<f8"
    payload = data[start + n_head:]
    expected = int(np.prod(shape)) * np.dtype(dtype).itemsize
    if len(payload) != expected:
        raise ProductIntegrityError(f"{path}: payload has {len(payload)} bytes, expected {expected}")
    return header, np.frombuffer(payload, dtype=dtype).reshape(shape).copy()


def _grid_header(prefix, grid: FrequencyGrid):
    return {
        f"{prefix}.omega_min": grid.omega_min,
        f"{prefix}.omega_max": grid.omega_max,
        f"{prefix}.n_points": grid.n_points,
    }


def _grid_from_header(header, prefix):
    return FrequencyGrid(
        float(header[f"{prefix}.omega_min"]),
        float(header[f"{prefix}.omega_max"]),
        int(header[f"{prefix}.n_points"]),
    )


def save_jsa(path, j: JsaGrid):
    header = {**_grid_header("grid_s", j.grid_s), **_grid_header("grid_i", j.grid_i), "norm": j.norm}
    header.update({f"meta.{k}": v for k, v in j.meta.items()})
    write_product(path, "jsa", j.values, header)


def load_jsa(path) -> JsaGrid:
    header, values = read_product(path)
    if header.get("kind") != "jsa":
        raise ProductIntegrityError(f"{path}: not a jsa product")
    meta = {k[5:]: v for k, v in header.items() if k.startswith("meta.")}
    return JsaGrid(
        _grid_from_header(header, "grid_s"), _grid_from_header(header, "grid_i"),
        values, float(header["norm"]), meta,
    )


def save_cwf(path, w, meta=None):
    header = {
        **_grid_header("omega", w.omega_grid),
        "t0_fs": float(w.t[0]), "t_step_fs": w.t_step, "n_t": len(w.t),
        "imag_residue": w.imag_residue,
    }
    header.update({f"meta.{k}": v for k, v in (meta or {}).items()})
    write_product(path, "cwf", w.values, header)


def load_cwf(path):
    from .analysis import CwfGrid

    header, values = read_product(path)
    if header.get("kind") != "cwf":
        raise ProductIntegrityError(f"{path}: not a cwf product")
    t = float(header["t0_fs"]) + float(header["t_step_fs"]) * np.arange(int(header["n_t"]))
    return CwfGrid(_grid_from_header(header, "omega"), t, values, float(header["imag_residue"]))


def save_schmidt(path, res, meta=None):
    header = {"k_number": res.k_number, "purity": res.purity}
    header.update({f"meta.{k}": v for k, v in (meta or {}).items()})
    write_product(path, "schmidt", res.schmidt_coefficients, header)


def load_schmidt(path):
    from .analysis import SchmidtResult

    header, values = read_product(path)
    if header.get("kind") != "schmidt":
        raise ProductIntegrityError(f"{path}: not a schmidt product")
    return SchmidtResult(float(header["k_number"]), float(header["purity"]), values)


def table_text(columns, rows, comments=()):
    """Tab-separated table; comment lines and the column row start with '#'."""
    lines = [f"# {c}" for c in comments]
    lines.append("# " + "\t".join(columns))
    for row in rows:
        lines.append("\t".join(_fmt(v) if not isinstance(v, str) else v for v in row))
    return "\n".join(lines) + "\n"


def write_table(path, columns, rows, comments=()):
    atomic_write(path, table_text(columns, rows, comments).encode("utf-8"))


def read_table(path):
    """Return ``(columns, rows)`` with numeric cells as floats."""
    columns = None
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            columns = line[1:].strip().split("\t")
            continue
        cells = []
        for cell in line.split("\t"):
            try:
                cells.append(float(cell))
            except ValueError:
                cells.append(cell)
        rows.append(cells)
    return columns, rows
