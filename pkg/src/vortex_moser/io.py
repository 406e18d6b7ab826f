"""VMF1 field files and space-time manifests.

VMF1 layout (little endian)::

    8 bytes   b"VMF1\\0\\0\\0\\0"
    u32 x 4   nx, ny, components, flags (bit 0: mask present)
    f64 x 4   origin_x, origin_y, h, mask_radius (0 when absent)
    f64 ...   nx*ny*components samples, row-major (y rows, then x, then component)

A manifest is a text file with ``cylinder`` header lines and one
``t=<float> file=<path>`` line per slice; relative paths resolve against the
manifest's directory.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .fields import Cylinder, GridField2D, SpaceTimeField

MAGIC = b"VMF1\0\0\0\0"
_HEADER = struct.Struct("<8s4I4d")


class FormatError(ValueError):
    pass


def write_vmf(path, f: GridField2D) -> None:
    flags = 1 if f.mask_radius is not None else 0
    header = _HEADER.pack(MAGIC, f.nx, f.ny, f.components, flags,
                          f.origin[0], f.origin[1], f.h, f.mask_radius or 0.0)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.data, dtype="<f8").tobytes())


def read_vmf(path) -> GridField2D:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size or raw[:8] != MAGIC:
        raise FormatError(f"{path}: not a VMF1 file")
    magic, nx, ny, comps, flags, ox, oy, h, mr = _HEADER.unpack_from(raw)
    if comps not in (1, 2):
        raise FormatError(f"{path}: bad component count {comps}")
    count = nx * ny * comps
    body = raw[_HEADER.size:]
    if len(body) != 8 * count:
        raise FormatError(f"{path}: expected {count} samples, found {len(body) // 8}")
    data = np.frombuffer(body, dtype="<f8").astype(np.float64)
    data = data.reshape((ny, nx) if comps == 1 else (ny, nx, 2))
    return GridField2D(data, h, (ox, oy), mr if flags & 1 else None)


def write_manifest(path, F: SpaceTimeField, prefix: str = "slice") -> None:
    """Write every slice as ``<prefix>_<k>.vmf`` next to the manifest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    c = F.cylinder
    lines = [
        "# VMF1 space-time manifest",
        f"cylinder center_x={c.center[0]!r} center_y={c.center[1]!r} r={c.r!r}",
        f"cylinder t0={c.t0!r} t1={c.t1!r} scaling={c.scaling}",
    ]
    for k, (t, f) in enumerate(zip(F.times, F.fields)):
        name = f"{prefix}_{k:04d}.vmf"
        write_vmf(path.parent / name, f)
        lines.append(f"t={t!r} file={name}")
    path.write_text("\n".join(lines) + "\n")


def read_manifest(path) -> SpaceTimeField:
    path = Path(path)
    cyl: dict[str, str] = {}
    times, fields = [], []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "cylinder":
            for tok in tokens[1:]:
                key, _, val = tok.partition("=")
                cyl[key] = val
            continue
        kv = dict(tok.partition("=")[::2] for tok in tokens)
        if "t" not in kv or "file" not in kv:
            raise FormatError(f"{path}:{lineno}: expected 't=<float> file=<path>'")
        fp = Path(kv["file"])
        if not fp.is_absolute():
            fp = path.parent / fp
        times.append(float(kv["t"]))
        fields.append(read_vmf(fp))
    if not times:
        raise FormatError(f"{path}: manifest lists no slices")
    cylinder = None
    if cyl:
        try:
            cylinder = Cylinder((float(cyl["center_x"]), float(cyl["center_y"])), float(cyl["r"]),
                                float(cyl["t0"]), float(cyl["t1"]), cyl.get("scaling", "euler"))
        except KeyError as exc:
            raise FormatError(f"{path}: incomplete cylinder header, missing {exc}") from None
    return SpaceTimeField.from_slices(times, fields, cylinder)


def is_manifest(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(8) != MAGIC and os.path.getsize(path) > 0
