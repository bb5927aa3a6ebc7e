"""Height-field, mask, preview and mesh files.

* PFM: ``Pf`` grayscale, little-endian (scale ``-1.0``), rows stored bottom-up,
  float32 samples.  Round trips are bit-exact for float32-representable data.
* PNG16: 16-bit grayscale quantized over ``[min, max]``; the range lives in a
  ``<path>.range.json`` sidecar (``{"min": .., "max": ..}``).
* Meshes: closed solids (top grid, side walls, flat base grid) as OBJ or
  binary STL.  Both formats carry the same float32 vertex coordinates.
"""

from __future__ import annotations

import json
import re
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .fields import GradientField, as_scalar_field, forward_diff, normals_from_gradient

HEIGHT_FORMATS = ("pfm", "png16")
MESH_FORMATS = ("obj", "stl_binary")
_MAX_DIM = 1 << 16


class FormatError(ValueError):
    """Malformed or unsupported file contents."""


def _format_for(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in HEIGHT_FORMATS:
            raise FormatError(f"unknown height format {fmt!r}")
        return fmt
    return "png16" if path.suffix.lower() == ".png" else "pfm"


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".range.json")


# --- PFM ----------------------------------------------------------------

def write_pfm(path, h) -> None:
    h = as_scalar_field(h, "h")
    H, W = h.shape
    header = f"Pf\n{W} {H}\n-1.0\n".encode("ascii")
    body = np.ascontiguousarray(h[::-1].astype("<f4")).tobytes()
    Path(path).write_bytes(header + body)


def _read_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    m = re.compile(rb"\s*(\S+)").match(buf, pos)
    if m is None:
        raise FormatError("truncated PFM header")
    return m.group(1), m.end()


def read_pfm(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    tag, pos = _read_token(buf, 0)
    if tag != b"Pf":
        raise FormatError(f"not a grayscale PFM (header {tag[:8]!r})")
    try:
        w_tok, pos = _read_token(buf, pos)
        h_tok, pos = _read_token(buf, pos)
        s_tok, pos = _read_token(buf, pos)
        W, H, scale = int(w_tok), int(h_tok), float(s_tok)
    except ValueError as exc:
        raise FormatError(f"malformed PFM header: {exc}") from None
    if not (0 < W <= _MAX_DIM and 0 < H <= _MAX_DIM):
        raise FormatError(f"PFM dimensions out of range: {W}x{H}")
    if scale == 0.0:
        raise FormatError("PFM scale must be non-zero")
    pos += 1  # single whitespace byte after the scale
    n = W * H * 4
    if len(buf) - pos < n:
        raise FormatError(f"PFM data truncated: need {n} bytes, have {len(buf) - pos}")
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(buf, dtype=dtype, count=W * H, offset=pos).reshape(H, W)
    return data[::-1].astype(np.float64)


# --- PNG16 --------------------------------------------------------------

def write_png16(path, h) -> None:
    h = as_scalar_field(h, "h")
    lo, hi = float(h.min()), float(h.max())
    if hi > lo:
        q = np.rint((h - lo) / (hi - lo) * 65535.0)
    else:
        q = np.zeros_like(h)
    Image.fromarray(q.astype(np.uint16)).save(path, format="PNG")
    sidecar_path(path).write_text(json.dumps({"min": lo, "max": hi}))


def read_png16(path) -> np.ndarray:
    side = sidecar_path(path)
    if not side.exists():
        raise FormatError(f"missing range sidecar {side}")
    try:
        rng = json.loads(side.read_text())
        lo, hi = float(rng["min"]), float(rng["max"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"bad range sidecar {side}: {exc}") from None
    with Image.open(path) as im:
        q = np.asarray(im).astype(np.float64)
    if q.ndim != 2:
        raise FormatError(f"{path} is not a grayscale image")
    if hi > lo:
        return lo + q / 65535.0 * (hi - lo)
    return np.full(q.shape, lo)


def read_height(path, fmt: str | None = None) -> np.ndarray:
    path = Path(path)
    if _format_for(path, fmt) == "png16":
        return read_png16(path)
    return read_pfm(path)


def write_height(path, h, fmt: str | None = None) -> None:
    path = Path(path)
    if _format_for(path, fmt) == "png16":
        write_png16(path, h)
    else:
        write_pfm(path, h)


# --- masks and previews -------------------------------------------------

def read_mask(path) -> np.ndarray:
    """Foreground where the 8-bit gray level exceeds 127."""
    with Image.open(path) as im:
        gray = np.asarray(im.convert("L"))
    return gray > 127


def write_mask(path, mask) -> None:
    Image.fromarray(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)).save(path)


def render_preview(h, light_dir=(0.0, 0.0, 1.0), eta: float = 1.0) -> np.ndarray:
    """Lambertian shading ``max(0, <n, light>)`` as an 8-bit image."""
    light = np.asarray(light_dir, dtype=np.float64)
    norm = np.linalg.norm(light)
    if light.shape != (3,) or not norm > 0:
        raise ValueError(f"light direction must be a non-zero 3-vector, got {light_dir}")
    light = light / norm
    n = normals_from_gradient(GradientField(*forward_diff(as_scalar_field(h, "h"))), eta)
    shade = np.clip(n.nx * light[0] + n.ny * light[1] + n.nz * light[2], 0.0, 1.0)
    return np.rint(shade * 255.0).astype(np.uint8)


def write_preview(path, image: np.ndarray) -> None:
    Image.fromarray(image).save(path)


# --- meshes -------------------------------------------------------------

def relief_mesh(h, width_mm: float, relief_depth_mm: float, base_mm: float):
    """Closed triangle mesh of the relief as ``(vertices float32 (V,3), faces int (F,3))``.

    Top: one vertex per pixel, heights rescaled to ``[base, base + depth]``.
    Base: the same grid at ``z = 0``.  Walls join the two along the border.
    Faces wind counter-clockwise seen from outside.  Image row 0 is the
    far (max y) edge so the relief is not mirrored.
    """
    h = as_scalar_field(h, "h")
    for name, val in (("width_mm", width_mm), ("relief_depth_mm", relief_depth_mm), ("base_mm", base_mm)):
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")
    H, W = h.shape
    lo, hi = h.min(), h.max()
    unit = (h - lo) / (hi - lo) if hi > lo else np.zeros_like(h)
    depth_y = width_mm * H / W
    xs = np.linspace(0.0, width_mm, W)
    ys = np.linspace(depth_y, 0.0, H)
    X, Y = np.meshgrid(xs, ys)
    top = np.stack([X, Y, base_mm + relief_depth_mm * unit], axis=-1).reshape(-1, 3)
    bottom = np.stack([X, Y, np.zeros_like(X)], axis=-1).reshape(-1, 3)
    verts = np.concatenate([top, bottom]).astype(np.float32)

    idx = np.arange(H * W).reshape(H, W)
    a = idx[:-1, :-1].ravel()   # row v, col u
    b = idx[:-1, 1:].ravel()    # row v, col u+1
    c = idx[1:, :-1].ravel()    # row v+1, col u (smaller y)
    d = idx[1:, 1:].ravel()
    top_faces = np.concatenate([np.stack([c, b, a], 1), np.stack([c, d, b], 1)])
    off = H * W
    bottom_faces = top_faces[:, ::-1] + off

    # border loop, counter-clockwise seen from +z
    ring = np.concatenate([
        idx[-1, :],            # y = 0 edge, increasing x
        idx[-2::-1, -1],       # x = max edge, increasing y
        idx[0, -2::-1],        # y = max edge, decreasing x
        idx[1:-1, 0],          # x = 0 edge, decreasing y
    ])
    p = ring
    q = np.roll(ring, -1)
    walls = np.concatenate([np.stack([p, q + off, q], 1), np.stack([p, p + off, q + off], 1)])
    faces = np.concatenate([top_faces, bottom_faces, walls]).astype(np.int64)
    return verts, faces


def write_obj(path, verts: np.ndarray, faces: np.ndarray) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# relief mesh\n")
        for x, y, z in verts:
            # float32 -> float is exact and repr round-trips, so OBJ and STL agree bit for bit
            fh.write(f"v {float(x)!r} {float(y)!r} {float(z)!r}\n")
        for i, j, k in faces + 1:
            fh.write(f"f {i} {j} {k}\n")


def write_stl_binary(path, verts: np.ndarray, faces: np.ndarray) -> None:
    tri = verts[faces].astype(np.float64)
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    length = np.linalg.norm(n, axis=1, keepdims=True)
    n = np.divide(n, length, out=np.zeros_like(n), where=length > 0)
    rec = np.zeros(len(faces), dtype=np.dtype([
        ("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2"),
    ]))
    rec["normal"] = n
    rec["v"] = verts[faces]
    header = b"binary STL relief".ljust(80, b"\0")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(struct.pack("<I", len(faces)))
        fh.write(rec.tobytes())


def export_mesh(path, h, width_mm: float, relief_depth_mm: float, base_mm: float,
                fmt: str = "stl_binary") -> tuple[int, int]:
    """Write the relief solid; returns ``(n_vertices, n_triangles)``."""
    if fmt not in MESH_FORMATS:
        raise FormatError(f"unknown mesh format {fmt!r}; expected one of {MESH_FORMATS}")
    verts, faces = relief_mesh(h, width_mm, relief_depth_mm, base_mm)
    if fmt == "obj":
        write_obj(path, verts, faces)
    else:
        write_stl_binary(path, verts, faces)
    return len(verts), len(faces)


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = [], []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(t) for t in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(t.split("/")[0]) - 1 for t in parts[1:4]])
    return np.asarray(verts, dtype=np.float64), np.asarray(faces, dtype=np.int64)


def read_stl_binary(path) -> np.ndarray:
    """Triangles as a float array ``(F, 3, 3)``."""
    buf = Path(path).read_bytes()
    if len(buf) < 84:
        raise FormatError("STL file shorter than its header")
    (count,) = struct.unpack_from("<I", buf, 80)
    if len(buf) != 84 + 50 * count:
        raise FormatError(f"STL size {len(buf)} does not match {count} facets")
    rec = np.frombuffer(buf, dtype=np.dtype([
        ("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2"),
    ]), count=count, offset=84)
    return rec["v"].astype(np.float64)
