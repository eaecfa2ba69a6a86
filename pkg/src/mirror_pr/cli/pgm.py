"""Netpbm greymap (PGM) reading and writing, plain (P2) and raw (P5)."""

from __future__ import annotations

import numpy as np

__all__ = ["read_pgm", "write_pgm", "synthetic_image"]


class PGMError(ValueError):
    pass


def _tokens(data: bytes, count: int, pos: int = 0) -> tuple[list[bytes], int]:
    # Header tokens separated by whitespace; '#' starts a comment running to end of line.
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PGMError("truncated PGM header")
        out.append(data[start:pos])
    return out, pos


def read_pgm(path: str) -> tuple[np.ndarray, int]:
    """Return ``(image, maxval)`` with ``image`` a float array scaled to ``[0, 1]``."""
    with open(path, "rb") as fh:
        data = fh.read()
    (magic, w, h, mv), pos = _tokens(data, 4)
    if magic not in (b"P2", b"P5"):
        raise PGMError(f"unsupported magic {magic!r}; expected P2 or P5")
    width, height, maxval = int(w), int(h), int(mv)
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise PGMError("invalid PGM dimensions or maxval")
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        if len(data) - pos < count * dtype.itemsize:
            raise PGMError("truncated PGM raster")
        pixels = np.frombuffer(data, dtype=dtype, count=count, offset=pos).astype(float)
    else:
        body = data[pos:].split()
        if len(body) < count:
            raise PGMError("truncated PGM raster")
        pixels = np.array([int(t) for t in body[:count]], dtype=float)
    if pixels.max(initial=0.0) > maxval:
        raise PGMError("pixel value exceeds maxval")
    return pixels.reshape(height, width) / maxval, maxval


def write_pgm(path: str, image: np.ndarray, maxval: int = 255, binary: bool = True) -> None:
    """Write ``image`` (values in ``[0, 1]``, clipped) quantized to ``maxval``."""
    if not 0 < maxval < 65536:
        raise PGMError("maxval must lie in [1, 65535]")
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise PGMError("image must be 2-D")
    height, width = image.shape
    q = np.rint(np.clip(image, 0.0, 1.0) * maxval).astype(np.int64)
    header = f"{'P5' if binary else 'P2'}\n{width} {height}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        if binary:
            dtype = ">u2" if maxval > 255 else "u1"
            fh.write(q.astype(dtype).tobytes())
        else:
            for row in q:
                fh.write((" ".join(str(v) for v in row) + "\n").encode("ascii"))


def synthetic_image(size: int = 64) -> np.ndarray:
    """Deterministic test pattern in ``[0, 1]``: a disk, a bar and a smooth ramp."""
    u = (np.arange(size) + 0.5) / size
    X, Y = np.meshgrid(u, u)
    img = 0.2 + 0.3 * X * Y
    img += 0.5 * (((X - 0.35) ** 2 + (Y - 0.4) ** 2) < 0.04)
    img += 0.3 * ((np.abs(X - 0.72) < 0.08) & (np.abs(Y - 0.6) < 0.25))
    img += 0.1 * np.sin(6 * np.pi * X) * np.cos(4 * np.pi * Y)
    return np.clip(img, 0.0, 1.0)
