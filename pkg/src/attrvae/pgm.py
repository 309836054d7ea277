"""Binary PGM (P5, maxval 255) images and simple grid tiling."""

from __future__ import annotations

import numpy as np

from .errors import FormatError


def write_pgm(image: np.ndarray, path) -> None:
    """Write a [0, 1] grayscale array as binary P5."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"PGM needs a 2-d image, got shape {image.shape}")
    h, w = image.shape
    data = np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read binary P5 back to a [0, 1] float array."""
    with open(path, "rb") as fh:
        blob = fh.read()
    fields = []
    pos = 0
    # header: magic, width, height, maxval as whitespace-separated ASCII tokens
    while len(fields) < 4 and pos < len(blob):
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        fields.append(blob[start:pos])
    if len(fields) != 4 or fields[0] != b"P5":
        raise FormatError(f"{path}: not a binary P5 file")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise FormatError(f"{path}: expected maxval 255, got {maxval}")
    pos += 1  # single whitespace after maxval
    pixels = np.frombuffer(blob[pos : pos + w * h], dtype=np.uint8)
    if pixels.size != w * h:
        raise FormatError(f"{path}: pixel payload truncated")
    return pixels.reshape(h, w).astype(np.float64) / 255.0


def tile_grid(rows, pad: int = 1, pad_value: float = 0.5) -> np.ndarray:
    """Tile a list of lists of equally-shaped images into one image."""
    if not rows or not rows[0]:
        raise ValueError("tile_grid needs at least one image")
    h, w = np.asarray(rows[0][0]).shape
    n_rows = len(rows)
    n_cols = len(rows[0])
    out = np.full((n_rows * h + (n_rows - 1) * pad,
                   n_cols * w + (n_cols - 1) * pad), pad_value, dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise ValueError("ragged grid")
        for j, img in enumerate(row):
            img = np.asarray(img, dtype=np.float64)
            if img.shape != (h, w):
                raise ValueError(f"image {img.shape} does not match grid cell {(h, w)}")
            out[i * (h + pad) : i * (h + pad) + h, j * (w + pad) : j * (w + pad) + w] = img
    return out
