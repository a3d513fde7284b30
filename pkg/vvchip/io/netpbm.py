"""
NetPBM images: 16-bit PGM (P5) for scalar images, 8-bit PPM (P6) for montages
"""
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from vvchip.exceptions.chip_exception import ArtifactIOError, ContractError

PGM_MAXVAL = 65535
PPM_MAXVAL = 255


def to_uint16(image: np.ndarray) -> np.ndarray:
    """
    Scale a non-negative image to its peak
    """
    image = np.asarray(image)
    if image.dtype == np.uint16:
        return image
    values = np.asarray(image, dtype=float)
    peak = float(values.max()) if values.size else 0.0
    if peak <= 0:
        return np.zeros(values.shape, dtype=np.uint16)
    return np.round(np.clip(values, 0.0, None) / peak * PGM_MAXVAL).astype(np.uint16)


def _write(path: Union[str, Path], header: bytes, payload: bytes):
    try:
        with open(path, "wb") as handle:
            handle.write(header)
            handle.write(payload)
    except OSError as error:
        raise ArtifactIOError(str(path), error.strerror or str(error))


def write_pgm(path: Union[str, Path], image: np.ndarray):
    """
    Rows are written top to bottom with the largest y first
    """
    data = np.flipud(to_uint16(image))
    height, width = data.shape
    header = f"P5\n{width} {height}\n{PGM_MAXVAL}\n".encode("ascii")
    _write(path, header, data.astype(">u2").tobytes())


def read_pgm(path: Union[str, Path]) -> np.ndarray:
    try:
        raw = Path(path).read_bytes()
    except OSError as error:
        raise ArtifactIOError(str(path), error.strerror or str(error))
    magic, width, height, maxval, payload = _split_header(raw)
    if magic != b"P5":
        raise ArtifactIOError(str(path), f"not a binary PGM ({magic!r})")
    dtype = ">u2" if maxval > 255 else "u1"
    data = np.frombuffer(payload, dtype=dtype, count=width * height)
    return np.flipud(data.reshape(height, width)).astype(np.uint16)


def _split_header(raw: bytes):
    fields: List[bytes] = []
    position = 0
    while len(fields) < 4:
        while raw[position : position + 1].isspace():
            position += 1
        start = position
        while not raw[position : position + 1].isspace():
            position += 1
        fields.append(raw[start:position])
    position += 1
    return fields[0], int(fields[1]), int(fields[2]), int(fields[3]), raw[position:]


def write_ppm(path: Union[str, Path], image: np.ndarray):
    if image.ndim != 3 or image.shape[2] != 3:
        raise ContractError(
            "write_ppm", f"expected an (h, w, 3) image, got {image.shape}"
        )
    height, width, _ = image.shape
    header = f"P6\n{width} {height}\n{PPM_MAXVAL}\n".encode("ascii")
    _write(path, header, np.asarray(image, dtype=np.uint8).tobytes())


def montage(rows: Sequence[Sequence[np.ndarray]], gap: int = 2) -> np.ndarray:
    """
    Grey montage of equally sized images, each row scaled to its own peak;
    image rows are flipped so y grows upwards
    """
    if not rows or not rows[0]:
        raise ContractError("montage", "no images")
    height, width = rows[0][0].shape
    columns = max(len(row) for row in rows)
    canvas = np.full(
        (len(rows) * (height + gap) - gap, columns * (width + gap) - gap, 3),
        PPM_MAXVAL,
        dtype=np.uint8,
    )
    for row_index, row in enumerate(rows):
        peak = max(float(np.max(image)) for image in row)
        for column_index, image in enumerate(row):
            if image.shape != (height, width):
                raise ContractError("montage", "images differ in shape")
            scaled = image / peak if peak > 0 else np.zeros_like(image, dtype=float)
            grey = np.round(np.flipud(scaled) * PPM_MAXVAL).astype(np.uint8)
            top = row_index * (height + gap)
            left = column_index * (width + gap)
            canvas[top : top + height, left : left + width, :] = grey[..., None]
    return canvas
