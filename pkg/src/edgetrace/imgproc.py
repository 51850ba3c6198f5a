"""Raster primitives: PGM I/O, Gaussian smoothing, Canny edges, binary morphology.

Images are 2-D numpy arrays in row-major order: grayscale frames are uint8,
masks are bool, and structuring elements are bool with odd side lengths and
the anchor at the geometric centre. Origin is the top-left pixel, y grows
downward. All functions are pure.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .errors import (
    MalformedHeaderError,
    NonPositiveSigmaError,
    ThresholdOrderError,
    TruncatedDataError,
    UnsupportedMaxvalError,
    ZeroIterationsError,
)

_WHITESPACE = frozenset(b" \t\n\r\x0b\x0c")
_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


# ----------------------------------------------------------------- PGM codec

def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Return the next header token and the offset just past it.

    Skips whitespace and '#' comment lines, which the format allows between
    any two tokens.
    """
    n = len(data)
    while pos < n:
        c = data[pos]
        if c in _WHITESPACE:
            pos += 1
        elif c == 0x23:  # '#'
            while pos < n and data[pos] not in (0x0A, 0x0D):
                pos += 1
        else:
            break
    if pos >= n:
        raise MalformedHeaderError("unexpected end of header")
    start = pos
    while pos < n and data[pos] not in _WHITESPACE and data[pos] != 0x23:
        pos += 1
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    token, pos = _next_token(data, pos)
    if not token.isdigit():
        raise MalformedHeaderError(f"non-numeric {what} token {token!r}")
    return int(token), pos


def load_pgm(data: bytes) -> np.ndarray:
    """Decode a binary (P5) or ASCII (P2) PGM byte stream to a uint8 image.

    Comment lines starting with '#' may appear between header tokens.
    Only maxval <= 255 is supported.
    """
    magic, pos = _next_token(data, 0)
    if magic not in (b"P2", b"P5"):
        raise MalformedHeaderError(f"unsupported magic {magic!r}")
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"bad dimensions {width}x{height}")
    maxval, pos = _header_int(data, pos, "maxval")
    if maxval > 255:
        raise UnsupportedMaxvalError(f"maxval {maxval} exceeds 255")
    if maxval < 1:
        raise MalformedHeaderError(f"bad maxval {maxval}")

    count = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the raster
        if pos >= len(data) or data[pos] not in _WHITESPACE:
            raise MalformedHeaderError("missing raster separator")
        raster = data[pos + 1 : pos + 1 + count]
        if len(raster) < count:
            raise TruncatedDataError(
                f"raster holds {len(raster)} of {count} samples"
            )
        img = np.frombuffer(raster, dtype=np.uint8, count=count)
        return img.reshape(height, width).copy()

    values = np.empty(count, dtype=np.uint8)
    for i in range(count):
        try:
            token, pos = _next_token(data, pos)
        except MalformedHeaderError:
            raise TruncatedDataError(f"raster holds {i} of {count} samples")
        if not token.isdigit():
            raise MalformedHeaderError(f"non-numeric sample token {token!r}")
        value = int(token)
        if value > 255:
            raise MalformedHeaderError(f"sample value {value} exceeds 255")
        values[i] = value
    return values.reshape(height, width)


def write_pgm(img: np.ndarray, ascii_format: bool = False) -> bytes:
    """Encode a uint8 image as P5 (default) or P2 bytes with maxval 255."""
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 2:
        raise ValueError("expected a 2-D grayscale image")
    height, width = img.shape
    if ascii_format:
        rows = "\n".join(" ".join(str(v) for v in row) for row in img)
        return f"P2\n{width} {height}\n255\n{rows}\n".encode("ascii")
    return f"P5\n{width} {height}\n255\n".encode("ascii") + img.tobytes()


# ----------------------------------------------------------------- smoothing

def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _blur_float(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian on a float image, mirror-reflected borders."""
    kernel = _gaussian_kernel(sigma)
    out = ndimage.correlate1d(img, kernel, axis=1, mode="mirror")
    return ndimage.correlate1d(out, kernel, axis=0, mode="mirror")


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian-smooth a uint8 image.

    Separable kernel of radius ceil(3*sigma) with reflected borders; the
    result is rounded back to uint8. Constant images pass through unchanged.
    """
    if not sigma > 0:
        raise NonPositiveSigmaError(f"sigma must be > 0, got {sigma}")
    smoothed = _blur_float(np.asarray(img, dtype=np.float64), sigma)
    return np.clip(np.rint(smoothed), 0, 255).astype(np.uint8)


# --------------------------------------------------------------- Canny edges

def _sobel(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel gradients (gx, gy) with reflected borders."""
    p = np.pad(img, 1, mode="reflect")
    gx = (
        (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2])
    )
    gy = (
        (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:])
    )
    return gx, gy


def sobel_magnitude(img: np.ndarray) -> np.ndarray:
    """Gradient magnitude of a uint8 image, without smoothing."""
    gx, gy = _sobel(np.asarray(img, dtype=np.float64))
    return np.hypot(gx, gy)


def canny(img: np.ndarray, low: float, high: float, sigma: float = 1.4) -> np.ndarray:
    """Classic Canny edge detector returning a boolean edge mask.

    Pipeline: Gaussian blur, 3x3 Sobel, non-maximum suppression along the
    gradient direction quantized to 4 bins, then double-threshold hysteresis
    (weak pixels survive only when 8-connected to a strong pixel).
    """
    if not sigma > 0:
        raise NonPositiveSigmaError(f"sigma must be > 0, got {sigma}")
    if not 0 <= low < high:
        raise ThresholdOrderError(f"need 0 <= low < high, got {low}, {high}")

    smoothed = _blur_float(np.asarray(img, dtype=np.float64), sigma)
    gx, gy = _sobel(smoothed)
    mag = np.hypot(gx, gy)
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0

    height, width = mag.shape
    padded = np.pad(mag, 1)

    def shifted(dr: int, dc: int) -> np.ndarray:
        return padded[1 + dr : 1 + dr + height, 1 + dc : 1 + dc + width]

    # direction bins and the neighbor offsets along each gradient direction
    bins = (
        ((angle < 22.5) | (angle >= 157.5), (0, 1), (0, -1)),
        ((angle >= 22.5) & (angle < 67.5), (1, 1), (-1, -1)),
        ((angle >= 67.5) & (angle < 112.5), (1, 0), (-1, 0)),
        ((angle >= 112.5) & (angle < 157.5), (1, -1), (-1, 1)),
    )
    keep = np.zeros_like(mag, dtype=bool)
    for mask, ahead, behind in bins:
        keep |= mask & (mag >= shifted(*ahead)) & (mag >= shifted(*behind))
    keep &= mag > 0

    strong = keep & (mag >= high)
    weak = keep & (mag >= low)
    if not strong.any():
        return np.zeros_like(strong)
    labels, _ = ndimage.label(weak, structure=_EIGHT_CONNECTED)
    anchored = np.unique(labels[strong])
    return np.isin(labels, anchored[anchored > 0])


# ---------------------------------------------------------------- morphology

def square_selem(size: int = 3) -> np.ndarray:
    """Fully populated size x size structuring element (size odd)."""
    if size < 1 or size % 2 == 0:
        raise ValueError(f"structuring element side must be odd, got {size}")
    return np.ones((size, size), dtype=bool)


def cross_selem(size: int = 3) -> np.ndarray:
    """Plus-shaped structuring element with arms through the anchor."""
    if size < 1 or size % 2 == 0:
        raise ValueError(f"structuring element side must be odd, got {size}")
    se = np.zeros((size, size), dtype=bool)
    se[size // 2, :] = True
    se[:, size // 2] = True
    return se


def check_selem(se: np.ndarray) -> np.ndarray:
    """Validate a structuring element: 2-D, odd sides, anchor bit set."""
    se = np.asarray(se, dtype=bool)
    if se.ndim != 2:
        raise ValueError("structuring element must be 2-D")
    if se.shape[0] % 2 == 0 or se.shape[1] % 2 == 0:
        raise ValueError(f"structuring element sides must be odd, got {se.shape}")
    if not se[se.shape[0] // 2, se.shape[1] // 2]:
        raise ValueError("structuring element anchor must be a member")
    return se


def reflect_selem(se: np.ndarray) -> np.ndarray:
    """Point reflection of a structuring element about its anchor."""
    return check_selem(se)[::-1, ::-1].copy()


def _selem_offsets(se: np.ndarray) -> list[tuple[int, int]]:
    se = check_selem(se)
    ar, ac = se.shape[0] // 2, se.shape[1] // 2
    return [(int(r) - ar, int(c) - ac) for r, c in np.argwhere(se)]


def _shift(mask: np.ndarray, dr: int, dc: int) -> np.ndarray:
    """Translate a mask by (dr, dc), filling vacated cells with background."""
    height, width = mask.shape
    out = np.zeros_like(mask)
    rs = slice(max(dr, 0), min(height + dr, height))
    cs = slice(max(dc, 0), min(width + dc, width))
    rs_src = slice(max(-dr, 0), min(height - dr, height))
    cs_src = slice(max(-dc, 0), min(width - dc, width))
    out[rs, cs] = mask[rs_src, cs_src]
    return out


def dilate(mask: np.ndarray, se: np.ndarray) -> np.ndarray:
    """Binary dilation (Minkowski sum); out-of-bounds reads as background."""
    mask = np.asarray(mask, dtype=bool)
    out = np.zeros_like(mask)
    for dr, dc in _selem_offsets(se):
        out |= _shift(mask, dr, dc)
    return out


def erode(mask: np.ndarray, se: np.ndarray) -> np.ndarray:
    """Binary erosion; out-of-bounds reads as background, so borders shrink."""
    mask = np.asarray(mask, dtype=bool)
    out = np.ones_like(mask)
    for dr, dc in _selem_offsets(se):
        out &= _shift(mask, -dr, -dc)
    return out


def close_gaps(mask: np.ndarray, se: np.ndarray, iterations: int = 1) -> np.ndarray:
    """Morphological closing: dilate `iterations` times, then erode as many.

    Bridges small gaps between nearby edge fragments so each object yields a
    single connected blob.
    """
    if iterations < 1:
        raise ZeroIterationsError(f"iterations must be >= 1, got {iterations}")
    out = np.asarray(mask, dtype=bool)
    for _ in range(iterations):
        out = dilate(out, se)
    for _ in range(iterations):
        out = erode(out, se)
    return out
