"""Planar 8-bit 4:2:0 frames and raw file I/O.

Raw files are Y, Cb, Cr planes back to back for each frame, frames
concatenated; dimensions travel out of band.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, OddDimensions


@dataclass(eq=False)
class YuvFrame:
    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray

    def __post_init__(self):
        h, w = self.y.shape
        if w % 2 or h % 2:
            raise OddDimensions(f"4:2:0 frame needs even dimensions, got {w}x{h}")
        for name in ("cb", "cr"):
            if getattr(self, name).shape != (h // 2, w // 2):
                raise DimensionMismatch(f"{name} plane {getattr(self, name).shape} for {w}x{h} luma")

    @property
    def width(self) -> int:
        return self.y.shape[1]

    @property
    def height(self) -> int:
        return self.y.shape[0]

    @property
    def size(self) -> tuple[int, int]:
        return self.width, self.height

    def plane(self, name: str) -> np.ndarray:
        if name not in ("y", "cb", "cr"):
            raise ValueError(f"unknown plane {name!r}")
        return getattr(self, name)

    def __eq__(self, other):
        if not isinstance(other, YuvFrame):
            return NotImplemented
        return all(np.array_equal(self.plane(p), other.plane(p)) for p in ("y", "cb", "cr"))

    @classmethod
    def filled(cls, width: int, height: int, value: int) -> "YuvFrame":
        if width % 2 or height % 2 or width < 2 or height < 2:
            raise OddDimensions(f"4:2:0 frame needs even dimensions, got {width}x{height}")
        return cls(np.full((height, width), value, np.uint8),
                   np.full((height // 2, width // 2), value, np.uint8),
                   np.full((height // 2, width // 2), value, np.uint8))

    def crop(self, x: int, y: int, w: int, h: int) -> "YuvFrame":
        if x % 2 or y % 2 or x < 0 or y < 0 or x + w > self.width or y + h > self.height:
            raise DimensionMismatch(f"crop {w}x{h}+{x}+{y} outside {self.width}x{self.height}")
        cx, cy = x // 2, y // 2
        return YuvFrame(self.y[y:y + h, x:x + w].copy(),
                        self.cb[cy:cy + h // 2, cx:cx + w // 2].copy(),
                        self.cr[cy:cy + h // 2, cx:cx + w // 2].copy())

    def paste(self, other: "YuvFrame", x: int, y: int) -> None:
        w, h = other.size
        if x % 2 or y % 2 or x + w > self.width or y + h > self.height:
            raise DimensionMismatch(f"paste {w}x{h}+{x}+{y} outside {self.width}x{self.height}")
        self.y[y:y + h, x:x + w] = other.y
        self.cb[y // 2:(y + h) // 2, x // 2:(x + w) // 2] = other.cb
        self.cr[y // 2:(y + h) // 2, x // 2:(x + w) // 2] = other.cr

    def padded(self, width: int, height: int) -> "YuvFrame":
        """Extend to ``width`` x ``height`` by replicating the last row and column."""
        if width < self.width or height < self.height:
            raise DimensionMismatch("padding cannot shrink a frame")

        def pad(plane, dw, dh):
            return np.pad(plane, ((0, dh), (0, dw)), mode="edge")

        dw, dh = width - self.width, height - self.height
        return YuvFrame(pad(self.y, dw, dh), pad(self.cb, dw // 2, dh // 2), pad(self.cr, dw // 2, dh // 2))

    def rotated(self, quarter_turns: int) -> "YuvFrame":
        """Rotate clockwise by ``quarter_turns`` * 90 degrees."""
        k = -quarter_turns
        return YuvFrame(np.ascontiguousarray(np.rot90(self.y, k)),
                        np.ascontiguousarray(np.rot90(self.cb, k)),
                        np.ascontiguousarray(np.rot90(self.cr, k)))

    def to_bytes(self) -> bytes:
        return self.y.tobytes() + self.cb.tobytes() + self.cr.tobytes()


def frame_bytes(width: int, height: int) -> int:
    return width * height * 3 // 2


def read_yuv420(path, width: int, height: int) -> list[YuvFrame]:
    data = np.fromfile(Path(path), dtype=np.uint8)
    size = frame_bytes(width, height)
    if width % 2 or height % 2:
        raise OddDimensions(f"4:2:0 frame needs even dimensions, got {width}x{height}")
    if len(data) % size:
        raise DimensionMismatch(f"{len(data)} bytes is not a whole number of {width}x{height} frames")
    frames = []
    luma, chroma = width * height, (width // 2) * (height // 2)
    for off in range(0, len(data), size):
        y = data[off:off + luma].reshape(height, width)
        cb = data[off + luma:off + luma + chroma].reshape(height // 2, width // 2)
        cr = data[off + luma + chroma:off + size].reshape(height // 2, width // 2)
        frames.append(YuvFrame(y.copy(), cb.copy(), cr.copy()))
    return frames


def write_yuv420(path, frames) -> None:
    with open(path, "wb") as fh:
        for f in frames:
            fh.write(f.to_bytes())
