"""Molecule lists: ``(frame, x_nm, y_nm, intensity)`` records and their CSV form."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ParseError

CSV_HEADER = ("frame", "x_nm", "y_nm", "intensity")


@dataclass(frozen=True)
class LocalizationSet:
    """Column-oriented molecule records.

    ``x_nm`` runs along image columns and ``y_nm`` along rows, with the
    origin at the top-left corner of pixel (0, 0).
    """

    frame: np.ndarray
    x_nm: np.ndarray
    y_nm: np.ndarray
    intensity: np.ndarray

    def __post_init__(self):
        cols = [np.asarray(self.frame, dtype=np.int64).ravel()]
        cols += [np.asarray(getattr(self, k), dtype=float).ravel() for k in ("x_nm", "y_nm", "intensity")]
        if len({c.size for c in cols}) != 1:
            raise ValueError("localization columns differ in length")
        for name, c in zip(CSV_HEADER, cols):
            c.setflags(write=False)
            object.__setattr__(self, name, c)

    @classmethod
    def empty(cls) -> "LocalizationSet":
        return cls(np.zeros(0, np.int64), np.zeros(0), np.zeros(0), np.zeros(0))

    @classmethod
    def concat(cls, parts) -> "LocalizationSet":
        parts = list(parts)
        if not parts:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, k) for p in parts]) for k in CSV_HEADER))

    def __len__(self):
        return self.frame.size

    def frames(self):
        return np.unique(self.frame)

    def for_frame(self, f) -> "LocalizationSet":
        m = self.frame == f
        return LocalizationSet(self.frame[m], self.x_nm[m], self.y_nm[m], self.intensity[m])

    def fine_pixels(self, fine_pixel_nm: float):
        """Integer ``(row, col)`` of the fine pixel containing each record."""
        rows = np.floor(self.y_nm / fine_pixel_nm).astype(np.int64)
        cols = np.floor(self.x_nm / fine_pixel_nm).astype(np.int64)
        return np.stack([rows, cols], axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_HEADER) + "\n")
        for f, x, y, a in zip(self.frame, self.x_nm, self.y_nm, self.intensity):
            buf.write(f"{int(f)},{x:.12g},{y:.12g},{a:.12g}\n")
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "LocalizationSet":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(c.strip() for c in rows[0]) != CSV_HEADER:
            raise ParseError(f"expected header {','.join(CSV_HEADER)}")
        cols = [[], [], [], []]
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"line {lineno}: expected 4 fields, got {len(row)}")
            try:
                cols[0].append(int(row[0]))
                for k in range(1, 4):
                    cols[k].append(float(row[k]))
            except ValueError as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
        return cls(np.array(cols[0], dtype=np.int64), *(np.array(c, dtype=float) for c in cols[1:]))

    @classmethod
    def read_csv(cls, path) -> "LocalizationSet":
        with open(path, newline="") as fh:
            return cls.from_csv(fh.read())
