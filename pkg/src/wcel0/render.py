"""Grayscale PNG rendering of reconstructions."""
from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import ParameterError


def tone_map(image, scale: str = "linear"):
    """Max-normalize to ``[0, 1]``, optionally take the square root, then quantize.

    Gray levels are ``floor(255 * t + 0.5)``, i.e. halves round up: a pixel at
    a quarter of the maximum maps to 128 under ``sqrt``.
    """
    img = np.clip(np.asarray(image, dtype=float), 0.0, None)
    if img.ndim != 2:
        raise ParameterError(f"expected a 2-D image, got shape {img.shape}")
    peak = img.max() if img.size else 0.0
    t = img / peak if peak > 0 else np.zeros_like(img)
    if scale == "sqrt":
        t = np.sqrt(t)
    elif scale != "linear":
        raise ParameterError(f"unknown scale {scale!r}")
    return np.floor(255.0 * t + 0.5).astype(np.uint8)


def render_png(image, path, scale: str = "linear"):
    Image.fromarray(tone_map(image, scale)).save(path, format="PNG")
