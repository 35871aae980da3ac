"""PNG encode/decode helpers for observation frames."""

from __future__ import annotations

import base64
import io

import numpy as np
from PIL import Image


def frame_to_png_bytes(frame: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(frame, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def frame_from_png_bytes(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def frame_png_base64(frame: np.ndarray) -> str:
    return base64.b64encode(frame_to_png_bytes(frame)).decode("ascii")


def frame_from_png_base64(text: str) -> np.ndarray:
    return frame_from_png_bytes(base64.b64decode(text))
