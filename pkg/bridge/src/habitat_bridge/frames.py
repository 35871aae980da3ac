"""Frame encoding: whatever the environment renders becomes a protocol frame."""

from __future__ import annotations

import base64
import io

import numpy as np
from PIL import Image


class FrameShapeError(ValueError):
    """The environment produced something that is not an RGB image."""


def encode_frame(rgb: np.ndarray, size: int) -> str:
    """Re-encode an RGB array to a size×size PNG, base64 text.

    Sensor resolution is the environment's business; the wire contract is
    a fixed square frame, so anything else is resampled (bilinear).
    """
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise FrameShapeError(f"expected an H×W×3 RGB array, got shape {arr.shape}")
    image = Image.fromarray(arr.astype(np.uint8), "RGB")
    if image.size != (size, size):
        image = image.resize((size, size), Image.BILINEAR)
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")
