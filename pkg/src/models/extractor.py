"""Patch feature extractor: conv blocks, a feature layer and a 2-way head."""

from typing import Literal

import numpy as np

from src.autodiff import Tensor, conv2d, flatten, fully_connected, maxpool2d, relu
from src.models.params import Params
from src.utils.exceptions import ShapeMismatchError

Mode = Literal["features", "logits"]


def normalize_pixels(pixels: np.ndarray) -> np.ndarray:
    """``[B, H, W, 3]`` uint8 to ``[B, 3, H, W]`` floats centered on zero."""
    pixels = np.asarray(pixels)
    if pixels.ndim == 3:
        pixels = pixels[None]
    return pixels.transpose(0, 3, 1, 2) / 255.0 - 0.5


def _n_conv(params: Params) -> int:
    return sum(1 for name in params if name.startswith("conv") and name.endswith(".w"))


def extractor_features(params: Params, patches: Tensor) -> Tensor:
    """Feature vectors ``[B, feature_dim]`` (the layer below the head)."""
    expected_channels = params["conv0.w"].shape[1]
    if patches.ndim != 4 or patches.shape[1] != expected_channels:
        raise ShapeMismatchError(
            f"extractor expects [B,{expected_channels},H,W] patches, got {patches.shape}"
        )
    x = patches
    for i in range(_n_conv(params)):
        w = params[f"conv{i}.w"]
        x = conv2d(x, w, params[f"conv{i}.b"], padding=w.shape[-1] // 2)
        x = maxpool2d(relu(x), 2)
    x = flatten(x)
    if x.shape[1] != params["fc_feat.w"].shape[0]:
        raise ShapeMismatchError(
            f"patch extent {patches.shape[-2:]} does not match the extractor's crop size"
        )
    return relu(fully_connected(x, params["fc_feat.w"], params["fc_feat.b"]))


def extractor_head(params: Params, features: Tensor) -> Tensor:
    return fully_connected(features, params["fc_out.w"], params["fc_out.b"])


def extractor_forward(params: Params, patches: Tensor, mode: Mode = "features") -> Tensor:
    """Run the extractor.

    Args:
        params: Extractor parameters
        patches: Normalized patches ``[B, 3, crop, crop]``
        mode: ``"features"`` stops below the head, ``"logits"`` applies it

    Returns:
        ``[B, feature_dim]`` features or ``[B, 2]`` logits

    Raises:
        ShapeMismatchError: If the patches do not match the architecture
    """
    features = extractor_features(params, patches)
    if mode == "features":
        return features
    return extractor_head(params, features)
