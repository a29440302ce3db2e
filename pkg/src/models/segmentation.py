"""Encoder-decoder segmentation network over feature maps."""

from typing import List

from src.autodiff import Tensor, concat_channels, conv2d, maxpool2d, nearest_upsample, relu
from src.models.params import Params
from src.utils.exceptions import ShapeMismatchError


def segmentation_depth(params: Params) -> int:
    return sum(1 for name in params if name.startswith("enc") and name.endswith(".w"))


def _block(params: Params, name: str, x: Tensor) -> Tensor:
    w = params[f"{name}.w"]
    return relu(conv2d(x, w, params[f"{name}.b"], padding=w.shape[-1] // 2))


def segmentation_forward(params: Params, fmap: Tensor) -> Tensor:
    """Per-cell 2-channel logits with the spatial extents of ``fmap``.

    Args:
        params: Segmentation parameters
        fmap: ``[D, Hm, Wm]`` or a batch ``[B, D, Hm, Wm]``

    Raises:
        ShapeMismatchError: If ``Hm`` or ``Wm`` is not divisible by ``2 ** depth``
    """
    depth = segmentation_depth(params)
    factor = 2 ** depth
    height, width = fmap.shape[-2:]
    if height % factor or width % factor:
        raise ShapeMismatchError(f"feature map {height}x{width} is not divisible by {factor}")

    skips: List[Tensor] = []
    x = fmap
    for i in range(depth):
        x = _block(params, f"enc{i}", x)
        skips.append(x)
        x = maxpool2d(x, 2)
    x = _block(params, "bottleneck", x)
    for i in reversed(range(depth)):
        x = concat_channels(nearest_upsample(x, 2), skips[i])
        x = _block(params, f"dec{i}", x)
    return conv2d(x, params["head.w"], params["head.b"])
