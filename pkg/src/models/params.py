"""Parameter initialization and checkpoints for both networks."""

import hashlib
import json
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from src.autodiff.serialization import load_named, save_named
from src.autodiff.tensor import Tensor
from src.utils.config import ArchConfig
from src.utils.exceptions import CheckpointError, ConfigurationError, StageInputError
from src.utils.logger import logger
from src.utils.seeding import derive_seed

Params = Dict[str, Tensor]
PathLike = Union[str, Path]

EXTRACTOR = "extractor"
SEGMENTATION = "segmentation"

_FINGERPRINT_FIELDS = {
    EXTRACTOR: ("crop_size", "in_channels", "conv_channels", "kernel_size", "feature_dim"),
    SEGMENTATION: ("feature_dim", "kernel_size", "seg_channels", "seg_bottleneck"),
}


def pooled_extent(arch: ArchConfig) -> int:
    """Spatial extent left after the extractor's pooling stages."""
    extent = arch.crop_size
    for _ in arch.conv_channels:
        extent //= 2
    return extent


def validate_arch(arch: ArchConfig) -> None:
    """Reject architectures the networks cannot be built for.

    Raises:
        ConfigurationError: On an even kernel, a crop pooled down to nothing,
            or a map size not divisible by ``2 ** seg_depth``
    """
    if arch.kernel_size % 2 == 0:
        raise ConfigurationError(f"kernel_size must be odd, got {arch.kernel_size}")
    if not arch.conv_channels or not arch.seg_channels:
        raise ConfigurationError("conv_channels and seg_channels must be non-empty")
    if pooled_extent(arch) < 1:
        raise ConfigurationError(
            f"crop_size {arch.crop_size} vanishes after {len(arch.conv_channels)} pooling stages"
        )
    if arch.map_size % (2 ** arch.seg_depth) != 0:
        raise ConfigurationError(
            f"map_size {arch.map_size} is not divisible by 2^{arch.seg_depth}"
        )


def _he_normal(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, name: str) -> Tensor:
    return Tensor(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape), requires_grad=True, name=name)


def _zeros(shape: Tuple[int, ...], name: str) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


def _conv(params: Params, rng, name: str, c_in: int, c_out: int, k: int) -> None:
    params[f"{name}.w"] = _he_normal(rng, (c_out, c_in, k, k), c_in * k * k, f"{name}.w")
    params[f"{name}.b"] = _zeros((c_out,), f"{name}.b")


def _dense(params: Params, rng, name: str, n_in: int, n_out: int) -> None:
    params[f"{name}.w"] = _he_normal(rng, (n_in, n_out), n_in, f"{name}.w")
    params[f"{name}.b"] = _zeros((n_out,), f"{name}.b")


def init_extractor(seed: int, arch: ArchConfig) -> Params:
    validate_arch(arch)
    rng = np.random.default_rng(derive_seed(seed, EXTRACTOR))
    params: Params = {}
    c_in, k = arch.in_channels, arch.kernel_size
    for i, c_out in enumerate(arch.conv_channels):
        _conv(params, rng, f"conv{i}", c_in, c_out, k)
        c_in = c_out
    flat = c_in * pooled_extent(arch) ** 2
    _dense(params, rng, "fc_feat", flat, arch.feature_dim)
    _dense(params, rng, "fc_out", arch.feature_dim, 2)
    return params


def init_segmentation(seed: int, arch: ArchConfig) -> Params:
    validate_arch(arch)
    rng = np.random.default_rng(derive_seed(seed, SEGMENTATION))
    params: Params = {}
    k = arch.kernel_size
    c_in = arch.feature_dim
    for i, c_out in enumerate(arch.seg_channels):
        _conv(params, rng, f"enc{i}", c_in, c_out, k)
        c_in = c_out
    _conv(params, rng, "bottleneck", c_in, arch.seg_bottleneck, k)
    below = arch.seg_bottleneck
    for i in reversed(range(arch.seg_depth)):
        skip = arch.seg_channels[i]
        _conv(params, rng, f"dec{i}", below + skip, skip, k)
        below = skip
    _conv(params, rng, "head", below, 2, 1)
    return params


def init_params(seed: int, arch: ArchConfig) -> Tuple[Params, Params]:
    """He-normal weights with ``std = sqrt(2 / fan_in)`` and zero biases.

    Args:
        seed: Parameter seed; both networks draw from streams derived from it
        arch: Architecture

    Returns:
        Extractor and segmentation parameters, keyed by layer name

    Raises:
        ConfigurationError: If the architecture is invalid
    """
    return init_extractor(seed, arch), init_segmentation(seed, arch)


def arch_fingerprint(arch: ArchConfig, kind: str) -> str:
    """SHA-256 over the architecture fields a network of ``kind`` depends on."""
    dumped = arch.model_dump(mode="json")
    relevant = {key: dumped[key] for key in _FINGERPRINT_FIELDS[kind]}
    canonical = json.dumps({"kind": kind, "arch": relevant}, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_checkpoint(path: PathLike, params: Params, arch: ArchConfig, kind: str) -> None:
    header = {"kind": kind, "arch_fingerprint": arch_fingerprint(arch, kind)}
    save_named(path, {name: t.data for name, t in params.items()}, header)
    logger.debug(f"Saved {kind} checkpoint with {len(params)} tensors to {path}")


def load_checkpoint(path: PathLike, arch: ArchConfig, kind: str) -> Params:
    """Load parameters saved by ``save_checkpoint``.

    Raises:
        StageInputError: If the file does not exist
        CheckpointError: If the checkpoint belongs to another network or architecture
    """
    path = Path(path)
    if not path.is_file():
        raise StageInputError(f"{kind} checkpoint missing", [str(path)])
    header, tensors = load_named(path)
    if header.get("kind") != kind:
        raise CheckpointError(
            f"{path}: holds a {header.get('kind')!r} checkpoint, expected {kind!r}"
        )
    if header.get("arch_fingerprint") != arch_fingerprint(arch, kind):
        raise CheckpointError(f"{path}: architecture fingerprint does not match the configuration")

    expected = init_extractor(0, arch) if kind == EXTRACTOR else init_segmentation(0, arch)
    missing = [name for name in expected if name not in tensors]
    if missing:
        raise CheckpointError(f"{path}: missing tensors {', '.join(missing)}")
    return {name: Tensor(tensors[name], requires_grad=True, name=name) for name in expected}
