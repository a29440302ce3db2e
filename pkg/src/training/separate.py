"""Separate Learning: extractor training, feature extraction, segmentation training."""

from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.autodiff import (
    Adam,
    Tape,
    Tensor,
    backward,
    channels_to_rows,
    masked_softmax_cross_entropy,
)
from src.featuremap.cache import SlideFeatures, round_to_storage, save_slide_features
from src.featuremap.maps import IGNORE, build_layout
from src.models.extractor import extractor_forward, normalize_pixels
from src.models.params import Params
from src.models.segmentation import segmentation_forward
from src.preprocess.augment import augment, patch_seed
from src.preprocess.tiling import Patch, PatchLabel
from src.training.data import center_crop, chunks, prepare_inputs
from src.training.trace import LossTrace
from src.utils.config import AugConfig, FeatureMapConfig, TrainConfig
from src.utils.exceptions import NoLabeledCellsError, ValidationError
from src.utils.logger import logger
from src.utils.seeding import derive_seed


def _optimizer(lr: float, cfg: TrainConfig) -> Adam:
    return Adam(lr=lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)


def _epoch_order(labels: np.ndarray, balance: bool, rng: np.random.Generator) -> np.ndarray:
    if not balance:
        return rng.permutation(len(labels))
    tumor = np.flatnonzero(labels == PatchLabel.TUMOR)
    normal = np.flatnonzero(labels == PatchLabel.NORMAL)
    n = min(len(tumor), len(normal))
    chosen = np.concatenate(
        [rng.choice(tumor, n, replace=False), rng.choice(normal, n, replace=False)]
    )
    return chosen[rng.permutation(len(chosen))]


def train_feature_extractor(
    params: Params,
    patches: Sequence[Patch],
    cfg: TrainConfig,
    aug: AugConfig,
    seed: int,
) -> Tuple[Params, LossTrace]:
    """Train the extractor with its head on labeled patches.

    NoLabel patches are skipped. Each epoch draws a fresh (optionally class
    balanced) order and fresh augmentations from seeds derived from ``seed``.

    Raises:
        ValidationError: If the labeled patches do not cover both classes
    """
    labeled = [p for p in patches if p.label != PatchLabel.NOLABEL]
    labels = np.array([int(p.label) for p in labeled], dtype=np.int64)
    if not np.any(labels == PatchLabel.TUMOR) or not np.any(labels == PatchLabel.NORMAL):
        raise ValidationError("single-class training set: need tumor and normal patches")

    optimizer = _optimizer(cfg.lr_extractor, cfg)
    trace = LossTrace()
    logger.info(
        f"Training extractor on {len(labeled)} patches "
        f"({int(np.sum(labels == PatchLabel.TUMOR))} tumor) for {cfg.extractor_epochs} epoch(s)"
    )
    for epoch in range(cfg.extractor_epochs):
        order = _epoch_order(labels, cfg.balance_classes, np.random.default_rng(
            derive_seed(seed, "extractor-epoch", epoch)))
        for step, batch in enumerate(chunks(len(order), cfg.batch_size)):
            index = order[batch]
            if cfg.augment:
                pixels = [
                    augment(labeled[i], patch_seed(seed, labeled[i], epoch), aug) for i in index
                ]
            else:
                pixels = [center_crop(labeled[i].pixels, aug.crop_size) for i in index]
            inputs = Tensor(normalize_pixels(np.stack(pixels)))
            with Tape() as tape:
                logits = extractor_forward(params, inputs, mode="logits")
                loss = masked_softmax_cross_entropy(
                    logits, labels[index], np.ones(len(index)), cfg.loss_reduction
                )
            backward(tape, loss)
            optimizer.step(params)
            trace.add(epoch, step, loss.item(), tape.peak_live_elements)
            logger.debug(f"extractor epoch {epoch} step {step}: loss {loss.item():.6f}")
        logger.info(f"Extractor epoch {epoch}: mean loss {trace.epoch_mean(epoch):.6f}")
    return params, trace


def batched_features(params: Params, inputs: np.ndarray, batch_size: int) -> np.ndarray:
    rows = []
    for batch in chunks(inputs.shape[0], batch_size):
        rows.append(extractor_forward(params, Tensor(inputs[batch]), mode="features").data)
    return np.concatenate(rows) if rows else np.zeros((0, params["fc_feat.w"].shape[1]))


def extract_slide_features(
    params: Params,
    slide_id: str,
    patches: Sequence[Patch],
    fm_cfg: FeatureMapConfig,
    crop_size: int,
    batch_size: int = 128,
) -> SlideFeatures:
    """Frozen-extractor features of one slide, rows in grid order.

    Values are rounded through float32 so a cached copy reloads bit-equal.
    """
    layout = build_layout(slide_id, [p.grid_pos for p in patches], fm_cfg)
    with Tape(record=False):
        features = batched_features(params, prepare_inputs(patches, crop_size), batch_size)
    return SlideFeatures(layout, round_to_storage(features), [p.label for p in patches])


def extract_all_features(
    params: Params,
    slides: Mapping[str, Sequence[Patch]],
    fm_cfg: FeatureMapConfig,
    crop_size: int,
    batch_size: int = 128,
    cache_dir: Optional[Union[str, Path]] = None,
) -> Dict[str, SlideFeatures]:
    """Features of every slide with at least one patch, cached when ``cache_dir`` is given."""
    out: Dict[str, SlideFeatures] = {}
    for slide_id in sorted(slides):
        patches = slides[slide_id]
        if not patches:
            logger.warning(f"Slide {slide_id} has no patches; skipped")
            continue
        item = extract_slide_features(params, slide_id, patches, fm_cfg, crop_size, batch_size)
        if cache_dir is not None:
            save_slide_features(cache_dir, item)
        out[slide_id] = item
    logger.info(f"Extracted features for {len(out)} slide(s)")
    return out


def stack_maps(items: Sequence[SlideFeatures]) -> Tuple[np.ndarray, np.ndarray]:
    """All feature maps ``[M, D, Hm, Wm]`` and their label codes ``[M, Hm, Wm]``."""
    maps: List[np.ndarray] = []
    codes: List[np.ndarray] = []
    for item in items:
        maps.extend(item.feature_maps())
        codes.extend(m.codes for m in item.label_maps())
    if not maps:
        raise NoLabeledCellsError("no labeled cells")
    return np.stack(maps), np.stack(codes)


def segmentation_loss(
    params: Params, maps: np.ndarray, codes: np.ndarray, reduction: str
) -> Tensor:
    """Masked cross-entropy of the segmentation net on a batch of maps."""
    logits = segmentation_forward(params, Tensor(maps))
    mask = (codes != IGNORE).reshape(-1)
    targets = np.where(codes != IGNORE, codes, 0).reshape(-1)
    return masked_softmax_cross_entropy(channels_to_rows(logits), targets, mask, reduction)


def evaluate_segmentation_loss(
    params: Params, items: Sequence[SlideFeatures], reduction: str = "mean"
) -> float:
    """Loss over every map at once, without touching parameters."""
    maps, codes = stack_maps(items)
    with Tape(record=False):
        return segmentation_loss(params, maps, codes, reduction).item()


def has_labeled_cells(items: Sequence[SlideFeatures]) -> bool:
    return any(np.any(m.codes != IGNORE) for item in items for m in item.label_maps())


def train_segmentation(
    params: Params,
    items: Sequence[SlideFeatures],
    cfg: TrainConfig,
    seed: int,
    val_items: Sequence[SlideFeatures] = (),
) -> Tuple[Params, LossTrace]:
    """Train the segmentation net on cached feature and label maps.

    Batches without any labeled cell are skipped. When ``val_items`` hold a
    labeled cell, their loss is recorded after every epoch.

    Raises:
        NoLabeledCellsError: If no map has a labeled cell
    """
    maps, codes = stack_maps(items)
    if not np.any(codes != IGNORE):
        raise NoLabeledCellsError("no labeled cells")
    validate = has_labeled_cells(val_items)
    if val_items and not validate:
        logger.warning("Validation maps have no labeled cell; no validation loss")

    optimizer = _optimizer(cfg.lr_segmentation, cfg)
    trace = LossTrace()
    logger.info(
        f"Training segmentation on {maps.shape[0]} map(s) for {cfg.segmentation_epochs} epoch(s)"
    )
    for epoch in range(cfg.segmentation_epochs):
        order = np.random.default_rng(derive_seed(seed, "segmentation-epoch", epoch)).permutation(
            maps.shape[0]
        )
        for step, batch in enumerate(chunks(len(order), cfg.seg_batch_size)):
            index = order[batch]
            if not np.any(codes[index] != IGNORE):
                continue
            with Tape() as tape:
                loss = segmentation_loss(params, maps[index], codes[index], cfg.loss_reduction)
            backward(tape, loss)
            optimizer.step(params)
            trace.add(epoch, step, loss.item(), tape.peak_live_elements)
            logger.debug(f"segmentation epoch {epoch} step {step}: loss {loss.item():.6f}")
        message = f"Segmentation epoch {epoch}: mean loss {trace.epoch_mean(epoch):.6f}"
        if validate:
            val_loss = evaluate_segmentation_loss(params, val_items, cfg.loss_reduction)
            trace.add_validation(epoch, val_loss)
            message += f", val loss {val_loss:.6f}"
        logger.info(message)
    return params, trace
