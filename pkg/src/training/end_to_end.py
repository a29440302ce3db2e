"""End-to-End Learning with a retained boundary and micro-batched recomputation.

One step per slide:

1. Run the extractor over ``r`` micro-batches without recording, keeping
   only the feature vectors ``x``.
2. Scatter ``x`` into the slide's feature maps.
3. Forward and backward the segmentation net on the masked loss, giving the
   segmentation gradients and ``dL/dx``.
4. Per micro-batch, recompute the extractor forward on a recording tape and
   backpropagate the surrogate ``L' = sum(dL/dx * x)``; extractor gradients
   are summed over micro-batches in order.
5. Update both networks with Adam.

Only ``x`` and ``dL/dx`` live across phases, so the extractor's activation
memory is that of one micro-batch.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.autodiff import (
    Adam,
    Tape,
    Tensor,
    backward,
    channels_to_rows,
    get_default_dtype,
    masked_softmax_cross_entropy,
    mul,
    relative_error,
    scatter_cells,
    select_rows,
    total,
)
from src.models.extractor import extractor_forward
from src.models.params import Params
from src.models.segmentation import segmentation_forward
from src.training.data import SlideInputs
from src.training.trace import LossTrace
from src.utils.config import TrainConfig
from src.utils.exceptions import GradientError, ShapeMismatchError, ValidationError
from src.utils.logger import logger
from src.utils.seeding import derive_seed


@dataclass
class RetainedBoundary:
    """Feature vectors of one slide and, after backward, their gradient."""

    x: np.ndarray
    positions: List[tuple]
    dL_dx: Optional[np.ndarray] = None

    def set_gradient(self, grad: np.ndarray) -> None:
        if grad.shape != self.x.shape:
            raise ShapeMismatchError(f"dL/dx shape {grad.shape} does not match x {self.x.shape}")
        self.dL_dx = grad


@dataclass
class MemoryReport:
    """Peak live tensor elements per phase of one end-to-end step.

    Attributes:
        slide_id: Slide of the step
        n_patches: N
        micro_batches: r as requested
        forward_peak: Peak of the untaped forward pass plus the retained x
        segmentation_peak: Peak of the segmentation forward and backward
        recompute_peak: Largest replay peak over micro-batches
        per_patch_footprint: Recorded elements per patch during replay (M)
    """

    slide_id: str
    n_patches: int
    micro_batches: int
    forward_peak: int
    segmentation_peak: int
    recompute_peak: int
    per_patch_footprint: int

    @property
    def extractor_peak(self) -> int:
        return max(self.forward_peak, self.recompute_peak)

    def to_line(self) -> str:
        return (
            f"memory slide={self.slide_id} N={self.n_patches} r={self.micro_batches} "
            f"M={self.per_patch_footprint} forward_peak={self.forward_peak} "
            f"segmentation_peak={self.segmentation_peak} recompute_peak={self.recompute_peak}"
        )


@dataclass
class StagedGradients:
    loss: float
    boundary: RetainedBoundary
    report: MemoryReport


def micro_batches(n_patches: int, r: int) -> List[slice]:
    """Fixed partition of grid-ordered patches into runs of ``ceil(N / r)``.

    Raises:
        ValidationError: If ``r`` is below 1 or above ``n_patches``
    """
    if r < 1 or r > n_patches:
        raise ValidationError(f"micro-batch count r={r} must lie in [1, N={n_patches}]")
    size = math.ceil(n_patches / r)
    return [slice(start, min(start + size, n_patches)) for start in range(0, n_patches, size)]


def _map_shape(slide: SlideInputs, depth: int):
    return (slide.layout.n_maps, depth) + slide.layout.map_shape


def _segmentation_loss(seg: Params, rows: Tensor, slide: SlideInputs, reduction: str) -> Tensor:
    fmap = scatter_cells(rows, slide.layout.scatter_targets(), _map_shape(slide, rows.shape[1]))
    logits = segmentation_forward(seg, fmap)
    targets, mask = slide.cell_targets()
    return masked_softmax_cross_entropy(channels_to_rows(logits), targets, mask, reduction)


def surrogate_loss(x: Tensor, dL_dx: np.ndarray) -> Tensor:
    """``L' = sum(dL/dx * x)``; its gradient with respect to ``x`` is ``dL/dx``."""
    return total(mul(x, Tensor(dL_dx)))


def compute_e2e_gradients(
    ext: Params, seg: Params, slide: SlideInputs, r: int, reduction: str = "mean"
) -> StagedGradients:
    """Staged backward pass leaving gradients on both parameter sets.

    Features are computed without a tape and retained, the segmentation loss
    is backpropagated to them once, and the extractor is then replayed per
    micro-batch against the retained gradient. Extractor parameters receive
    the sum over micro-batches; the classification head is not used.

    Raises:
        ValidationError: If ``r`` does not fit ``N``
        NoLabeledCellsError: If the slide has no labeled cell
        GradientError: If recomputed features differ from the retained ones
    """
    n = slide.n_patches
    batches = micro_batches(n, r)
    depth = ext["fc_feat.w"].shape[1]

    # forward without a tape
    x = np.empty((n, depth), dtype=get_default_dtype())
    with Tape(record=False) as forward_tape:
        for batch in batches:
            x[batch] = extractor_forward(ext, Tensor(slide.inputs[batch]), "features").data
            forward_tape.retain(x[batch].size)
    boundary = RetainedBoundary(x, list(slide.layout.positions))

    # segmentation loss, backpropagated to the retained features
    placed = slide.layout.placed
    x_placed = Tensor(x[placed], requires_grad=True)
    with Tape() as seg_tape:
        seg_tape.retain(x.size)
        loss = _segmentation_loss(seg, x_placed, slide, reduction)
    backward(seg_tape, loss)
    dL_dx = np.zeros_like(x)
    dL_dx[placed] = x_placed.grad
    boundary.set_gradient(dL_dx)

    # replay each micro-batch against its slice of dL/dx
    accumulated: Dict[str, np.ndarray] = {}
    recompute_peak = 0
    footprint = 0
    for batch in batches:
        for param in ext.values():
            param.zero_grad()
        with Tape() as tape:
            tape.retain(x.size + dL_dx.size)
            x_mb = extractor_forward(ext, Tensor(slide.inputs[batch]), "features")
            if not np.array_equal(x_mb.data, x[batch]):
                raise GradientError("recomputed features differ from the retained boundary")
            footprint = max(footprint, math.ceil((tape.live_elements - 2 * x.size) / x_mb.shape[0]))
            surrogate = surrogate_loss(x_mb, dL_dx[batch])
        backward(tape, surrogate)
        recompute_peak = max(recompute_peak, tape.peak_live_elements)
        for name, param in ext.items():
            if param.grad is None:
                continue
            if name in accumulated:
                accumulated[name] = accumulated[name] + param.grad
            else:
                accumulated[name] = param.grad.copy()
        tape.clear()

    for name, param in ext.items():
        param.grad = accumulated.get(name)

    report = MemoryReport(
        slide_id=slide.slide_id,
        n_patches=n,
        micro_batches=r,
        forward_peak=forward_tape.peak_live_elements,
        segmentation_peak=seg_tape.peak_live_elements,
        recompute_peak=recompute_peak,
        per_patch_footprint=footprint,
    )
    return StagedGradients(loss.item(), boundary, report)


def monolithic_gradients(
    ext: Params, seg: Params, slide: SlideInputs, reduction: str = "mean"
) -> float:
    """Backpropagate the whole composite on a single tape; the reference for the staged path.

    Returns:
        Loss value; gradients are left on both parameter sets
    """
    with Tape() as tape:
        x = extractor_forward(ext, Tensor(slide.inputs), "features")
        rows = select_rows(x, np.flatnonzero(slide.layout.placed))
        loss = _segmentation_loss(seg, rows, slide, reduction)
    backward(tape, loss)
    return loss.item()


def slide_loss(ext: Params, seg: Params, slide: SlideInputs, reduction: str = "mean") -> float:
    """Masked loss of the composite on one slide, without gradients."""
    with Tape(record=False):
        x = extractor_forward(ext, Tensor(slide.inputs), "features")
        rows = select_rows(x, np.flatnonzero(slide.layout.placed))
        return _segmentation_loss(seg, rows, slide, reduction).item()


def _body(ext: Params) -> Params:
    return {name: p for name, p in ext.items() if p.grad is not None}


def verify_against_monolithic(
    ext: Params, seg: Params, slide: SlideInputs, reduction: str, tolerance: float
) -> float:
    """Compare the staged gradients on the parameters with a single-tape pass.

    Gradients present on entry are restored afterwards.

    Raises:
        GradientError: If any extractor gradient deviates beyond ``tolerance``
            or any segmentation gradient is not bit-identical
    """
    staged = {name: p.grad for name, p in {**ext, **seg}.items()}
    monolithic_gradients(ext, seg, slide, reduction)
    worst = 0.0
    try:
        for name, param in ext.items():
            if staged[name] is None:
                continue
            worst = max(worst, relative_error(staged[name], param.grad))
        if worst > tolerance:
            raise GradientError(f"staged extractor gradients deviate by {worst:.3e}")
        for name, param in seg.items():
            if not np.array_equal(staged[name], param.grad):
                raise GradientError(f"segmentation gradient {name} differs between modes")
    finally:
        for name, param in {**ext, **seg}.items():
            param.grad = staged[name]
    return worst


def e2e_step(
    ext: Params,
    seg: Params,
    slide: SlideInputs,
    r: int,
    cfg: TrainConfig,
    ext_optimizer: Adam,
    seg_optimizer: Adam,
) -> StagedGradients:
    """One End-to-End update on one slide: staged gradients, then Adam on both nets."""
    result = compute_e2e_gradients(ext, seg, slide, r, cfg.loss_reduction)
    if cfg.verify_gradients:
        tolerance = 1e-6 if get_default_dtype() == np.float64 else 1e-3
        worst = verify_against_monolithic(ext, seg, slide, cfg.loss_reduction, tolerance)
        logger.debug(f"{slide.slide_id}: staged gradients within {worst:.3e} of monolithic")
    ext_optimizer.step(_body(ext))
    seg_optimizer.step(seg)
    return result


@dataclass
class EndToEndRun:
    trace: LossTrace
    reports: List[MemoryReport] = field(default_factory=list)
    warm_start_loss: float = float("nan")
    final_loss: float = float("nan")


def mean_loss(ext: Params, seg: Params, slides: Sequence[SlideInputs], reduction: str) -> float:
    losses = [slide_loss(ext, seg, s, reduction) for s in slides]
    return float(np.mean(losses)) if losses else float("nan")


def slide_micro_batches(slide: SlideInputs, r: int) -> int:
    """``r`` capped at the slide's patch count, with a warning when capped."""
    if r > slide.n_patches:
        logger.warning(
            f"{slide.slide_id}: micro-batch count r={r} exceeds N={slide.n_patches}; "
            f"using r={slide.n_patches}"
        )
        return slide.n_patches
    return r


def e2e_train(
    ext: Params,
    seg: Params,
    slides: Sequence[SlideInputs],
    cfg: TrainConfig,
    seed: int,
) -> EndToEndRun:
    """Repeat ``e2e_step`` over the slides for ``cfg.e2e_epochs`` epochs.

    Adam moments start fresh. Slide order is reshuffled each epoch from
    ``seed``; slides without labeled cells are skipped. A slide with fewer
    patches than ``cfg.micro_batches`` runs with one patch per micro-batch.
    """
    usable = [s for s in slides if s.has_labeled_cells()]
    if len(usable) < len(slides):
        logger.info(f"Skipping {len(slides) - len(usable)} slide(s) without labeled cells")
    counts = [slide_micro_batches(s, cfg.micro_batches) for s in usable]

    ext_optimizer = Adam(lr=cfg.e2e_lr_extractor, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    seg_optimizer = Adam(lr=cfg.e2e_lr_segmentation, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    run = EndToEndRun(LossTrace())
    run.warm_start_loss = mean_loss(ext, seg, usable, cfg.loss_reduction)
    logger.info(f"End-to-end warm-start loss {run.warm_start_loss:.6f} on {len(usable)} slide(s)")

    for epoch in range(cfg.e2e_epochs):
        rng = np.random.default_rng(derive_seed(seed, "e2e-epoch", epoch))
        order = rng.permutation(len(usable))
        for step, index in enumerate(order):
            slide = usable[index]
            result = e2e_step(ext, seg, slide, counts[index], cfg, ext_optimizer, seg_optimizer)
            run.trace.add(epoch, step, result.loss, result.report.extractor_peak)
            run.reports.append(result.report)
            logger.debug(f"e2e epoch {epoch} {slide.slide_id}: loss {result.loss:.6f}")
        logger.info(f"End-to-end epoch {epoch}: mean loss {run.trace.epoch_mean(epoch):.6f}")

    run.final_loss = mean_loss(ext, seg, usable, cfg.loss_reduction)
    logger.info(f"End-to-end final loss {run.final_loss:.6f}")
    return run
