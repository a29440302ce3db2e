"""tileseg - multi-stage tumor segmentation of giga-pixel slides.

A patch feature extractor and a segmentation network over feature maps,
trained separately or end to end with a retained boundary and
micro-batched recomputation.
"""

__version__ = "1.0.0"
__description__ = "Separate and end-to-end learning for giga-pixel slide segmentation"
