"""Adaptive point-based mask refinement, mask geometry and COCO-style evaluation."""

from ._core import (
    Error,
    PointHead,
    area_statistics,
    bilinear_sample,
    binarize,
    defect_classes,
    evaluate,
    generate_synthetic,
    mask_iou,
    rasterize_polygon,
    refine,
    relative_improvement,
    rle_decode,
    rle_encode,
    top_uncertain_cells,
    train_head,
    upsample2x,
    upsample_repeated,
)

__all__ = [
    "Error",
    "PointHead",
    "area_statistics",
    "bilinear_sample",
    "binarize",
    "defect_classes",
    "evaluate",
    "generate_synthetic",
    "mask_iou",
    "rasterize_polygon",
    "refine",
    "relative_improvement",
    "rle_decode",
    "rle_encode",
    "top_uncertain_cells",
    "train_head",
    "upsample2x",
    "upsample_repeated",
]
