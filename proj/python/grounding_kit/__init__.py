"""Zero-shot referring image segmentation with global-local context features."""

from ._core import (
    EncoderKind,
    GroundingKitError,
    PyResidualEncoder,
    PyTextEncoder,
    PyTransformerEncoder,
    ResidualEncoder,
    TextEncoder,
    TextEncoderInfo,
    TransformerEncoder,
    VisualEncoder,
    VisualEncoderInfo,
    baseline_scores,
    cosine,
    crop_to_mask,
    extract_target_np,
    fuse,
    global_local_text_feature,
    global_local_visual_feature,
    global_visual_feature,
    iou,
    load_encoders,
    load_image,
    local_visual_feature,
    make_encoders,
    mean_iou,
    overall_iou,
    resize_image,
    resize_mask_to_grid,
    rle_decode,
    rle_encode,
    run_benchmark,
    save_image,
    score_proposals,
    select_mask,
)

__all__ = [name for name in dir() if not name.startswith("_")]
