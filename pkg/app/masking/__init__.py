from app.masking.augment import (
    MASKING_PROBABILITIES,
    AugmentedSample,
    MaskedDataset,
    MaskRecord,
    augment,
    load_dataset,
    mask_at_probability,
    mask_by_category,
    write_masked_dataset,
)
from app.masking.selection import select_category_mask, select_random_mask
from app.masking.spans import MaskSpec, apply_mask, build_mask_spec, expand_span, merge_spans

__all__ = [
    "MASKING_PROBABILITIES",
    "AugmentedSample",
    "MaskRecord",
    "MaskSpec",
    "MaskedDataset",
    "apply_mask",
    "augment",
    "build_mask_spec",
    "expand_span",
    "load_dataset",
    "mask_at_probability",
    "mask_by_category",
    "merge_spans",
    "select_category_mask",
    "select_random_mask",
    "write_masked_dataset",
]
