"""Poisson denoising with a clustered class-specific patch prior.

Images are 2-D float64 NumPy arrays (rows x columns). Patches are rows of a
2-D array, flattened row-major.
"""

from ._psnis import (
    PriorModel,
    denoise_image,
    effective_sample_size,
    extract_patches,
    learn_prior,
    normalize_weights,
    poisson_loglik,
    psnr,
    read_image,
    sample_poisson_image,
    scale_to_peak,
    snis_estimate,
)

__all__ = [
    "PriorModel",
    "denoise_image",
    "effective_sample_size",
    "extract_patches",
    "learn_prior",
    "normalize_weights",
    "poisson_loglik",
    "psnr",
    "read_image",
    "sample_poisson_image",
    "scale_to_peak",
    "snis_estimate",
]
