"""Microlens array grid estimation, white image synthesis, and light field decoding."""

from ._mlaforge import (
    CameraConfig,
    accuracy_bounds,
    decode,
    demosaic_malvar,
    estimate_grid,
    estimate_spacing_rotation,
    mosaic_bayer,
    q_g_ideal_expectation,
    render_white_image,
)

__all__ = [
    "CameraConfig",
    "accuracy_bounds",
    "decode",
    "demosaic_malvar",
    "estimate_grid",
    "estimate_spacing_rotation",
    "mosaic_bayer",
    "q_g_ideal_expectation",
    "render_white_image",
]
