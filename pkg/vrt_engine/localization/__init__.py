"""Zero-shot temporal moment localization."""

from .moments import (
    MomentConfig,
    TemporalSignal,
    detect_peaks,
    expand_window,
    frame_similarities,
    gaussian_kernel,
    gaussian_smooth,
    localize,
    localize_signal,
    temporal_nms,
    windows_to_dict,
)

__all__ = [
    "MomentConfig",
    "TemporalSignal",
    "detect_peaks",
    "expand_window",
    "frame_similarities",
    "gaussian_kernel",
    "gaussian_smooth",
    "localize",
    "localize_signal",
    "temporal_nms",
    "windows_to_dict",
]
