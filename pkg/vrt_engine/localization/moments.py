"""Single-pass temporal moment localization from per-frame similarities.

Pipeline: cosine similarity of the query to each frame, Gaussian smoothing,
peak detection above mean + beta * std, expansion of each peak while the
signal stays above a level set by alpha, then temporal NMS.
"""

import logging
import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import correlate1d

from ..core.models import EmbeddingVector, MomentWindow
from ..core.similarity import interval_iou
from ..errors import DimMismatch, EmptyInput, IndexOutOfRange, InvalidConfig, ZeroVector

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TemporalSignal:
    """s(t) for t = 0..T-1 sampled every frame_hop_s seconds."""

    values: np.ndarray
    frame_hop_s: float
    duration_s: float

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise EmptyInput("Temporal signal needs at least one value")
        if not np.all(np.isfinite(values)):
            raise ValueError("Temporal signal contains non-finite values")
        if not (self.frame_hop_s > 0 and self.duration_s > 0):
            raise InvalidConfig("frame_hop_s and duration_s must be > 0")
        if abs(values.size * self.frame_hop_s - self.duration_s) > self.frame_hop_s * (1 + 1e-9):
            raise InvalidConfig(
                f"{values.size} frames x {self.frame_hop_s}s does not cover {self.duration_s}s"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, values: Sequence[float], duration_s: Optional[float] = None) -> "TemporalSignal":
        """Signal with hop = duration / T (one second per frame by default)."""
        n = len(values)
        duration = float(n) if duration_s is None else duration_s
        return cls(np.asarray(values, dtype=np.float64), duration / max(n, 1), duration)

    def __len__(self) -> int:
        return self.values.size

    def with_values(self, values: np.ndarray) -> "TemporalSignal":
        return TemporalSignal(values, self.frame_hop_s, self.duration_s)


@dataclass(frozen=True)
class MomentConfig:
    smooth_sigma: float = 2.0
    beta: float = 0.5
    alpha: float = 0.5
    nms_iou: float = 0.5
    max_windows: int = 5
    min_window_frames: int = 1

    def __post_init__(self) -> None:
        if self.smooth_sigma < 0:
            raise InvalidConfig(f"smooth_sigma must be >= 0, got {self.smooth_sigma}")
        if not 0 < self.alpha <= 1:
            raise InvalidConfig(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0 < self.nms_iou <= 1:
            raise InvalidConfig(f"nms_iou must be in (0, 1], got {self.nms_iou}")
        if self.max_windows < 1 or self.min_window_frames < 1:
            raise InvalidConfig("max_windows and min_window_frames must be >= 1")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MomentConfig":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise InvalidConfig(f"Unknown MomentConfig keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def frame_similarities(
    query: EmbeddingVector,
    frames: Sequence[EmbeddingVector],
    frame_hop_s: Optional[float] = None,
    duration_s: Optional[float] = None,
) -> TemporalSignal:
    """Cosine similarity of the query to every frame, as a signal."""
    if not frames:
        raise EmptyInput("No frames to localize over")
    if any(f.dim != query.dim for f in frames):
        raise DimMismatch(f"Frames do not all share the query dim {query.dim}")

    matrix = np.vstack([f.values for f in frames])
    q_norm = query.norm()
    f_norms = np.linalg.norm(matrix, axis=1)
    if q_norm == 0.0 or np.any(f_norms == 0.0):
        raise ZeroVector("Zero query or frame embedding")
    values = np.clip((matrix @ query.values) / (f_norms * q_norm), -1.0, 1.0)

    n = len(frames)
    if duration_s is None:
        duration_s = n * frame_hop_s if frame_hop_s else float(n)
    if frame_hop_s is None:
        frame_hop_s = duration_s / n
    return TemporalSignal(values, frame_hop_s, duration_s)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized Gaussian taps on [-ceil(3 sigma), ceil(3 sigma)]."""
    radius = math.ceil(3 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(offsets**2) / (2 * sigma**2))
    return taps / taps.sum()


def gaussian_smooth(signal: TemporalSignal, sigma: float) -> TemporalSignal:
    """Smooth with a truncated Gaussian and reflect padding; sigma 0 is a no-op."""
    if sigma < 0:
        raise InvalidConfig(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return signal
    smoothed = correlate1d(signal.values, gaussian_kernel(sigma), mode="reflect")
    return signal.with_values(smoothed)


def peak_threshold(smoothed: TemporalSignal, beta: float) -> float:
    return float(np.mean(smoothed.values) + beta * np.std(smoothed.values))


def detect_peaks(smoothed: TemporalSignal, beta: float) -> List[int]:
    """Strict local maxima (plateau centers, left-biased) at or above mean + beta * std."""
    values = smoothed.values
    n = values.size
    threshold = peak_threshold(smoothed, beta)
    peaks: List[int] = []

    start = 0
    while start < n:
        end = start
        while end + 1 < n and values[end + 1] == values[start]:
            end += 1
        level = values[start]
        neighbours = []
        if start > 0:
            neighbours.append(values[start - 1])
        if end < n - 1:
            neighbours.append(values[end + 1])
        if neighbours and all(v < level for v in neighbours) and level >= threshold:
            peaks.append((start + end) // 2)
        start = end + 1
    return peaks


def expand_window(
    smoothed: TemporalSignal, t_p: int, alpha: float, mu: Optional[float] = None
) -> Tuple[int, int]:
    """Grow [t_p, t_p] while values stay >= s(t_p) - (1 - alpha)(s(t_p) - mu)."""
    values = smoothed.values
    if not 0 <= t_p < values.size:
        raise IndexOutOfRange(f"Peak index {t_p} outside [0, {values.size})")
    if mu is None:
        mu = float(np.mean(values))

    peak = values[t_p]
    level = peak - (1 - alpha) * (peak - mu)
    left = t_p
    while left > 0 and values[left - 1] >= level:
        left -= 1
    right = t_p
    while right < values.size - 1 and values[right + 1] >= level:
        right += 1
    return left, right


def temporal_nms(
    windows: Sequence[MomentWindow], iou_threshold: float, max_keep: int
) -> List[MomentWindow]:
    """Greedy suppression by interval IoU, highest score first."""
    kept: List[MomentWindow] = []
    for window in sorted(windows, key=lambda w: (-w.score, w.start_s)):
        if len(kept) >= max_keep:
            break
        if all(interval_iou(window, other) <= iou_threshold for other in kept):
            kept.append(window)
    return kept


def localize_signal(signal: TemporalSignal, cfg: MomentConfig) -> List[MomentWindow]:
    """Run smoothing, peak detection, expansion and NMS on a similarity signal."""
    smoothed = gaussian_smooth(signal, cfg.smooth_sigma)
    mu = float(np.mean(smoothed.values))
    hop = signal.frame_hop_s

    candidates: List[MomentWindow] = []
    for t_p in detect_peaks(smoothed, cfg.beta):
        left, right = expand_window(smoothed, t_p, cfg.alpha, mu)
        if right - left + 1 < cfg.min_window_frames:
            continue
        start_s = left * hop
        end_s = min((right + 1) * hop, signal.duration_s)
        if end_s <= start_s:
            logger.debug(f"Dropping window at frame {left}: starts at or past the {signal.duration_s}s end")
            continue
        candidates.append(MomentWindow(start_s, end_s, float(smoothed.values[t_p])))

    windows = temporal_nms(candidates, cfg.nms_iou, cfg.max_windows)
    logger.debug(f"Localized {len(windows)} windows from {len(candidates)} peaks")
    return windows


def localize(
    query: EmbeddingVector,
    frames: Sequence[EmbeddingVector],
    frame_hop_s: Optional[float] = None,
    duration_s: Optional[float] = None,
    cfg: Optional[MomentConfig] = None,
) -> List[MomentWindow]:
    """Predict ranked (start_s, end_s, score) windows for a query over video frames."""
    signal = frame_similarities(query, frames, frame_hop_s, duration_s)
    return localize_signal(signal, cfg or MomentConfig())


def windows_to_dict(query_id: str, windows: Sequence[MomentWindow]) -> Dict[str, Any]:
    return {"query_id": query_id, "windows": [w.to_dict() for w in windows]}
