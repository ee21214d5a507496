"""Similarity primitives shared by search, training and localization."""

import numpy as np

from ..errors import DimensionMismatch, ZeroVector
from .models import EmbeddingVector, MomentWindow


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine of the angle between two vectors, in 64-bit."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"Cannot compare dim {a.dim} with dim {b.dim}")
    dot = float(np.dot(a.values, b.values))
    if a.normalized and b.normalized:
        return float(np.clip(dot, -1.0, 1.0))

    norm_a = a.norm()
    norm_b = b.norm()
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("Cosine similarity is undefined for a zero vector")
    return float(np.clip(dot / (norm_a * norm_b), -1.0, 1.0))


def l2_normalize(a: EmbeddingVector) -> EmbeddingVector:
    """Scale a vector to unit length and flag it normalized."""
    norm = a.norm()
    if norm == 0.0:
        raise ZeroVector("Cannot normalize a zero vector")
    return EmbeddingVector(a.values / norm, normalized=True)


def unit_rows(matrix: np.ndarray) -> np.ndarray:
    """Row-normalize a 2-D array in 64-bit; zero rows raise."""
    matrix = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ZeroVector("Cannot normalize a zero row")
    return matrix / norms


def interval_iou(a: MomentWindow, b: MomentWindow) -> float:
    """Intersection over union of two closed time intervals."""
    intersection = max(0.0, min(a.end_s, b.end_s) - max(a.start_s, b.start_s))
    if intersection == 0.0:
        return 0.0
    union = a.length + b.length - intersection
    return float(intersection / union)
