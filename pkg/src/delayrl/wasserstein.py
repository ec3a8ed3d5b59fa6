"""Exact 1-D Wasserstein-1 distance between distributions on embedded points."""
from __future__ import annotations

import numpy as np

from .errors import UsageError


def wasserstein_1d(p, q, support=None) -> float:
    """W1 between probability vectors ``p`` and ``q`` on a shared ``support``.

    Computed as the integral of |F_p - F_q| over the sorted support.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise UsageError(f"distributions live on different supports: {p.shape} vs {q.shape}")
    x = np.arange(p.size, dtype=float) if support is None else np.asarray(support, dtype=float)
    if x.shape != p.shape:
        raise UsageError(f"support has {x.size} points, distributions have {p.size}")
    return float(pairwise_w1(p[None], q[None], x)[0])


def pairwise_w1(P: np.ndarray, Q: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Row-wise W1 between stacks of distributions (..., n) on a common support."""
    order = np.argsort(support, kind="stable")
    x = np.asarray(support, float)[order]
    diff = np.cumsum(np.asarray(P)[..., order] - np.asarray(Q)[..., order], axis=-1)[..., :-1]
    return np.abs(diff) @ np.diff(x)


def w1_to_dirac(p, support, point: float) -> float:
    return float(np.dot(np.asarray(p, float), np.abs(np.asarray(support, float) - point)))
