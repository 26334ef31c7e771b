from typing import Callable

import numpy as np


def central_differences(fn: Callable[[np.ndarray], float], w: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Numerical gradient of a scalar function by central differences."""
    w = np.array(w, dtype=np.float64)
    grad = np.zeros_like(w)
    for i in range(w.size):
        original = w[i]
        w[i] = original + step
        upper = fn(w)
        w[i] = original - step
        lower = fn(w)
        w[i] = original
        grad[i] = (upper - lower) / (2.0 * step)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-7) -> float:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))
