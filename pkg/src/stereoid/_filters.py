"""Small separable-filter helpers shared by the SSIM variant and fault injection."""

from __future__ import annotations

import numpy as np


def gaussian_kernel_1d(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    x = np.arange(size, dtype=np.float64) - half
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def separable_filter_2d(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Convolve one 2-D plane with a 1-D kernel along both axes (reflect padding)."""
    r = len(kernel) // 2
    padded = np.pad(plane, ((r, r), (0, 0)), mode="reflect")
    rows = sum(kernel[i] * padded[i : i + plane.shape[0]] for i in range(len(kernel)))
    padded = np.pad(rows, ((0, 0), (r, r)), mode="reflect")
    return sum(kernel[i] * padded[:, i : i + plane.shape[1]] for i in range(len(kernel)))


def gaussian_blur(chw: np.ndarray, sigma: float) -> np.ndarray:
    """Blur a C x H x W array channelwise with a truncated gaussian."""
    size = 2 * int(np.ceil(3.0 * sigma)) + 1
    kernel = gaussian_kernel_1d(size, sigma)
    return np.stack([separable_filter_2d(ch, kernel) for ch in chw])
