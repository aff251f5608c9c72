"""
Per-joint "same" correlation over the last two axes, with its backward.

Shapes: inputs ``(K, Cin, H, W)``, kernels ``(K, Cout, Cin, kh, kw)``,
outputs ``(K, Cout, H, W)``. Kernel sizes are odd; inputs are zero-padded by
``(kh - 1) // 2`` and ``(kw - 1) // 2``. A 1D filter is the ``kh == 1`` case.
"""

from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..core import ContractError


def windows(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """Zero-padded sliding windows, shape ``(K, C, H, W, kh, kw)``."""
    if kh % 2 == 0 or kw % 2 == 0:
        raise ContractError(f"Kernel sizes must be odd, got {kh}x{kw}")
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    padded = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    return sliding_window_view(padded, (kh, kw), axis=(2, 3))


def correlate(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``y[k, o] = sum_i corr(x[k, i], w[k, o, i])``."""
    if x.shape[0] != w.shape[0] or x.shape[1] != w.shape[2]:
        raise ContractError(f"Input {x.shape} does not match kernel {w.shape}")
    return np.einsum("kiyxab,koiab->koyx", windows(x, *w.shape[3:]), w)


def correlate_backward(x: np.ndarray, w: np.ndarray, dy: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gradients of a correlate() call.

    Args:
        x: Input of the forward call
        w: Kernel of the forward call
        dy: dL/dy, same shape as the forward output

    Returns:
        ``(dx, dw)``
    """
    kh, kw = w.shape[3:]
    dw = np.einsum("kiyxab,koyx->koiab", windows(x, kh, kw), dy)
    # same-padded correlation with the flipped, in/out-swapped kernel
    flipped = np.ascontiguousarray(w.transpose(0, 2, 1, 3, 4)[..., ::-1, ::-1])
    dx = np.einsum("koyxab,kioab->kiyx", windows(dy, kh, kw), flipped)
    return dx, dw
