"""SSIM with an 11-tap Gaussian window and the standard stability constants."""

from __future__ import annotations

import torch
import torch.nn.functional as F

_WINDOW = 11
_SIGMA = 1.5
_C1 = 0.01**2  # inputs live in [0, 1]
_C2 = 0.03**2


def _gaussian_window(channels: int, dtype, device):
    coords = torch.arange(_WINDOW, dtype=dtype, device=device) - (_WINDOW - 1) / 2.0
    g = torch.exp(-(coords**2) / (2 * _SIGMA**2))
    g = g / g.sum()
    kernel = torch.outer(g, g)
    return kernel.expand(channels, 1, _WINDOW, _WINDOW).contiguous()


def ssim(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Mean SSIM over a batch of (N, C, H, W) tensors in [0, 1]."""
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {tuple(x.shape)} vs {tuple(y.shape)}")
    if x.shape[-1] < _WINDOW or x.shape[-2] < _WINDOW:
        raise ValueError(f"inputs must be at least {_WINDOW}x{_WINDOW}")
    c = x.shape[1]
    win = _gaussian_window(c, x.dtype, x.device)
    mu_x = F.conv2d(x, win, groups=c)
    mu_y = F.conv2d(y, win, groups=c)
    mu_x2, mu_y2, mu_xy = mu_x * mu_x, mu_y * mu_y, mu_x * mu_y
    sigma_x2 = F.conv2d(x * x, win, groups=c) - mu_x2
    sigma_y2 = F.conv2d(y * y, win, groups=c) - mu_y2
    sigma_xy = F.conv2d(x * y, win, groups=c) - mu_xy
    num = (2 * mu_xy + _C1) * (2 * sigma_xy + _C2)
    den = (mu_x2 + mu_y2 + _C1) * (sigma_x2 + sigma_y2 + _C2)
    return (num / den).mean()
