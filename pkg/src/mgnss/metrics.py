"""Band-averaged PSNR / SSIM and relative error for cube recovery."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import correlate

#: Reported PSNR for a band (or cube) reproduced exactly.
PSNR_CAP_DB = 100.0


@dataclass
class QualityReport:
    psnr_db: float
    ssim: float
    per_band_psnr: list
    per_band_ssim: list
    rse: float

    def as_dict(self) -> dict:
        return asdict(self)


def _check_cubes(x, reference):
    x = np.asarray(x, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if x.shape != reference.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {reference.shape}")
    if x.ndim != 3:
        raise ValueError(f"expected order-3 cubes, got shape {x.shape}")
    return x, reference


def _peak(reference):
    peak = float(reference.max())
    return peak if peak > 0 else 1.0


def _psnr_from_mse(mse, peak):
    if mse == 0:
        return PSNR_CAP_DB
    return float(10.0 * np.log10(peak ** 2 / mse))


def psnr(x, reference, mode: str = "band"):
    """Return ``(per_band, mean)`` PSNR in dB with peak = ``reference.max()``.

    ``mode="global"`` replaces the band mean by the PSNR of the whole cube.
    """
    x, reference = _check_cubes(x, reference)
    peak = _peak(reference)
    mse = np.mean((x - reference) ** 2, axis=(0, 1))
    per_band = [_psnr_from_mse(m, peak) for m in mse]
    if mode == "band":
        return per_band, float(np.mean(per_band))
    if mode == "global":
        return per_band, _psnr_from_mse(float(np.mean(mse)), peak)
    raise ValueError(f"unknown PSNR mode {mode!r}")


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def _ssim_band(a, b, window, c1, c2):
    pad = window.shape[0] // 2

    def filt(img):
        return correlate(img, window, mode="reflect")[pad:-pad, pad:-pad]

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(x, reference, window_size: int = 11, sigma: float = 1.5):
    """Return ``(per_band, mean)`` SSIM with a Gaussian window.

    Local statistics are taken over the valid region only (the
    ``window_size // 2`` border is dropped). ``C1 = (0.01 peak)^2`` and
    ``C2 = (0.03 peak)^2``.
    """
    x, reference = _check_cubes(x, reference)
    if window_size < 1 or window_size % 2 == 0:
        raise ValueError(f"window size must be a positive odd integer, got {window_size}")
    if min(x.shape[:2]) < window_size:
        raise ValueError(
            f"spatial size {x.shape[:2]} is smaller than the {window_size}x{window_size} window")
    peak = _peak(reference)
    c1, c2 = (0.01 * peak) ** 2, (0.03 * peak) ** 2
    window = gaussian_window(window_size, sigma)
    per_band = [_ssim_band(x[..., b], reference[..., b], window, c1, c2)
                for b in range(x.shape[2])]
    return per_band, float(np.mean(per_band))


def rse(x, reference) -> float:
    x = np.asarray(x, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if x.shape != reference.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {reference.shape}")
    ref_norm = np.linalg.norm(reference.ravel())
    if ref_norm == 0:
        raise ValueError("relative error against an all-zero reference is undefined")
    return float(np.linalg.norm((x - reference).ravel()) / ref_norm)


def evaluate(x, reference, psnr_mode: str = "band") -> QualityReport:
    band_psnr, mean_psnr = psnr(x, reference, mode=psnr_mode)
    band_ssim, mean_ssim = ssim(x, reference)
    return QualityReport(mean_psnr, mean_ssim, band_psnr, band_ssim, rse(x, reference))
