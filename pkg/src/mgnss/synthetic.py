"""Synthetic cubes with known structure for desk-scale experiments."""

import numpy as np


def synthetic_cube(n_rows=30, n_cols=30, n_bands=10, seed=0):
    """Three smooth separable components plus a band-smooth ramp, scaled to [0, 1].

    Each component is ``a(row) * b(col) * c(band)`` with random-phase
    sinusoidal spatial profiles and a smooth positive spectrum.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    r = np.linspace(0.0, 1.0, n_rows)
    c = np.linspace(0.0, 1.0, n_cols)
    b = np.linspace(0.0, 1.0, n_bands)
    cube = np.zeros((n_rows, n_cols, n_bands))
    for _ in range(3):
        fr, fc = rng.uniform(0.5, 2.5, size=2)
        pr, pc = rng.uniform(0.0, 2 * np.pi, size=2)
        a_row = 1.0 + np.sin(2 * np.pi * fr * r + pr)
        b_col = 1.0 + np.sin(2 * np.pi * fc * c + pc)
        spectrum = 0.5 + 0.5 * np.exp(-((b - rng.uniform(0, 1)) ** 2) / 0.2)
        cube += np.einsum("i,j,k->ijk", a_row, b_col, spectrum)
    ramp = (r[:, None] + c[None, :]) / 2.0
    cube += 0.5 * ramp[:, :, None] * (0.5 + b)[None, None, :]
    cube -= cube.min()
    return cube / cube.max()
