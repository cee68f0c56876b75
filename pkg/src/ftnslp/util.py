"""Small shared helpers: unit conversions and spectrum flooring."""

import numpy as np

# Single dB convention for the whole package: powers, SNR targets and
# energy budgets are all 10^(x/10) linear.
def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def floor_spectrum(eigvals, rel_floor=1e-12):
    """Clamp eigenvalues below rel_floor * max(eigvals) to that floor.

    Shifted pulses become nearly dependent for strong compression, so Gram
    matrices may be numerically singular; every inverse/whitening path goes
    through this clamp.
    """
    eigvals = np.asarray(eigvals, dtype=float)
    floor = rel_floor * float(eigvals.max())
    return np.maximum(eigvals, floor)

