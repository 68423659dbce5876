"""Pure numpy implementations of the sampling kernels.

Same contracts as the compiled module; used when the extension is not built
or when ``SERVICEBOND_PURE=1`` is set.
"""
import numpy as np


def segment_index(starts, ts):
    return np.searchsorted(starts, ts, side="right").astype(np.intp) - 1


def under_counts(starts, values, ts, ref, sign):
    idx = segment_index(starts, ts)
    return step_counts(values[idx], ref, sign)


def step_counts(delivered, ref, sign):
    under = sign * (ref - delivered) > 0.0
    return under.sum(axis=0).astype(np.int64)
