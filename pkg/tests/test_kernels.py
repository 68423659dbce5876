import os
import subprocess
import sys

import numpy as np
import pytest

from servicebond import kernels


def test_compiled_backend_preferred():
    if os.environ.get("SERVICEBOND_PURE", "") not in ("", "0"):
        pytest.skip("pure backend forced")
    expected = "cython" if "cython" in kernels.backends() else "python"
    assert kernels.BACKEND == expected


@pytest.mark.parametrize("name", sorted(kernels.backends()))
def test_segment_index_boundaries(name):
    impl = kernels.backends()[name]
    starts = np.array([0.0, 5.0, 10.0])
    ts = np.array([0.0, 4.999, 5.0, 9.0, 10.0, 12.0])
    assert kernels.segment_index(starts, ts, impl=impl).tolist() == [0, 0, 1, 1, 2, 2]


@pytest.mark.parametrize("name", sorted(kernels.backends()))
def test_under_counts_signs(name):
    impl = kernels.backends()[name]
    starts = np.array([0.0, 5.0])
    values = np.array([[10.0, 50.0], [30.0, 20.0]])
    ts = np.arange(10.0)
    got = kernels.under_counts(starts, values, ts, np.array([20.0, 30.0]), np.array([1.0, -1.0]), impl=impl)
    assert got.tolist() == [5, 5]


@pytest.mark.parametrize("name", sorted(kernels.backends()))
def test_step_counts_strict_at_zero(name):
    impl = kernels.backends()[name]
    d = np.array([[25.0], [24.0], [26.0]])
    assert kernels.step_counts(d, np.array([25.0]), np.array([1.0]), impl=impl).tolist() == [1]


def test_backends_agree_on_random_inputs():
    impls = list(kernels.backends().values())
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(1, 200))
        starts = np.sort(rng.choice(10_000, n, replace=False)).astype(float)
        starts[0] = 0.0
        starts = np.unique(starts)
        values = rng.integers(0, 5, (starts.size, 3)).astype(float)
        ts = np.sort(rng.uniform(0, 10_000, 500))
        ref, sign = np.array([2.0, 3.0, 1.0]), np.array([1.0, -1.0, 1.0])
        outs = [kernels.under_counts(starts, values, ts, ref, sign, impl=i).tolist() for i in impls]
        assert all(o == outs[0] for o in outs)


def test_pure_flag_selects_fallback():
    env = dict(os.environ, SERVICEBOND_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import servicebond.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
