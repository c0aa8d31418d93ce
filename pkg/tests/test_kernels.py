import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles.lcs_bruteforce import lcs_bruteforce
from scripteval import _accel
from scripteval.kernels import lcs_kernel, lcs_numba, lcs_numpy

seqs = st.lists(st.integers(0, 4), max_size=12)


@given(seqs, seqs)
def test_numpy_path_matches_oracle(a, b):
    assert lcs_numpy(np.array(a, np.int64), np.array(b, np.int64)) == lcs_bruteforce(a, b)


@given(seqs, seqs)
def test_numba_path_matches_oracle(a, b):
    assert lcs_numba(np.array(a, np.int64), np.array(b, np.int64)) == lcs_bruteforce(a, b)


def test_paths_agree_on_long_input():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 30, 1500)
    b = rng.integers(0, 30, 900)
    assert lcs_numba(a, b) == lcs_numpy(a, b) == lcs_kernel(a, b) == lcs_kernel(b, a)


def test_empty():
    e = np.zeros(0, np.int64)
    assert lcs_kernel(e, np.arange(3)) == 0


@pytest.mark.parametrize("flag, expected", [("0", "False"), ("1", str(_accel.HAVE_NUMBA))])
def test_env_flag_selects_path(flag, expected):
    env = dict(os.environ, SCRIPTEVAL_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", "from scripteval import _accel; print(_accel.USE_NUMBA)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected


def test_benchmark_script_runs(capsys):
    import importlib.util
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_lcs.py"
    spec = importlib.util.spec_from_file_location("bench_lcs", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    mod.main(["--sizes", "50", "120", "--repeat", "1"])
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("| tokens") and len(out) == 4
