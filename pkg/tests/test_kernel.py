import os
import subprocess
import sys
from pathlib import Path

import pytest

from clubex.ilp.kernel import KERNEL, compiled_run_simplex

ROOT = Path(__file__).resolve().parents[1]


def kernel_in_subprocess(**env):
    proc = subprocess.run(
        [sys.executable, "-c", "from clubex.ilp.kernel import KERNEL; print(KERNEL)"],
        capture_output=True,
        text=True,
        env={**os.environ, **env},
    )
    return proc.stdout.strip()


def test_pure_python_fallback_selected_by_env():
    assert kernel_in_subprocess(CLUBEX_PURE_PYTHON="1") == "python"


def test_default_kernel():
    assert KERNEL == ("cython" if compiled_run_simplex is not None else "python")
    assert kernel_in_subprocess() == KERNEL


@pytest.mark.skipif(compiled_run_simplex is None, reason="compiled kernel not built")
def test_benchmark_runs_and_kernels_agree():
    proc = subprocess.run(
        [sys.executable, str(ROOT / "benchmarks" / "bench_simplex.py"), "--models", "20", "--repeat", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "speedup" in proc.stdout
