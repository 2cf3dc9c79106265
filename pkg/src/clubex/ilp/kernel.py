"""Select the simplex kernel: compiled extension if importable, numpy otherwise.

Set ``CLUBEX_PURE_PYTHON=1`` to force the numpy kernel.
"""

import os

from . import _simplex_py

python_run_simplex = _simplex_py.run_simplex

compiled_run_simplex = None
if not os.environ.get("CLUBEX_PURE_PYTHON"):
    try:
        from ._simplex import run_simplex as compiled_run_simplex
    except ImportError:  # extension not built
        compiled_run_simplex = None

run_simplex = compiled_run_simplex or python_run_simplex
KERNEL = "cython" if compiled_run_simplex is not None else "python"
