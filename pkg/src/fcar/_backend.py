"""Select the compiled greedy kernels when available.

Set ``FCAR_BACKEND=python`` to force the numpy fallback.
"""

import os

from . import _greedy_py

python_kernels = _greedy_py

if os.environ.get("FCAR_BACKEND", "").lower() == "python":
    kernels = _greedy_py
    compiled_kernels = None
else:
    try:
        from . import _greedy_ext as compiled_kernels
    except ImportError:  # extension not built
        compiled_kernels = None
        kernels = _greedy_py
    else:
        kernels = compiled_kernels

BACKEND = "python" if kernels is _greedy_py else "cython"
