"""Select the loss-kernel backend at import time.

The compiled extension (pram._ext, Cython) is preferred; the numpy fallback
is used when it is missing. PRAM_BACKEND=python|compiled forces the choice;
forcing "compiled" raises if the extension was not built.
"""

import os

from . import _kernels_py

_choice = os.environ.get("PRAM_BACKEND", "auto").strip().lower()

if _choice not in ("auto", "python", "compiled"):
    raise ValueError(f"PRAM_BACKEND must be auto, python or compiled, got {_choice!r}")

if _choice == "python":
    kernels = _kernels_py
else:
    try:
        from . import _ext as kernels  # noqa: F401
    except ImportError:
        if _choice == "compiled":
            raise ImportError(
                "PRAM_BACKEND=compiled but the pram._ext extension is not built; "
                "reinstall with a C compiler available"
            )
        kernels = _kernels_py

BACKEND_NAME = kernels.BACKEND_NAME
