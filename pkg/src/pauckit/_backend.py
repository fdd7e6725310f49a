"""Pick the loss kernel at import: compiled if built, numpy otherwise.

Set ``PAUCKIT_BACKEND=python`` to force the numpy kernel, or
``PAUCKIT_BACKEND=compiled`` to fail loudly when the extension is missing.
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

KERNELS = {"python": _kernels_py}
if _kernels_c is not None:
    KERNELS["compiled"] = _kernels_c

_requested = os.environ.get("PAUCKIT_BACKEND", "").strip().lower()
if _requested == "compiled" and _kernels_c is None:
    raise ImportError("PAUCKIT_BACKEND=compiled but pauckit._kernels is not built")
if _requested and _requested not in ("python", "compiled"):
    raise ImportError(f"unknown PAUCKIT_BACKEND {_requested!r}")

BACKEND = _requested or ("compiled" if _kernels_c is not None else "python")
objective_and_grad = KERNELS[BACKEND].objective_and_grad


def available():
    return sorted(KERNELS)
