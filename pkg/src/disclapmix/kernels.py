"""Backend selection for the EM kernels.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy implementations in ``_kernels_py`` are used.  Setting
``DISCLAPMIX_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("DISCLAPMIX_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

e_step = _impl.e_step
log_density = _impl.log_density
abs_dev_sums = _impl.abs_dev_sums
weighted_medians = _impl.weighted_medians
log_norm_const = _kernels_py.log_norm_const
