"""Kernel backend selection.

The compiled extension ``romaq._core`` is preferred when importable; the
pure-NumPy fallback in ``romaq._kernels_py`` implements the same contracts.
Set ``ROMAQ_PURE=1`` to force the fallback (used by the benchmark and by
tests that exercise both paths).
"""

import os

from romaq import _kernels_py

svec_indices = _kernels_py.svec_indices
svec_len = _kernels_py.svec_len
smat_batch = _kernels_py.smat_batch
svec_batch = _kernels_py.svec_batch

if os.environ.get("ROMAQ_PURE", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from romaq import _core as _impl
    except ImportError:
        _impl = _kernels_py

jacobi_eigh = _impl.jacobi_eigh
chol_upper = _impl.chol_upper
conj_svec_op = _impl.conj_svec_op
conj_svec_apply = _impl.conj_svec_apply


def backend_name():
    return "compiled" if _impl is not _kernels_py else "pure"
