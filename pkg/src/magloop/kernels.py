"""Backend selection for the hot loops.

The compiled extension is used when importable; setting MAGLOOP_PURE=1 forces
the numpy fallback.  ``BACKEND`` names the active implementation.
"""
import os

from magloop import _pykernels

if os.environ.get("MAGLOOP_PURE"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from magloop import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

cell_chain = _impl.cell_chain
cell_grid = _impl.cell_grid
chain4 = _impl.chain4
affine_chain = _impl.affine_chain
