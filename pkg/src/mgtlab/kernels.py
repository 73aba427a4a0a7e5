"""Backend selection for the hot modal kernels.

The compiled extension ``mgtlab._ckernels`` is used when it imports; setting
``MGTLAB_PURE_PYTHON=1`` forces the numpy fallback.  Both expose:

``expsum_eval(lam, B, t)``
    sampled real exponential sums, shape ``(T, N, J)``
``expsum_quad(lam, G, t)``
    exact running integrals of modal quadratic forms, shape ``(T,)``
``polish_roots(coeffs, roots, maxit)``
    residual-monotone Newton polish of polynomial roots
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("MGTLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

expsum_eval = _impl.expsum_eval
expsum_quad = _impl.expsum_quad
polish_roots = _impl.polish_roots


def get_backend(name=None):
    """Return the kernel module for ``name`` ('python', 'cython') or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
