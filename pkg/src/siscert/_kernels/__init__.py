"""Hot numeric kernels: compiled core with a pure-numpy fallback.

Two entry points live here, with identical semantics in both backends:

* ``admm_run``       -- the operator-splitting iteration of the SDP solver
* ``abscissa_batch`` -- spectral abscissas of a stack of matrices via
                        bisection over shifted Lyapunov solves

The compiled backend is selected automatically when the extension built;
set SISCERT_PURE_PYTHON=1 to force the fallback (e.g. for benchmarking).
"""

import os

if os.environ.get("SISCERT_PURE_PYTHON"):
    from . import _fallback as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _fallback as _impl

        BACKEND = "python"

admm_run = _impl.admm_run
abscissa_batch = _impl.abscissa_batch

__all__ = ["BACKEND", "admm_run", "abscissa_batch"]
