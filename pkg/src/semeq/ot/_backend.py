"""Select the compiled network-simplex kernel, or fall back to pure Python.

Set ``SEMEQ_PURE_PYTHON=1`` to force the fallback.
"""

import os

BACKEND = "python"

if not os.environ.get("SEMEQ_PURE_PYTHON"):
    try:
        from ._netsimplex import TransportSimplex  # noqa: F401

        BACKEND = "cython"
    except ImportError:
        pass

if BACKEND == "python":
    from ._netsimplex_py import TransportSimplex  # noqa: F401
