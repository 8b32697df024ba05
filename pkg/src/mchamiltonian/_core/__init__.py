"""Hot kernels. The Cython extension is used when it has been built;
otherwise the numpy fallback is selected at import.

Set ``MCHAM_BACKEND=python`` to force the fallback.
"""

import os

from . import _fallback

fallback = _fallback
compiled = None

if os.environ.get("MCHAM_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

kernels = compiled if compiled is not None else _fallback
BACKEND = kernels.BACKEND

__all__ = ["kernels", "compiled", "fallback", "BACKEND"]
