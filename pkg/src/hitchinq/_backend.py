"""Select the transport kernel at import time.

The compiled ``_transport`` extension is preferred; set
``HITCHINQ_BACKEND=python`` to force the pure-Python kernel.
"""

import logging
import os

from . import _transport_py

log = logging.getLogger(__name__)

try:
    from . import _transport as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

KERNELS = {"python": _transport_py.transport_segment}
if _compiled is not None:
    KERNELS["cython"] = _compiled.transport_segment

_requested = os.environ.get("HITCHINQ_BACKEND", "").lower()
if _requested and _requested not in KERNELS:
    log.warning("backend %r unavailable; using default", _requested)
    _requested = ""
BACKEND = _requested or ("cython" if "cython" in KERNELS else "python")


def get_kernel(name=None):
    return KERNELS[name or BACKEND]
