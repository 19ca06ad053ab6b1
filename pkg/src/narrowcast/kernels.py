"""Selects the scan kernel backend at import time.

The compiled extension is preferred when it built; otherwise the pure-Python
fallback is used. Set NARROWCAST_PURE_PYTHON=1 to force the fallback (the
benchmark uses this to compare the two).
"""

import os

if os.environ.get("NARROWCAST_PURE_PYTHON", "") not in ("", "0"):
    from narrowcast import _pure as _impl
else:
    try:
        from narrowcast import _native as _impl
    except ImportError:
        from narrowcast import _pure as _impl

BACKEND: str = _impl.BACKEND
crc16_ccitt = _impl.crc16_ccitt
scan_groups = _impl.scan_groups
