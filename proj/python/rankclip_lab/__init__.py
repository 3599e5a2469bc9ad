"""Ranking-consistent contrastive training laboratory.

The compiled extension carries the actual implementations; this package just
re-exports them under a stable name.
"""

try:
    from ._core import *  # noqa: F401,F403
    from . import _core as _impl
except ImportError:  # in-tree builds put _core on sys.path directly
    from _core import *  # noqa: F401,F403
    import _core as _impl

__all__ = [name for name in dir(_impl) if not name.startswith("_")]
__version__ = "0.1.0"
