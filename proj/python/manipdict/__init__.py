"""Motion-primitive dictionaries for in-hand manipulation.

Thin python layer over the C++ core: preprocessing demonstration
recordings, learning a non-negative primitive dictionary, generating
fingertip/object trajectories toward a target pose, and checking the
results against reachability, collision, and contact constraints.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
__doc__ = _core_doc or __doc__
