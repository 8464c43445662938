"""Python bindings for the replay-lab core library."""

try:
    from ._core import *  # noqa: F401,F403
except ImportError:  # development builds put _core on PYTHONPATH directly
    from _core import *  # noqa: F401,F403
