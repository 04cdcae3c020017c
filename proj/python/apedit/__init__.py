try:
    from ._apedit import *  # noqa: F401,F403
except ImportError:  # running from the build tree, module alongside the package
    from _apedit import *  # noqa: F401,F403
