try:
    from secheader._secheader import *  # noqa: F401,F403
    from secheader._secheader import __doc__  # noqa: F401
except ImportError:
    from _secheader import *  # noqa: F401,F403
