from ._nilmap import *  # noqa: F401,F403
from ._nilmap import __version__
