"""Python bindings for the citefusion OVA citation-intent ensemble."""

from ._citefusion import *  # noqa: F401,F403
from ._citefusion import __version__  # noqa: F401
