"""Stereo visual localization: ORB front-end, feature association and
sliding-window bundle adjustment, backed by a C++ core."""

from ._stereoloc import *  # noqa: F401,F403
from ._stereoloc import __version__  # noqa: F401
