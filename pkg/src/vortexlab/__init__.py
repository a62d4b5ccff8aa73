"""Lagrangian vortex-method laboratory for 2D incompressible Euler flows."""
__version__ = "0.1.0"

from .domain import *  # noqa: E402,F401,F403
from .modulus import *  # noqa: E402,F401,F403
from .maps import *  # noqa: E402,F401,F403
from .vorticity import *  # noqa: E402,F401,F403
from .flow import *  # noqa: E402,F401,F403
from .stability import *  # noqa: E402,F401,F403
from .builtins import get_spec, get_theta, get_twist, list_builtins  # noqa: E402,F401
