"""Photon-counting Brillouin reflectometer twin."""

try:
    from . import _botdr as _impl  # packaged wheel layout
    from ._botdr import *  # noqa: F401,F403
except ImportError:  # build-tree layout: the extension sits on sys.path
    import _botdr as _impl
    from _botdr import *  # noqa: F401,F403

__version__ = _impl.__version__
