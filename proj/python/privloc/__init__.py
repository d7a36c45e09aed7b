"""AST path mining, privacy-behavior classification and localization.

Thin wrapper over the compiled _privloc module; the heavy lifting (parsing,
the tensor engine, training, localization) lives in the C++ core. The
`privloc` command line tool drives full pipelines.
"""

try:
    from ._privloc import *  # noqa: F401,F403  (installed wheel layout)
    from ._privloc import __version__  # noqa: F401
except ImportError:  # pragma: no cover - build-tree layout
    from _privloc import *  # noqa: F401,F403
    from _privloc import __version__  # noqa: F401
