"""GKP-qubit fault-tolerance calculators.

Thin re-export of the compiled extension.  The ``gkpft`` command-line tool
drives the same code paths; this package exists for notebook-scale use of the
error-mass formulas, leading-order budgets, and Monte-Carlo estimators.
"""

try:  # wheel layout: extension built into the package
    from ._gkpft import *  # noqa: F401,F403
    from ._gkpft import __version__  # noqa: F401
except ImportError:  # in-tree build: extension sits next to the package
    from _gkpft import *  # noqa: F401,F403
    from _gkpft import __version__  # noqa: F401
