"""Two-agent capital accumulation with consumption-dependent discounting.

Submodules
----------
model
    Functional families, model specification and assumption checks.
numerics
    Brackets, bisection, cubic roots and grid functions.
autarky
    Single-agent steady states, value iteration and strategy bounds.
openloop
    Precommitment equilibrium, its Jacobian spectrum and stable manifold.
markov
    Markovian equilibrium, stability regions and the policy operator.
cli
    The ``recgrowth`` command.
"""

__version__ = "0.1.0"

from . import autarky, markov, model, numerics, openloop  # noqa: E402
from .errors import *  # noqa: F401,F403,E402
from .errors import __all__ as _errors_all  # noqa: E402
from .model import ModelSpec, canonical_model, validate_model  # noqa: E402

__all__ = ["__version__", "autarky", "markov", "model", "numerics", "openloop",
           "ModelSpec", "canonical_model", "validate_model", *_errors_all]
