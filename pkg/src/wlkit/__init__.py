"""wlkit: higher-dimensional color refinement on relational structures.

Subpackages cover the refinement engine itself (`core`), XOR constraint
systems and their twin-structure translation (`xorcsp`), the pebbled
assignment game (`games`), expander-based hard instance and stable-chain
generators (`generators`), the tuple-space tensor algebra that bounds
refinement round counts (`algebra`), and the binary-structure translation
that trades dimension for rounds (`binarize`).
"""

from . import algebra, binarize, core, games, generators, xorcsp
from .core import (
    RelationalStructure,
    TupleColoring,
    Vocabulary,
    initial_coloring,
    joint_distinguish,
    refine_step,
    stabilize,
)
from .errors import BudgetExceededError, FormatError
from .xorcsp import XorConstraint, XorSystem

__version__ = "0.1.0"

__all__ = [
    "algebra",
    "binarize",
    "core",
    "games",
    "generators",
    "xorcsp",
    "RelationalStructure",
    "TupleColoring",
    "Vocabulary",
    "initial_coloring",
    "joint_distinguish",
    "refine_step",
    "stabilize",
    "BudgetExceededError",
    "FormatError",
    "XorConstraint",
    "XorSystem",
    "__version__",
]
