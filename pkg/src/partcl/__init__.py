"""Part-wise coactive preference elicitation over combinatorial domains."""

from .model import (EPS, BasicPart, Configuration, ConflictError, Constraint,
                    FeatureDef, InfeasibleError, LinearTerm, Literal,
                    ModelError, PartialConfiguration, ProblemModel, TableTerm,
                    Term, Variable, combine)

__all__ = [
    "EPS", "BasicPart", "Configuration", "ConflictError", "Constraint",
    "FeatureDef", "InfeasibleError", "LinearTerm", "Literal", "ModelError",
    "PartialConfiguration", "ProblemModel", "TableTerm", "Term", "Variable",
    "combine",
]

__version__ = "0.1.0"
