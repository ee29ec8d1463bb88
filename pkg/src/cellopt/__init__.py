"""Bilevel optimization of human-robot collaborative work-cells."""

from .errors import CelloptError
from .model import Chromosome, WorkcellSpec, chromosome_dimensions, validate_spec

__version__ = "0.1.0"


def __getattr__(name):
    # the estimator pulls in scikit-learn; import it on first use
    if name == "WorkcellOptimizer":
        from .estimator import WorkcellOptimizer

        return WorkcellOptimizer
    raise AttributeError(name)


__all__ = [
    "CelloptError",
    "Chromosome",
    "WorkcellOptimizer",
    "WorkcellSpec",
    "chromosome_dimensions",
    "validate_spec",
    "__version__",
]
