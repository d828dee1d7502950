"""Background-field hidden-variable models of the Bell experiment.

Exact evaluation and Monte Carlo estimation of Bell's model, the naive and
pair-correlated background models, and Hall's spherical model, together with
CHSH audits, enumeration, grid search and a coupling scan.
"""

from .core import (
    BellError,
    ChshReport,
    ChshScenario,
    JointOutcomeDistribution,
    Outcome,
    PlanarSetting,
    UnitVector3,
    ValidationError,
    chsh_value,
    joint_to_correlation,
    quantum_correlation,
    quantum_joint,
)

__version__ = "0.1.0"
