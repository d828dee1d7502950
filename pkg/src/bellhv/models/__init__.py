"""Hidden-variable models of the Bell experiment."""

from .discrete import (
    ALPHA_PAIRS,
    LEFT_SETTINGS,
    RIGHT_SETTINGS,
    AlphaConstruction,
    ConstructionError,
    DichotomicM3Model,
    M1Model,
    M2Model,
    SelectionTables,
    SingletReference,
    build_alpha_m3,
    hidden_tuples,
    is_indeterminate,
    m1_joint,
    m2_joint,
    m3_joint,
    mi_ratio,
)
from .serialization import SCHEMA_TAG, SchemaError, dump_model, load_model, model_from_dict, model_to_dict
from .spherical import (
    ContinuousM3Model,
    HallModel,
    IntegrationSpec,
    JointEstimate,
    hall_density,
    hall_outcome_A,
    hall_outcome_B,
    hall_outcome_a,
    hall_outcome_b,
    m3c_density,
    m3c_joint,
    m3c_outcome_A,
    m3c_outcome_B,
    m3c_outcome_a,
    m3c_outcome_b,
)
from .tables import ProbabilityTable, Variable
