"""Multi-treatment uplift modelling with calibrated meta-learners.

Typical flow: generate or load a `CampaignDataset`, fit one meta-learner per
treatment with `fit_multi_treatment`, turn the CATE matrix into offers with
`select` and score the result with the `evaluate` helpers.
"""

from .baselearn import FitConfig, LinearModel, fit_logistic, fit_propensity, fit_ridge
from .calibrate import CalibratedLearner, IsotonicModel, calibrated_fit, expected_calibration_error, fit_isotonic, pava
from .dataset import CONTROL, CampaignDataset, load_csv, split, write_csv
from .errors import DatasetError, FitError, ValidationError
from .evaluate import auuc, auuc_random_baseline, auuc_score, lift_at_quantile, policy_value, uplift_curve
from .metalearn import (
    FittedMetaModel,
    MultiTreatmentModel,
    fit_multi_treatment,
    fit_s,
    fit_t,
    fit_x,
    predict_cate,
    predict_uplift_matrix,
)
from .selection import NONE, Assignment, UpliftScores, direct_rank_assign, select, zscore_assign

__version__ = "0.1.0"
