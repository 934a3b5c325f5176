"""Budgeted uplift campaigns with surrogate ground truth (SGT) labels.

The package covers the whole loop: simulate or ingest a campaign population,
train treatment and control response models, select a budgeted intervention
group, derive post-campaign SGT labels, and evaluate profit and group
fairness of the decisions.
"""

from uplift_sgt.campaign import (
    CampaignSpec,
    Individual,
    KpiKind,
    LiftRanking,
    Quadrant,
    classify_quadrant,
    rank_by_score,
    select_top_k,
    selection_size,
)
from uplift_sgt.errors import UpliftSGTError
from uplift_sgt.fairness import (
    Band,
    FairnessReport,
    Metric,
    Mode,
    classify_band,
    evaluate_all,
)
from uplift_sgt.harness import DEFAULT_BUDGETS, gap_closed, run_suite
from uplift_sgt.models import Classifier, TrainConfig, train_logistic, uplift_two_model
from uplift_sgt.sgt import CampaignSelection, SgtLabels, step_one, step_two
from uplift_sgt.simulate import SimConfig, SyntheticCampaign, generate_population

__version__ = "0.1.0"

__all__ = [
    "Band",
    "CampaignSelection",
    "CampaignSpec",
    "Classifier",
    "DEFAULT_BUDGETS",
    "FairnessReport",
    "Individual",
    "KpiKind",
    "LiftRanking",
    "Metric",
    "Mode",
    "Quadrant",
    "SgtLabels",
    "SimConfig",
    "SyntheticCampaign",
    "TrainConfig",
    "UpliftSGTError",
    "classify_band",
    "classify_quadrant",
    "evaluate_all",
    "gap_closed",
    "generate_population",
    "rank_by_score",
    "run_suite",
    "select_top_k",
    "selection_size",
    "step_one",
    "step_two",
    "train_logistic",
    "uplift_two_model",
]
