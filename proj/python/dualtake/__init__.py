"""Cross-mobility takeover prediction workbench.

Thin wrapper over the compiled extension; see the project README for the
full command-line workflow.
"""

try:
    from ._dualtake import *  # noqa: F401,F403  (installed wheel layout)
    from ._dualtake import __doc__ as _ext_doc  # noqa: F401
except ImportError:  # in-tree build: extension sits next to the package dir
    from _dualtake import *  # noqa: F401,F403

__all__ = [
    "feature_layout",
    "feature_index",
    "object_taxonomy",
    "stat4",
    "entropy",
    "gaze_region",
    "hrv",
    "scr_count",
    "znormalize",
    "fill_gaps",
    "accuracy",
    "auc",
    "roc_curve",
    "group_kfold",
    "paired_ttest",
    "hazard_schedule",
    "generate_dataset",
    "Forest",
    "Mlp",
    "TrAdaBoost",
    "beta_source",
    "run",
    "default_config",
]
