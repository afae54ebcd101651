from .selection import (
    ExperimentConfig,
    ExperimentSummary,
    RunRecord,
    optimal_baseline,
    random_baseline,
    run_selection_experiment,
    select_architecture,
    summarize_records,
)
from .study import (
    DESK_WIDTHS,
    LR_GRID,
    StudyRecord,
    best_epoch,
    desk_study_archs,
    mnist_study_splits,
    run_mnist_study,
    train_mlp,
)

__all__ = [
    "DESK_WIDTHS",
    "ExperimentConfig",
    "ExperimentSummary",
    "LR_GRID",
    "RunRecord",
    "StudyRecord",
    "best_epoch",
    "desk_study_archs",
    "mnist_study_splits",
    "optimal_baseline",
    "random_baseline",
    "run_mnist_study",
    "run_selection_experiment",
    "select_architecture",
    "summarize_records",
    "train_mlp",
]
