from .base import (
    ALGORITHMS,
    EpochError,
    LearnerState,
    Proposal,
    get_learner,
    initial_state,
    run_learner,
    step_epoch,
)
from .schedules import alpha_ne_uniform, gamma_falcon, gamma_pmo_lb
