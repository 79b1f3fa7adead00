"""Lyapunov-guided multi-instance reaching: controller, simulator, datasets."""

__version__ = "0.1.0"

from .arbitration import ArbitratorState, Selection, momentum_update, select, should_grasp
from .controller import (
    AxialGoals,
    ClfParams,
    ControlOutput,
    DiscreteGoals,
    GoalSet,
    UnionGoals,
    clf_gradient,
    clf_value,
    resolve_goal,
    transform_goalset,
    velocity_control,
)
from .geometry import (
    DEFAULT_NORM_WEIGHT,
    Pose,
    Twist,
    hat,
    proj_se3_k,
    rot_axis_angle,
    vee,
    weighted_frob_dist_sq,
)
from .kinematics import (
    DhChain,
    TwistChain,
    identity6_chain,
    load_chain,
    solve_joint_velocity,
    ur5_chain,
)
from .losses import ctrl_loss, seg_loss
from .perception import (
    CameraModel,
    GridLabels,
    GridSpec,
    NoiseParams,
    ProposalGrid,
    footprint_cells,
    noisy_proposals,
    oracle_proposals,
    project_point,
    render_labels,
)
from .scene import (
    ObjectCategory,
    PerturbationEvent,
    Scene,
    SceneInstance,
    SceneSampleConfig,
    Workspace,
    apply_event,
    builtin_categories,
    sample_initial_joints,
    sample_scene,
)
from .simulator import (
    EpisodeConfig,
    EpisodeOutcome,
    StepRecord,
    run_batch,
    run_episode,
)
