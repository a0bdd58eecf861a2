"""hapsim: desk-scale simulation of sampled-data virtual-wall haptic control.

A deterministic fixed-step co-simulation of a cable-driven haptic display:
quantized sensing and actuation, a spring-damper virtual wall rendered by a
sampled controller, a mass-drop experiment for stiffness/stability
identification, and a bilateral master-slave scenario where raycast
pre-contact detection freezes the wall position so that contact rendering
survives a delayed, jittery network link.
"""

from .analysis import (
    AnalysisError,
    FrequencySummary,
    HARDWARE_REFERENCE_MAXIMA,
    SweepCell,
    SweepConfig,
    SweepReport,
    classify_stability,
    estimate_stiffness,
    run_sweep,
    write_cells_csv,
    write_summary_csv,
    settling_time,
)
from .channel import (
    Channel,
    ChannelConfig,
    CodecError,
    InFlightMsg,
    ThetaMsg,
    decode_message,
    encode_message,
)
from .config import ConfigError, RunConfigFile, load_config, parse_config
from .experiments import (
    BilateralConfig,
    DropConfig,
    OperatorModel,
    SimClock,
    run_bilateral_experiment,
    run_drop_experiment,
)
from .geometry import (
    CollisionPlane,
    FingerChain,
    Plane,
    RigidTransform,
    Scene,
    Sphere,
    fk_fingertip,
    raycast,
    signed_distance,
    to_hand_frame,
)
from .plant import (
    ForceCalib,
    PlantParams,
    PlantState,
    QuantizerSpec,
    apply_current,
    monitor_force,
    read_encoder,
    step_plant,
)
from .precontact import PrecontactMsg, WallTracker, update_wall, world_tick
from .runlog import LogRecord, RunLog, read_log_csv, write_log_csv
from .trajectory import FingerTrajectory, TrajectoryProfile, finger_trajectory
from .wall import (
    ControllerState,
    WallParams,
    estimate_velocity,
    force_to_current,
    pullback_force,
    wall_tick,
)

__version__ = "0.1.0"
