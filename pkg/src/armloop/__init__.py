"""armloop: human-in-the-loop waypoint programming for a simulated 6-DOF arm.

Pipeline: a semantic scene plus a natural-language instruction become a
candidate waypoint trajectory (language-model replay or the deterministic
reference planner), the candidate is validated against reach, collision,
and IK constraints, a human previews/edits/approves it, and the approved
program executes on a simulated controller over a text wire protocol.
"""

from .animation import (
    AnimationClip,
    ClipParseError,
    FrameClip,
    KeyframeTrack,
    build_animation_prompt,
    frames_to_clip,
    parse_frame_format,
    parse_track_format,
    sample,
)
from .kinematics import (
    IkConfig,
    IkSolution,
    JointConfig,
    JointDescriptor,
    KinematicChain,
    clamp_to_limits,
    fk,
    ik,
    load_chain,
    reachable,
)
from .orchestrator import (
    LlmReply,
    ModelConfig,
    ParseFailure,
    PromptBundle,
    ReplayClient,
    build_prompt,
    parse_waypoint_reply,
    request_waypoints,
    resolve_targets,
    summarize_scene,
)
from .planner import (
    Provenance,
    Trajectory,
    ValidationReport,
    Waypoint,
    apply_edit,
    generate_arc_waypoints,
    validate,
)
from .robolink import (
    ControllerServer,
    RobotScript,
    RobotState,
    SimulatedController,
    TcpRobotLink,
    emit_script,
    parse_script,
)
from .scene import (
    Aabb,
    ReachabilitySphere,
    Role,
    Scene,
    SceneObject,
    Vec3,
    load_scene,
    serialize_scene,
    top_center,
)
from .service import PlanSession, SessionEngine, SessionStatus, TrajectoryPlanner

__version__ = "0.1.0"
