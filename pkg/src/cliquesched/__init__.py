"""Round-synchronous all-to-all clique simulator with black-box job scheduling.

The model: n machines, one word per ordered machine pair per round.  Jobs are
node-slot protocols (init / send_step / receive_and_compute); schedulers run
many jobs on one clique while preserving every job's exact message transcript.
"""

from .cluster import Cluster, RoundLedger
from .collectives import multiple_broadcast, nary_search
from .constants import DEFAULT_CONSTANTS, merged_constants
from .metrics import (
    BoundCheck,
    JobProfile,
    Metrics,
    SetProfile,
    check_bound,
    combine_profiles,
    metrics_from_profile,
    outputs_digest,
)
from .model import (
    Blob,
    ConfigError,
    InvariantViolation,
    IoViolation,
    Job,
    JobProtocol,
    MemoryEfficientProtocol,
    Output,
    ProtocolError,
    RngStream,
    RoutingOverflow,
    SchedulingError,
    payload_words,
)
from .runtime import RunResult, drive_job, measure_profile, run_naive
from .sched import (
    schedule_delay,
    schedule_delay_doubling,
    schedule_deterministic,
    schedule_shuffle,
)

__version__ = "1.0.0"

__all__ = [
    "Blob", "BoundCheck", "Cluster", "ConfigError", "DEFAULT_CONSTANTS",
    "InvariantViolation", "IoViolation", "Job", "JobProfile", "JobProtocol",
    "MemoryEfficientProtocol", "Metrics", "Output", "ProtocolError",
    "RngStream", "RoundLedger", "RoutingOverflow", "RunResult", "SetProfile",
    "SchedulingError", "check_bound", "combine_profiles", "drive_job",
    "measure_profile", "merged_constants", "metrics_from_profile",
    "multiple_broadcast", "nary_search", "outputs_digest", "payload_words",
    "run_naive", "schedule_delay", "schedule_delay_doubling",
    "schedule_deterministic", "schedule_shuffle",
]
