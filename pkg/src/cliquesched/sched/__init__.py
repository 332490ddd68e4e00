"""Black-box schedulers that run many jobs on one cluster."""

from .deterministic import schedule_deterministic
from .shuffle import schedule_shuffle
from .delay import schedule_delay, schedule_delay_doubling

__all__ = [
    "schedule_deterministic",
    "schedule_shuffle",
    "schedule_delay",
    "schedule_delay_doubling",
]
