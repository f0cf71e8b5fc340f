from .net import SimNetwork
from .node import PROFILE_PRESETS, Node, NodeProfile, resolve_profile
from .rng import Rng
from .scheduler import RunResult, Scheduler, SimEvent, ms_to_us, us_to_ms
