from .config import PipelineConfig
from .store import RunRecord, RunStore
from .trajectory import TrajectoryMessage, TrajectorySegment, export_trajectory, messages_from_transcript
from .run import run_pipeline, derived_run_id, SimulatedCrash

__all__ = [
    "PipelineConfig",
    "RunRecord",
    "RunStore",
    "TrajectoryMessage",
    "TrajectorySegment",
    "export_trajectory",
    "messages_from_transcript",
    "run_pipeline",
    "derived_run_id",
    "SimulatedCrash",
]
