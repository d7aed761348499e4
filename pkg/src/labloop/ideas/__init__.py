from .types import (
    DIMENSIONS,
    DEFAULT_WEIGHTS,
    CallLedger,
    Idea,
    Provenance,
    SearchConfig,
    SearchRecord,
    make_seed,
)
from .scoring import composite, rank_to_scores, weakest_dimension
from .search import (
    EisResult,
    batch_rank,
    combine_children,
    improve_children,
    run_eis,
    sample_parent_pairs,
    select_survivors,
)

__all__ = [
    "DIMENSIONS",
    "DEFAULT_WEIGHTS",
    "CallLedger",
    "Idea",
    "Provenance",
    "SearchConfig",
    "SearchRecord",
    "make_seed",
    "composite",
    "rank_to_scores",
    "weakest_dimension",
    "EisResult",
    "batch_rank",
    "combine_children",
    "improve_children",
    "run_eis",
    "sample_parent_pairs",
    "select_survivors",
]
