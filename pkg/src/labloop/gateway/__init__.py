from .base import Gateway, Message, Permutation, ProviderConfig, RankRequest, TranscriptEntry
from .mock import MockProvider, hashed_utility, pipeline_synthesizer
from .http import HttpProvider

__all__ = [
    "Gateway",
    "Message",
    "Permutation",
    "ProviderConfig",
    "RankRequest",
    "TranscriptEntry",
    "MockProvider",
    "HttpProvider",
    "hashed_utility",
    "pipeline_synthesizer",
]
