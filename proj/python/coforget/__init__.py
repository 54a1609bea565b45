"""Collective memory forgetting: decay, weighted voting, PBFT simulation."""

from ._core import (
    CoforgetError,
    ProtocolConfig,
    check_config,
    cosine_similarity,
    decay_score,
    decode_frame,
    encode_frame,
    form_vote,
    quorum_threshold,
    run_simulation,
    weighted_forget_score,
)

__all__ = [
    "CoforgetError",
    "ProtocolConfig",
    "check_config",
    "cosine_similarity",
    "decay_score",
    "decode_frame",
    "encode_frame",
    "form_vote",
    "quorum_threshold",
    "run_simulation",
    "weighted_forget_score",
]
