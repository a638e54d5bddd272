"""Perceptron theory of winner-take-all readouts."""
from .capability import Answers, capability
from .channel import ChannelMoments, channel_batch, scalar_channel, scalar_channel_mc
from .moments import ModelParams, analytic_curve, analytic_moments, measure_moments, moments_from_scores
from .mvn import OrthantResult, orthant_probability
from .perceptron import (
    FullPrediction,
    MomentStatsFull,
    MomentStatsReduced,
    predict_full,
    predict_independent,
    predict_iid,
    predict_iid_array,
)

__all__ = [
    "Answers", "capability", "ChannelMoments", "channel_batch", "scalar_channel", "scalar_channel_mc",
    "ModelParams", "analytic_curve", "analytic_moments", "measure_moments", "moments_from_scores", "OrthantResult",
    "orthant_probability", "FullPrediction", "MomentStatsFull", "MomentStatsReduced", "predict_full",
    "predict_independent", "predict_iid", "predict_iid_array",
]
