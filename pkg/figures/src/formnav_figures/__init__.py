"""Offline figure rendering for formnav exports."""

from .plots import (
    LEGEND_COLORS,
    PlotJob,
    SchemaError,
    follower_color,
    moving_average,
    plot_trajectories,
    plot_training_curves,
)

__all__ = [
    "LEGEND_COLORS",
    "PlotJob",
    "SchemaError",
    "follower_color",
    "moving_average",
    "plot_trajectories",
    "plot_training_curves",
]
