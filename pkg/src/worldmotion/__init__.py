"""World-space human-motion editing toolkit.

Decomposes motion into trajectory, orientation and action; re-edits 2D-drawn
trajectories into physically consistent 3D world-space motion; and rasterizes
depth / normal / semantic guidance-map sequences for downstream video models.
"""

__version__ = "0.1.0"
