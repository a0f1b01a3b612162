"""Real-time detection of pushing patches in crowded-entrance camera streams.

Pipeline: sample a keyframe from the stream every couple of seconds, crop
the entrance region, estimate the dense displacement field against the
previous keyframe, render it as a color-wheel motion map, split the map
into a patch grid, classify each patch, and emit/archive annotation masks.
"""

__version__ = "0.1.0"
