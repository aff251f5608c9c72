"""
posecast - integral (soft-argmax) pose regression toolkit.

Heatmap decoding by expectation, analytic gradients, heatmap and joint losses,
pose metrics, and a desk-scale synthetic training harness.
"""

__version__ = "1.0.0"
