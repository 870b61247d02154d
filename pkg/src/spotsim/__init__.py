"""spotsim: cost-optimal spot-instance cluster autoscaling, fully offline.

Load-test characterization, spot-price forecasting, multi-objective node
allocation (brute force / greedy / NSGA-II), an elastic scaler that survives
abrupt spot terminations, and a deterministic discrete-event simulator to
verify the whole loop without touching a cloud.
"""

__version__ = "0.1.0"
