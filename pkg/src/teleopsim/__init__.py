"""Deterministic bilateral-teleoperation simulator for a slip-prone UGV.

A haptic master device drives a differential-drive vehicle over soft
terrain through an emulated lossy/delayed network.  Delay compensation is
pluggable: a conventional model-free predictor or a physics-informed LSTM
trained with a delay-differential-equation residual loss.  The harness
runs the ideal / delayed / predicted cases, generates training data, and
computes the open- and closed-loop evaluation metrics.
"""

__version__ = "0.1.0"

SAMPLE_DT = 0.1  # outer loop / logging period (10 Hz)
INNER_DT = 0.01  # internal integration step (100 Hz)

COUPLING_VARS = ("x_mv", "x_momega", "f_ev", "f_eomega")
