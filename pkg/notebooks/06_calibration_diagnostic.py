"""How far the device parameters must move to reproduce a target attractor.

The target per-class values are matched only with very small threshold
voltages; the fit is a diagnostic of the reconstructed topology, not a
recommended parameter set.
"""
# %%
import numpy as np

from memstoch.attractor import PulseSpec, calibrate, chain_attractor, chain_coefficients
from memstoch.circuit import load_example

circuit = load_example("fig1b_candidate")
pulses = PulseSpec(1.0, -1.0, 0.1, 0.1)
target = np.array([0.0189997, 3 * 0.172468, 3 * 0.144958, 0.0287214])

# %%
print("shipped params attractor", np.round(chain_attractor(chain_coefficients(circuit, pulses)).p, 5))
fitted, err = calibrate(circuit, pulses, target)
print("fitted", fitted)
print("max abs error", err)
