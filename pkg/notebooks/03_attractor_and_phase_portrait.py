"""Period-averaged attractor of the class chain and the period-end phase portrait."""
# %%
import numpy as np

from memstoch.attractor import (PulseSpec, averaged_attractor, chain_attractor, chain_coefficients,
                                phase_portrait, residual)
from memstoch.circuit import load_example
from memstoch.master import Lumping

circuit = load_example("fig1b_candidate")
pulses = PulseSpec(1.0, -1.0, 0.1, 0.1)

# %% Chain coefficients and the closed-form attractor
coeffs = chain_coefficients(circuit, pulses)
print("a =", np.round(coeffs.a, 6), " b =", np.round(coeffs.b, 6))
p = chain_attractor(coeffs)
print("chain attractor   ", np.round(p.p, 6))
full = averaged_attractor(circuit, pulses)
print("averaged (lumped) ", np.round(Lumping.popcount(3).matrix() @ full.p, 6))

# %% Scaling both pulse widths leaves the attractor unchanged
for c in (0.1, 10.0):
    q = chain_attractor(chain_coefficients(circuit, pulses.scaled(c))).p
    print(f"x{c:<5} max change {np.max(np.abs(q - p.p)):.1e}")

# %% Phase portrait: every start converges to the same point
starts = ([1, 0, 0, 0], [0, 0, 0, 1], [0.2, 0.8, 0, 0])
for s0, series in zip(starts, phase_portrait(circuit, pulses, starts, 1000)):
    print(s0, "->", np.round(series[-1], 5), f"residual {residual(coeffs, series[-1]):.1e}")
