"""Event-driven Monte Carlo occupancy compared with the master-equation time average."""
# %%
import numpy as np

from memstoch.circuit import load_example
from memstoch.master import Lumping, delta, integrate
from memstoch.montecarlo import McConfig, simulate

circuit = load_example("fig1b_candidate")
lump = Lumping.popcount(3)

# %% Master equation: average over the last 100 s of a long run
tr = integrate(circuit, None, delta(0, 4), 3000.0, record_dt=0.1, lumping=lump)
me = tr.time_average(2900.0)

# %% Monte Carlo: several independent trials, batch-means standard errors
est = simulate(circuit, McConfig(2e4, 1e3, seed=1, trials=4), lumping=lump, threads=2)
for label, a, b, s in zip(lump.labels, me, est.class_occupancy, est.class_stderr):
    print(f"{label}: ME {a:.4f}  MC {b:.4f} +- {s:.4f}  z={(b - a) / s:+.2f}")
print("events:", est.events)
