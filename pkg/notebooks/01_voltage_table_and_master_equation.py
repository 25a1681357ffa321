"""Voltage table and master-equation trajectories for the three-memristor deck.

Run with ``python3 notebooks/01_voltage_table_and_master_equation.py``.
"""
# %%
import numpy as np

from memstoch.circuit import configuration_voltage_table, format_configuration, load_example
from memstoch.master import Lumping, integrate

circuit = load_example("fig1b_candidate")
lump = Lumping.popcount(3)
print(circuit)

# %% Voltage across every memristor in every configuration, for both drive levels
for v in (1.0, -1.0):
    table = configuration_voltage_table(circuit, v)
    print(f"\nsource {v:+.1f} V")
    for theta, row in enumerate(table):
        print(f"  {format_configuration(theta, 3)}  " + "  ".join(f"{x:+.4f}" for x in row))

# %% Lumped master equation from three initial class distributions
initial = {"all off": [1, 0, 0, 0], "all on": [0, 0, 0, 1], "mixed": [0.2, 0.8, 0, 0]}
for name, p0 in initial.items():
    tr = integrate(circuit, None, np.asarray(p0, float), 2000.0, record_dt=0.2, lumping=lump)
    print(f"{name:8s} final {np.round(tr.final.p, 4)}  sum error {tr.max_sum_error():.1e}")
