"""Emit the circuit-analogue SPICE deck for the lumped master equation."""
# %%
from memstoch.circuit import load_example
from memstoch.spice import behavioral_sources, emit

circuit = load_example("fig1b_candidate")
deck = emit(circuit, p0=[1.0, 0.0, 0.0, 0.0], t_end=1000.0)

# %% Behavioural current sources between consecutive class nodes
for name, (a, b, expr) in sorted(behavioral_sources(deck.text).items()):
    print(f"{name}: {a} -> {b}: {expr}")

# %% Probe naming
for key, value in sorted(deck.node_manifest.items()):
    print(f"{key:12s} {value}")

print("\n" + "\n".join(deck.text.splitlines()[:12]) + "\n...")
