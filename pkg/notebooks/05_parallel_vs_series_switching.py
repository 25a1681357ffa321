"""Switching-time comparison between three parallel and three series memristors."""
# %%
from memstoch.circuit import load_example
from memstoch.master import mean_switch_time_parallel, mean_switch_time_series, series_rates
from memstoch.montecarlo import first_passage
from memstoch.rates import gamma_01

parallel = load_example("parallel3")
series = load_example("series3")

# %% Closed forms
gam = gamma_01(0.25, parallel.params[0])
t_par = mean_switch_time_parallel(gam, 3)
t_ser = mean_switch_time_series(series_rates(series))
print(f"parallel <T> = {t_par:.4f} s   series <T> = {t_ser:.4f} s")

# %% Monte Carlo first passage from all-off to all-on
for name, circ, ref in (("parallel", parallel, t_par), ("series", series, t_ser)):
    fp = first_passage(circ, 0, 7, trials=5000, seed=3)
    print(f"{name:8s} MC {fp.mean:.4f} +- {fp.stderr:.4f}   closed form {ref:.4f}")
