# coding: utf-8

# # Density sweep against the closed forms
#
# A few replications per density with oracle mobility, so the simulated
# channel counts can be compared directly with the analytic ones.

# In[1]:

from dataclasses import replace

from wlan_discovery.config import build_sim_config, load_config
from wlan_discovery.sim import compare_analytical, run_sweep

cfg = replace(build_sim_config(load_config()), oracle_mobility=True)


# In[2]:

rep = run_sweep(cfg, [1e-5, 5e-5, 1e-4, 2e-4], ["3gpp_assisted", "gps_assisted", "wlan_aware"], replications=5)
for r in rep.rows:
    print(f"{r.lam:8.0e} {r.scheme:14s} {r.mean_channels:6.2f} +- {r.se_channels:4.2f}  {r.mean_power:6.1f} mW")


# In[3]:

for v in compare_analytical(rep, 0.10):
    print(f"{v.lam:8.0e} {v.scheme:14s} sim={v.simulated:.3f} closed={v.analytic:.3f} dev={v.deviation:.1%}")
