# coding: utf-8

# # One hour with each scheme
#
# All five schemes walk the same world and the same route (shared seed), so
# differences come only from which channels each one decides to scan.

# In[1]:

import numpy as np

from wlan_discovery.config import build_sim_config, load_config
from wlan_discovery.sim import run_replication, steady

cfg = build_sim_config(load_config())
schemes = ["conventional", "3gpp_assisted", "gps_assisted", "wlan_aware", "wlan_aware_gps"]


# In[2]:

for s in schemes:
    recs = steady(run_replication(cfg.with_scheme(s), 7), cfg.warmup_scans)
    ch = np.mean([r.n_channels for r in recs])
    disc = np.mean([r.discoveries for r in recs])
    pw = np.mean([r.power_mw for r in recs])
    print(f"{s:16s} channels={ch:6.2f} discoveries={disc:5.3f} power={pw:6.1f} mW")


# The WLAN-aware scheme's error radius grows by the distance walked and
# resets whenever a discovered WAP is closer than the current radius.

# In[3]:

recs = run_replication(cfg.with_scheme("wlan_aware"), 7)
err = np.array([r.position_error_m for r in recs])
print(np.round(err[:30], 1))
