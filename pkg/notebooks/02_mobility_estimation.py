# coding: utf-8

# # Static vs mobile from cellular RSRP
#
# Consecutive 10 s windows of RSRP from six base stations are compared; the
# metric is near 1 when nothing changed and decays as the per-station mean
# shift and spread grow. Calibration fixes phi0 and sigma0 from labelled
# windows so that the metric crosses 1/2 at the class boundary.

# In[1]:

import numpy as np

from wlan_discovery.config import build_sim_config, load_config
from wlan_discovery.mobility import DEFAULT_CALIBRATION, MobilityState, calibrate, classify_trace
from wlan_discovery.sim import synthetic_traces

cfg = build_sim_config(load_config())


# In[2]:

static = synthetic_traces(cfg, False, 500, 2024)
mobile = synthetic_traces(cfg, True, 500, 2025)
cal = calibrate(static, mobile, 10.0, min_windows=500)
print(cal)
print("frozen default:", DEFAULT_CALIBRATION.phi0, DEFAULT_CALIBRATION.sigma0)


# Held-out accuracy per class.

# In[3]:

for name, traces, want in (("static", synthetic_traces(cfg, False, 500, 7001), MobilityState.STATIC),
                           ("mobile", synthetic_traces(cfg, True, 500, 7002), MobilityState.MOBILE)):
    dec = [d for tr in traces for d in classify_trace(tr, cal, 10.0)]
    print(name, len(dec), "windows, accuracy", round(np.mean([d.state is want for d in dec]), 3))
