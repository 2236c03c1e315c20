# coding: utf-8

# # Deployment and radio
#
# WAPs are dropped as an independent Poisson process per channel on an
# 800 x 1200 m torus. The nearest-WAP distance on a channel should follow
# the Rayleigh-type law 1 - exp(-rho pi r^2).

# In[1]:

import math

import numpy as np

from wlan_discovery.deployment import DEFAULT_CHANNELS, Region, generate_ppp_waps, split_density
from wlan_discovery.radio import WLAN_MODEL, d_h_threshold, distance_from_rssi, median_rssi


# In[2]:

region = Region()
waps = generate_ppp_waps(region, split_density(1e-4, DEFAULT_CHANNELS), seed=3)
print(len(waps), "WAPs, expected", 1e-4 * region.area)
print("per channel:", [int(np.sum(waps.channels == f)) for f in DEFAULT_CHANNELS])


# Empirical nearest-WAP CDF against the closed form, one world per sample.

# In[3]:

rho = 2e-5
d = np.array([generate_ppp_waps(region, {1: rho}, s).distances_from((400.0, 600.0)).min() for s in range(2000)])
for r in (50, 100, 150, 200):
    print(r, round(np.mean(d <= r), 3), round(1 - math.exp(-rho * math.pi * r * r), 3))


# ## Path loss
#
# 40 dB at 1 m, exponent 3.5, 20 dBm transmit power. The strong-signal
# threshold of -85 dBm maps to D_h, and the -90 dBm sensitivity to 100 m.

# In[4]:

print("D_h =", round(d_h_threshold(WLAN_MODEL, 20.0, -85.0), 2), "m")
print("floor distance =", round(distance_from_rssi(WLAN_MODEL, 20.0, -90.0), 2), "m")
print([round(median_rssi(WLAN_MODEL, 20.0, x), 1) for x in (1, 10, 50, 100)])
