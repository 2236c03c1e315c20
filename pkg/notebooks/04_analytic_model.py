# coding: utf-8

# # Closed-form channel counts
#
# Every channel is in one of three regimes: a WAP within D_h (scanned every
# interval), a WAP between D_h and D_r (scanned every D1 meters) or no WAP
# within D_r but one inside the position-error reach (every D2 meters).

# In[1]:

import numpy as np

from wlan_discovery.power import analytic_curves, channel_regimes, even_params, position_error_pdf


# In[2]:

for lam in (1e-6, 1e-5, 1e-4, 5e-4):
    n1, n2, n3 = channel_regimes(even_params(lam))
    print(f"lam={lam:g}  N1={n1:.3f} N2={n2:.3f} N3={n3:.3f}")


# Low density makes the position error large, which is why the third
# regime, and with it the total, rises again as lambda falls.

# In[3]:

for lam in (1e-6, 1e-5, 1e-4):
    pdf = position_error_pdf(even_params(lam))
    print(f"lam={lam:g}  mean error={pdf.expect(lambda r: np.asarray(r)):.1f} m  atoms={pdf.truncation}")


# In[4]:

for row in analytic_curves([1e-6, 1e-5, 1e-4, 5e-4], [0.5, 1.0]):
    print(" ".join(f"{k}={v:.4g}" for k, v in row.items()))
