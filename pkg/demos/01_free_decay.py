"""
Free decay of a cavity photon into a broadened ensemble
=======================================================

A single photon starts in the cavity and leaks into 400 atoms whose
resonances are spread evenly over a width of 100. The coupling is picked so
the collective decay rate is 1.
"""

import numpy as np

from cavity_echo import ProtocolSchedule, fock_state, reference_ensemble, run_timeline
from cavity_echo.oracle import compare

ens = reference_ensemble()
schedule = ProtocolSchedule.from_events([], 4.0)
series = run_timeline(fock_state(ens.n_atoms, 1), ens, schedule, sample_dt=0.05)

# photon amplitude against the exponential law
for t in (0.5, 1.0, 2.0, 3.0):
    k = series.at(t)
    print(f"t = {t:3.1f}  |c_ph| = {abs(series.cph[k]):.5f}  e^-t = {np.exp(-t):.5f}")

# the comparison helper knows where the exponential law is expected to hold
result = compare(series.t, np.abs(series.cph), np.exp(-series.t), ens)
print(result.describe())
