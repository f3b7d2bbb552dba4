"""
Inversion only, and the critical delay
======================================

Without the kick the inverted ensemble re-emits a field that interferes with
what is left in the cavity. At late inversion times the echo comes back with
a pi phase. Inverting at tau_D = ln 2 / (2 gamma) gives complete destructive
interference instead: the photon is fully absorbed by 2 tau_D.
"""

import math

import numpy as np

from cavity_echo import (
    ProtocolEvent,
    ProtocolSchedule,
    comb_coupling_for_gamma,
    fock_state,
    make_comb,
    run_timeline,
)
from cavity_echo.oracle import cph_fast_absorption, cph_j0, tau_d

# a wide comb keeps gamma / W small, where the closed forms apply
ens = make_comb(1600, 400.0, comb_coupling_for_gamma(1600, 400.0, 1.0))
psi0 = fock_state(ens.n_atoms, 1)


def echo(tau):
    sched = ProtocolSchedule.from_events([ProtocolEvent(tau, "J0")], 2 * tau)
    return run_timeline(psi0, ens, sched, sample_dt=2 * tau).cph[-1].real


print("gamma*tau   simulated c_ph(2tau)   2e^(-2 gamma tau) - 1")
for gt in (0.1, 0.347, 0.7, 1.5, 3.0):
    print(f"{gt:8.3f}   {echo(gt):+12.5f}          {cph_j0(2 * gt, gt, 1.0):+10.5f}")

td = tau_d(1.0)
sched = ProtocolSchedule.from_events([ProtocolEvent(td, "J0")], 4 * td)
series = run_timeline(psi0, ens, sched, sample_dt=td / 10)
print("\nt / tau_D   |c_ph| simulated   closed form")
for x in np.arange(0.5, 4.01, 0.5):
    k = series.at(x * td)
    print(f"{x:6.1f}      {abs(series.cph[k]):.4f}            {abs(cph_fast_absorption(x * td, 1.0)):.4f}")
print(f"\natomic excitation at 2 tau_D: {series.p_atoms[series.at(2 * td)]:.5f}")
print(f"tau_D = ln2/2 = {math.log(2) / 2:.6f}")
