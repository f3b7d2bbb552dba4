"""
Several photons: the phase of the echo
======================================

A superposition of 0, 1 and 2 photons is stored with a single inversion at
gamma*tau = 3. Each photon comes back with a pi phase, so the recovered field
is close to (|0> - |1> + |2>)/sqrt(3). With only 24 atoms the two-photon
sector is not fully absorbed, which limits the overlap.
"""

import math

import numpy as np

from cavity_echo import (
    ProtocolEvent,
    ProtocolSchedule,
    comb_coupling_for_gamma,
    make_comb,
    recurrence_time,
    sector_evolve,
)

n, width = 24, 1.0
tau = 2 * math.pi * n / width / 4  # a quarter of the comb revival period
ens = make_comb(n, width, comb_coupling_for_gamma(n, width, 3.0 / tau))
print(f"tau = {tau:.3f}, revival period = {recurrence_time(ens):.3f}")

res = sector_evolve(np.ones(3) / math.sqrt(3), ens,
                    ProtocolSchedule.from_events([ProtocolEvent(tau, "J0")], 2 * tau))
for k, amp in enumerate(res.recovered_field):
    print(f"|{k}>: input {res.input_field[k].real:+.4f}  recovered {amp.real:+.4f}{amp.imag:+.4f}i  "
          f"left in atoms {res.residual_atomic[k]:.4f}")
print(f"overlap with the (-1)^n map: {res.echo_map_overlap:.4f}")
print(f"overlap with the input:      {res.input_overlap:.4f}")
