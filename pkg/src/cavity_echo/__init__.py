"""State-vector simulation of a photon-echo quantum memory in a single-mode cavity."""

from .dynamics import StepperConfig, ToleranceError, evolve_vectors, expectation, propagate
from .ensemble import (
    DistributionMeta,
    EnsembleSpec,
    ValidityWarning,
    check_validity,
    comb_coupling_for_gamma,
    decay_rate,
    invert_detunings,
    make_comb,
    make_degenerate,
    recurrence_time,
    reference_ensemble,
    sample_random,
)
from .protocol import (
    ProtocolEvent,
    ProtocolSchedule,
    RunContext,
    ScheduleError,
    apply_finite_pulse,
    apply_frequency_inversion,
    apply_impulsive_2pi,
    fig1_schedule,
    impulsive_equivalent,
    parse_protocol,
)
from .state_space import (
    BasisIndex,
    BasisSizeError,
    BasisState,
    HamiltonianMatrix,
    QuantumState,
    SectorMismatchError,
    SectorState,
    atomic_excitation_probability,
    build_hamiltonian,
    enumerate_basis,
    fidelity,
    field_state,
    fock_state,
    photon_amplitude,
    photon_number_distribution,
)
from .timeline import SectorEvolution, TimeSeries, run_timeline, sector_evolve

__version__ = "0.1.0"
