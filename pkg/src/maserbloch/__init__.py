"""Superradiant masing of an inhomogeneously broadened spin ensemble in a lossy cavity.

Maxwell-Bloch simulation with phenomenological spectral hole filling, the
measurement protocols built on it, and the analysis of the resulting
cavity-field traces.
"""
__version__ = "0.1.0"

from .analysis import (
    PulseFeature,
    RiseFit,
    SpectrumFit,
    demodulate,
    detect_pulses,
    first_revival_delay,
    fit_lorentzian,
    fit_rise,
    hole_profile,
    power_spectrum,
    sliding_spectrum,
)
from .dynamics import (
    DriveSegment,
    HoldSegment,
    SolverOptions,
    SystemState,
    apply_instantaneous_hole,
    instantaneous_threshold,
    integrate,
    prepare_inversion,
    rhs,
)
from .ensemble import (
    EnsembleGrid,
    PhysicalParams,
    derive_spin_count,
    discretize,
    ensemble_cooperativity,
    nearest_neighbor_coupling,
    packet_cooperativity,
    paper_params,
    q_gaussian_density,
)
from .estimators import LorentzianLineFit, MaserBlochSimulator, SaturatingRiseFit
from .protocol import Preparation, Record, Scenario, SweepSpec, preset, run
from .series import TimeSeries

