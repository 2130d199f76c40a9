"""Simulator for single-photon emission from a cavity-enhanced
biexciton-exciton cascade, built on a polaron master equation with
regression-theorem photon correlation functions."""

__version__ = "0.1.0"

from .params import (SimConfig, QDParams, CavityParams, PulseSpec, PhononParams,
                     FilterSpec, NumericsParams, PhysicalConstants, VModeTreatment,
                     InitialState, derive_energies, polaron_rescale, load_config,
                     config_hash, HBAR, KB)
from .phonon import (spectral_density, displacement_factor, phi, tabulate_kernel,
                     green_functions, cavity_feeding_rate, PhononKernel)
from .hilbert import SpaceLayout, OperatorSet, layout_for, build_operators, expectation
from .liouvillian import build_context, RHSContext
from .evolve import integrate, run_evolution, StepControl, Trajectory
from .correlations import qrt_correlator, g1, g2_general, g2_pop, QRTEngine, TwoTimeGrid
from .metrics import (MetricsReport, emission_probability, purity_g2,
                      indistinguishability, concurrence, spectrum_from_ftau)
from . import analytic
from .runner import run_point, run_sweep, SweepSpec
