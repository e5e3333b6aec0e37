"""Simulation and fitting tools for rare-earth spin ensembles coupled to
superconducting coplanar resonators."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402
from .spin_hamiltonian import (  # noqa: E402
    InteractionTensor,
    SpinSystem,
    build_hamiltonian,
    c2_subclass,
    diagonalize,
    effective_g,
    spin_operators,
    transitions,
)
from .cavity_model import (  # noqa: E402
    CavityParams,
    CouplingGeometry,
    EnsembleTransition,
    detuning,
    s21_trace,
    single_spin_coupling,
    spin_linewidth,
    spins_needed,
    total_linewidth,
)
from .thermal import ThermalPoint, extrapolate_zero_T, g_coll_at_temperature, polarization  # noqa: E402
from .fitting import FieldSweep, FitModelSpec, fit, initial_guess, jacobian, model_fwhm  # noqa: E402
