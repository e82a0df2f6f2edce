"""Spectral toolkit for impedance-type domain decomposition of the eddy-current problem."""
from .modal_analysis import (
    AmplificationRecord,
    ImpedanceParams,
    ModalCoefficients,
    PhysicalParams,
    ResonantImpedanceError,
    Variant,
    admissible,
    amplification,
    asymptotic_amplification,
    consistency_check,
    consistency_factor,
    modal_coefficients,
    spectrum,
    t_c,
    t_i,
    two_sided_asymptote,
)
from .param_search import Objective, SearchSpec, objective, scan
from .spectral_ddm import (
    InterfaceState,
    IterationLog,
    SourceSpec,
    conductor_solve,
    exchange,
    field_eval,
    insulator_solve,
    monolithic_solve,
    run,
)
from .special_functions import BesselTable, sph_bessel_asymptotic, sph_bessel_table

__version__ = "0.1.0"
