"""Dissipative preparation of a distant two-atom entangled state in coupled cavities.

Two Lambda atoms sit in two photon-hopping cavities; three lasers per atom
pump every ground state except ``|T,00> = (|01,00> + |10,00>)/sqrt(2)``,
and cavity loss plus spontaneous emission funnel the population into it.
"""

__version__ = "0.1.0"

from .hilbert import BasisLabel, HilbertSpace, annihilator, atom_op, build_space
from .model import (
    ConfigurationError,
    LaserFrequencies,
    SystemParams,
    default_laser_frequencies,
    h_al_lab,
    h_nl,
    h_rotating,
    weak_excitation_check,
)
from .spectrum import analytic_spectrum, numeric_spectrum, verify_spectrum
from .transitions import coupling_coefficients, suppression_ratio, target_detunings, transition_table
from .dynamics import (
    IntegrationError,
    IntegratorSettings,
    dissipators,
    evolve,
    lindblad_rhs,
    make_context,
    steady_state_reach,
)
from .experiments import (
    cooperativity_to_rates,
    fidelity_target,
    ground_populations,
    robustness,
    run_fig5,
    sweep_fig3,
    sweep_fig4a,
    sweep_fig4b,
)
