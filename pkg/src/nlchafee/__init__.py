"""Numerical laboratory for the nonlocal Chafee-Infante equation on (0, 1).

Computes equilibria (time maps + nonlocal fixed points), integrates the
spectral Galerkin semiflow, monitors Lyapunov energy and lap numbers, and
assembles the Morse-ordered heteroclinic connection graph.
"""

from .model import (
    DiffusionCoefficient,
    Nonlinearity,
    ProblemSpec,
    affine_diffusion,
    builtin_cubic,
    constant_diffusion,
    make_nonlinearity,
    table_diffusion,
    validate_assumptions,
)
from .timemap import (
    EnergyLevel,
    EquilibriumProfile,
    positive_inverse,
    profile_h1_norm_sq,
    reconstruct_profile,
    solve_energy_level,
    time_map,
)
from .equilibria import (
    BifurcationDiagram,
    EquilibriumSet,
    bifurcation_diagram,
    d_k_threshold,
    enumerate_equilibria,
    entry_ids,
    g_of_d,
    shoot,
    solve_nonlocal_fixed_points,
)
from .dynamics import (
    GalerkinState,
    Trajectory,
    classify_omega_limit,
    energy_equality_residual,
    galerkin_rhs,
    integrate,
    lap_number,
    lyapunov_energy,
)
from .stability import (
    ConnectionGraph,
    LinearizationReport,
    check_morse_order,
    linearization_matrix,
    linearization_report,
    probe_connections,
    spectrum,
)

__version__ = "0.1.0"
