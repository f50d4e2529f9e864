"""Numerical laboratory for boundary-bubble blow-up constructions."""

__version__ = "0.1.0"

from .geometry import HalfSpacePoint, TracelessSymmetricForm, random_traceless
from .exponents import SobolevExponents, AdmissibilityReport, exponents_for, check_admissible
from .integrals import (
    I,
    I_log,
    I_quadrature,
    RecursionReport,
    check_recursions,
    sphere_area,
    sphere_integral,
    angular_moment_quadratic,
    angular_moment_closed_form,
    integral_table,
)
from .bubble import Bubble, CutOff, U, U_gradient, U_hessian, U_scaled, kernel_j, transplant_W
from .corrector import (
    GridSpec,
    CorrectorProfile,
    CorrectorField,
    solve_corrector,
    assemble_v,
    check_orthogonality,
    dirichlet_pairing,
    pairing_report,
    pairing_per_unit_norm,
    ndim_residual_check,
    check_grid_convergence,
)
from .energy import (
    FermiMetricJet,
    MetricAtPoint,
    metric_jet_eval,
    EnergyCoefficients,
    coefficients,
    coefficients_alternate,
    phi,
    boundary_term_expansion_check,
    ansatz_residual_orders,
    energy_direct_mc,
)
from .blowup import (
    ModelBoundaryField,
    ReducedFunctional,
    SearchResult,
    BlowupFamily,
    BlowupCertificate,
    optimal_lambda,
    search,
    family,
    certify_blowup,
)

__all__ = [name for name in dir() if not name.startswith("_")]
