"""Asphericity mass, modified Ricci flow and quasi-spherical extensions of axisymmetric spheres."""

from .asphericity import (
    AsphericityResult,
    CannotExtrapolateError,
    asphericity_limit,
    asphericity_partial,
    kernel_E,
)
from .extension_builder import (
    AdmissibilityReport,
    BlowUpError,
    ExtensionSolution,
    InadmissibleError,
    NoLimitError,
    PrescribedScalar,
    adm_mass,
    check_admissibility,
    leaf_mean_curvature,
    solve_lapse,
)
from .mass_reports import MassReport, e_term, hawking_mass_initial, verify_rigidity, verify_mass_bound
from .modified_ricci_flow import (
    FlowDivergenceError,
    FlowState,
    FlowTrace,
    StepSizeError,
    flow_state,
    flow_step,
    m_tensor,
    run_flow,
    solve_ricci_potential,
)
from .rotsym import MassProfile, RotSymMetric, c0_rotsym, check_profile_decay, scalar_from_profile, schwarzschild_u
from .sphere_geometry import (
    AxisymMetric,
    InvalidMetricError,
    PolarGrid,
    gauss_curvature,
    integrate,
    laplacian,
    normalize_area,
)

__version__ = "0.1.0"
