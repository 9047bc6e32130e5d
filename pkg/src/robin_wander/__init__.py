"""Numerical laboratory for the Robin Laplacian with a coefficient vanishing
linearly at one boundary point of the half-disk.

Subpackages cover the graded mesh (geometry), the angular eigenproblem
(transverse), the entire radial kernel (radial), the semi-analytic spectra
of the self-adjoint extensions (extensions), the regularized FEM
eigensolver (fem), the epsilon-sweep orchestration (sweep), plots and the
command-line front door (plots, cli).
"""

from .extensions import (
    DerivativeCheck,
    EigenvalueRecord,
    ExtensionOracle,
    ExtensionSpectrum,
    ScatteringData,
    SingularBasis,
    SingularWave,
    calibrate_c_norm,
    derivative_check,
    extension_eigenvalues,
    flux_symplectic,
    reflection_theta,
    secular_mode0,
    singular_amplitude,
    singular_basis,
)
from .fem import (
    OperatorPair,
    RobinProfile,
    SpectralResult,
    assemble,
    assemble_neumann,
    extract_in_out,
    inertia_below,
    solve_window,
    write_coo,
)
from .geometry import (
    HalfDiskMesh,
    abscissa_of_gamma1_point,
    build_half_disk_mesh,
    mesh_from_json,
    mesh_to_json,
    validate_mesh,
)
from .plots import emit_plot
from .radial import KernelValue, RadialKernelParams, kernel_P, kernel_PQ, kernel_Q
from .sweep import (
    CoverageReport,
    EpsGrid,
    MeshParams,
    OffsetFit,
    SweepTable,
    check_log_periodicity,
    coverage_report,
    fit_offset,
    oracle_coverage,
    run_sweep,
    sweep_coverage,
)
from .transverse import (
    TransverseMode,
    TransverseSpectrum,
    boundary_residual,
    ode_residual,
    transverse_mode_eval,
    transverse_spectrum,
)

__version__ = "0.1.0"
