"""Exact multihomogeneous polynomial machinery with cone volumetrics.

The exact lane (polynomials, inner products, harmonic decomposition, the
averaging operator) runs on arbitrary-precision rationals; the numeric lane
(cone membership, Monte Carlo section estimates) runs on numpy in a frame
that is orthonormal for the sphere-integral inner product.
"""

from .bounds import (
    blekherman_bounds,
    bounds_grid,
    cone_volume_bounds,
    ratio_case_bounds,
    section_bounds,
)
from .cones import (
    PosMinResult,
    SosStatus,
    kernel_image_check,
    linear_power_kernel,
    pos_min,
    sos_feasibility,
    verify_certificate,
    verify_sos_witness,
)
from .errors import (
    DimensionCapError,
    DomainError,
    ParityError,
    ParseError,
    ShapeError,
)
from .harmonics import (
    HarmonicSplit,
    alpha_indices,
    dim_h,
    dim_h_block,
    dims_h_table,
    harmonic_basis,
    pi_decompose,
    reproducing_kernel,
    zonal_kernel,
)
from .measures import (
    GramMatrix,
    axis_moment,
    diff_ip,
    gram,
    pairing_scale,
    sphere_moment,
    usual_ip,
)
from .poly import (
    Poly,
    Shape,
    apply_D,
    block_laplacian,
    block_radius_sq,
    evaluate,
    monomial_basis,
    multiply,
    poly_from_text,
    poly_to_text,
    radial_power,
    unit_form,
)
from .transform import (
    Spectrum,
    apply_direct,
    apply_spectral,
    ball_ratio_bounds,
    det_transform,
    eigenvalue,
    funk_hecke_top_eigenvalue,
    pairing_check,
    spectrum,
)
from .volumetrics import (
    EstimateReport,
    KernelEvaluator,
    SectionFrame,
    build_section_frame,
    estimate_mu_pos,
    isotropy_check,
    kernel_profile,
    mean_width_sq,
    phi_norm_exact,
    sample_direction,
    sup_norm,
)

__version__ = "0.1.0"
