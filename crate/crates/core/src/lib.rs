//! Variational normal frames for tangent planes of graphs.
//!
//! A plane element is stored in the graph chart (`GrassmannElement`), a
//! Lagrangian `L(x, z, q)` assigns it an area density, and the frame
//! `v^1..v^{n-p}` built from `L` and its momenta `dL/dq` spans the directions
//! in which moving the boundary of an extremal graph leaves its action
//! stationary. The `extremal` and `variation` modules check that claim by
//! solving the Dirichlet problem and differentiating the action numerically.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dual;
pub mod error;
pub mod expr;
pub mod extremal;
pub mod gram_volume;
pub mod grassmann;
pub mod lagrangian;
pub mod normal_frame;
pub mod variation;

pub use error::{Error, Result};
pub use expr::{Expr, VarLayout};
pub use extremal::{
    action, action_with_order, el_residual, solve_dirichlet, solve_dirichlet_with, solve_graph, ActionValue, BoundaryData,
    BoxDomain, ElResidual, GridGraph, GridRecord, SolveInfo, SolveOptions,
};
pub use gram_volume::{
    basis_volume, bordered_determinant, factored_volume, gram_det, surface_element, volume, wedge_minor, MetricTensor,
};
pub use grassmann::{beta_restriction, slopes_from_basis, ChartCoordinates, ElementRecord, GrassmannElement};
pub use lagrangian::{homogenize, minkowski_check, HomogenizedLagrangian, LagrangianField, MinkowskiReport};
pub use normal_frame::{
    boundary_identity_residual, boundary_identity_residual_with, cartan_frame, frame_with_convention,
    normal_from_homogenized, normal_length, unit_normal_dual, unit_normal_primal, vector_identity_residual,
    FrameConvention, NormalFrame,
};
pub use variation::{
    boundary_elements, classify, first_variation_boundary, first_variation_fd, normality_scan, Classification,
    DeformationField, DeformationSpec, Edge, Intensity, VariationOptions, VariationProblem, VariationReport,
};
