//! Exact-convention tensor calculus on periodic coordinate charts.

pub mod curvature;
pub mod fiber;
pub mod metric;
pub mod operator;
pub mod weyl;

pub use curvature::{
    compute_christoffel, compute_curvature, covariant_derivative, inverse_field, rough_laplacian,
    rough_laplacian_with, CurvatureBundle,
};
pub use fiber::{b_reaction, b_tensor, kulkarni_nomizu, ric_action, riem_ric_contract, FourTensor};
pub use metric::MetricField;
pub use operator::{lambda2_pairs, orthonormal_frame, transform_slots4, CurvatureOperator};
pub use weyl::{riem_from_parts, weyl_from_parts, weyl_rhs_zeroth_order};
