//! Special functions, adaptive quadrature and bracketing root finders.

mod quad;
mod roots;
mod special;

pub use quad::{integrate, integrate_with_error, QuadratureSpec};
pub use roots::{bisect, bisect_iterations, golden_section_max};
pub use special::{gaussian_interval_prob, gaussian_pdf, normal_cdf, q_function};
