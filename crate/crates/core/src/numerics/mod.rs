//! Random streams, special functions, quadrature and quantile utilities.

pub mod quad;
pub mod quantile;
pub mod rng;
pub mod special;

pub use quad::integrate;
pub use quantile::{
    laplace_cdf, laplace_pdf, laplace_quantile, numeric_quantile, student_t4_quantile,
    student_t_cdf, PowerTailCdf, QuantileFn, QuantileKind,
};
pub use rng::{standard_normal_vector, RngStream};
pub use special::{bessel_k, erf, erfc, normal_cdf, normal_pdf};

#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}
