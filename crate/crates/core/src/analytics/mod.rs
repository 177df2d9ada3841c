//! Closed forms, the integer-moment recursion, the stability criterion and
//! the integral-equation fixed points for intensities `(lambda, 1)`.

mod fixed_point;
mod moments;
mod spectral;
mod stability;

pub use fixed_point::{extinction_profile, laplace_profile, FixedPointOptions, GridFunction};
pub use moments::{
    check_moment_order, mean_n, moment_n, moment_polys, moment_threshold, second_moment_n,
    third_moment_n, MomentPair, MomentPoly,
};
pub use spectral::{gamma_exponent, spectral, SpectralPair};
pub use stability::{classify_stability, StabilityVerdict, Verdict, STABILITY_TOL};
