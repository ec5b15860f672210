//! Gaussian special functions, evaluated in `f64`.

use libm::erfc;
use statrs::function::erf::erf_inv;

use crate::scalar::Real;

/// Standard normal CDF.
pub fn normal_cdf<T: Real>(z: T) -> T {
    let z = z.as_f64();
    T::lit(0.5 * erfc(-z / std::f64::consts::SQRT_2))
}

/// `Φ(b) − Φ(a)` for `a ≤ b`, using the complementary function in the upper
/// tail so small masses far from the mean keep their relative accuracy.
pub fn normal_interval_mass<T: Real>(a: T, b: T) -> T {
    let (a, b) = (a.as_f64(), b.as_f64());
    let s = std::f64::consts::SQRT_2;
    let mass = if a >= 0.0 {
        0.5 * (erfc(a / s) - erfc(b / s))
    } else if b <= 0.0 {
        0.5 * (erfc(-b / s) - erfc(-a / s))
    } else {
        1.0 - 0.5 * (erfc(-a / s) + erfc(b / s))
    };
    T::lit(mass.max(0.0))
}

/// Inverse standard normal CDF for `u ∈ (0, 1)`.
pub fn normal_quantile(u: f64) -> f64 {
    std::f64::consts::SQRT_2 * erf_inv(2.0 * u - 1.0)
}
