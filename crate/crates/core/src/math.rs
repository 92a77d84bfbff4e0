//! Small special-function helpers shared by the channel statistics and the
//! error-probability analysis.

/// Modified Bessel function of the first kind, order 0, by ascending power
/// series. Converges to relative tolerance 1e-12 for the moderate arguments
/// (Rician factors up to ~50) used here.
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term < sum * 1e-12 {
            break;
        }
    }
    sum
}

/// Modified Bessel function of the first kind, order 1 (same series scheme).
pub fn bessel_i1(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = x / 2.0;
    let mut sum = term;
    for k in 1..200 {
        term *= q / ((k * (k + 1)) as f64);
        sum += term;
        if term.abs() < sum.abs() * 1e-12 {
            break;
        }
    }
    sum
}

/// Gaussian tail probability Q(x) = P(Z > x) for standard normal Z.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Mean of a Rician-distributed magnitude with factor `k` and second moment
/// `rho`, using the closed form in terms of I0 and I1 evaluated at k/2.
pub fn rician_magnitude_mean(k: f64, rho: f64) -> f64 {
    let e = (-k / 2.0).exp();
    0.5 * (rho * std::f64::consts::PI / (1.0 + k)).sqrt()
        * e
        * ((1.0 + k) * bessel_i0(k / 2.0) + k * bessel_i1(k / 2.0))
}
