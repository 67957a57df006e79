//! Small complex-analysis helpers shared across modules.

use num_complex::Complex64;

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// `(e^z - 1) / z`, entire, stable near zero.
pub fn exprel(z: C64) -> C64 {
    if z.norm() < 0.5 {
        // Taylor series sum z^k/(k+1)!
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..30 {
            term *= z / (k as f64 + 1.0);
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `cos(sqrt(z))`, an entire function of `z`.
pub fn cos_sqrt(z: C64) -> C64 {
    z.sqrt().cos()
}

/// `sin(sqrt(z)) / sqrt(z)`, an entire function of `z`.
pub fn sinc_sqrt(z: C64) -> C64 {
    if z.norm() < 1e-2 {
        // 1 - z/6 + z^2/120 - z^3/5040 + z^4/362880
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..8 {
            let kf = k as f64;
            term *= -z / ((2.0 * kf) * (2.0 * kf + 1.0));
            sum += term;
        }
        sum
    } else {
        let w = z.sqrt();
        w.sin() / w
    }
}
