use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Wraps an angle into `(-pi, pi]`.
pub(crate) fn wrap_phase(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    } else if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// `exp(j 2 pi freq n / fs)` computed directly so long streams do not
/// accumulate phase error.
#[inline]
pub(crate) fn rotator(freq: f64, n: u64, fs: f64) -> Complex64 {
    // Reduce the cycle count before multiplying by 2 pi to keep precision
    // for large sample indices.
    let cycles = freq * (n as f64) / fs;
    let frac = cycles - cycles.round();
    Complex64::from_polar(1.0, 2.0 * PI * frac)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap() {
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_phase(-3.0 * PI / 2.0) - PI / 2.0).abs() < 1e-12);
        assert!((wrap_phase(0.25) - 0.25).abs() < 1e-15);
        assert!((wrap_phase(PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn rotator_matches_direct() {
        for n in [0u64, 1, 17, 123_456] {
            let a = rotator(37.5, n, 8000.0);
            let b = Complex64::from_polar(1.0, 2.0 * PI * 37.5 * n as f64 / 8000.0);
            assert!((a - b).norm() < 1e-9);
        }
    }
}
