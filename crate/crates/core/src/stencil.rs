//! Centered finite-difference and spectral derivatives on the uniform lattice.
//!
//! Non-periodic endpoints have no centered stencil; those entries are filled
//! with NaN and must be excluded through the caller's validity mask.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

/// Centered first difference, O(dx^2).
pub fn centered_first(values: &[f64], dx: f64, periodic: bool) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![f64::NAN; n];
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * dx);
    }
    if periodic && n > 2 {
        out[0] = (values[1] - values[n - 1]) / (2.0 * dx);
        out[n - 1] = (values[0] - values[n - 2]) / (2.0 * dx);
    }
    out
}

/// Centered second difference, O(dx^2).
pub fn centered_second(values: &[f64], dx: f64, periodic: bool) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![f64::NAN; n];
    let inv = 1.0 / (dx * dx);
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) * inv;
    }
    if periodic && n > 2 {
        out[0] = (values[1] - 2.0 * values[0] + values[n - 1]) * inv;
        out[n - 1] = (values[0] - 2.0 * values[n - 1] + values[n - 2]) * inv;
    }
    out
}

/// Centered first difference of complex samples.
pub fn centered_first_c(values: &[Complex64], dx: f64, periodic: bool) -> Vec<Complex64> {
    let n = values.len();
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let mut out = vec![nan; n];
    let inv = 1.0 / (2.0 * dx);
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) * inv;
    }
    if periodic && n > 2 {
        out[0] = (values[1] - values[n - 1]) * inv;
        out[n - 1] = (values[0] - values[n - 2]) * inv;
    }
    out
}

/// Centered second difference of complex samples.
pub fn centered_second_c(values: &[Complex64], dx: f64, periodic: bool) -> Vec<Complex64> {
    let n = values.len();
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let mut out = vec![nan; n];
    let inv = 1.0 / (dx * dx);
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) * inv;
    }
    if periodic && n > 2 {
        out[0] = (values[1] - 2.0 * values[0] + values[n - 1]) * inv;
        out[n - 1] = (values[0] - 2.0 * values[n - 1] + values[n - 2]) * inv;
    }
    out
}

/// Signed wave number of discrete Fourier mode `j` on a lattice of `n`
/// points with period `n * dx`.
#[inline]
pub fn fourier_mode(j: usize, n: usize, period: f64) -> f64 {
    let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
    TAU * m / period
}

/// Spectral derivative of complex samples on a periodic lattice.
///
/// `order` is 1 or 2. For odd orders on even-length lattices the Nyquist
/// mode has no symmetric representative and is zeroed.
pub fn spectral_derivative_c(values: &[Complex64], period: f64, order: u32) -> Vec<Complex64> {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf = values.to_vec();
    fwd.process(&mut buf);
    for (j, b) in buf.iter_mut().enumerate() {
        let k = fourier_mode(j, n, period);
        let factor = match order {
            1 => {
                if n % 2 == 0 && j == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, k)
                }
            }
            2 => Complex64::new(-k * k, 0.0),
            _ => unreachable!("derivative order limited to 2"),
        };
        *b *= factor / n as f64;
    }
    inv.process(&mut buf);
    buf
}

/// Spectral derivative of real samples; returns the real part.
pub fn spectral_derivative(values: &[f64], period: f64, order: u32) -> Vec<f64> {
    let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spectral_derivative_c(&complex, period, order)
        .into_iter()
        .map(|c| c.re)
        .collect()
}
