use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Relative density below which a point is considered a node and excluded
/// from phase-derived quantities.
pub const DEFAULT_MASK_THRESHOLD: f64 = 1e-8;

/// Boundary density above which a freshly prepared packet is flagged as
/// truncated by the domain.
pub const TRUNCATION_THRESHOLD: f64 = 1e-12;

/// Complex-valued samples of the state on a grid at one instant.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    pub grid: Arc<Grid>,
    pub samples: Vec<Complex64>,
    pub time: f64,
}

impl WaveFunction {
    pub fn new(grid: Arc<Grid>, samples: Vec<Complex64>, time: f64) -> Result<Self> {
        if samples.len() != grid.n_points {
            return Err(Error::SampleCountMismatch {
                got: samples.len(),
                expected: grid.n_points,
            });
        }
        Ok(WaveFunction {
            grid,
            samples,
            time,
        })
    }

    /// Build a state from real samples (zero imaginary part).
    pub fn from_real(grid: Arc<Grid>, samples: &[f64], time: f64) -> Result<Self> {
        let complex = samples.iter().map(|&u| Complex64::new(u, 0.0)).collect();
        Self::new(grid, complex, time)
    }

    /// Discrete norm `sum |psi_i|^2 dx`.
    pub fn norm_sq(&self) -> f64 {
        self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx
    }

    /// Probability density per point.
    pub fn density(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Multiply every sample by `e^{i alpha}`.
    pub fn phase_rotated(&self, alpha: f64) -> WaveFunction {
        let rot = Complex64::from_polar(1.0, alpha);
        WaveFunction {
            grid: Arc::clone(&self.grid),
            samples: self.samples.iter().map(|c| c * rot).collect(),
            time: self.time,
        }
    }
}

/// Scale the state so the discrete norm is 1. The time stamp is preserved.
pub fn normalize(psi: &WaveFunction) -> Result<WaveFunction> {
    let n2 = psi.norm_sq();
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(Error::ZeroNorm);
    }
    let scale = 1.0 / n2.sqrt();
    Ok(WaveFunction {
        grid: Arc::clone(&psi.grid),
        samples: psi.samples.iter().map(|c| c * scale).collect(),
        time: psi.time,
    })
}

/// A normalized packet plus a flag noting whether the domain visibly
/// truncates its tails.
#[derive(Debug, Clone)]
pub struct PreparedState {
    pub psi: WaveFunction,
    pub truncated: bool,
}

/// Normalized Gaussian packet centered at `x0` with position-density
/// standard deviation `sigma` and mean wave number `k0`.
pub fn gaussian_packet(grid: &Arc<Grid>, x0: f64, sigma: f64, k0: f64) -> Result<PreparedState> {
    if !(sigma > 0.0) {
        return Err(Error::NonpositiveSigma(sigma));
    }
    let samples: Vec<Complex64> = (0..grid.n_points)
        .map(|i| {
            let x = grid.x(i);
            let envelope = (-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp();
            Complex64::from_polar(envelope, k0 * x)
        })
        .collect();
    let psi = normalize(&WaveFunction::new(Arc::clone(grid), samples, 0.0)?)?;
    let w = psi.density();
    let w_max = w.iter().cloned().fold(0.0, f64::max);
    let boundary = w[0].max(w[grid.n_points - 1]);
    Ok(PreparedState {
        truncated: boundary >= TRUNCATION_THRESHOLD * w_max,
        psi,
    })
}

/// Normalized plane wave `e^{i k0 x}` for periodic runs. `k0` should be a
/// wave number of the periodic lattice (`k0 * period = 2 pi m`); the caller
/// is responsible for commensurability.
pub fn plane_wave(grid: &Arc<Grid>, k0: f64) -> Result<WaveFunction> {
    let samples: Vec<Complex64> = (0..grid.n_points)
        .map(|i| Complex64::from_polar(1.0, k0 * grid.x(i)))
        .collect();
    normalize(&WaveFunction::new(Arc::clone(grid), samples, 0.0)?)
}

/// Modulus-phase split of a state: `psi = sqrt(w) e^{i phi}` with `phi`
/// spatially unwrapped on each contiguous run of valid points.
#[derive(Debug, Clone)]
pub struct ModulusPhaseField {
    pub w: Vec<f64>,
    pub phi: Vec<f64>,
    /// True where the density is above the node threshold.
    pub valid: Vec<bool>,
}

impl ModulusPhaseField {
    /// Indices `(start, end)` of maximal contiguous valid runs, end exclusive.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        valid_runs(&self.valid)
    }
}

pub(crate) fn valid_runs(valid: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &v) in valid.iter().enumerate() {
        match (v, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, valid.len()));
    }
    runs
}

/// Wrap an angle into `(-pi, pi]`.
#[inline]
pub fn wrap_to_pi(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Split a state into density and unwrapped phase.
///
/// Points with `w < mask_threshold * max(w)` are masked. On every contiguous
/// unmasked run the phase is unwrapped left to right by adding integer
/// multiples of 2 pi so adjacent jumps stay below pi in magnitude; the run is
/// anchored at its leftmost point, which keeps its raw complex argument.
pub fn decompose(psi: &WaveFunction, mask_threshold: f64) -> ModulusPhaseField {
    let n = psi.samples.len();
    let w: Vec<f64> = psi.density();
    let w_max = w.iter().cloned().fold(0.0, f64::max);
    let floor = mask_threshold * w_max;
    let valid: Vec<bool> = w.iter().map(|&wi| wi >= floor && wi > 0.0).collect();

    let raw: Vec<f64> = psi.samples.iter().map(|c| c.arg()).collect();
    let mut phi = raw.clone();
    for (start, end) in valid_runs(&valid) {
        for i in start + 1..end {
            phi[i] = phi[i - 1] + wrap_to_pi(raw[i] - raw[i - 1]);
        }
    }
    let _ = n;
    ModulusPhaseField { w, phi, valid }
}
