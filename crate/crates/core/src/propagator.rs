//! Time evolution of the state under the discrete Hamiltonian
//! `H = -(hbar^2/2m) D2 + V` by two independent schemes.
//!
//! Crank-Nicolson applies the Cayley transform of the 3-point Hamiltonian
//! through a complex tridiagonal solve and needs Dirichlet walls. The
//! split-step scheme alternates exact kinetic phases in wave-number space
//! with potential phases in position space and needs a periodic lattice.
//! Keeping both error structures independent is what makes the identity
//! checks meaningful.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::PotentialField;
use crate::state::WaveFunction;
use crate::stencil::fourier_mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    CrankNicolson,
    SplitFourier,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::CrankNicolson => "crank_nicolson",
            Scheme::SplitFourier => "split_fourier",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

impl Boundary {
    pub fn name(&self) -> &'static str {
        match self {
            Boundary::Dirichlet => "dirichlet",
            Boundary::Periodic => "periodic",
        }
    }
}

/// Scheme, step size and boundary condition for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub boundary: Boundary,
}

impl PropagatorConfig {
    pub fn new(scheme: Scheme, dt: f64, boundary: Boundary) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::NonpositiveTimeStep(dt));
        }
        let required = match scheme {
            Scheme::CrankNicolson => Boundary::Dirichlet,
            Scheme::SplitFourier => Boundary::Periodic,
        };
        if boundary != required {
            return Err(Error::SchemeBoundaryMismatch {
                scheme: scheme.name(),
                required: required.name(),
                got: boundary.name(),
            });
        }
        Ok(PropagatorConfig {
            scheme,
            dt,
            boundary,
        })
    }
}

/// Reusable stepper; owns its scratch buffers so that concurrent runs never
/// share internal state.
pub enum Propagator {
    CrankNicolson(CrankNicolson),
    SplitFourier(SplitFourier),
}

impl Propagator {
    pub fn new(config: &PropagatorConfig, grid: &Arc<Grid>, v: &PotentialField) -> Result<Self> {
        match config.scheme {
            Scheme::CrankNicolson => Ok(Propagator::CrankNicolson(CrankNicolson::new(
                grid, v, config.dt,
            )?)),
            Scheme::SplitFourier => Ok(Propagator::SplitFourier(SplitFourier::new(
                grid, v, config.dt,
            )?)),
        }
    }

    pub fn step(&mut self, psi: &WaveFunction) -> Result<WaveFunction> {
        match self {
            Propagator::CrankNicolson(p) => p.step(psi),
            Propagator::SplitFourier(p) => p.step(psi),
        }
    }
}

/// Cayley-transform stepper: `psi' = (1 + i H dt/2hbar)^-1 (1 - i H dt/2hbar) psi`
/// over the interior points, with the walls pinned to zero.
pub struct CrankNicolson {
    grid: Arc<Grid>,
    dt: f64,
    /// Diagonal of `A = 1 + i dt/(2 hbar) H` over interior points.
    a_diag: Vec<Complex64>,
    /// Off-diagonal of `A` (constant).
    a_off: Complex64,
    scratch_rhs: Vec<Complex64>,
    scratch_c: Vec<Complex64>,
}

impl CrankNicolson {
    pub fn new(grid: &Arc<Grid>, v: &PotentialField, dt: f64) -> Result<Self> {
        if dt == 0.0 || !dt.is_finite() {
            return Err(Error::NonpositiveTimeStep(dt));
        }
        if v.v.len() != grid.n_points {
            return Err(Error::SampleCountMismatch {
                got: v.v.len(),
                expected: grid.n_points,
            });
        }
        let m = grid.n_points - 2;
        let kin = grid.hbar * grid.hbar / (grid.mass * grid.dx * grid.dx);
        let half = Complex64::new(0.0, 0.5 * dt / grid.hbar);
        let a_diag: Vec<Complex64> = (0..m)
            .map(|j| Complex64::new(1.0, 0.0) + half * (kin + v.v[j + 1]))
            .collect();
        let a_off = half * (-0.5 * kin);
        Ok(CrankNicolson {
            grid: Arc::clone(grid),
            dt,
            a_diag,
            a_off,
            scratch_rhs: vec![Complex64::default(); m],
            scratch_c: vec![Complex64::default(); m],
        })
    }

    pub fn step(&mut self, psi: &WaveFunction) -> Result<WaveFunction> {
        let n = self.grid.n_points;
        if psi.samples.len() != n {
            return Err(Error::SampleCountMismatch {
                got: psi.samples.len(),
                expected: n,
            });
        }
        let m = n - 2;
        let u = &psi.samples;
        // rhs = B psi with B = conj(A) on the interior (walls contribute zero).
        for j in 0..m {
            let left = if j == 0 { Complex64::default() } else { u[j] };
            let right = if j + 1 == m {
                Complex64::default()
            } else {
                u[j + 2]
            };
            let b_diag = self.a_diag[j].conj();
            let b_off = self.a_off.conj();
            self.scratch_rhs[j] = b_diag * u[j + 1] + b_off * (left + right);
        }
        solve_tridiagonal_constant_off(
            &self.a_diag,
            self.a_off,
            &mut self.scratch_rhs,
            &mut self.scratch_c,
        )?;
        let mut samples = vec![Complex64::default(); n];
        samples[1..n - 1].copy_from_slice(&self.scratch_rhs);
        Ok(WaveFunction {
            grid: Arc::clone(&self.grid),
            samples,
            time: psi.time + self.dt,
        })
    }
}

/// Thomas solve for a tridiagonal system with constant off-diagonal.
/// The Cayley matrix has unit real part on the diagonal, so pivots stay
/// bounded away from zero for physical potentials.
fn solve_tridiagonal_constant_off(
    diag: &[Complex64],
    off: Complex64,
    rhs: &mut [Complex64],
    scratch_c: &mut [Complex64],
) -> Result<()> {
    let m = diag.len();
    let mut denom = diag[0];
    if denom.norm() < 1e-300 {
        return Err(Error::TridiagonalBreakdown {
            row: 0,
            pivot: denom.norm(),
        });
    }
    scratch_c[0] = off / denom;
    rhs[0] /= denom;
    for j in 1..m {
        denom = diag[j] - off * scratch_c[j - 1];
        if denom.norm() < 1e-300 || !denom.norm().is_finite() {
            return Err(Error::TridiagonalBreakdown {
                row: j,
                pivot: denom.norm(),
            });
        }
        scratch_c[j] = off / denom;
        rhs[j] = (rhs[j] - off * rhs[j - 1]) / denom;
    }
    for j in (0..m - 1).rev() {
        let next = rhs[j + 1];
        rhs[j] -= scratch_c[j] * next;
    }
    Ok(())
}

/// Strang splitting `exp(-iV dt/2hbar) exp(-iT dt/hbar) exp(-iV dt/2hbar)`
/// with the kinetic phase exact in wave-number space.
pub struct SplitFourier {
    grid: Arc<Grid>,
    dt: f64,
    half_potential: Vec<Complex64>,
    /// Kinetic phase factors with the inverse-FFT normalization folded in.
    kinetic: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    fft_scratch: Vec<Complex64>,
}

impl SplitFourier {
    pub fn new(grid: &Arc<Grid>, v: &PotentialField, dt: f64) -> Result<Self> {
        if dt == 0.0 || !dt.is_finite() {
            return Err(Error::NonpositiveTimeStep(dt));
        }
        if v.v.len() != grid.n_points {
            return Err(Error::SampleCountMismatch {
                got: v.v.len(),
                expected: grid.n_points,
            });
        }
        let n = grid.n_points;
        let period = grid.period();
        let half_potential: Vec<Complex64> = v
            .v
            .iter()
            .map(|&vi| Complex64::from_polar(1.0, -vi * dt / (2.0 * grid.hbar)))
            .collect();
        let scale = 1.0 / n as f64;
        let kinetic: Vec<Complex64> = (0..n)
            .map(|j| {
                let k = fourier_mode(j, n, period);
                let t = grid.hbar * grid.hbar * k * k / (2.0 * grid.mass);
                Complex64::from_polar(scale, -t * dt / grid.hbar)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        Ok(SplitFourier {
            grid: Arc::clone(grid),
            dt,
            half_potential,
            kinetic,
            fft,
            ifft,
            scratch: vec![Complex64::default(); n],
            fft_scratch: vec![Complex64::default(); scratch_len],
        })
    }

    pub fn step(&mut self, psi: &WaveFunction) -> Result<WaveFunction> {
        let n = self.grid.n_points;
        if psi.samples.len() != n {
            return Err(Error::SampleCountMismatch {
                got: psi.samples.len(),
                expected: n,
            });
        }
        self.scratch.copy_from_slice(&psi.samples);
        for (s, h) in self.scratch.iter_mut().zip(&self.half_potential) {
            *s *= h;
        }
        self.fft
            .process_with_scratch(&mut self.scratch, &mut self.fft_scratch);
        for (s, k) in self.scratch.iter_mut().zip(&self.kinetic) {
            *s *= k;
        }
        self.ifft
            .process_with_scratch(&mut self.scratch, &mut self.fft_scratch);
        for (s, h) in self.scratch.iter_mut().zip(&self.half_potential) {
            *s *= h;
        }
        Ok(WaveFunction {
            grid: Arc::clone(&self.grid),
            samples: self.scratch.clone(),
            time: psi.time + self.dt,
        })
    }
}

/// Single Crank-Nicolson step; builds the solver on the fly.
pub fn step_crank_nicolson(
    psi: &WaveFunction,
    v: &PotentialField,
    dt: f64,
) -> Result<WaveFunction> {
    CrankNicolson::new(&psi.grid, v, dt)?.step(psi)
}

/// Single split-step; builds the stepper on the fly. Negative `dt` runs the
/// exact inverse of the forward step.
pub fn step_split_fourier(
    psi: &WaveFunction,
    v: &PotentialField,
    dt: f64,
) -> Result<WaveFunction> {
    SplitFourier::new(&psi.grid, v, dt)?.step(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{eval_potential, PotentialSpec};
    use crate::state::{gaussian_packet, normalize, plane_wave, WaveFunction};
    use std::f64::consts::TAU;

    #[test]
    fn config_rejects_mismatched_boundary() {
        assert!(matches!(
            PropagatorConfig::new(Scheme::SplitFourier, 0.1, Boundary::Dirichlet),
            Err(Error::SchemeBoundaryMismatch { .. })
        ));
        assert!(matches!(
            PropagatorConfig::new(Scheme::CrankNicolson, 0.1, Boundary::Periodic),
            Err(Error::SchemeBoundaryMismatch { .. })
        ));
        assert!(matches!(
            PropagatorConfig::new(Scheme::CrankNicolson, -0.1, Boundary::Dirichlet),
            Err(Error::NonpositiveTimeStep(_))
        ));
    }

    #[test]
    fn crank_nicolson_preserves_norm_per_step() {
        let grid = Arc::new(Grid::natural(-10.0, 10.0, 512).unwrap());
        let v = eval_potential(&PotentialSpec::Harmonic { omega: 1.0 }, &grid).unwrap();
        let psi = gaussian_packet(&grid, 1.0, 0.8, 0.5).unwrap().psi;
        let stepped = step_crank_nicolson(&psi, &v, 1e-3).unwrap();
        assert!((stepped.norm_sq() - 1.0).abs() < 1e-12);
        assert!((stepped.time - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn crank_nicolson_applies_cayley_factor_to_discrete_eigenvector() {
        // u_i = sin(pi x_i) is an exact eigenvector of the 3-point box
        // Hamiltonian; one CN step must multiply it by the unit-modulus
        // rational factor and leave |u| untouched.
        let n = 257;
        let grid = Arc::new(Grid::natural(0.0, 1.0, n).unwrap());
        let v = eval_potential(&PotentialSpec::BoxWell, &grid).unwrap();
        let samples: Vec<f64> = (0..n).map(|i| (std::f64::consts::PI * grid.x(i)).sin()).collect();
        let psi = normalize(&WaveFunction::from_real(Arc::clone(&grid), &samples, 0.0).unwrap())
            .unwrap();
        let dt = 1e-2;
        let energy = (1.0 - (std::f64::consts::PI * grid.dx).cos()) / (grid.dx * grid.dx);
        let factor = (Complex64::new(1.0, -0.5 * dt * energy))
            / (Complex64::new(1.0, 0.5 * dt * energy));
        let stepped = step_crank_nicolson(&psi, &v, dt).unwrap();
        let mut max_err: f64 = 0.0;
        for i in 0..n {
            let expect = psi.samples[i] * factor;
            max_err = max_err.max((stepped.samples[i] - expect).norm());
        }
        assert!(max_err < 1e-12, "Cayley factor mismatch {max_err}");
        for i in 0..n {
            assert!(
                (stepped.samples[i].norm() - psi.samples[i].norm()).abs() < 1e-13,
                "modulus changed at {i}"
            );
        }
    }

    #[test]
    fn split_step_applies_exact_dispersion_to_plane_wave() {
        let n = 128;
        let x_max = TAU * (n as f64 - 1.0) / n as f64;
        let grid = Arc::new(Grid::natural(0.0, x_max, n).unwrap());
        let v = eval_potential(&PotentialSpec::Free, &grid).unwrap();
        let psi = plane_wave(&grid, 2.0).unwrap();
        let stepped = step_split_fourier(&psi, &v, 0.1).unwrap();
        // omega = k^2/2 = 2, so one step multiplies by exp(-0.2 i).
        let factor = Complex64::from_polar(1.0, -0.2);
        for i in 0..n {
            let expect = psi.samples[i] * factor;
            assert!(
                (stepped.samples[i] - expect).norm() < 1e-12,
                "dispersion phase off at {i}"
            );
        }
    }

    #[test]
    fn split_step_is_reversible() {
        let grid = Arc::new(Grid::natural(-12.0, 12.0, 256).unwrap());
        let v = eval_potential(&PotentialSpec::Free, &grid).unwrap();
        let psi = gaussian_packet(&grid, 0.0, 1.0, 1.5).unwrap().psi;
        let forward = step_split_fourier(&psi, &v, 0.05).unwrap();
        let back = step_split_fourier(&forward, &v, -0.05).unwrap();
        for i in 0..grid.n_points {
            assert!((back.samples[i] - psi.samples[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn split_step_preserves_norm() {
        let grid = Arc::new(Grid::natural(-12.0, 12.0, 512).unwrap());
        let v = eval_potential(&PotentialSpec::Harmonic { omega: 1.0 }, &grid).unwrap();
        let mut psi = gaussian_packet(&grid, 1.0, 0.9, 0.0).unwrap().psi;
        let mut prop = SplitFourier::new(&grid, &v, 5e-3).unwrap();
        for _ in 0..200 {
            psi = prop.step(&psi).unwrap();
        }
        assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
        assert!((psi.time - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tridiagonal_solver_recovers_known_solution() {
        let m = 64;
        let diag: Vec<Complex64> = (0..m)
            .map(|j| Complex64::new(2.0 + 0.01 * j as f64, 0.3))
            .collect();
        let off = Complex64::new(-0.7, 0.1);
        let x_true: Vec<Complex64> = (0..m)
            .map(|j| Complex64::new((j as f64 * 0.1).sin(), (j as f64 * 0.2).cos()))
            .collect();
        let mut rhs = vec![Complex64::default(); m];
        for j in 0..m {
            let mut acc = diag[j] * x_true[j];
            if j > 0 {
                acc += off * x_true[j - 1];
            }
            if j + 1 < m {
                acc += off * x_true[j + 1];
            }
            rhs[j] = acc;
        }
        let mut scratch = vec![Complex64::default(); m];
        solve_tridiagonal_constant_off(&diag, off, &mut rhs, &mut scratch).unwrap();
        for j in 0..m {
            assert!((rhs[j] - x_true[j]).norm() < 1e-11, "solve off at {j}");
        }
    }
}
