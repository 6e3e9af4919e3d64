//! Closed-form oracle for the freely evolving Gaussian packet.
//!
//! Everything here is evaluated from analytic formulas only, so the lattice
//! pipeline can be checked against an independent route. The self-test
//! below differentiates the closed forms numerically to confirm that the
//! oracle itself satisfies the continuum identities before it is trusted.

#![allow(dead_code)]

use num_complex::Complex64;

/// Freely evolving Gaussian packet with density standard deviation `sigma`,
/// initial center `x0` and boost `k0`.
#[derive(Debug, Clone, Copy)]
pub struct FreeGaussian {
    pub sigma: f64,
    pub x0: f64,
    pub k0: f64,
    pub hbar: f64,
    pub mass: f64,
}

impl FreeGaussian {
    pub fn natural(sigma: f64, x0: f64, k0: f64) -> Self {
        FreeGaussian {
            sigma,
            x0,
            k0,
            hbar: 1.0,
            mass: 1.0,
        }
    }

    /// Dimensionless spreading parameter `tau = hbar t / (2 m sigma^2)`.
    pub fn tau(&self, t: f64) -> f64 {
        self.hbar * t / (2.0 * self.mass * self.sigma * self.sigma)
    }

    /// Packet center `x0 + hbar k0 t / m`.
    pub fn center(&self, t: f64) -> f64 {
        self.x0 + self.hbar * self.k0 * t / self.mass
    }

    /// Density variance `sigma^2 (1 + tau^2)`.
    pub fn variance(&self, t: f64) -> f64 {
        let tau = self.tau(t);
        self.sigma * self.sigma * (1.0 + tau * tau)
    }

    /// Exact wave function, phase-matched to the `gaussian_packet`
    /// constructor at `t = 0`.
    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let tau = self.tau(t);
        let beta = Complex64::new(s2, s2 * tau);
        let a = x - self.x0;
        let numerator = Complex64::new(
            -a * a,
            4.0 * s2 * self.k0 * (a - s2 * self.k0 * tau),
        );
        let prefactor = (2.0 * std::f64::consts::PI * s2).powf(-0.25)
            * (Complex64::new(s2, 0.0) / beta).sqrt();
        let global = Complex64::from_polar(1.0, self.k0 * self.x0);
        prefactor * (numerator / (4.0 * beta)).exp() * global
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        let var = self.variance(t);
        let u = x - self.center(t);
        (-u * u / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
    }

    /// Momentum field `hbar [k0 + tau u / (2 sigma^2 (1 + tau^2))]`.
    pub fn momentum(&self, x: f64, t: f64) -> f64 {
        let tau = self.tau(t);
        let u = x - self.center(t);
        let s2 = self.sigma * self.sigma;
        self.hbar * (self.k0 + tau * u / (2.0 * s2 * (1.0 + tau * tau)))
    }

    pub fn wavenumber(&self, x: f64, t: f64) -> f64 {
        self.momentum(x, t) / self.hbar
    }

    /// Wave kinetic contribution `(hbar^2/4m)(1/S^2 - u^2/(2 S^4))` with
    /// `S^2` the instantaneous density variance.
    pub fn wave_kinetic(&self, x: f64, t: f64) -> f64 {
        let var = self.variance(t);
        let u = x - self.center(t);
        self.hbar * self.hbar / (4.0 * self.mass) * (1.0 / var - u * u / (2.0 * var * var))
    }

    pub fn kinetic(&self, x: f64, t: f64) -> f64 {
        let p = self.momentum(x, t);
        p * p / (2.0 * self.mass) + self.wave_kinetic(x, t)
    }

    /// Local total energy; the potential is zero.
    pub fn energy(&self, x: f64, t: f64) -> f64 {
        self.kinetic(x, t)
    }

    pub fn flux(&self, x: f64, t: f64) -> f64 {
        self.density(x, t) * self.momentum(x, t) / self.mass
    }

    /// Energy-flux function `Q = w (p^2/m + hbar^2 / (4 m S^2))`.
    pub fn q(&self, x: f64, t: f64) -> f64 {
        let p = self.momentum(x, t);
        let var = self.variance(t);
        self.density(x, t)
            * (p * p / self.mass + self.hbar * self.hbar / (4.0 * self.mass * var))
    }

    /// Unwrapped phase up to the constant fixed at `t = 0`.
    pub fn phase(&self, x: f64, t: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let tau = self.tau(t);
        let a = x - self.x0;
        let g = (4.0 * s2 * self.k0 * (a - s2 * self.k0 * tau) + a * a * tau)
            / (4.0 * s2 * (1.0 + tau * tau));
        g - 0.5 * tau.atan() + self.k0 * self.x0
    }

    /// Frequency field `omega = -phi_t`.
    pub fn frequency(&self, x: f64, t: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let a_rate = self.hbar / (2.0 * self.mass * s2);
        let tau = self.tau(t);
        let a = x - self.x0;
        let p_coef = 4.0 * s2 * self.k0 * a;
        let r_coef = a * a - 4.0 * s2 * s2 * self.k0 * self.k0;
        let one_plus = 1.0 + tau * tau;
        let dg_dtau =
            (r_coef * (1.0 - tau * tau) - 2.0 * p_coef * tau) / (4.0 * s2 * one_plus * one_plus);
        -a_rate * (dg_dtau - 0.5 / one_plus)
    }
}

/// Largest magnitude over a slice.
pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod oracle_self_tests {
    use super::*;

    const H: f64 = 1e-5;

    fn packet() -> FreeGaussian {
        FreeGaussian::natural(1.0, 0.25, 1.5)
    }

    fn probe_points() -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        for &x in &[-3.0, -0.7, 0.0, 0.4, 1.9, 3.3] {
            for &t in &[0.0, 0.3, 1.0, 2.5] {
                pts.push((x, t));
            }
        }
        pts
    }

    #[test]
    fn oracle_density_matches_psi_modulus() {
        let g = packet();
        for (x, t) in probe_points() {
            let w = g.psi(x, t).norm_sqr();
            assert!(
                (w - g.density(x, t)).abs() < 1e-13,
                "density mismatch at ({x}, {t})"
            );
        }
    }

    #[test]
    fn oracle_phase_matches_psi_argument() {
        let g = packet();
        for (x, t) in probe_points() {
            let raw = g.psi(x, t).arg();
            let diff = (g.phase(x, t) - raw).rem_euclid(2.0 * std::f64::consts::PI);
            let dist = diff.min(2.0 * std::f64::consts::PI - diff);
            assert!(dist < 1e-10, "phase mismatch at ({x}, {t}): {dist}");
        }
    }

    #[test]
    fn oracle_momentum_is_phase_gradient() {
        let g = packet();
        for (x, t) in probe_points() {
            let grad = (g.phase(x + H, t) - g.phase(x - H, t)) / (2.0 * H);
            assert!(
                (grad - g.momentum(x, t)).abs() < 1e-8,
                "p != phi_x at ({x}, {t})"
            );
        }
    }

    #[test]
    fn oracle_frequency_is_minus_phase_rate() {
        let g = packet();
        for (x, t) in probe_points() {
            let rate = (g.phase(x, t + H) - g.phase(x, t - H)) / (2.0 * H);
            assert!(
                (-rate - g.frequency(x, t)).abs() < 1e-7,
                "omega != -phi_t at ({x}, {t})"
            );
        }
    }

    #[test]
    fn oracle_satisfies_duality_identities() {
        // hbar omega = E pointwise, for the closed forms themselves.
        let g = packet();
        for (x, t) in probe_points() {
            let lhs = g.hbar * g.frequency(x, t);
            let rhs = g.energy(x, t);
            assert!(
                (lhs - rhs).abs() < 1e-10,
                "hbar omega != E at ({x}, {t}): {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn oracle_satisfies_continuity() {
        let g = packet();
        for (x, t) in probe_points() {
            if t < 2.0 * H {
                continue;
            }
            let w_t = (g.density(x, t + H) - g.density(x, t - H)) / (2.0 * H);
            let j_x = (g.flux(x + H, t) - g.flux(x - H, t)) / (2.0 * H);
            assert!(
                (w_t + j_x).abs() < 1e-8,
                "continuity broken at ({x}, {t}): {}",
                w_t + j_x
            );
        }
    }

    #[test]
    fn oracle_satisfies_local_balance() {
        // w E_x + p j_x = Q_x with V = 0.
        let g = packet();
        for (x, t) in probe_points() {
            let e_x = (g.energy(x + H, t) - g.energy(x - H, t)) / (2.0 * H);
            let j_x = (g.flux(x + H, t) - g.flux(x - H, t)) / (2.0 * H);
            let q_x = (g.q(x + H, t) - g.q(x - H, t)) / (2.0 * H);
            let residual = g.density(x, t) * e_x + g.momentum(x, t) * j_x - q_x;
            assert!(
                residual.abs() < 1e-8,
                "local balance broken at ({x}, {t}): {residual}"
            );
        }
    }
}
