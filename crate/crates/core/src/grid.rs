use crate::error::{Error, Result};

/// Minimum number of points for the spatial lattice.
pub const MIN_POINTS: usize = 8;

/// Uniform 1-D spatial lattice together with the physical constants that
/// scale the Hamiltonian.
///
/// `x_i = x_min + i * dx` for `i in 0..n_points`, with
/// `dx = (x_max - x_min) / (n_points - 1)` so the last point reproduces
/// `x_max` up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub dx: f64,
    pub hbar: f64,
    pub mass: f64,
}

impl Grid {
    /// Build a lattice over `[x_min, x_max]` with `n_points >= 8` samples.
    pub fn new(x_min: f64, x_max: f64, n_points: usize, hbar: f64, mass: f64) -> Result<Self> {
        if !(x_max > x_min) {
            return Err(Error::DegenerateDomain { x_min, x_max });
        }
        if n_points < MIN_POINTS {
            return Err(Error::TooFewPoints {
                got: n_points,
                min: MIN_POINTS,
            });
        }
        if !(hbar > 0.0) {
            return Err(Error::NonpositiveConstant {
                name: "hbar",
                value: hbar,
            });
        }
        if !(mass > 0.0) {
            return Err(Error::NonpositiveConstant {
                name: "mass",
                value: mass,
            });
        }
        let dx = (x_max - x_min) / (n_points as f64 - 1.0);
        Ok(Grid {
            x_min,
            x_max,
            n_points,
            dx,
            hbar,
            mass,
        })
    }

    /// Natural units: hbar = mass = 1.
    pub fn natural(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        Self::new(x_min, x_max, n_points, 1.0, 1.0)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    /// All sample positions.
    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Period of the lattice when used with periodic boundary conditions:
    /// the point after `x_max` is identified with `x_min`.
    #[inline]
    pub fn period(&self) -> f64 {
        self.n_points as f64 * self.dx
    }

    /// True when two grids share the same lattice and constants to within
    /// floating-point identity.
    pub fn same_lattice(&self, other: &Grid) -> bool {
        self == other
    }
}

/// Construct a grid; alias matching the operation vocabulary used by the
/// scenario layer.
pub fn make_grid(x_min: f64, x_max: f64, n_points: usize, hbar: f64, mass: f64) -> Result<Grid> {
    Grid::new(x_min, x_max, n_points, hbar, mass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dx_matches_closed_form() {
        let g = Grid::natural(-10.0, 10.0, 2001).unwrap();
        assert!((g.dx / 0.01 - 1.0).abs() < 1e-15, "dx = {}", g.dx);

        let g = Grid::natural(0.0, 1.0, 8).unwrap();
        assert!((g.dx - 1.0 / 7.0).abs() < 1e-16);
    }

    #[test]
    fn last_point_reproduces_x_max() {
        for &(a, b, n) in &[(-10.0, 10.0, 2001usize), (0.0, 1.0, 4096), (-3.5, 7.25, 513)] {
            let g = Grid::natural(a, b, n).unwrap();
            let last = g.x(n - 1);
            let tol = 4.0 * f64::EPSILON * (b - a).abs().max(b.abs());
            assert!(
                (last - b).abs() <= tol,
                "last point {last} vs x_max {b} (diff {})",
                last - b
            );
        }
    }

    #[test]
    fn rejects_degenerate_domain() {
        assert!(matches!(
            Grid::natural(0.0, 0.0, 100),
            Err(Error::DegenerateDomain { .. })
        ));
        assert!(matches!(
            Grid::natural(1.0, -1.0, 100),
            Err(Error::DegenerateDomain { .. })
        ));
    }

    #[test]
    fn rejects_too_few_points() {
        assert!(matches!(
            Grid::natural(0.0, 1.0, 7),
            Err(Error::TooFewPoints { got: 7, min: 8 })
        ));
    }

    #[test]
    fn rejects_nonpositive_constants() {
        assert!(matches!(
            Grid::new(0.0, 1.0, 100, 0.0, 1.0),
            Err(Error::NonpositiveConstant { name: "hbar", .. })
        ));
        assert!(matches!(
            Grid::new(0.0, 1.0, 100, 1.0, -2.0),
            Err(Error::NonpositiveConstant { name: "mass", .. })
        ));
    }

    #[test]
    fn period_exceeds_span_by_one_step() {
        let g = Grid::natural(0.0, 1.0, 11).unwrap();
        assert!((g.period() - 1.1).abs() < 1e-12);
    }
}
