use crate::error::{Error, Result};
use crate::grid::Grid;

/// Catalog of supported potential shapes.
///
/// The box well is represented as `V = 0` with hard walls; the Dirichlet
/// boundary condition of the propagator supplies the confinement, which
/// keeps the exact `sin(n pi x / L)` eigenfunctions available as oracles.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Free,
    Harmonic { omega: f64 },
    BoxWell,
    Barrier { height: f64, left: f64, right: f64 },
    Linear { slope: f64 },
    Tabulated { samples: Vec<f64> },
}

impl PotentialSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            PotentialSpec::Free => "free",
            PotentialSpec::Harmonic { .. } => "harmonic",
            PotentialSpec::BoxWell => "box",
            PotentialSpec::Barrier { .. } => "barrier",
            PotentialSpec::Linear { .. } => "linear",
            PotentialSpec::Tabulated { .. } => "tabulated",
        }
    }
}

/// Potential energy and its spatial derivative sampled on a grid.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub v: Vec<f64>,
    pub v_x: Vec<f64>,
    /// True at points adjacent to a discontinuity; verification residuals
    /// exclude them.
    pub edge_flags: Vec<bool>,
}

/// Sample a potential spec on a grid. The derivative is analytic for kinds
/// with a closed form, one-sided at barrier discontinuities, and a centered
/// difference for tabulated data.
pub fn eval_potential(spec: &PotentialSpec, grid: &Grid) -> Result<PotentialField> {
    let n = grid.n_points;
    let mut edge_flags = vec![false; n];
    let (v, v_x): (Vec<f64>, Vec<f64>) = match spec {
        PotentialSpec::Free | PotentialSpec::BoxWell => (vec![0.0; n], vec![0.0; n]),
        PotentialSpec::Harmonic { omega } => {
            if !(*omega > 0.0) {
                return Err(Error::MalformedPotential(format!(
                    "harmonic frequency must be positive, got {omega}"
                )));
            }
            let v = (0..n)
                .map(|i| 0.5 * grid.mass * omega * omega * grid.x(i) * grid.x(i))
                .collect();
            let v_x = (0..n)
                .map(|i| grid.mass * omega * omega * grid.x(i))
                .collect();
            (v, v_x)
        }
        PotentialSpec::Linear { slope } => {
            let v = (0..n).map(|i| slope * grid.x(i)).collect();
            (v, vec![*slope; n])
        }
        PotentialSpec::Barrier {
            height,
            left,
            right,
        } => {
            if !(left < right) {
                return Err(Error::MalformedPotential(format!(
                    "barrier edges out of order: left {left}, right {right}"
                )));
            }
            let v: Vec<f64> = (0..n)
                .map(|i| {
                    let x = grid.x(i);
                    if x >= *left && x <= *right {
                        *height
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut v_x = vec![0.0; n];
            for i in 0..n {
                let lo = if i > 0 { v[i - 1] } else { v[i] };
                let hi = if i + 1 < n { v[i + 1] } else { v[i] };
                if lo != v[i] || hi != v[i] {
                    edge_flags[i] = true;
                    // One-sided difference taken away from the jump.
                    v_x[i] = if hi != v[i] {
                        (hi - v[i]) / grid.dx
                    } else {
                        (v[i] - lo) / grid.dx
                    };
                }
            }
            (v, v_x)
        }
        PotentialSpec::Tabulated { samples } => {
            if samples.len() != n {
                return Err(Error::TabulatedLengthMismatch {
                    got: samples.len(),
                    expected: n,
                });
            }
            let mut v_x = crate::stencil::centered_first(samples, grid.dx, false);
            // One-sided at the domain ends.
            v_x[0] = (samples[1] - samples[0]) / grid.dx;
            v_x[n - 1] = (samples[n - 1] - samples[n - 2]) / grid.dx;
            (samples.clone(), v_x)
        }
    };
    Ok(PotentialField { v, v_x, edge_flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid() -> Grid {
        Grid::natural(-4.0, 4.0, 1601).unwrap()
    }

    #[test]
    fn harmonic_closed_forms() {
        let g = grid();
        let f = eval_potential(&PotentialSpec::Harmonic { omega: 1.0 }, &g).unwrap();
        // x = 2 sits exactly on the lattice.
        let i = ((2.0 - g.x_min) / g.dx).round() as usize;
        assert!((g.x(i) - 2.0).abs() < 1e-12);
        assert!((f.v[i] - 2.0).abs() < 1e-12);
        assert!((f.v_x[i] - 2.0).abs() < 1e-12);
        // v_x = m omega^2 x at every sample.
        for j in 0..g.n_points {
            assert_eq!(f.v_x[j], g.mass * g.x(j));
        }
    }

    #[test]
    fn free_and_box_are_zero() {
        let g = grid();
        for spec in [PotentialSpec::Free, PotentialSpec::BoxWell] {
            let f = eval_potential(&spec, &g).unwrap();
            assert!(f.v.iter().all(|&v| v == 0.0));
            assert!(f.v_x.iter().all(|&v| v == 0.0));
            assert!(f.edge_flags.iter().all(|&e| !e));
        }
    }

    #[test]
    fn linear_closed_form() {
        let g = Grid::natural(0.0, 2.0, 101).unwrap();
        let f = eval_potential(&PotentialSpec::Linear { slope: 3.0 }, &g).unwrap();
        let i = 50; // x = 1
        assert!((g.x(i) - 1.0).abs() < 1e-12);
        assert!((f.v[i] - 3.0).abs() < 1e-12);
        assert!((f.v_x[i] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn barrier_flags_discontinuities() {
        let g = Grid::natural(-4.0, 4.0, 801).unwrap();
        let f = eval_potential(
            &PotentialSpec::Barrier {
                height: 5.0,
                left: -1.0,
                right: 1.0,
            },
            &g,
        )
        .unwrap();
        let flagged: Vec<usize> = (0..g.n_points).filter(|&i| f.edge_flags[i]).collect();
        assert!(!flagged.is_empty());
        for &i in &flagged {
            assert!((g.x(i).abs() - 1.0).abs() <= 2.0 * g.dx, "flag far from edge");
        }
        // Interior plateau is flat.
        let mid = g.n_points / 2;
        assert_eq!(f.v[mid], 5.0);
        assert_eq!(f.v_x[mid], 0.0);
    }

    #[test]
    fn barrier_rejects_unordered_edges() {
        let g = grid();
        assert!(matches!(
            eval_potential(
                &PotentialSpec::Barrier {
                    height: 1.0,
                    left: 2.0,
                    right: -2.0
                },
                &g
            ),
            Err(Error::MalformedPotential(_))
        ));
    }

    #[test]
    fn tabulated_requires_matching_length() {
        let g = grid();
        assert!(matches!(
            eval_potential(
                &PotentialSpec::Tabulated {
                    samples: vec![0.0; 7]
                },
                &g
            ),
            Err(Error::TabulatedLengthMismatch { got: 7, .. })
        ));
    }

    #[test]
    fn tabulated_derivative_tracks_centered_difference() {
        let g = Grid::natural(0.0, 1.0, 201).unwrap();
        let samples: Vec<f64> = (0..201).map(|i| (g.x(i)).powi(3)).collect();
        let f = eval_potential(&PotentialSpec::Tabulated { samples }, &g).unwrap();
        for i in 1..200 {
            let exact = 3.0 * g.x(i) * g.x(i);
            assert!(
                (f.v_x[i] - exact).abs() < 3.0 * g.dx * g.dx,
                "tabulated derivative off at {i}"
            );
        }
    }
}
