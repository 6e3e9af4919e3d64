//! Local observable fields extracted from the modulus and phase of the state.
//!
//! Every field of a quantity with operator `O` is the ratio
//! `Re(psi* O psi) / (psi* psi)` sampled on the lattice. The momentum and
//! kinetic fields flow through the complex moments `psi* D1 psi` and
//! `psi* D2 psi`; the wave-number and frequency fields go through the
//! unwrapped phase instead, so the two routes stay independent and their
//! agreement is a real test rather than an identity of the code.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::PotentialField;
use crate::state::{wrap_to_pi, ModulusPhaseField, WaveFunction};
use crate::stencil::{
    centered_first_c, centered_second, centered_second_c, spectral_derivative,
    spectral_derivative_c,
};

/// Identity tag of an observable field; `as_str` gives the canonical column
/// name used in field tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldLabel {
    Density,
    Phase,
    WaveNumber,
    Momentum,
    Kinetic,
    WaveKinetic,
    Energy,
    Frequency,
    Flux,
    EnergyFlux,
    Custom,
}

impl FieldLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldLabel::Density => "w",
            FieldLabel::Phase => "phi",
            FieldLabel::WaveNumber => "k",
            FieldLabel::Momentum => "p",
            FieldLabel::Kinetic => "K",
            FieldLabel::WaveKinetic => "Kw",
            FieldLabel::Energy => "E",
            FieldLabel::Frequency => "omega",
            FieldLabel::Flux => "j",
            FieldLabel::EnergyFlux => "Q",
            FieldLabel::Custom => "custom",
        }
    }

    pub fn parse(name: &str) -> Option<FieldLabel> {
        Some(match name {
            "w" => FieldLabel::Density,
            "phi" => FieldLabel::Phase,
            "k" => FieldLabel::WaveNumber,
            "p" => FieldLabel::Momentum,
            "K" => FieldLabel::Kinetic,
            "Kw" => FieldLabel::WaveKinetic,
            "E" => FieldLabel::Energy,
            "omega" => FieldLabel::Frequency,
            "j" => FieldLabel::Flux,
            "Q" => FieldLabel::EnergyFlux,
            _ => return None,
        })
    }
}

/// Derivative route for psi- and density-derivatives. The phase-based
/// wave-number and frequency fields always use finite differences of the
/// phase itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeRoute {
    #[default]
    Centered,
    Spectral,
}

/// Extraction settings shared by all field operations.
#[derive(Debug, Clone, Copy)]
pub struct FieldConfig {
    /// Relative density threshold of the node mask.
    pub mask_threshold: f64,
    /// Wrap stencils around the lattice seam.
    pub periodic: bool,
    pub route: DerivativeRoute,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            mask_threshold: crate::state::DEFAULT_MASK_THRESHOLD,
            periodic: false,
            route: DerivativeRoute::Centered,
        }
    }
}

impl FieldConfig {
    pub fn periodic(mask_threshold: f64) -> Self {
        FieldConfig {
            mask_threshold,
            periodic: true,
            route: DerivativeRoute::Centered,
        }
    }

    pub fn dirichlet(mask_threshold: f64) -> Self {
        FieldConfig {
            mask_threshold,
            periodic: false,
            route: DerivativeRoute::Centered,
        }
    }
}

/// Real-valued samples of a local observable with a per-point validity mask.
/// Invalid entries hold NaN except where a field defines a natural limit
/// (the flux vanishes with the density).
#[derive(Debug, Clone)]
pub struct ObservableField {
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
    pub label: FieldLabel,
}

impl ObservableField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest magnitude over valid points.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|(_, &v)| v)
            .map(|(x, _)| x.abs())
            .fold(0.0, f64::max)
    }

    /// Largest pointwise difference to another field over jointly valid points.
    pub fn linf_gap(&self, other: &ObservableField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(self.valid.iter().zip(&other.valid))
            .filter(|(_, (&a, &b))| a && b)
            .map(|((x, y), _)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// (max - min) / |mean| over valid points.
    pub fn relative_spread(&self) -> f64 {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut count = 0usize;
        for (x, &v) in self.values.iter().zip(&self.valid) {
            if v {
                min = min.min(*x);
                max = max.max(*x);
                sum += x;
                count += 1;
            }
        }
        if count == 0 {
            return f64::NAN;
        }
        let mean = sum / count as f64;
        (max - min) / mean.abs()
    }
}

/// Shared lattice moments of a single state.
pub(crate) struct Primitives {
    pub w: Vec<f64>,
    pub density_valid: Vec<bool>,
    pub stencil_valid: Vec<bool>,
    /// `psi*_i (D1 psi)_i`
    pub g1: Vec<Complex64>,
    /// `psi*_i (D2 psi)_i`
    pub g2: Vec<Complex64>,
}

pub(crate) fn primitives(psi: &WaveFunction, cfg: &FieldConfig) -> Primitives {
    let n = psi.samples.len();
    let grid = &psi.grid;
    let w = psi.density();
    let w_max = w.iter().cloned().fold(0.0, f64::max);
    let floor = cfg.mask_threshold * w_max;
    let density_valid: Vec<bool> = w.iter().map(|&wi| wi >= floor && wi > 0.0).collect();

    let (d1, d2) = match cfg.route {
        DerivativeRoute::Centered => (
            centered_first_c(&psi.samples, grid.dx, cfg.periodic),
            centered_second_c(&psi.samples, grid.dx, cfg.periodic),
        ),
        DerivativeRoute::Spectral => (
            spectral_derivative_c(&psi.samples, grid.period(), 1),
            spectral_derivative_c(&psi.samples, grid.period(), 2),
        ),
    };

    let stencil_valid: Vec<bool> = (0..n)
        .map(|i| {
            if !density_valid[i] {
                return false;
            }
            match cfg.route {
                DerivativeRoute::Spectral => true,
                DerivativeRoute::Centered => {
                    let (im, ip) = if cfg.periodic {
                        ((i + n - 1) % n, (i + 1) % n)
                    } else if i == 0 || i + 1 == n {
                        return false;
                    } else {
                        (i - 1, i + 1)
                    };
                    density_valid[im] && density_valid[ip]
                }
            }
        })
        .collect();

    let g1: Vec<Complex64> = psi
        .samples
        .iter()
        .zip(&d1)
        .map(|(s, d)| s.conj() * d)
        .collect();
    let g2: Vec<Complex64> = psi
        .samples
        .iter()
        .zip(&d2)
        .map(|(s, d)| s.conj() * d)
        .collect();

    Primitives {
        w,
        density_valid,
        stencil_valid,
        g1,
        g2,
    }
}

fn masked_field(n: usize, label: FieldLabel) -> ObservableField {
    ObservableField {
        values: vec![f64::NAN; n],
        valid: vec![false; n],
        label,
    }
}

/// Momentum field `p = hbar Im(psi* psi_x) / w`.
pub fn momentum_field(psi: &WaveFunction, cfg: &FieldConfig) -> ObservableField {
    let pr = primitives(psi, cfg);
    momentum_from_primitives(psi, &pr)
}

pub(crate) fn momentum_from_primitives(psi: &WaveFunction, pr: &Primitives) -> ObservableField {
    let hbar = psi.grid.hbar;
    let mut out = masked_field(pr.w.len(), FieldLabel::Momentum);
    for i in 0..pr.w.len() {
        if pr.stencil_valid[i] {
            out.values[i] = hbar * pr.g1[i].im / pr.w[i];
            out.valid[i] = true;
        }
    }
    out
}

/// Wave-number field: centered difference of the spatially unwrapped phase.
/// This route never touches the complex samples, so it is independent of
/// `momentum_field`.
pub fn wavenumber_field(mp: &ModulusPhaseField, grid: &Grid, cfg: &FieldConfig) -> ObservableField {
    let n = mp.phi.len();
    let mut out = masked_field(n, FieldLabel::WaveNumber);
    let two_dx = 2.0 * grid.dx;
    for i in 0..n {
        if !mp.valid[i] {
            continue;
        }
        let (im, ip, seam) = if i > 0 && i + 1 < n {
            (i - 1, i + 1, false)
        } else if cfg.periodic {
            ((i + n - 1) % n, (i + 1) % n, true)
        } else {
            continue;
        };
        if !(mp.valid[im] && mp.valid[ip]) {
            continue;
        }
        // Across the periodic seam the unwrap offsets of the two runs are
        // unrelated; a wrapped local difference is the consistent choice.
        let delta = if seam {
            wrap_to_pi(mp.phi[ip] - mp.phi[im])
        } else {
            mp.phi[ip] - mp.phi[im]
        };
        out.values[i] = delta / two_dx;
        out.valid[i] = true;
    }
    out
}

/// Frequency field from a symmetric pair of decompositions at `t - dt` and
/// `t + dt`: `omega = -(phi_next - phi_prev) / (2 dt)` with the per-point
/// difference re-wrapped into `(-pi, pi]`.
///
/// Rejects when any valid point sits at the wrap boundary, which means the
/// phase advanced by about pi or more between the brackets and the sign of
/// the correction is ambiguous; the caller must reduce dt.
pub fn frequency_field(
    prev: &ModulusPhaseField,
    next: &ModulusPhaseField,
    dt: f64,
) -> Result<ObservableField> {
    let n = prev.phi.len();
    if next.phi.len() != n {
        return Err(Error::SampleCountMismatch {
            got: next.phi.len(),
            expected: n,
        });
    }
    let guard = std::f64::consts::PI * (1.0 - 1e-9);
    let mut out = masked_field(n, FieldLabel::Frequency);
    for i in 0..n {
        if !(prev.valid[i] && next.valid[i]) {
            continue;
        }
        let delta = wrap_to_pi(next.phi[i] - prev.phi[i]);
        if delta.abs() >= guard {
            return Err(Error::UnwrapGuard {
                index: i,
                dphi: delta.abs(),
            });
        }
        out.values[i] = -delta / (2.0 * dt);
        out.valid[i] = true;
    }
    Ok(out)
}

/// Kinetic energy field and its wave contribution.
///
/// `K = Re(psi* p^2 psi) / (2 m w)` with the 3-point second difference,
/// and `K_w = K - p^2/2m` so the decomposition holds bit-exactly.
pub fn kinetic_field(psi: &WaveFunction, cfg: &FieldConfig) -> (ObservableField, ObservableField) {
    let pr = primitives(psi, cfg);
    kinetic_from_primitives(psi, &pr)
}

pub(crate) fn kinetic_from_primitives(
    psi: &WaveFunction,
    pr: &Primitives,
) -> (ObservableField, ObservableField) {
    let n = pr.w.len();
    let grid = &psi.grid;
    let coeff = -grid.hbar * grid.hbar / (2.0 * grid.mass);
    let mut k = masked_field(n, FieldLabel::Kinetic);
    let mut kw = masked_field(n, FieldLabel::WaveKinetic);
    for i in 0..n {
        if pr.stencil_valid[i] {
            let kin = coeff * pr.g2[i].re / pr.w[i];
            let p = grid.hbar * pr.g1[i].im / pr.w[i];
            k.values[i] = kin;
            kw.values[i] = kin - p * p / (2.0 * grid.mass);
            k.valid[i] = true;
            kw.valid[i] = true;
        }
    }
    (k, kw)
}

/// Wave kinetic contribution computed from density derivatives alone:
/// `K_w = (hbar^2/4m) [ (w_x/w)^2 / 2 - w_xx/w ]`.
///
/// Independent of the psi-route in `kinetic_field`; the two agree at
/// stencil order away from nodes and serve as mutual checks.
pub fn wave_kinetic_from_density(psi: &WaveFunction, cfg: &FieldConfig) -> ObservableField {
    let pr = primitives(psi, cfg);
    let grid = &psi.grid;
    let n = pr.w.len();
    let (w_x, w_xx) = match cfg.route {
        DerivativeRoute::Centered => (
            crate::stencil::centered_first(&pr.w, grid.dx, cfg.periodic),
            centered_second(&pr.w, grid.dx, cfg.periodic),
        ),
        DerivativeRoute::Spectral => (
            spectral_derivative(&pr.w, grid.period(), 1),
            spectral_derivative(&pr.w, grid.period(), 2),
        ),
    };
    let coeff = grid.hbar * grid.hbar / (4.0 * grid.mass);
    let mut out = masked_field(n, FieldLabel::WaveKinetic);
    for i in 0..n {
        if pr.stencil_valid[i] {
            let r = w_x[i] / pr.w[i];
            out.values[i] = coeff * (0.5 * r * r - w_xx[i] / pr.w[i]);
            out.valid[i] = true;
        }
    }
    out
}

/// Local energy field `E = K + V`.
pub fn energy_field(psi: &WaveFunction, v: &PotentialField, cfg: &FieldConfig) -> ObservableField {
    let pr = primitives(psi, cfg);
    energy_from_primitives(psi, v, &pr)
}

pub(crate) fn energy_from_primitives(
    psi: &WaveFunction,
    v: &PotentialField,
    pr: &Primitives,
) -> ObservableField {
    let (k, _) = kinetic_from_primitives(psi, pr);
    let mut out = k;
    out.label = FieldLabel::Energy;
    for i in 0..out.values.len() {
        if out.valid[i] {
            out.values[i] += v.v[i];
        }
    }
    out
}

/// Probability flux density `j = w p / m = hbar Im(psi* psi_x) / m`.
///
/// The product form needs no division by `w`, so it extends continuously
/// through node-masked points; entries without a derivative stencil are 0,
/// which is exact at Dirichlet walls.
pub fn flux_field(psi: &WaveFunction, cfg: &FieldConfig) -> ObservableField {
    let pr = primitives(psi, cfg);
    flux_from_primitives(psi, &pr)
}

pub(crate) fn flux_from_primitives(psi: &WaveFunction, pr: &Primitives) -> ObservableField {
    let n = pr.w.len();
    let scale = psi.grid.hbar / psi.grid.mass;
    let mut out = ObservableField {
        values: vec![0.0; n],
        valid: vec![true; n],
        label: FieldLabel::Flux,
    };
    for i in 0..n {
        if pr.g1[i].im.is_finite() {
            out.values[i] = scale * pr.g1[i].im;
        }
    }
    out
}

/// Energy-flux-like field whose spatial derivative closes the local balance:
/// `Q = p^2 w / m + (hbar^2/4m)(w_x^2/w - w_xx)`.
///
/// `w_x` is taken as `2 Re(psi* psi_x)` (the same stencil route as the
/// momentum field), `w_xx` as the centered second difference of the density.
pub fn q_field(psi: &WaveFunction, cfg: &FieldConfig) -> ObservableField {
    let pr = primitives(psi, cfg);
    q_from_primitives(psi, &pr, cfg)
}

pub(crate) fn q_from_primitives(
    psi: &WaveFunction,
    pr: &Primitives,
    cfg: &FieldConfig,
) -> ObservableField {
    let grid = &psi.grid;
    let n = pr.w.len();
    let w_xx = match cfg.route {
        DerivativeRoute::Centered => centered_second(&pr.w, grid.dx, cfg.periodic),
        DerivativeRoute::Spectral => spectral_derivative(&pr.w, grid.period(), 2),
    };
    let h2m = grid.hbar * grid.hbar / grid.mass;
    let mut out = masked_field(n, FieldLabel::EnergyFlux);
    for i in 0..n {
        if pr.stencil_valid[i] {
            let im = pr.g1[i].im;
            let wx = 2.0 * pr.g1[i].re;
            out.values[i] =
                h2m * (im * im) / pr.w[i] + 0.25 * h2m * (wx * wx / pr.w[i] - w_xx[i]);
            out.valid[i] = true;
        }
    }
    out
}

/// Linear differential operator `O = c0(x) + c1(x) d/dx + c2(x) d^2/dx^2`
/// with complex coefficient samples.
#[derive(Debug, Clone, Default)]
pub struct OperatorStencil {
    pub c0: Option<Vec<Complex64>>,
    pub c1: Option<Vec<Complex64>>,
    pub c2: Option<Vec<Complex64>>,
}

impl OperatorStencil {
    /// Pure multiplication operator.
    pub fn multiply(values: Vec<Complex64>) -> Self {
        OperatorStencil {
            c0: Some(values),
            ..Default::default()
        }
    }

    /// The identity.
    pub fn identity(n: usize) -> Self {
        Self::multiply(vec![Complex64::new(1.0, 0.0); n])
    }

    /// Position operator `x`.
    pub fn position(grid: &Grid) -> Self {
        Self::multiply(
            (0..grid.n_points)
                .map(|i| Complex64::new(grid.x(i), 0.0))
                .collect(),
        )
    }

    /// Momentum operator `-i hbar d/dx`.
    pub fn momentum(grid: &Grid) -> Self {
        OperatorStencil {
            c1: Some(vec![Complex64::new(0.0, -grid.hbar); grid.n_points]),
            ..Default::default()
        }
    }

    /// Hamiltonian `-(hbar^2/2m) d^2/dx^2 + V(x)`.
    pub fn hamiltonian(grid: &Grid, v: &PotentialField) -> Self {
        OperatorStencil {
            c0: Some(v.v.iter().map(|&vi| Complex64::new(vi, 0.0)).collect()),
            c2: Some(vec![
                Complex64::new(-grid.hbar * grid.hbar / (2.0 * grid.mass), 0.0);
                grid.n_points
            ]),
            ..Default::default()
        }
    }

    fn order(&self) -> u32 {
        if self.c2.is_some() {
            2
        } else if self.c1.is_some() {
            1
        } else {
            0
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        for c in [&self.c0, &self.c1, &self.c2].into_iter().flatten() {
            if c.len() != n {
                return Err(Error::StencilLengthMismatch {
                    got: c.len(),
                    expected: n,
                });
            }
        }
        Ok(())
    }
}

/// Generic local field `O(x) = Re(psi* O psi) / (psi* psi)`.
pub fn local_field(
    psi: &WaveFunction,
    op: &OperatorStencil,
    cfg: &FieldConfig,
) -> Result<ObservableField> {
    let n = psi.samples.len();
    op.check(n)?;
    let grid = &psi.grid;
    let pr = primitives(psi, cfg);

    let d1 = if op.c1.is_some() {
        Some(match cfg.route {
            DerivativeRoute::Centered => centered_first_c(&psi.samples, grid.dx, cfg.periodic),
            DerivativeRoute::Spectral => spectral_derivative_c(&psi.samples, grid.period(), 1),
        })
    } else {
        None
    };
    let d2 = if op.c2.is_some() {
        Some(match cfg.route {
            DerivativeRoute::Centered => centered_second_c(&psi.samples, grid.dx, cfg.periodic),
            DerivativeRoute::Spectral => spectral_derivative_c(&psi.samples, grid.period(), 2),
        })
    } else {
        None
    };

    let needs_stencil = op.order() > 0;
    let mut out = masked_field(n, FieldLabel::Custom);
    for i in 0..n {
        let ok = if needs_stencil {
            pr.stencil_valid[i]
        } else {
            pr.density_valid[i]
        };
        if !ok {
            continue;
        }
        let mut acted = Complex64::default();
        if let Some(c0) = &op.c0 {
            acted += c0[i] * psi.samples[i];
        }
        if let (Some(c1), Some(d1)) = (&op.c1, &d1) {
            acted += c1[i] * d1[i];
        }
        if let (Some(c2), Some(d2)) = (&op.c2, &d2) {
            acted += c2[i] * d2[i];
        }
        out.values[i] = (psi.samples[i].conj() * acted).re / pr.w[i];
        out.valid[i] = true;
    }
    Ok(out)
}

/// Weighted average of a field, `<O> = sum O_i w_i dx` over valid points,
/// with trapezoid-consistent half weights at the open edges of each valid
/// run. On a fully valid periodic ring there are no open edges and every
/// point carries the full weight.
#[derive(Debug, Clone, Copy)]
pub struct Expectation {
    pub value: f64,
    /// Probability carried by points excluded from the sum.
    pub masked_probability: f64,
    /// Set when more than 1e-6 probability was excluded.
    pub warning: bool,
}

/// Threshold on excluded probability above which an expectation is flagged.
pub const EXPECTATION_MASS_WARNING: f64 = 1e-6;

pub fn expectation(
    field: &ObservableField,
    mp: &ModulusPhaseField,
    grid: &Grid,
    cfg: &FieldConfig,
) -> Result<Expectation> {
    let n = grid.n_points;
    if field.values.len() != n || mp.w.len() != n {
        return Err(Error::SampleCountMismatch {
            got: field.values.len(),
            expected: n,
        });
    }
    let combined: Vec<bool> = field
        .valid
        .iter()
        .zip(&mp.valid)
        .map(|(&a, &b)| a && b)
        .collect();
    let open = |i: usize, step_back: bool| -> bool {
        // True when the neighbor on that side is missing.
        if cfg.periodic {
            let j = if step_back { (i + n - 1) % n } else { (i + 1) % n };
            !combined[j]
        } else if step_back {
            i == 0 || !combined[i - 1]
        } else {
            i + 1 == n || !combined[i + 1]
        }
    };
    let mut value = 0.0;
    let mut covered = 0.0;
    for i in 0..n {
        if !combined[i] {
            continue;
        }
        let mut weight = grid.dx;
        if open(i, true) {
            weight -= 0.5 * grid.dx;
        }
        if open(i, false) {
            weight -= 0.5 * grid.dx;
        }
        value += field.values[i] * mp.w[i] * weight;
        covered += mp.w[i] * weight;
    }
    let total: f64 = mp.w.iter().sum::<f64>() * grid.dx;
    let masked_probability = if total > 0.0 {
        ((total - covered) / total).max(0.0)
    } else {
        1.0
    };
    Ok(Expectation {
        value,
        masked_probability,
        warning: masked_probability > EXPECTATION_MASS_WARNING,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{eval_potential, PotentialSpec};
    use crate::state::{decompose, gaussian_packet, normalize, plane_wave, WaveFunction};
    use std::f64::consts::{PI, TAU};
    use std::sync::Arc;

    fn periodic_ring(n: usize) -> Arc<Grid> {
        let x_max = TAU * (n as f64 - 1.0) / n as f64;
        Arc::new(Grid::natural(0.0, x_max, n).unwrap())
    }

    #[test]
    fn plane_wave_momentum_is_uniform() {
        let grid = periodic_ring(256);
        let psi = plane_wave(&grid, 2.0).unwrap();
        let cfg = FieldConfig::periodic(1e-8);
        let p = momentum_field(&psi, &cfg);
        assert!(p.valid.iter().all(|&v| v), "no masked points expected");
        let sinc = (2.0 * grid.dx).sin() / (2.0 * grid.dx);
        for (i, &v) in p.values.iter().enumerate() {
            assert!((v - 2.0 * sinc).abs() < 1e-12, "p[{i}] = {v}");
            assert!((v - 2.0).abs() < 1e-3);
        }
    }

    #[test]
    fn real_state_momentum_and_flux_vanish() {
        let grid = Arc::new(Grid::natural(-10.0, 10.0, 1024).unwrap());
        let psi = gaussian_packet(&grid, 0.0, 1.0, 0.0).unwrap().psi;
        let cfg = FieldConfig::dirichlet(1e-8);
        let p = momentum_field(&psi, &cfg);
        let j = flux_field(&psi, &cfg);
        for i in 0..1024 {
            if p.valid[i] {
                assert_eq!(p.values[i], 0.0, "p not exactly zero at {i}");
            }
            assert_eq!(j.values[i], 0.0, "j not exactly zero at {i}");
        }
    }

    #[test]
    fn wavenumber_matches_boost() {
        let grid = Arc::new(Grid::natural(-10.0, 10.0, 2048).unwrap());
        let psi = gaussian_packet(&grid, 0.0, 1.0, 1.5).unwrap().psi;
        let mp = decompose(&psi, 1e-8);
        let cfg = FieldConfig::dirichlet(1e-8);
        let k = wavenumber_field(&mp, &grid, &cfg);
        for i in 0..2048 {
            if k.valid[i] {
                assert!((k.values[i] - 1.5).abs() < 1e-9, "k[{i}] = {}", k.values[i]);
            }
        }
    }

    #[test]
    fn plane_wave_kinetic_on_the_lattice() {
        // Fine grid: the kinetic field equals the lattice dispersion value
        // (k^2/2) sinc^2(k dx / 2) up to 1/dx^2-amplified rounding noise.
        let n = 2048;
        let grid = periodic_ring(n);
        let psi = plane_wave(&grid, 2.0).unwrap();
        let cfg = FieldConfig::periodic(1e-8);
        let (k_field, kw_field) = kinetic_field(&psi, &cfg);
        let theta = 2.0 * grid.dx;
        let sinc_half = (theta / 2.0).sin() / (theta / 2.0);
        let expected = 2.0 * sinc_half * sinc_half;
        for i in 0..n {
            assert!((k_field.values[i] - expected).abs() < 1e-9);
            assert!((k_field.values[i] - 2.0).abs() < 1e-4);
            // K_w is zero up to the stencil mismatch between the two
            // first/second difference symbols, bounded by k^4 dx^2 / 8.
            let bound = 16.0 * grid.dx * grid.dx / 8.0 * 1.5 + 1e-14;
            assert!(kw_field.values[i].abs() < bound, "Kw = {}", kw_field.values[i]);
        }
        // The density route sees an exactly constant w, so its K_w vanishes
        // to rounding; on a coarse ring the noise floor sits below 1e-12.
        let coarse = periodic_ring(128);
        let psi_c = plane_wave(&coarse, 2.0).unwrap();
        let kw_density = wave_kinetic_from_density(&psi_c, &cfg);
        for i in 0..128 {
            assert!(
                kw_density.values[i].abs() < 1e-12,
                "density-route Kw = {}",
                kw_density.values[i]
            );
        }
        let kw_density_fine = wave_kinetic_from_density(&psi, &cfg);
        for i in 0..n {
            assert!(kw_density_fine.values[i].abs() < 1e-9);
        }
    }

    #[test]
    fn real_gaussian_wave_kinetic_at_center() {
        let grid = Arc::new(Grid::natural(-10.0, 10.0, 4096).unwrap());
        let psi = gaussian_packet(&grid, 0.0, 1.0, 0.0).unwrap().psi;
        let cfg = FieldConfig::dirichlet(1e-8);
        let (_, kw) = kinetic_field(&psi, &cfg);
        let center = (0..4096).min_by(|&a, &b| {
            grid.x(a).abs().partial_cmp(&grid.x(b).abs()).unwrap()
        })
        .unwrap();
        // Closed form (hbar^2/4m)(1/sigma^2 - x^2/2 sigma^4) = 0.25 at x = 0.
        let x = grid.x(center);
        let exact = 0.25 * (1.0 - x * x / 2.0);
        assert!(
            (kw.values[center] - exact).abs() < 1e-5,
            "Kw(0) = {}",
            kw.values[center]
        );
        // The two kinetic routes agree at stencil order away from nodes.
        let kw_density = wave_kinetic_from_density(&psi, &cfg);
        let mut gap: f64 = 0.0;
        for i in 0..4096 {
            if kw.valid[i] && kw_density.valid[i] && grid.x(i).abs() < 4.0 {
                gap = gap.max((kw.values[i] - kw_density.values[i]).abs());
            }
        }
        assert!(gap < 1e-3, "route gap {gap}");
        assert!(gap > 0.0, "routes should differ at finite dx");
    }

    #[test]
    fn box_eigenstate_kinetic_energy_flat_to_one_ppm() {
        let n = 4096;
        let grid = Arc::new(Grid::natural(0.0, 1.0, n).unwrap());
        let samples: Vec<f64> = (0..n).map(|i| (PI * grid.x(i)).sin()).collect();
        let psi =
            normalize(&WaveFunction::from_real(Arc::clone(&grid), &samples, 0.0).unwrap()).unwrap();
        let cfg = FieldConfig::dirichlet(1e-8);
        let (k_field, kw_field) = kinetic_field(&psi, &cfg);
        let exact = PI * PI / 2.0;
        for i in 0..n {
            if k_field.valid[i] {
                assert!(
                    ((k_field.values[i] - exact) / exact).abs() < 1e-6,
                    "K[{i}] = {}",
                    k_field.values[i]
                );
                assert_eq!(k_field.values[i], kw_field.values[i] , "p = 0 so K = K_w");
            }
        }
    }

    #[test]
    fn q_field_constant_for_box_eigenstate() {
        let n = 4096;
        let grid = Arc::new(Grid::natural(0.0, 1.0, n).unwrap());
        let samples: Vec<f64> = (0..n).map(|i| (PI * grid.x(i)).sin()).collect();
        let psi =
            normalize(&WaveFunction::from_real(Arc::clone(&grid), &samples, 0.0).unwrap()).unwrap();
        let cfg = FieldConfig::dirichlet(1e-8);
        let q = q_field(&psi, &cfg);
        let exact = PI * PI; // hbar^2 k^2 / (m L)
        let spread = q.relative_spread();
        assert!(spread < 1e-8, "Q spread {spread}");
        for i in 0..n {
            if q.valid[i] {
                assert!(
                    ((q.values[i] - exact) / exact).abs() < 1e-6,
                    "Q[{i}] = {}",
                    q.values[i]
                );
            }
        }
    }

    #[test]
    fn plane_wave_q_reduces_to_momentum_term() {
        let n = 512;
        let grid = periodic_ring(n);
        let psi = plane_wave(&grid, 2.0).unwrap();
        let cfg = FieldConfig::periodic(1e-8);
        let q = q_field(&psi, &cfg);
        let length = grid.period();
        for i in 0..n {
            assert!(
                (q.values[i] - 4.0 / length).abs() < 1e-3,
                "Q[{i}] = {} vs {}",
                q.values[i],
                4.0 / length
            );
        }
    }

    #[test]
    fn local_field_identity_is_one() {
        let grid = Arc::new(Grid::natural(-8.0, 8.0, 512).unwrap());
        let psi = gaussian_packet(&grid, 0.3, 1.1, 0.7).unwrap().psi;
        let cfg = FieldConfig::dirichlet(1e-8);
        let field = local_field(&psi, &OperatorStencil::identity(512), &cfg).unwrap();
        for i in 0..512 {
            if field.valid[i] {
                assert_eq!(field.values[i], 1.0);
            }
        }
    }

    #[test]
    fn local_field_momentum_stencil_matches_momentum_field() {
        let grid = Arc::new(Grid::natural(-8.0, 8.0, 1024).unwrap());
        let psi = gaussian_packet(&grid, 0.0, 0.9, 2.3).unwrap().psi;
        let cfg = FieldConfig::dirichlet(1e-8);
        let via_op = local_field(&psi, &OperatorStencil::momentum(&grid), &cfg).unwrap();
        let direct = momentum_field(&psi, &cfg);
        assert!(via_op.linf_gap(&direct) < 1e-12);
    }

    #[test]
    fn local_field_hamiltonian_stencil_matches_energy_field() {
        let grid = Arc::new(Grid::natural(-8.0, 8.0, 1024).unwrap());
        let v = eval_potential(&PotentialSpec::Harmonic { omega: 1.0 }, &grid).unwrap();
        let psi = gaussian_packet(&grid, 0.5, 0.8, 1.0).unwrap().psi;
        let cfg = FieldConfig::dirichlet(1e-8);
        let via_op = local_field(&psi, &OperatorStencil::hamiltonian(&grid, &v), &cfg).unwrap();
        let direct = energy_field(&psi, &v, &cfg);
        assert!(via_op.linf_gap(&direct) < 1e-10);
    }

    #[test]
    fn local_field_rejects_bad_stencil() {
        let grid = Arc::new(Grid::natural(-8.0, 8.0, 64).unwrap());
        let psi = gaussian_packet(&grid, 0.0, 1.0, 0.0).unwrap().psi;
        let op = OperatorStencil::multiply(vec![Complex64::new(1.0, 0.0); 32]);
        assert!(matches!(
            local_field(&psi, &op, &FieldConfig::default()),
            Err(Error::StencilLengthMismatch { .. })
        ));
    }

    #[test]
    fn expectation_of_identity_is_unity() {
        let grid = periodic_ring(512);
        let psi = plane_wave(&grid, 1.0).unwrap();
        let cfg = FieldConfig::periodic(1e-8);
        let mp = decompose(&psi, 1e-8);
        let field = local_field(&psi, &OperatorStencil::identity(512), &cfg).unwrap();
        let e = expectation(&field, &mp, &grid, &cfg).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10, "<1> = {}", e.value);
        assert!(!e.warning);
    }

    #[test]
    fn expectation_flags_heavy_masking() {
        let grid = Arc::new(Grid::natural(-10.0, 10.0, 1024).unwrap());
        let psi = gaussian_packet(&grid, 0.0, 1.0, 0.0).unwrap().psi;
        let mp = decompose(&psi, 0.5); // mask half the peak
        let cfg = FieldConfig {
            mask_threshold: 0.5,
            ..FieldConfig::dirichlet(0.5)
        };
        let field = local_field(&psi, &OperatorStencil::identity(1024), &cfg).unwrap();
        let e = expectation(&field, &mp, &grid, &cfg).unwrap();
        assert!(e.warning, "masked probability {}", e.masked_probability);
    }

    #[test]
    fn expectation_of_boosted_gaussian_momentum_via_phase_route() {
        let grid = Arc::new(Grid::natural(-12.0, 12.0, 4096).unwrap());
        let psi = gaussian_packet(&grid, 0.0, 1.0, 2.0).unwrap().psi;
        let mp = decompose(&psi, 1e-12);
        let cfg = FieldConfig::dirichlet(1e-12);
        let k = wavenumber_field(&mp, &grid, &cfg);
        let e = expectation(&k, &mp, &grid, &cfg).unwrap();
        assert!(
            (grid.hbar * e.value - 2.0).abs() < 1e-8,
            "<p> = {}",
            e.value
        );
    }

    #[test]
    fn fields_are_invariant_under_global_phase() {
        // The kinetic route carries rounding noise of order eps/dx^2 from
        // the cancellation in the second difference, so the invariance
        // floor scales with the lattice spacing; 256 points keeps it well
        // below 1e-12.
        let grid = Arc::new(Grid::natural(-10.0, 10.0, 256).unwrap());
        let v = eval_potential(&PotentialSpec::Free, &grid).unwrap();
        let psi = gaussian_packet(&grid, 0.0, 1.0, 1.0).unwrap().psi;
        let cfg = FieldConfig::dirichlet(1e-8);
        for alpha in [0.3, 1.7, -2.9] {
            let rotated = psi.phase_rotated(alpha);
            assert!(momentum_field(&psi, &cfg)
                .linf_gap(&momentum_field(&rotated, &cfg)) < 1e-13);
            let e_gap = energy_field(&psi, &v, &cfg)
                .linf_gap(&energy_field(&rotated, &v, &cfg));
            assert!(e_gap < 1e-12, "energy gap {e_gap}");
            assert!(q_field(&psi, &cfg).linf_gap(&q_field(&rotated, &cfg)) < 1e-12);
        }
    }

    #[test]
    fn frequency_field_rejects_wrap_boundary() {
        let grid = Arc::new(Grid::natural(-10.0, 10.0, 64).unwrap());
        let psi = gaussian_packet(&grid, 0.0, 2.0, 0.0).unwrap().psi;
        let prev = decompose(&psi, 1e-8);
        // A phase jump of exactly pi is ambiguous.
        let shifted = psi.phase_rotated(PI);
        let next = decompose(&shifted, 1e-8);
        assert!(matches!(
            frequency_field(&prev, &next, 0.1),
            Err(Error::UnwrapGuard { .. })
        ));
    }

    #[test]
    fn frequency_field_is_invariant_under_global_phase() {
        let grid = Arc::new(Grid::natural(-10.0, 10.0, 256).unwrap());
        let psi = gaussian_packet(&grid, 0.0, 1.0, 0.5).unwrap().psi;
        let prev = decompose(&psi, 1e-8);
        let next = decompose(&psi.phase_rotated(-0.4), 1e-8);
        let omega = frequency_field(&prev, &next, 0.05).unwrap();

        let rot_prev = decompose(&psi.phase_rotated(1.234), 1e-8);
        let rot_next = decompose(&psi.phase_rotated(1.234 - 0.4), 1e-8);
        let omega_rot = frequency_field(&rot_prev, &rot_next, 0.05).unwrap();
        assert!(omega.linf_gap(&omega_rot) < 1e-12);
    }
}
