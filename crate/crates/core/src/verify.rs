//! Pointwise identity checks on propagated runs.
//!
//! Each residual operation discretizes one identity with centered
//! differences in space and time, masks the union of the contributing
//! field masks, and reports norms over the interior snapshots. The
//! identities are exact in the continuum, so the default verdicts are
//! convergence-based: a refinement pair at halved dx and dt must shrink
//! the residual by the second-order window, unless the residual already
//! sits at the stationary floor.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec;
use crate::fields::{
    energy_field, expectation, flux_field, frequency_field, momentum_field, q_field, FieldConfig,
    FieldLabel, ObservableField,
};
use crate::grid::Grid;
use crate::potential::PotentialField;
use crate::propagator::{Boundary, PropagatorConfig};
use crate::state::{decompose, WaveFunction};

/// Window a second-order residual ratio must land in when dx and dt halve.
pub const RATIO_WINDOW: (f64, f64) = (3.5, 4.5);
/// Absolute ceiling for residuals of stationary or exactly constant runs.
pub const STATIONARY_CEILING: f64 = 1e-9;
/// Absolute ceiling for the Ehrenfest residual on quadratic potentials.
pub const EHRENFEST_CEILING: f64 = 1e-4;
/// A boundary Q value passes when below this fraction of max |Q|.
pub const Q_BOUNDARY_REL: f64 = 1e-9;

/// Per-identity verdict thresholds. The identities are exact in the
/// continuum, so the defaults judge discretization error by its decay
/// under refinement and only accept absolute residuals at the stationary
/// floor.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub ratio_window: (f64, f64),
    pub stationary_ceiling: f64,
    pub ehrenfest_ceiling: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ratio_window: RATIO_WINDOW,
            stationary_ceiling: STATIONARY_CEILING,
            ehrenfest_ceiling: EHRENFEST_CEILING,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IdentityTag {
    Continuity,
    EnergyFrequency,
    MomentumBalance,
    LocalBalance,
    Ehrenfest,
}

impl IdentityTag {
    pub const ALL: [IdentityTag; 5] = [
        IdentityTag::Continuity,
        IdentityTag::EnergyFrequency,
        IdentityTag::MomentumBalance,
        IdentityTag::LocalBalance,
        IdentityTag::Ehrenfest,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            IdentityTag::Continuity => "continuity",
            IdentityTag::EnergyFrequency => "energy_frequency",
            IdentityTag::MomentumBalance => "momentum_balance",
            IdentityTag::LocalBalance => "local_balance",
            IdentityTag::Ehrenfest => "ehrenfest",
        }
    }

    pub fn parse(name: &str) -> Option<IdentityTag> {
        Some(match name {
            "continuity" => IdentityTag::Continuity,
            "energy_frequency" => IdentityTag::EnergyFrequency,
            "momentum_balance" => IdentityTag::MomentumBalance,
            "local_balance" => IdentityTag::LocalBalance,
            "ehrenfest" => IdentityTag::Ehrenfest,
            _ => return None,
        })
    }
}

/// Snapshots of one propagated run at uniform spacing `dt_out`.
#[derive(Debug, Clone)]
pub struct RunHistory {
    pub grid: Arc<Grid>,
    pub potential: PotentialField,
    pub config: PropagatorConfig,
    pub snapshots: Vec<WaveFunction>,
    pub dt_out: f64,
    pub mask_threshold: f64,
}

impl RunHistory {
    pub fn new(
        grid: Arc<Grid>,
        potential: PotentialField,
        config: PropagatorConfig,
        snapshots: Vec<WaveFunction>,
        dt_out: f64,
        mask_threshold: f64,
    ) -> Result<Self> {
        if snapshots.len() < 2 {
            return Err(Error::HistoryTooShort {
                got: snapshots.len(),
                min: 2,
            });
        }
        for pair in snapshots.windows(2) {
            let step = pair[1].time - pair[0].time;
            if (step - dt_out).abs() > 1e-9 * dt_out.abs().max(1e-300) {
                return Err(Error::ScenarioMismatch(format!(
                    "non-uniform snapshot spacing: {step} vs dt_out {dt_out}"
                )));
            }
        }
        for s in &snapshots {
            if s.samples.len() != grid.n_points {
                return Err(Error::SampleCountMismatch {
                    got: s.samples.len(),
                    expected: grid.n_points,
                });
            }
        }
        Ok(RunHistory {
            grid,
            potential,
            config,
            snapshots,
            dt_out,
            mask_threshold,
        })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn field_config(&self) -> FieldConfig {
        FieldConfig {
            mask_threshold: self.mask_threshold,
            periodic: self.config.boundary == Boundary::Periodic,
            route: Default::default(),
        }
    }

    fn check_interior(&self, t_index: usize) -> Result<()> {
        if self.len() < 3 {
            return Err(Error::HistoryTooShort {
                got: self.len(),
                min: 3,
            });
        }
        if t_index < 1 || t_index + 1 >= self.len() {
            return Err(Error::SnapshotIndexOutOfRange {
                index: t_index,
                max: self.len() - 1,
            });
        }
        Ok(())
    }
}

fn neighbor_indices(i: usize, n: usize, periodic: bool) -> Option<(usize, usize)> {
    if i > 0 && i + 1 < n {
        Some((i - 1, i + 1))
    } else if periodic {
        Some(((i + n - 1) % n, (i + 1) % n))
    } else {
        None
    }
}

/// Centered x-difference of a masked field; valid where the field is valid
/// on the whole stencil.
fn d1_masked(field: &ObservableField, dx: f64, periodic: bool) -> ObservableField {
    let n = field.values.len();
    let mut out = ObservableField {
        values: vec![f64::NAN; n],
        valid: vec![false; n],
        label: FieldLabel::Custom,
    };
    for i in 0..n {
        if !field.valid[i] {
            continue;
        }
        if let Some((im, ip)) = neighbor_indices(i, n, periodic) {
            if field.valid[im] && field.valid[ip] {
                out.values[i] = (field.values[ip] - field.values[im]) / (2.0 * dx);
                out.valid[i] = true;
            }
        }
    }
    out
}

/// `w_t + j_x` at one interior snapshot.
pub fn continuity_residual(h: &RunHistory, t_index: usize) -> Result<ObservableField> {
    h.check_interior(t_index)?;
    let cfg = h.field_config();
    let grid = &h.grid;
    let n = grid.n_points;
    let w_prev = h.snapshots[t_index - 1].density();
    let w_next = h.snapshots[t_index + 1].density();
    let j = flux_field(&h.snapshots[t_index], &cfg);
    let p = momentum_field(&h.snapshots[t_index], &cfg);
    let dj = d1_masked(
        &ObservableField {
            values: j.values.clone(),
            valid: p.valid.clone(),
            label: FieldLabel::Flux,
        },
        grid.dx,
        cfg.periodic,
    );
    let mut out = ObservableField {
        values: vec![f64::NAN; n],
        valid: vec![false; n],
        label: FieldLabel::Custom,
    };
    for i in 0..n {
        if dj.valid[i] {
            out.values[i] = (w_next[i] - w_prev[i]) / (2.0 * h.dt_out) + dj.values[i];
            out.valid[i] = true;
        }
    }
    Ok(out)
}

/// `hbar omega - E` at one interior snapshot, with omega extracted from the
/// bracketing pair of propagated phases.
pub fn energy_frequency_residual(h: &RunHistory, t_index: usize) -> Result<ObservableField> {
    h.check_interior(t_index)?;
    let cfg = h.field_config();
    let prev = decompose(&h.snapshots[t_index - 1], h.mask_threshold);
    let next = decompose(&h.snapshots[t_index + 1], h.mask_threshold);
    let omega = frequency_field(&prev, &next, h.dt_out)?;
    let energy = energy_field(&h.snapshots[t_index], &h.potential, &cfg);
    let n = h.grid.n_points;
    let hbar = h.grid.hbar;
    let mut out = ObservableField {
        values: vec![f64::NAN; n],
        valid: vec![false; n],
        label: FieldLabel::Custom,
    };
    for i in 0..n {
        if omega.valid[i] && energy.valid[i] {
            out.values[i] = hbar * omega.values[i] - energy.values[i];
            out.valid[i] = true;
        }
    }
    Ok(out)
}

/// `p_t + E_x` at one interior snapshot.
pub fn momentum_balance_residual(h: &RunHistory, t_index: usize) -> Result<ObservableField> {
    h.check_interior(t_index)?;
    let cfg = h.field_config();
    let grid = &h.grid;
    let n = grid.n_points;
    let p_prev = momentum_field(&h.snapshots[t_index - 1], &cfg);
    let p_next = momentum_field(&h.snapshots[t_index + 1], &cfg);
    let energy = energy_field(&h.snapshots[t_index], &h.potential, &cfg);
    let de = d1_masked(&energy, grid.dx, cfg.periodic);
    let mut out = ObservableField {
        values: vec![f64::NAN; n],
        valid: vec![false; n],
        label: FieldLabel::Custom,
    };
    for i in 0..n {
        let flagged = potential_flagged(&h.potential, i, n, cfg.periodic);
        if p_prev.valid[i] && p_next.valid[i] && de.valid[i] && !flagged {
            out.values[i] = (p_next.values[i] - p_prev.values[i]) / (2.0 * h.dt_out)
                + de.values[i];
            out.valid[i] = true;
        }
    }
    Ok(out)
}

fn potential_flagged(v: &PotentialField, i: usize, n: usize, periodic: bool) -> bool {
    if v.edge_flags[i] {
        return true;
    }
    match neighbor_indices(i, n, periodic) {
        Some((im, ip)) => v.edge_flags[im] || v.edge_flags[ip],
        None => false,
    }
}

/// `w E_x + p j_x - w V_x - Q_x` on a single snapshot.
pub fn local_balance_residual(
    psi: &WaveFunction,
    v: &PotentialField,
    cfg: &FieldConfig,
) -> ObservableField {
    let grid = &psi.grid;
    let n = grid.n_points;
    let w = psi.density();
    let p = momentum_field(psi, cfg);
    let energy = energy_field(psi, v, cfg);
    let j = flux_field(psi, cfg);
    let q = q_field(psi, cfg);

    let de = d1_masked(&energy, grid.dx, cfg.periodic);
    let dq = d1_masked(&q, grid.dx, cfg.periodic);
    let dj = d1_masked(
        &ObservableField {
            values: j.values.clone(),
            valid: p.valid.clone(),
            label: FieldLabel::Flux,
        },
        grid.dx,
        cfg.periodic,
    );

    let mut out = ObservableField {
        values: vec![f64::NAN; n],
        valid: vec![false; n],
        label: FieldLabel::Custom,
    };
    for i in 0..n {
        let flagged = potential_flagged(v, i, n, cfg.periodic);
        if de.valid[i] && dq.valid[i] && dj.valid[i] && p.valid[i] && !flagged {
            out.values[i] = w[i] * de.values[i] + p.values[i] * dj.values[i]
                - w[i] * v.v_x[i]
                - dq.values[i];
            out.valid[i] = true;
        }
    }
    out
}

/// Boundary values of Q on the raw support of the state (density > 0), used
/// to decide whether the surface term behind the Ehrenfest equation is
/// negligible.
#[derive(Debug, Clone, Copy)]
pub struct QBoundaryCheck {
    pub left: f64,
    pub right: f64,
    pub max_abs: f64,
    pub pass: bool,
}

pub fn q_boundary_check(psi: &WaveFunction, cfg: &FieldConfig) -> QBoundaryCheck {
    // Raw support: every point with nonzero density, regardless of the
    // node-mask threshold, so Gaussian tails are probed where they actually
    // decay.
    let raw_cfg = FieldConfig {
        mask_threshold: 0.0,
        ..*cfg
    };
    let q = q_field(psi, &raw_cfg);
    let n = q.values.len();
    let first = (0..n).find(|&i| q.valid[i]);
    let last = (0..n).rev().find(|&i| q.valid[i]);
    let (left, right) = match (first, last) {
        (Some(a), Some(b)) => (q.values[a], q.values[b]),
        _ => (f64::NAN, f64::NAN),
    };
    let max_abs = q.max_abs();
    let pass = left.abs() < Q_BOUNDARY_REL * max_abs && right.abs() < Q_BOUNDARY_REL * max_abs;
    QBoundaryCheck {
        left,
        right,
        max_abs,
        pass,
    }
}

/// Time series behind the Ehrenfest equation `d<p>/dt = -<dV/dx>`.
#[derive(Debug, Clone)]
pub struct EhrenfestCheck {
    /// Snapshot times.
    pub times: Vec<f64>,
    /// `<p>` per snapshot.
    pub momentum: Vec<f64>,
    /// `<dV/dx>` per snapshot.
    pub mean_force_gradient: Vec<f64>,
    /// Interior snapshot times.
    pub interior_times: Vec<f64>,
    /// Centered `d<p>/dt` per interior snapshot.
    pub dpdt: Vec<f64>,
    /// `d<p>/dt + <dV/dx>` per interior snapshot.
    pub residual: Vec<f64>,
    /// Whether Q vanishes at the support boundary (surface-term assumption).
    pub q_boundary_ok: bool,
}

impl EhrenfestCheck {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }

    /// Largest drift of `<p>` from its initial value.
    pub fn max_momentum_drift(&self) -> f64 {
        let p0 = self.momentum[0];
        self.momentum
            .iter()
            .map(|p| (p - p0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn ehrenfest_check(h: &RunHistory) -> Result<EhrenfestCheck> {
    if h.len() < 3 {
        return Err(Error::HistoryTooShort {
            got: h.len(),
            min: 3,
        });
    }
    let cfg = h.field_config();
    let grid = &h.grid;
    let per_snapshot: Vec<(f64, f64)> = exec::map_indexed(&h.snapshots, |_, snap| {
        let mp = decompose(snap, h.mask_threshold);
        let p = momentum_field(snap, &cfg);
        let mean_p = expectation(&p, &mp, grid, &cfg)
            .map(|e| e.value)
            .unwrap_or(f64::NAN);
        let w = snap.density();
        let force: f64 = w
            .iter()
            .zip(&h.potential.v_x)
            .map(|(wi, vx)| wi * vx)
            .sum::<f64>()
            * grid.dx;
        (mean_p, force)
    });
    let momentum: Vec<f64> = per_snapshot.iter().map(|x| x.0).collect();
    let mean_force_gradient: Vec<f64> = per_snapshot.iter().map(|x| x.1).collect();
    let times = h.times();

    let mut interior_times = Vec::new();
    let mut dpdt = Vec::new();
    let mut residual = Vec::new();
    for t in 1..h.len() - 1 {
        let d = (momentum[t + 1] - momentum[t - 1]) / (2.0 * h.dt_out);
        interior_times.push(times[t]);
        dpdt.push(d);
        residual.push(d + mean_force_gradient[t]);
    }

    let q_first = q_boundary_check(&h.snapshots[0], &cfg);
    let q_last = q_boundary_check(&h.snapshots[h.len() - 1], &cfg);
    Ok(EhrenfestCheck {
        times,
        momentum,
        mean_force_gradient,
        interior_times,
        dpdt,
        residual,
        q_boundary_ok: q_first.pass && q_last.pass,
    })
}

/// Residual field of one identity at one interior snapshot.
pub fn residual_field(h: &RunHistory, tag: IdentityTag, t_index: usize) -> Result<ObservableField> {
    match tag {
        IdentityTag::Continuity => continuity_residual(h, t_index),
        IdentityTag::EnergyFrequency => energy_frequency_residual(h, t_index),
        IdentityTag::MomentumBalance => momentum_balance_residual(h, t_index),
        IdentityTag::LocalBalance => {
            h.check_interior(t_index)?;
            Ok(local_balance_residual(
                &h.snapshots[t_index],
                &h.potential,
                &h.field_config(),
            ))
        }
        IdentityTag::Ehrenfest => Err(Error::ScenarioMismatch(
            "ehrenfest is a time-series check, not a per-snapshot field".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ResidualNorms {
    pub linf: f64,
    pub l2: f64,
    pub masked_fraction: f64,
}

/// Norms of one identity's residual over all interior snapshots.
pub fn residual_norms(h: &RunHistory, tag: IdentityTag) -> Result<ResidualNorms> {
    if h.len() < 3 {
        return Err(Error::HistoryTooShort {
            got: h.len(),
            min: 3,
        });
    }
    let interior: Vec<usize> = (1..h.len() - 1).collect();
    let stats = exec::map_indexed(&interior, |_, &t| {
        residual_field(h, tag, t).map(|r| {
            let mut linf: f64 = 0.0;
            let mut sum_sq = 0.0;
            let mut count = 0usize;
            for (x, &v) in r.values.iter().zip(&r.valid) {
                if v {
                    linf = linf.max(x.abs());
                    sum_sq += x * x;
                    count += 1;
                }
            }
            (linf, sum_sq, count, r.values.len())
        })
    });
    let mut linf: f64 = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    let mut masked = 0.0;
    let mut snaps = 0usize;
    for s in stats {
        let (l, s2, c, total) = s?;
        linf = linf.max(l);
        sum_sq += s2;
        count += c;
        masked += 1.0 - c as f64 / total as f64;
        snaps += 1;
    }
    Ok(ResidualNorms {
        linf,
        l2: if count > 0 {
            (sum_sq / count as f64).sqrt()
        } else {
            0.0
        },
        masked_fraction: masked / snaps.max(1) as f64,
    })
}

/// Verdict for one identity.
#[derive(Debug, Clone)]
pub struct IdentityEntry {
    pub tag: IdentityTag,
    pub linf: f64,
    pub l2: f64,
    pub masked_fraction: f64,
    pub ratio_linf: Option<f64>,
    pub ratio_l2: Option<f64>,
    pub tolerance: String,
    pub pass: bool,
}

/// Constancy summary of Q on the final snapshot plus its boundary values.
#[derive(Debug, Clone, Copy)]
pub struct QDiagnostics {
    pub mean: f64,
    pub relative_spread: f64,
    pub left: f64,
    pub right: f64,
    pub boundary_pass: bool,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub entries: Vec<IdentityEntry>,
    pub q_diagnostics: QDiagnostics,
    pub warnings: Vec<String>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, tag: IdentityTag) -> Option<&IdentityEntry> {
        self.entries.iter().find(|e| e.tag == tag)
    }
}

fn check_refinement_compatible(h: &RunHistory, r: &RunHistory) -> Result<()> {
    let g = &h.grid;
    let rg = &r.grid;
    if (g.x_min - rg.x_min).abs() > 1e-12 * g.dx {
        return Err(Error::ScenarioMismatch("refinement grid origin differs".into()));
    }
    if (rg.dx - 0.5 * g.dx).abs() > 1e-9 * g.dx {
        return Err(Error::ScenarioMismatch(format!(
            "refinement dx {} is not half of base dx {}",
            rg.dx, g.dx
        )));
    }
    if (r.dt_out - 0.5 * h.dt_out).abs() > 1e-9 * h.dt_out {
        return Err(Error::ScenarioMismatch(
            "refinement dt_out is not half of base dt_out".into(),
        ));
    }
    let t_end = h.snapshots.last().unwrap().time;
    let rt_end = r.snapshots.last().unwrap().time;
    if (t_end - rt_end).abs() > 1e-9 * t_end.abs().max(1.0) {
        return Err(Error::ScenarioMismatch(format!(
            "refinement covers t_end {rt_end} instead of {t_end}"
        )));
    }
    if h.config.scheme != r.config.scheme {
        return Err(Error::ScenarioMismatch("refinement scheme differs".into()));
    }
    Ok(())
}

/// Aggregate residual norms per identity, attach convergence ratios from an
/// optional refined run, and apply the default verdicts.
pub fn build_report(
    h: &RunHistory,
    identities: &[IdentityTag],
    refinement: Option<&RunHistory>,
) -> Result<VerificationReport> {
    build_report_with(h, identities, refinement, &Tolerances::default())
}

/// `build_report` with explicit verdict thresholds.
pub fn build_report_with(
    h: &RunHistory,
    identities: &[IdentityTag],
    refinement: Option<&RunHistory>,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if identities.is_empty() {
        return Err(Error::EmptyIdentities);
    }
    let mut selected: Vec<IdentityTag> = Vec::new();
    for &tag in identities {
        if !selected.contains(&tag) {
            selected.push(tag);
        }
    }
    if let Some(r) = refinement {
        check_refinement_compatible(h, r)?;
    }

    let mut entries = Vec::with_capacity(selected.len());
    let mut warnings = Vec::new();
    for tag in selected {
        let entry = if tag == IdentityTag::Ehrenfest {
            let series = ehrenfest_check(h)?;
            if !series.q_boundary_ok {
                warnings.push(
                    "ehrenfest: Q does not vanish at the support boundary; the surface-term assumption is violated"
                        .into(),
                );
            }
            let linf = series.max_residual();
            let l2 = (series.residual.iter().map(|r| r * r).sum::<f64>()
                / series.residual.len().max(1) as f64)
                .sqrt();
            let ratio = match refinement {
                Some(r) => {
                    let rs = ehrenfest_check(r)?;
                    let rl = rs.max_residual();
                    if rl > 0.0 {
                        Some(linf / rl)
                    } else {
                        None
                    }
                }
                None => None,
            };
            IdentityEntry {
                tag,
                linf,
                l2,
                masked_fraction: 0.0,
                ratio_linf: ratio,
                ratio_l2: None,
                tolerance: format!("max |d<p>/dt + <V_x>| <= {:.0e}", tol.ehrenfest_ceiling),
                pass: linf <= tol.ehrenfest_ceiling,
            }
        } else {
            let base = residual_norms(h, tag)?;
            let (ratio_linf, ratio_l2) = match refinement {
                Some(r) => {
                    let fine = residual_norms(r, tag)?;
                    (
                        (fine.linf > 0.0).then(|| base.linf / fine.linf),
                        (fine.l2 > 0.0).then(|| base.l2 / fine.l2),
                    )
                }
                None => (None, None),
            };
            let (pass, tolerance) = if base.linf <= tol.stationary_ceiling {
                (
                    true,
                    format!("linf <= {:.0e} (stationary floor)", tol.stationary_ceiling),
                )
            } else if let Some(r) = ratio_l2 {
                (
                    r >= tol.ratio_window.0 && r <= tol.ratio_window.1,
                    format!(
                        "l2 ratio in [{}, {}]",
                        tol.ratio_window.0, tol.ratio_window.1
                    ),
                )
            } else {
                (
                    false,
                    "indeterminate: residual above stationary floor and no refinement run"
                        .into(),
                )
            };
            IdentityEntry {
                tag,
                linf: base.linf,
                l2: base.l2,
                masked_fraction: base.masked_fraction,
                ratio_linf,
                ratio_l2,
                tolerance,
                pass,
            }
        };
        entries.push(entry);
    }

    let cfg = h.field_config();
    let last = &h.snapshots[h.len() - 1];
    let q = q_field(last, &cfg);
    let valid_vals: Vec<f64> = q
        .values
        .iter()
        .zip(&q.valid)
        .filter(|(_, &v)| v)
        .map(|(x, _)| *x)
        .collect();
    let mean = valid_vals.iter().sum::<f64>() / valid_vals.len().max(1) as f64;
    let qb = q_boundary_check(last, &cfg);
    let q_diagnostics = QDiagnostics {
        mean,
        relative_spread: q.relative_spread(),
        left: qb.left,
        right: qb.right,
        boundary_pass: qb.pass,
    };

    Ok(VerificationReport {
        entries,
        q_diagnostics,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{eval_potential, PotentialSpec};
    use crate::propagator::{Propagator, Scheme};
    use crate::state::plane_wave;
    use std::f64::consts::TAU;

    fn plane_wave_history(n_snapshots: usize) -> RunHistory {
        let n = 64;
        let x_max = TAU * (n as f64 - 1.0) / n as f64;
        let grid = Arc::new(Grid::natural(0.0, x_max, n).unwrap());
        let v = eval_potential(&PotentialSpec::Free, &grid).unwrap();
        let config = PropagatorConfig::new(Scheme::SplitFourier, 1e-3, Boundary::Periodic).unwrap();
        let mut prop = Propagator::new(&config, &grid, &v).unwrap();
        let mut psi = plane_wave(&grid, 2.0).unwrap();
        let mut snapshots = vec![psi.clone()];
        for j in 1..n_snapshots {
            for _ in 0..10 {
                psi = prop.step(&psi).unwrap();
            }
            psi.time = j as f64 * 0.01;
            snapshots.push(psi.clone());
        }
        RunHistory::new(grid, v, config, snapshots, 0.01, 1e-8).unwrap()
    }

    #[test]
    fn plane_wave_residuals_vanish() {
        let h = plane_wave_history(5);
        for tag in [
            IdentityTag::Continuity,
            IdentityTag::MomentumBalance,
            IdentityTag::LocalBalance,
        ] {
            let norms = residual_norms(&h, tag).unwrap();
            assert!(
                norms.linf < 1e-12,
                "{} residual {}",
                tag.as_str(),
                norms.linf
            );
        }
    }

    #[test]
    fn plane_wave_q_boundary_fails_as_expected() {
        let h = plane_wave_history(3);
        let cfg = h.field_config();
        let qb = q_boundary_check(&h.snapshots[0], &cfg);
        assert!(!qb.pass, "constant Q cannot vanish at the boundary");
        assert!(qb.left > 0.1);
    }

    #[test]
    fn plane_wave_ehrenfest_momentum_is_conserved() {
        let h = plane_wave_history(5);
        let series = ehrenfest_check(&h).unwrap();
        assert!(series.max_residual() < 1e-10);
        assert!(series.max_momentum_drift() < 1e-12);
        assert!(!series.q_boundary_ok);
    }

    #[test]
    fn build_report_rejects_empty_selection() {
        let h = plane_wave_history(3);
        assert!(matches!(
            build_report(&h, &[], None),
            Err(Error::EmptyIdentities)
        ));
    }

    #[test]
    fn build_report_contains_each_identity_once() {
        let h = plane_wave_history(5);
        let report = build_report(
            &h,
            &[
                IdentityTag::Continuity,
                IdentityTag::Continuity,
                IdentityTag::Ehrenfest,
            ],
            None,
        )
        .unwrap();
        assert_eq!(report.entries.len(), 2);
        assert!(report.entry(IdentityTag::Continuity).is_some());
        // Constant fields sit at the stationary floor without refinement.
        assert!(report.all_pass());
    }

    #[test]
    fn interior_index_bounds_are_enforced() {
        let h = plane_wave_history(4);
        assert!(continuity_residual(&h, 0).is_err());
        assert!(continuity_residual(&h, 3).is_err());
        assert!(continuity_residual(&h, 2).is_ok());
    }

    #[test]
    fn history_rejects_nonuniform_spacing() {
        let h = plane_wave_history(4);
        let mut snaps = h.snapshots.clone();
        snaps[2].time += 5e-3;
        assert!(matches!(
            RunHistory::new(
                Arc::clone(&h.grid),
                h.potential.clone(),
                h.config,
                snaps,
                0.01,
                1e-8
            ),
            Err(Error::ScenarioMismatch(_))
        ));
    }
}
