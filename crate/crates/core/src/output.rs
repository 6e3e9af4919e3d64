//! Bit-stable text output: per-snapshot field tables, the verification
//! report, SVG plots and a manifest of everything written.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::exec;
use crate::fields::{
    energy_field, flux_field, frequency_field, kinetic_field, momentum_field, q_field,
    wavenumber_field, FieldLabel,
};
use crate::state::decompose;
use crate::verify::{RunHistory, VerificationReport};

/// Canonical column order of a field table.
pub const TABLE_HEADER: &str = "x,w,phi,k,p,K,Kw,E,omega,j,Q,mask";

/// One snapshot's worth of extracted fields, column-major.
#[derive(Debug, Clone)]
pub struct FieldTable {
    pub time: f64,
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub phi: Vec<f64>,
    pub k: Vec<f64>,
    pub p: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub wave_kinetic: Vec<f64>,
    pub energy: Vec<f64>,
    pub omega: Vec<f64>,
    pub flux: Vec<f64>,
    pub q: Vec<f64>,
    /// 1 where every stencil field is defined, 0 otherwise.
    pub mask: Vec<u8>,
}

impl FieldTable {
    pub fn column(&self, label: FieldLabel) -> Option<&[f64]> {
        Some(match label {
            FieldLabel::Density => &self.w,
            FieldLabel::Phase => &self.phi,
            FieldLabel::WaveNumber => &self.k,
            FieldLabel::Momentum => &self.p,
            FieldLabel::Kinetic => &self.kinetic,
            FieldLabel::WaveKinetic => &self.wave_kinetic,
            FieldLabel::Energy => &self.energy,
            FieldLabel::Frequency => &self.omega,
            FieldLabel::Flux => &self.flux,
            FieldLabel::EnergyFlux => &self.q,
            FieldLabel::Custom => return None,
        })
    }
}

/// Extract every field of one snapshot. The frequency column needs the
/// bracketing snapshots and is NaN on the first and last snapshot.
pub fn extract_table(h: &RunHistory, t_index: usize) -> FieldTable {
    let cfg = h.field_config();
    let grid = &h.grid;
    let psi = &h.snapshots[t_index];
    let mp = decompose(psi, h.mask_threshold);
    let k = wavenumber_field(&mp, grid, &cfg);
    let p = momentum_field(psi, &cfg);
    let (kin, kw) = kinetic_field(psi, &cfg);
    let energy = energy_field(psi, &h.potential, &cfg);
    let flux = flux_field(psi, &cfg);
    let q = q_field(psi, &cfg);
    let omega = if t_index > 0 && t_index + 1 < h.len() {
        let prev = decompose(&h.snapshots[t_index - 1], h.mask_threshold);
        let next = decompose(&h.snapshots[t_index + 1], h.mask_threshold);
        match frequency_field(&prev, &next, h.dt_out) {
            Ok(f) => f.values,
            Err(_) => vec![f64::NAN; grid.n_points],
        }
    } else {
        vec![f64::NAN; grid.n_points]
    };
    let mask: Vec<u8> = (0..grid.n_points)
        .map(|i| u8::from(p.valid[i] && k.valid[i] && energy.valid[i] && q.valid[i]))
        .collect();
    FieldTable {
        time: psi.time,
        x: grid.points(),
        w: psi.density(),
        phi: mp.phi,
        k: k.values,
        p: p.values,
        kinetic: kin.values,
        wave_kinetic: kw.values,
        energy: energy.values,
        omega,
        flux: flux.values,
        q: q.values,
        mask,
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render a table as comma-separated text with 17 significant digits, which
/// round-trips every f64 exactly.
pub fn render_table(t: &FieldTable) -> String {
    let n = t.x.len();
    let mut out = String::with_capacity(n * 220);
    out.push_str(TABLE_HEADER);
    out.push('\n');
    for i in 0..n {
        out.push_str(&fmt(t.x[i]));
        for col in [
            &t.w, &t.phi, &t.k, &t.p, &t.kinetic, &t.wave_kinetic, &t.energy, &t.omega, &t.flux,
            &t.q,
        ] {
            out.push(',');
            out.push_str(&fmt(col[i]));
        }
        out.push(',');
        out.push_str(if t.mask[i] == 1 { "1" } else { "0" });
        out.push('\n');
    }
    out
}

/// A re-read field table: header names plus row-major values.
#[derive(Debug, Clone)]
pub struct ReadTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ReadTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_field_table(path: &Path) -> Result<ReadTable> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    let header_line = lines.next().ok_or_else(|| Error::FieldTable {
        path: path.to_path_buf(),
        message: "empty file".into(),
    })?;
    let header: Vec<String> = header_line.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(header.len());
        for part in line.split(',') {
            let v = part.trim().parse::<f64>().map_err(|_| Error::FieldTable {
                path: path.to_path_buf(),
                message: format!("bad number `{part}` on data line {}", ln + 1),
            })?;
            row.push(v);
        }
        if row.len() != header.len() {
            return Err(Error::FieldTable {
                path: path.to_path_buf(),
                message: format!(
                    "row {} has {} columns, header has {}",
                    ln + 1,
                    row.len(),
                    header.len()
                ),
            });
        }
        rows.push(row);
    }
    Ok(ReadTable { header, rows })
}

/// Render the verification report as a flat text document keyed by identity
/// tag.
pub fn render_report(report: &VerificationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("all_pass = {}\n", report.all_pass()));
    for e in &report.entries {
        out.push_str(&format!("\n[{}]\n", e.tag.as_str()));
        out.push_str(&format!("linf = {}\n", fmt(e.linf)));
        out.push_str(&format!("l2 = {}\n", fmt(e.l2)));
        out.push_str(&format!("masked_fraction = {}\n", fmt(e.masked_fraction)));
        if let Some(r) = e.ratio_linf {
            out.push_str(&format!("ratio_linf = {}\n", fmt(r)));
        }
        if let Some(r) = e.ratio_l2 {
            out.push_str(&format!("ratio_l2 = {}\n", fmt(r)));
        }
        out.push_str(&format!("tolerance = {}\n", e.tolerance));
        out.push_str(&format!("pass = {}\n", e.pass));
    }
    let q = &report.q_diagnostics;
    out.push_str("\n[q_diagnostics]\n");
    out.push_str(&format!("mean = {}\n", fmt(q.mean)));
    out.push_str(&format!("relative_spread = {}\n", fmt(q.relative_spread)));
    out.push_str(&format!("left = {}\n", fmt(q.left)));
    out.push_str(&format!("right = {}\n", fmt(q.right)));
    out.push_str(&format!("boundary_pass = {}\n", q.boundary_pass));
    if !report.warnings.is_empty() {
        out.push_str("\n[warnings]\n");
        for w in &report.warnings {
            out.push_str(&format!("- {w}\n"));
        }
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    f.write_all(contents.as_bytes()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write field tables for every snapshot, the report, optional plots for
/// the first and last snapshot, and a manifest listing everything written.
/// Returns the written paths, manifest last.
pub fn write_outputs(
    h: &RunHistory,
    report: &VerificationReport,
    dir: &Path,
    plots: &[FieldLabel],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let indices: Vec<usize> = (0..h.len()).collect();
    let rendered: Vec<(String, String)> = exec::map_indexed(&indices, |_, &t| {
        let table = extract_table(h, t);
        (format!("fields_{t:05}.csv"), render_table(&table))
    });

    let mut written = Vec::new();
    for (name, contents) in &rendered {
        let path = dir.join(name);
        write_file(&path, contents)?;
        written.push(path);
    }

    let report_path = dir.join("report.txt");
    write_file(&report_path, &render_report(report))?;
    written.push(report_path);

    if !plots.is_empty() && h.len() >= 2 {
        for &label in plots {
            for &t in &[0usize, h.len() - 1] {
                let table = extract_table(h, t);
                let values = table.column(label).unwrap_or(&table.w);
                let valid: Vec<bool> = values.iter().map(|v| v.is_finite()).collect();
                let title = format!("{} at t = {}", label.as_str(), table.time);
                let svg =
                    crate::plot::line_plot_svg(&table.x, values, &valid, &title, label.as_str());
                let path = dir.join(format!("plot_{}_{t:05}.svg", label.as_str()));
                write_file(&path, &svg)?;
                written.push(path);
            }
        }
    }

    let manifest: String = written
        .iter()
        .map(|p| {
            p.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
        .collect::<Vec<_>>()
        .join("\n")
        + "\n";
    let manifest_path = dir.join("manifest.txt");
    write_file(&manifest_path, &manifest)?;
    written.push(manifest_path);
    Ok(written)
}
