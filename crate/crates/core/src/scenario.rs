//! Scenario configuration and run orchestration.
//!
//! Scenarios are flat `key = value` documents with `#` comments, grouped by
//! key prefix (`grid.`, `potential.`, `state.`, `prop.`, `verify.`, `out.`).
//! Unknown keys, duplicates, type mismatches and constraint violations are
//! each rejected with the offending line.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::PathBuf;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{energy_field, FieldLabel};
use crate::grid::Grid;
use crate::potential::{eval_potential, PotentialField, PotentialSpec};
use crate::propagator::{Boundary, Propagator, PropagatorConfig, Scheme};
use crate::state::{gaussian_packet, plane_wave, WaveFunction};
use crate::verify::{build_report, IdentityTag, RunHistory, VerificationReport};

/// Initial state selection.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Gaussian { x0: f64, sigma: f64, k0: f64 },
    Eigenstate { n: usize },
    PlaneWave { k0: f64 },
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub hbar: f64,
    pub mass: f64,
    pub potential: PotentialSpec,
    pub state: StateSpec,
    pub scheme: Scheme,
    pub boundary: Boundary,
    pub dt: f64,
    pub t_end: f64,
    pub identities: Vec<IdentityTag>,
    pub refinement: bool,
    pub mask_threshold: f64,
    pub out_dir: PathBuf,
    pub dt_out: f64,
    pub plots: Vec<FieldLabel>,
}

const KNOWN_KEYS: &[&str] = &[
    "grid.x_min",
    "grid.x_max",
    "grid.n_points",
    "grid.hbar",
    "grid.mass",
    "potential.kind",
    "potential.omega",
    "potential.height",
    "potential.left",
    "potential.right",
    "potential.slope",
    "state.kind",
    "state.x0",
    "state.sigma",
    "state.k0",
    "state.n",
    "prop.scheme",
    "prop.dt",
    "prop.boundary",
    "prop.t_end",
    "verify.identities",
    "verify.refinement",
    "verify.mask_threshold",
    "out.dir",
    "out.dt_out",
    "out.plots",
];

struct KeyMap {
    entries: BTreeMap<String, (String, usize)>,
}

impl KeyMap {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some((raw, line)) => raw.parse::<f64>().map(Some).map_err(|_| Error::ScenarioParse {
                line,
                message: format!("key `{key}` expects a number, got `{raw}`"),
            }),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some((raw, line)) => raw
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::ScenarioParse {
                    line,
                    message: format!("key `{key}` expects a non-negative integer, got `{raw}`"),
                }),
        }
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.take(key) {
            None => Ok(None),
            Some((raw, line)) => match raw.as_str() {
                "true" => Ok(Some(true)),
                "false" => Ok(Some(false)),
                _ => Err(Error::ScenarioParse {
                    line,
                    message: format!("key `{key}` expects true or false, got `{raw}`"),
                }),
            },
        }
    }
}

fn require<T>(value: Option<T>, key: &'static str) -> Result<T> {
    value.ok_or(Error::MissingKey(key))
}

fn reject_leftover(map: &KeyMap, context: &str) -> Result<()> {
    if let Some((key, (_, line))) = map.entries.iter().next() {
        return Err(Error::ScenarioParse {
            line: *line,
            message: format!("key `{key}` is not applicable: {context}"),
        });
    }
    Ok(())
}

/// Parse a scenario document, applying defaults and validating every
/// constraint.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let stripped = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let trimmed = stripped.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::ScenarioParse {
            line: line_no,
            message: format!("expected `key = value`, got `{trimmed}`"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::UnknownKey { key, line: line_no });
        }
        if entries.contains_key(&key) {
            return Err(Error::ScenarioParse {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
        entries.insert(key, (value, line_no));
    }
    let mut map = KeyMap { entries };

    let x_min = require(map.take_f64("grid.x_min")?, "grid.x_min")?;
    let x_max = require(map.take_f64("grid.x_max")?, "grid.x_max")?;
    let n_points = require(map.take_usize("grid.n_points")?, "grid.n_points")?;
    let hbar = map.take_f64("grid.hbar")?.unwrap_or(1.0);
    let mass = map.take_f64("grid.mass")?.unwrap_or(1.0);

    let potential_kind = map
        .take("potential.kind")
        .map(|(v, l)| (v, l))
        .unwrap_or_else(|| ("free".to_string(), 0));
    let potential = match potential_kind.0.as_str() {
        "free" => PotentialSpec::Free,
        "box" => PotentialSpec::BoxWell,
        "harmonic" => {
            let omega = require(map.take_f64("potential.omega")?, "potential.omega")?;
            PotentialSpec::Harmonic { omega }
        }
        "barrier" => PotentialSpec::Barrier {
            height: require(map.take_f64("potential.height")?, "potential.height")?,
            left: require(map.take_f64("potential.left")?, "potential.left")?,
            right: require(map.take_f64("potential.right")?, "potential.right")?,
        },
        "linear" => PotentialSpec::Linear {
            slope: require(map.take_f64("potential.slope")?, "potential.slope")?,
        },
        "tabulated" => {
            return Err(Error::ConstraintViolation(
                "tabulated potentials carry a sample list and are only constructible through the API"
                    .into(),
            ))
        }
        other => {
            return Err(Error::ScenarioParse {
                line: potential_kind.1,
                message: format!("unknown potential kind `{other}`"),
            })
        }
    };
    for key in [
        "potential.omega",
        "potential.height",
        "potential.left",
        "potential.right",
        "potential.slope",
    ] {
        if let Some((_, line)) = map.take(key) {
            return Err(Error::ScenarioParse {
                line,
                message: format!(
                    "key `{key}` does not apply to potential.kind = {}",
                    potential.kind_name()
                ),
            });
        }
    }

    let state_kind = require(map.take("state.kind").map(|(v, _)| v), "state.kind")?;
    let state = match state_kind.as_str() {
        "gaussian" => StateSpec::Gaussian {
            x0: map.take_f64("state.x0")?.unwrap_or(0.0),
            sigma: require(map.take_f64("state.sigma")?, "state.sigma")?,
            k0: map.take_f64("state.k0")?.unwrap_or(0.0),
        },
        "eigenstate" => {
            let n = require(map.take_usize("state.n")?, "state.n")?;
            if n == 0 {
                return Err(Error::ConstraintViolation(
                    "state.n counts eigenstates from 1".into(),
                ));
            }
            StateSpec::Eigenstate { n }
        }
        "plane_wave" => StateSpec::PlaneWave {
            k0: map.take_f64("state.k0")?.unwrap_or(0.0),
        },
        other => {
            return Err(Error::ConstraintViolation(format!(
                "unknown state kind `{other}`"
            )))
        }
    };
    for key in ["state.x0", "state.sigma", "state.k0", "state.n"] {
        if let Some((_, line)) = map.take(key) {
            return Err(Error::ScenarioParse {
                line,
                message: format!("key `{key}` does not apply to state.kind = {state_kind}"),
            });
        }
    }

    let scheme = match map.take("prop.scheme") {
        None => Scheme::SplitFourier,
        Some((v, line)) => match v.as_str() {
            "crank_nicolson" => Scheme::CrankNicolson,
            "split_fourier" => Scheme::SplitFourier,
            other => {
                return Err(Error::ScenarioParse {
                    line,
                    message: format!("unknown scheme `{other}`"),
                })
            }
        },
    };
    let boundary = match map.take("prop.boundary") {
        None => match scheme {
            Scheme::CrankNicolson => Boundary::Dirichlet,
            Scheme::SplitFourier => Boundary::Periodic,
        },
        Some((v, line)) => match v.as_str() {
            "dirichlet" => Boundary::Dirichlet,
            "periodic" => Boundary::Periodic,
            other => {
                return Err(Error::ScenarioParse {
                    line,
                    message: format!("unknown boundary `{other}`"),
                })
            }
        },
    };
    let dt = require(map.take_f64("prop.dt")?, "prop.dt")?;
    let t_end = require(map.take_f64("prop.t_end")?, "prop.t_end")?;

    let identities = match map.take("verify.identities") {
        None => IdentityTag::ALL.to_vec(),
        Some((v, line)) => {
            if v == "all" {
                IdentityTag::ALL.to_vec()
            } else {
                let mut tags = Vec::new();
                for part in v.split(',') {
                    let name = part.trim();
                    let tag = IdentityTag::parse(name).ok_or_else(|| Error::ScenarioParse {
                        line,
                        message: format!("unknown identity tag `{name}`"),
                    })?;
                    if !tags.contains(&tag) {
                        tags.push(tag);
                    }
                }
                if tags.is_empty() {
                    return Err(Error::EmptyIdentities);
                }
                tags
            }
        }
    };
    let refinement = map.take_bool("verify.refinement")?.unwrap_or(false);
    let mask_threshold = map
        .take_f64("verify.mask_threshold")?
        .unwrap_or(crate::state::DEFAULT_MASK_THRESHOLD);

    let out_dir = PathBuf::from(
        map.take("out.dir")
            .map(|(v, _)| v)
            .unwrap_or_else(|| "out".to_string()),
    );
    let dt_out = require(map.take_f64("out.dt_out")?, "out.dt_out")?;
    let plots = match map.take("out.plots") {
        None => Vec::new(),
        Some((v, line)) => {
            let mut labels = Vec::new();
            for part in v.split(',') {
                let name = part.trim();
                if name.is_empty() {
                    continue;
                }
                let label = FieldLabel::parse(name).ok_or_else(|| Error::ScenarioParse {
                    line,
                    message: format!("unknown field label `{name}` in out.plots"),
                })?;
                if !labels.contains(&label) {
                    labels.push(label);
                }
            }
            labels
        }
    };

    reject_leftover(&map, "not consumed by this scenario")?;

    let scenario = Scenario {
        x_min,
        x_max,
        n_points,
        hbar,
        mass,
        potential,
        state,
        scheme,
        boundary,
        dt,
        t_end,
        identities,
        refinement,
        mask_threshold,
        out_dir,
        dt_out,
        plots,
    };
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    /// Check every cross-field constraint. `parse_scenario` calls this;
    /// hand-built scenarios should too.
    pub fn validate(&self) -> Result<()> {
        Grid::new(self.x_min, self.x_max, self.n_points, self.hbar, self.mass)?;
        PropagatorConfig::new(self.scheme, self.dt, self.boundary)?;

        if !(self.mask_threshold > 0.0 && self.mask_threshold < 1.0) {
            return Err(Error::ConstraintViolation(format!(
                "verify.mask_threshold must lie in (0, 1), got {}",
                self.mask_threshold
            )));
        }
        if !(self.dt_out > 0.0) {
            return Err(Error::ConstraintViolation(format!(
                "out.dt_out must be positive, got {}",
                self.dt_out
            )));
        }
        let steps = (self.dt_out / self.dt).round();
        if steps < 1.0 || (self.dt_out - steps * self.dt).abs() > 1e-9 * self.dt {
            return Err(Error::ConstraintViolation(format!(
                "out.dt_out = {} is not an integer multiple of prop.dt = {}",
                self.dt_out, self.dt
            )));
        }
        if self.t_end < 2.0 * self.dt_out {
            return Err(Error::ConstraintViolation(format!(
                "prop.t_end = {} must be at least 2 * out.dt_out = {}",
                self.t_end,
                2.0 * self.dt_out
            )));
        }
        let outs = (self.t_end / self.dt_out).round();
        if (self.t_end - outs * self.dt_out).abs() > 1e-9 * self.dt_out {
            return Err(Error::ConstraintViolation(format!(
                "prop.t_end = {} is not an integer multiple of out.dt_out = {}",
                self.t_end, self.dt_out
            )));
        }
        if self.identities.is_empty() {
            return Err(Error::EmptyIdentities);
        }

        if self.potential == PotentialSpec::BoxWell && self.boundary != Boundary::Dirichlet {
            return Err(Error::SchemeBoundaryMismatch {
                scheme: "box well",
                required: "dirichlet",
                got: self.boundary.name(),
            });
        }
        match &self.state {
            StateSpec::Eigenstate { .. } => {
                if self.boundary != Boundary::Dirichlet {
                    return Err(Error::SchemeBoundaryMismatch {
                        scheme: "eigenstate initial state",
                        required: "dirichlet",
                        got: self.boundary.name(),
                    });
                }
            }
            StateSpec::PlaneWave { k0 } => {
                if self.boundary != Boundary::Periodic {
                    return Err(Error::SchemeBoundaryMismatch {
                        scheme: "plane-wave initial state",
                        required: "periodic",
                        got: self.boundary.name(),
                    });
                }
                let grid = Grid::new(self.x_min, self.x_max, self.n_points, self.hbar, self.mass)?;
                let cycles = k0 * grid.period() / TAU;
                if (cycles - cycles.round()).abs() > 1e-9 {
                    return Err(Error::ConstraintViolation(format!(
                        "state.k0 = {k0} is not a wave number of the periodic lattice \
                         (k0 * period / 2pi = {cycles})"
                    )));
                }
            }
            StateSpec::Gaussian { sigma, .. } => {
                if !(*sigma > 0.0) {
                    return Err(Error::NonpositiveSigma(*sigma));
                }
            }
        }
        Ok(())
    }

    /// Scenario with dx, dt and dt_out halved over the same physical setup.
    /// Dirichlet grids keep both endpoints (`2n - 1` points); periodic grids
    /// keep the period (`2n` points with the last point shifted inward).
    pub fn refined(&self) -> Scenario {
        let dx = (self.x_max - self.x_min) / (self.n_points as f64 - 1.0);
        let (n_points, x_max) = match self.boundary {
            Boundary::Dirichlet => (2 * self.n_points - 1, self.x_max),
            Boundary::Periodic => (
                2 * self.n_points,
                self.x_min + (2.0 * self.n_points as f64 - 1.0) * 0.5 * dx,
            ),
        };
        Scenario {
            n_points,
            x_max,
            dt: 0.5 * self.dt,
            dt_out: 0.5 * self.dt_out,
            refinement: false,
            ..self.clone()
        }
    }

    /// Canonical flat `key = value` rendering; `parse_scenario` reproduces
    /// the scenario exactly.
    pub fn to_config_text(&self) -> String {
        let mut lines = Vec::new();
        lines.push(format!("grid.x_min = {}", self.x_min));
        lines.push(format!("grid.x_max = {}", self.x_max));
        lines.push(format!("grid.n_points = {}", self.n_points));
        lines.push(format!("grid.hbar = {}", self.hbar));
        lines.push(format!("grid.mass = {}", self.mass));
        lines.push(format!("potential.kind = {}", self.potential.kind_name()));
        match &self.potential {
            PotentialSpec::Harmonic { omega } => {
                lines.push(format!("potential.omega = {omega}"));
            }
            PotentialSpec::Barrier {
                height,
                left,
                right,
            } => {
                lines.push(format!("potential.height = {height}"));
                lines.push(format!("potential.left = {left}"));
                lines.push(format!("potential.right = {right}"));
            }
            PotentialSpec::Linear { slope } => {
                lines.push(format!("potential.slope = {slope}"));
            }
            _ => {}
        }
        match &self.state {
            StateSpec::Gaussian { x0, sigma, k0 } => {
                lines.push("state.kind = gaussian".into());
                lines.push(format!("state.x0 = {x0}"));
                lines.push(format!("state.sigma = {sigma}"));
                lines.push(format!("state.k0 = {k0}"));
            }
            StateSpec::Eigenstate { n } => {
                lines.push("state.kind = eigenstate".into());
                lines.push(format!("state.n = {n}"));
            }
            StateSpec::PlaneWave { k0 } => {
                lines.push("state.kind = plane_wave".into());
                lines.push(format!("state.k0 = {k0}"));
            }
        }
        lines.push(format!("prop.scheme = {}", self.scheme.name()));
        lines.push(format!("prop.boundary = {}", self.boundary.name()));
        lines.push(format!("prop.dt = {}", self.dt));
        lines.push(format!("prop.t_end = {}", self.t_end));
        let tags: Vec<&str> = self.identities.iter().map(|t| t.as_str()).collect();
        lines.push(format!("verify.identities = {}", tags.join(",")));
        lines.push(format!("verify.refinement = {}", self.refinement));
        lines.push(format!("verify.mask_threshold = {}", self.mask_threshold));
        lines.push(format!("out.dir = {}", self.out_dir.display()));
        lines.push(format!("out.dt_out = {}", self.dt_out));
        if !self.plots.is_empty() {
            let names: Vec<&str> = self.plots.iter().map(|l| l.as_str()).collect();
            lines.push(format!("out.plots = {}", names.join(",")));
        }
        lines.join("\n") + "\n"
    }
}

/// Everything a run produces.
#[derive(Debug)]
pub struct RunOutcome {
    pub history: RunHistory,
    pub refined: Option<RunHistory>,
    pub report: VerificationReport,
}

fn build_initial_state(
    s: &Scenario,
    grid: &Arc<Grid>,
    v: &PotentialField,
) -> Result<(WaveFunction, Vec<String>)> {
    let mut warnings = Vec::new();
    let psi = match &s.state {
        StateSpec::Gaussian { x0, sigma, k0 } => {
            let packet = gaussian_packet(grid, *x0, *sigma, *k0)?;
            if packet.truncated {
                warnings.push(format!(
                    "gaussian packet truncated by the domain (boundary density above {:.0e} of peak)",
                    crate::state::TRUNCATION_THRESHOLD
                ));
            }
            packet.psi
        }
        StateSpec::Eigenstate { n } => {
            let solution = crate::eigen::solve_stationary(v, grid, *n)?;
            WaveFunction::from_real(Arc::clone(grid), &solution.states[*n - 1], 0.0)?
        }
        StateSpec::PlaneWave { k0 } => plane_wave(grid, *k0)?,
    };
    Ok((psi, warnings))
}

fn propagate_scenario(s: &Scenario) -> Result<(RunHistory, Vec<String>)> {
    let grid = Arc::new(Grid::new(
        s.x_min, s.x_max, s.n_points, s.hbar, s.mass,
    )?);
    let v = eval_potential(&s.potential, &grid)?;
    let config = PropagatorConfig::new(s.scheme, s.dt, s.boundary)?;
    let (psi0, warnings) = build_initial_state(s, &grid, &v)?;

    // Phase-tracking guards: the CN/split phase advance per step and the
    // bracketed phase difference used by the frequency extraction must stay
    // away from the wrap boundary.
    let cfg = crate::fields::FieldConfig {
        mask_threshold: s.mask_threshold,
        periodic: s.boundary == Boundary::Periodic,
        route: Default::default(),
    };
    let e_field = energy_field(&psi0, &v, &cfg);
    let e_max = e_field.max_abs();
    if e_max * s.dt / s.hbar >= PI {
        return Err(Error::ConstraintViolation(format!(
            "prop.dt = {} too large: max|E| dt / hbar = {:.3} >= pi",
            s.dt,
            e_max * s.dt / s.hbar
        )));
    }
    if s.identities.contains(&IdentityTag::EnergyFrequency)
        && 2.0 * e_max * s.dt_out / s.hbar >= 0.999 * PI
    {
        return Err(Error::ConstraintViolation(format!(
            "out.dt_out = {} too large for frequency extraction: 2 max|E| dt_out / hbar = {:.3} \
             approaches pi; reduce out.dt_out",
            s.dt_out,
            2.0 * e_max * s.dt_out / s.hbar
        )));
    }

    let steps_per_out = (s.dt_out / s.dt).round() as usize;
    let n_outs = (s.t_end / s.dt_out).round() as usize;
    let mut prop = Propagator::new(&config, &grid, &v)?;
    let mut psi = psi0.clone();
    let mut snapshots = Vec::with_capacity(n_outs + 1);
    snapshots.push(psi0);
    for j in 1..=n_outs {
        for _ in 0..steps_per_out {
            psi = prop.step(&psi)?;
        }
        psi.time = j as f64 * s.dt_out;
        snapshots.push(psi.clone());
    }
    let history = RunHistory::new(grid, v, config, snapshots, s.dt_out, s.mask_threshold)?;
    Ok((history, warnings))
}

/// Propagate a scenario, snapshot at `dt_out`, optionally rerun refined at
/// halved dx and dt, and assemble the verification report. Identical inputs
/// produce bit-identical histories and reports.
pub fn run_scenario(s: &Scenario) -> Result<RunOutcome> {
    s.validate()?;
    let ((history, mut warnings), refined) = if s.refinement {
        let refined_scenario = s.refined();
        let (base, fine) = crate::exec::join(
            || propagate_scenario(s),
            || propagate_scenario(&refined_scenario),
        );
        let (fine_history, fine_warnings) = fine?;
        let mut base = base?;
        base.1.extend(
            fine_warnings
                .into_iter()
                .map(|w| format!("refined run: {w}")),
        );
        (base, Some(fine_history))
    } else {
        (propagate_scenario(s)?, None)
    };
    let mut report = build_report(&history, &s.identities, refined.as_ref())?;
    warnings.extend(report.warnings.drain(..));
    report.warnings = warnings;
    Ok(RunOutcome {
        history,
        refined,
        report,
    })
}
