use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use wavefield::output::{read_field_table, render_report, write_outputs};
use wavefield::{parse_scenario, run_scenario, solve_stationary, FieldLabel};

#[derive(Parser)]
#[command(
    name = "wavefield",
    about = "Propagate 1-D wave packets, extract local observable fields, and verify their pointwise identities",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario: propagate, write field tables, report and plots.
    Run {
        /// Scenario file (flat `key = value` format).
        scenario: PathBuf,
    },
    /// Run a scenario and print the verification report without writing
    /// field tables.
    Verify {
        scenario: PathBuf,
    },
    /// Solve for the lowest bound states of the scenario's potential.
    Eigen {
        scenario: PathBuf,
        /// Number of states to compute.
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// Render SVG line plots from a previously written field table.
    Plot {
        /// A `fields_XXXXX.csv` table.
        table: PathBuf,
        /// Comma-separated field labels (default: all).
        #[arg(long, value_delimiter = ',')]
        fields: Vec<String>,
        /// Output directory (default: next to the table).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_scenario(path: &Path) -> Result<wavefield::Scenario> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("invalid scenario {}", path.display()))
}

fn print_report_summary(report: &wavefield::VerificationReport) {
    for e in &report.entries {
        let ratio = match e.ratio_l2 {
            Some(r) => format!(", l2 ratio {r:.3}"),
            None => String::new(),
        };
        println!(
            "{} [{}] linf {:.3e}, l2 {:.3e}, masked {:.4}{}",
            if e.pass { "PASS" } else { "FAIL" },
            e.tag.as_str(),
            e.linf,
            e.l2,
            e.masked_fraction,
            ratio
        );
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
}

fn cmd_run(path: &Path, write_tables: bool) -> Result<bool> {
    let scenario = load_scenario(path)?;
    let outcome = run_scenario(&scenario)?;
    if write_tables {
        let written = write_outputs(
            &outcome.history,
            &outcome.report,
            &scenario.out_dir,
            &scenario.plots,
        )?;
        println!(
            "wrote {} files to {}",
            written.len(),
            scenario.out_dir.display()
        );
    } else {
        print!("{}", render_report(&outcome.report));
    }
    print_report_summary(&outcome.report);
    Ok(outcome.report.all_pass())
}

fn cmd_eigen(path: &Path, n: usize) -> Result<()> {
    let scenario = load_scenario(path)?;
    let grid = std::sync::Arc::new(wavefield::Grid::new(
        scenario.x_min,
        scenario.x_max,
        scenario.n_points,
        scenario.hbar,
        scenario.mass,
    )?);
    let v = wavefield::eval_potential(&scenario.potential, &grid)?;
    let solution = solve_stationary(&v, &grid, n)?;
    println!("# state  energy                    residual");
    for (idx, energy) in solution.energies.iter().enumerate() {
        let hu = wavefield::apply_hamiltonian(&grid, &v, &solution.states[idx]);
        let res: f64 = hu
            .iter()
            .zip(&solution.states[idx])
            .map(|(h, u)| (h - energy * u) * (h - energy * u))
            .sum::<f64>()
            .sqrt()
            * grid.dx.sqrt();
        println!("{:>7}  {:<24.16e}  {:.3e}", idx + 1, energy, res);
    }
    Ok(())
}

fn cmd_plot(table: &Path, fields: &[String], out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let data = read_field_table(table)?;
    let labels: Vec<FieldLabel> = if fields.is_empty() {
        ["w", "phi", "k", "p", "K", "Kw", "E", "omega", "j", "Q"]
            .iter()
            .filter_map(|n| FieldLabel::parse(n))
            .collect()
    } else {
        fields
            .iter()
            .map(|name| {
                FieldLabel::parse(name)
                    .with_context(|| format!("unknown field label `{name}`"))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let x = data
        .column("x")
        .context("field table is missing the x column")?;
    let mask = data.column("mask").unwrap_or_else(|| vec![1.0; x.len()]);
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => table
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let stem = table
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "table".into());
    let mut written = Vec::new();
    for label in labels {
        let y = data
            .column(label.as_str())
            .with_context(|| format!("table has no `{}` column", label.as_str()))?;
        let valid: Vec<bool> = y
            .iter()
            .zip(&mask)
            .map(|(v, &m)| v.is_finite() && m != 0.0)
            .collect();
        let svg = wavefield::plot::line_plot_svg(
            &x,
            &y,
            &valid,
            &format!("{} ({})", label.as_str(), stem),
            label.as_str(),
        );
        let path = dir.join(format!("{stem}_{}.svg", label.as_str()));
        fs::write(&path, svg).with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario } => cmd_run(scenario, true),
        Command::Verify { scenario } => cmd_run(scenario, false),
        Command::Eigen { scenario, n } => cmd_eigen(scenario, *n).map(|()| true),
        Command::Plot { table, fields, out } => cmd_plot(table, fields, out.as_deref())
            .map(|written| {
                for p in &written {
                    println!("{}", p.display());
                }
                true
            }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
