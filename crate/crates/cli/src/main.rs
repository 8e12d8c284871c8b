use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cornerflow::config::{ExperimentConfig, SweepKey};
use cornerflow::experiment::{diagnose_field, reference_field, run, run_sweep, ReferenceRequest};
use cornerflow::gas::GasModel;
use cornerflow::io::{contours_csv, interior_levels, write_atomic, FieldFile};

#[derive(Parser)]
#[command(name = "cornerflow", version, about = "Subsonic flow along infinite corners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configured experiment and write its field file and report.
    Solve {
        config: PathBuf,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the experiment once per value of a parameter.
    Sweep {
        config: PathBuf,
        /// L, amplitude or mesh.
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Sample an exact field on a strip grid.
    Reference {
        kind: ReferenceKindArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        n_ell: usize,
        #[arg(long, default_value_t = 64)]
        n_lam: usize,
        #[arg(long, default_value_t = 0.0)]
        ell_min: f64,
        #[arg(long, default_value_t = 6.0)]
        ell_max: f64,
        /// Wedge opening for `mode` and `vortex-sheet`.
        #[arg(long, default_value_t = 1.5 * std::f64::consts::PI)]
        theta: f64,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Far-field velocity `vx,vy` above the sheet.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.3, 0.0])]
        v_inf: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        offset: Option<f64>,
        /// Compressible sheet with this adiabatic exponent.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0.95)]
        mach_cap: f64,
    },
    /// Recompute diagnostics from a stored field file.
    Diagnose {
        field: PathBuf,
        config: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Stream-function contour polylines as CSV.
    Export {
        #[arg(long)]
        csv: PathBuf,
        /// Number of evenly spaced levels.
        #[arg(long, default_value_t = 12)]
        levels: usize,
        /// Explicit levels; overrides `--levels`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        level: Vec<f64>,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceKindArg {
    Example,
    Mode,
    VortexSheet,
}

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(1)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{suffix}"),
    };
    path.with_file_name(name)
}

fn cmd_solve(config: &Path, field: Option<PathBuf>, report: Option<PathBuf>) -> ExitCode {
    let cfg = match ExperimentConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let field = field.unwrap_or(cfg.output.field.clone());
    let report = report.unwrap_or(cfg.output.report.clone());
    if let Err(e) = outcome.field.write(&field).and_then(|_| outcome.report.write(&report)) {
        return fail(e);
    }
    if let Some(e) = &outcome.solve_error {
        eprintln!("solver: {e}");
    }
    eprintln!("{}: {}", outcome.status.label(), report.display());
    ExitCode::from(outcome.status.exit_code() as u8)
}

fn cmd_sweep(config: &Path, key: &str, values: &[f64]) -> ExitCode {
    let cfg = match ExperimentConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let key: SweepKey = match key.parse() {
        Ok(k) => k,
        Err(e) => return fail(e),
    };
    let sweep = match run_sweep(&cfg, key, values) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    for (n, case) in sweep.cases.iter().enumerate() {
        let tag = format!("{}{n}", key.label());
        let o = &case.outcome;
        let written = o
            .field
            .write(&with_suffix(&cfg.output.field, &tag))
            .and_then(|_| o.report.write(&with_suffix(&cfg.output.report, &tag)));
        if let Err(e) = written {
            return fail(e);
        }
    }
    let summary = with_suffix(&cfg.output.report, "sweep");
    if let Err(e) = sweep.summary.write(&summary) {
        return fail(e);
    }
    eprintln!("{} cases: {}", sweep.cases.len(), summary.display());
    ExitCode::from(sweep.exit_code() as u8)
}

fn cmd_diagnose(field: &Path, config: &Path, report: Option<PathBuf>) -> ExitCode {
    let cfg = match ExperimentConfig::load(config) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let data = match FieldFile::read(field) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    let r = match diagnose_field(&cfg, &data) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let out = report.unwrap_or_else(|| with_suffix(&field.with_extension("txt"), "diagnostics"));
    match r.write(&out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { config, field, report } => cmd_solve(&config, field, report),
        Command::Sweep { config, key, values } => cmd_sweep(&config, &key, &values),
        Command::Reference {
            kind,
            out,
            n_ell,
            n_lam,
            ell_min,
            ell_max,
            theta,
            k,
            amplitude,
            v_inf,
            offset,
            gamma,
            mach_cap,
        } => {
            let req = match kind {
                ReferenceKindArg::Example => ReferenceRequest::Example { ell_max, n_ell, n_lam },
                ReferenceKindArg::Mode => ReferenceRequest::Mode {
                    theta,
                    k,
                    amplitude,
                    ell_max,
                    n_ell,
                    n_lam,
                },
                ReferenceKindArg::VortexSheet => {
                    let [vx, vy] = v_inf[..] else {
                        return fail("--v-inf takes two components `vx,vy`");
                    };
                    let gas = match gamma.map(|g| GasModel::new(g, mach_cap)).transpose() {
                        Ok(g) => g,
                        Err(e) => return fail(format!("--gamma/--mach-cap: {e}")),
                    };
                    ReferenceRequest::VortexSheet {
                        theta,
                        v_inf: [vx, vy],
                        offset,
                        gas,
                        ell_min,
                        ell_max,
                        n_ell,
                        n_lam,
                    }
                }
            };
            match reference_field(&req).map_err(|e| e.to_string()).and_then(|f| f.write(&out).map_err(|e| e.to_string())) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(e),
            }
        }
        Command::Diagnose { field, config, report } => cmd_diagnose(&field, &config, report),
        Command::Export { csv, levels, level, out } => {
            let data = match FieldFile::read(&csv) {
                Ok(f) => f,
                Err(e) => return fail(e),
            };
            let lv = if level.is_empty() {
                interior_levels(&data.column("psi").expect("psi column exists"), levels)
            } else {
                level
            };
            let text = match contours_csv(&data, &lv) {
                Ok(t) => t,
                Err(e) => return fail(e),
            };
            match out {
                Some(p) => match write_atomic(&p, text.as_bytes()) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(e),
                },
                None => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
            }
        }
    }
}
