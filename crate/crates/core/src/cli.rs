//! Command-line surface. All commands print a JSON report on stdout, or a
//! table with `--pretty`.
//!
//! Exit codes: 0 success, 1 I/O, parse or solver error, 2 equivalence
//! failure (`verify`), 3 shock precondition violated.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::centrality;
use crate::clearing;
use crate::equivalence;
use crate::error::{Error, Result};
use crate::generate;
use crate::io::{self, Format, Sidecars, SystemDocument};
use crate::linalg;
use crate::model::{ClearingParams, FinancialSystem, Rate};
use crate::report::{CentralityReport, ClearingReport, Parameters, RunReport, ScenarioReport};
use crate::shocks::{self, SearchOrigin, SearchStrategy, ShockKind};
use crate::spectral::{self, SpectralReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "clearnet",
    version,
    about = "Clearing vectors, shocks and Katz centrality for obligation networks"
)]
pub struct Cli {
    /// Human-readable table instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct InputArgs {
    /// System file (.json document or .csv liability matrix).
    #[arg(long)]
    pub input: PathBuf,
    /// One-column CSV of pre-shock assets (required for CSV input).
    #[arg(long)]
    pub assets: Option<PathBuf>,
    /// One-column CSV of external assets; defaults to the pre-shock assets.
    #[arg(long)]
    pub external: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FileFormat>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FileFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Full,
    Relaxed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OriginArg {
    Boundary,
    Unshocked,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clearing payment vector by the fictitious default sequence.
    Clear {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        ra: f64,
    },
    /// Apply a system-wide shock and clear the shocked system.
    Shock {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Interpolation coefficient in (0, 1).
        #[arg(long)]
        m: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Run the stepwise relaxed search with this many steps instead of
        /// the interpolated relaxed shock.
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long, value_enum, default_value = "boundary")]
        origin: OriginArg,
        #[arg(long)]
        bisect: bool,
    },
    /// Generalized Katz centrality of the full-default shock.
    Katz {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        m: f64,
    },
    /// Check that clearing losses equal the Katz measure.
    Verify {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        m: f64,
        /// Absolute tolerance; defaults to 1e-8 * max(1, max l).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Write a seeded random system document.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 1.0)]
        weight_scale: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral radius of C and invertibility of I - rC.
    Spectral {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        r: Option<f64>,
    },
}

struct Outcome {
    report: Option<RunReport>,
    code: i32,
}

impl Outcome {
    fn ok(report: RunReport) -> Self {
        Self {
            report: Some(report),
            code: EXIT_OK,
        }
    }
}

fn load(input: &InputArgs) -> Result<(SystemDocument, FinancialSystem)> {
    let format = match input.format {
        Some(FileFormat::Csv) => Format::Csv,
        Some(FileFormat::Json) => Format::Json,
        None => Format::from_path(&input.input),
    };
    let sidecars = Sidecars {
        pre_shock_assets: input.assets.as_deref(),
        external_assets: input.external.as_deref(),
    };
    let doc = io::load_document(&input.input, format, sidecars)?;
    let system = doc.to_system()?;
    Ok((doc, system))
}

fn default_tol(system: &FinancialSystem) -> f64 {
    1e-8 * system.total_liabilities().amax().max(1.0)
}

fn clear_into(
    report: &mut RunReport,
    system: &FinancialSystem,
    params: &ClearingParams,
) -> Result<()> {
    let solution = clearing::fictitious_default_sequence(system, params)?;
    let oracle = clearing::picard_clearing_oracle(system, params, None)?;
    let gap = linalg::max_gap(&oracle, &solution.payments, system.bank_count());
    let sigma = clearing::systemic_loss(&solution, system.total_liabilities());
    if !solution.uniqueness_condition_met {
        report.warnings.push(
            "some node has non-positive external assets; the clearing vector may not be unique"
                .into(),
        );
    }
    report.clearing = Some(ClearingReport::new(&solution, Some(gap)));
    report.sigma = Some(sigma.rows(0, system.bank_count()).iter().copied().collect());
    if system.shock().iter().any(|&s| s != 0.0) {
        if let Ok(adj) = clearing::capitalization_adjusted_loss(&solution, system) {
            report.capitalization_adjusted_loss =
                Some(adj.rows(0, system.bank_count()).iter().copied().collect());
        }
    }
    Ok(())
}

fn run_command(command: &Command) -> Result<Outcome> {
    match command {
        Command::Clear { input, r, ra } => {
            let (doc, system) = load(input)?;
            let params = ClearingParams::new(*r).with_external_recovery(*ra);
            let mut report = RunReport::new(
                "clear",
                doc,
                Parameters {
                    r: Some(Rate::Uniform(*r)),
                    r_a: Some(*ra),
                    ..Default::default()
                },
            );
            clear_into(&mut report, &system, &params)?;
            Ok(Outcome::ok(report))
        }
        Command::Shock {
            input,
            kind,
            m,
            r,
            max_steps,
            origin,
            bisect,
        } => {
            let (doc, system) = load(input)?;
            let params = ClearingParams::new(*r);
            let require_m = || {
                m.map(Rate::Uniform)
                    .ok_or_else(|| Error::Validation("--m is required for this shock".into()))
            };
            let origin = match origin {
                OriginArg::Boundary => SearchOrigin::FundamentalBoundary,
                OriginArg::Unshocked => SearchOrigin::Unshocked,
            };
            let mut parameters = Parameters {
                r: Some(Rate::Uniform(*r)),
                r_a: Some(1.0),
                m: m.map(Rate::Uniform),
                ..Default::default()
            };
            let mut warnings = Vec::new();
            let scenario = match (kind, max_steps) {
                (KindArg::Full, _) => {
                    parameters.kind = Some(ShockKind::FullDefault);
                    shocks::full_default_shock(&system, &require_m()?)?
                }
                (KindArg::Relaxed, Some(steps)) => {
                    parameters.kind = Some(ShockKind::Relaxed);
                    parameters.max_steps = Some(*steps);
                    parameters.origin = Some(origin);
                    let strategy = if *bisect {
                        SearchStrategy::Bisect
                    } else {
                        SearchStrategy::Linear
                    };
                    shocks::relaxed_shock_search(&system, &params, *steps, origin, strategy)?
                }
                (KindArg::Relaxed, None) => {
                    parameters.kind = Some(ShockKind::Relaxed);
                    let built =
                        shocks::relaxed_interpolated_shock(&system, &params, &require_m()?)?;
                    warnings.push(format!(
                        "printed closed form departs from the certified clearing vector by {:.6e}",
                        built.printed_form_gap
                    ));
                    built.scenario
                }
            };
            let mut report = RunReport::new("shock", doc, parameters);
            report.scenario = Some(ScenarioReport::from(&scenario));
            clear_into(&mut report, &scenario.system, &params)?;
            report.warnings.extend(warnings);
            Ok(Outcome::ok(report))
        }
        Command::Katz { input, r, m } => {
            let (doc, system) = load(input)?;
            let (r, m) = (Rate::Uniform(*r), Rate::Uniform(*m));
            let res = centrality::system_katz(&system, &r, &m)?;
            let mut report = RunReport::new(
                "katz",
                doc,
                Parameters {
                    r: Some(r),
                    m: Some(m),
                    ..Default::default()
                },
            );
            report.centrality = Some(CentralityReport::new(&res, system.bank_count()));
            Ok(Outcome::ok(report))
        }
        Command::Verify { input, r, m, tol } => {
            let (doc, system) = load(input)?;
            let tol = tol.unwrap_or_else(|| default_tol(&system));
            let params = ClearingParams::new(*r);
            let m_rate = Rate::Uniform(*m);
            let full = equivalence::verify_full_shock_equivalence(&system, &params, &m_rate, tol)?;
            let mut report = RunReport::new(
                "verify",
                doc,
                Parameters {
                    r: Some(Rate::Uniform(*r)),
                    r_a: Some(1.0),
                    m: Some(m_rate.clone()),
                    kind: Some(ShockKind::FullDefault),
                    tol: Some(tol),
                    ..Default::default()
                },
            );
            match equivalence::verify_relaxed_equivalence(&system, &params, &m_rate, tol) {
                Ok(relaxed) => {
                    if let Some(gap) = relaxed.printed_form_gap {
                        if gap > tol {
                            report.warnings.push(format!(
                                "printed relaxed closed form differs from the clearing vector by {gap:.6e}"
                            ));
                        }
                    }
                    if !relaxed.pass {
                        report
                            .warnings
                            .push("relaxed shock did not certify against its candidate".into());
                    }
                    report.relaxed_equivalence = Some(relaxed);
                }
                Err(e) => report.warnings.push(format!("relaxed shock: {e}")),
            }
            let code = if full.pass { EXIT_OK } else { EXIT_FAILED };
            report.equivalence = Some(full);
            Ok(Outcome {
                report: Some(report),
                code,
            })
        }
        Command::Gen {
            seed,
            n,
            density,
            weight_scale,
            out,
        } => {
            let system = generate::generate_random_system(*seed, *n, *density, *weight_scale)?;
            io::save_document(out, &SystemDocument::from_system(&system, None))?;
            Ok(Outcome {
                report: None,
                code: EXIT_OK,
            })
        }
        Command::Spectral { input, r } => {
            let (doc, system) = load(input)?;
            let c = system.relative_claims().matrix();
            let mut report = RunReport::new(
                "spectral",
                doc,
                Parameters {
                    r: r.map(Rate::Uniform),
                    ..Default::default()
                },
            );
            match r {
                Some(r) => {
                    let check = spectral::check_invertibility(c, *r, true)?;
                    report.invertible = Some(check.invertible);
                    report.spectral = Some(check.report);
                }
                None => report.spectral = Some(SpectralReport::compute(c, true)?),
            }
            Ok(Outcome::ok(report))
        }
    }
}

/// Parses `argv`, runs the command and writes to the given streams.
/// Returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                EXIT_ERROR
            } else {
                let _ = write!(stdout, "{e}");
                EXIT_OK
            };
        }
    };
    match run_command(&cli.command) {
        Ok(outcome) => {
            if let Some(report) = outcome.report {
                let text = if cli.pretty {
                    report.to_table()
                } else {
                    report.to_json() + "\n"
                };
                let _ = stdout.write_all(text.as_bytes());
            }
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_precondition() {
                EXIT_PRECONDITION
            } else {
                EXIT_ERROR
            }
        }
    }
}
