//! Command-line surface: flags over a TOML config over built-in defaults, one report per run.
//!
//! Exit codes: 0 all checks passed, 2 a numerical check failed, 1 bad input.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{run_command, COMMANDS};
pub use config::ExperimentConfig;

use crate::error::{Error, Result};
use crate::scaling_experiments::{RhoDataKind, StrichartzVariant};
use config::MeasureChoice;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CHECK: i32 = 2;
/// Thread count for the parallel loops.
pub const THREADS_ENV: &str = "KINSMOOTH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "kinsmooth", version, about = "Velocity averages, cone multipliers and smoothing constants")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// TOML experiment config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the effective config and exit.
    #[arg(long, global = true)]
    pub show_config: bool,
    /// Omit timestamps and timings from reports.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Directory for the report files.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// First RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Space dimension, 2 or 3.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Time exponent.
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Space exponent.
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Velocity weight exponent in [-1, 0]; -1 is the sphere.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta_plus: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta_minus: Option<f64>,
    /// Cone multiplier order.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,

    /// Grid points per axis.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Time period of the Strichartz probe.
    #[arg(long, global = true)]
    pub t_span: Option<f64>,
    /// Velocity nodes; 0 keeps the command default.
    #[arg(long, global = true)]
    pub velocity_nodes: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub measure: Option<MeasureArg>,
    /// Strichartz data: general or radial.
    #[arg(long, global = true, value_enum)]
    pub variant: Option<VariantArg>,
    /// rho-scan data: generic or radial-x.
    #[arg(long, global = true, value_enum)]
    pub data: Option<DataArg>,
    /// Multiplier, e.g. "dplus:0.25*dminus:0.25".
    #[arg(long, global = true)]
    pub symbol: Option<String>,

    /// Plate thicknesses for knapp-scan.
    #[arg(long, global = true, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Dyadic indices for dyadic-scan and rho-scan.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub ks: Option<Vec<i32>>,
    /// Resolutions for extremiser.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Harmonic degrees for funk-hecke and sharp-radial.
    #[arg(long, global = true, value_delimiter = ',')]
    pub modes: Option<Vec<usize>>,
    /// Number of consecutive seeds.
    #[arg(long, global = true)]
    pub seeds: Option<u64>,
    /// q and r lattice as lo:hi:step.
    #[arg(long, global = true)]
    pub grid_qr: Option<String>,
    /// Sample points for radon.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Acceptance criteria for selftest, e.g. 1,2,6.
    #[arg(long, global = true, value_delimiter = ',')]
    pub criteria: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Exponent thresholds over a (q, r) lattice.
    Thresholds,
    /// Sharp constant by closed form and 1-D maximisation.
    Constants,
    /// Radon profile of the kappa weight: closed form against quadrature.
    Radon,
    /// rho f snapshot and cone support check.
    Average,
    /// Duality identity residuals on random band-limited g.
    DualityCheck,
    /// Knapp-plate norm ratios against delta and the fitted slope.
    KnappScan,
    /// Dyadic cone pieces against k and the fitted upper envelope.
    DyadicScan,
    /// Dyadic-shell L2 mass of rho f against the shell index.
    RhoScan,
    /// Series against slice quadrature per harmonic degree.
    FunkHecke,
    /// Radial sharp constant and the per-degree integrals I_k against I_0.
    SharpRadial,
    /// Attainment ratio over a resolution sequence.
    Extremiser,
    /// Mixed-norm ratio of the wave propagator on annulus-supported data.
    StrichartzProbe,
    /// The full acceptance suite.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Thresholds => "thresholds",
            Command::Constants => "constants",
            Command::Radon => "radon",
            Command::Average => "average",
            Command::DualityCheck => "duality-check",
            Command::KnappScan => "knapp-scan",
            Command::DyadicScan => "dyadic-scan",
            Command::RhoScan => "rho-scan",
            Command::FunkHecke => "funk-hecke",
            Command::SharpRadial => "sharp-radial",
            Command::Extremiser => "extremiser",
            Command::StrichartzProbe => "strichartz-probe",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    Sphere,
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    General,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataArg {
    Generic,
    RadialX,
}

impl Cli {
    /// Defaults, then the config file, then flags.
    pub fn effective_config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => {
                let src = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config { path: "<file>".into(), msg: format!("{}: {e}", p.display()) })?;
                ExperimentConfig::from_toml(&src)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(cmd) = self.command {
            c.command = Some(cmd.name().into());
        }
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = &self.$flag { c.$($field).+ = v.clone().into(); })*
            };
        }
        set!(
            seed => seed,
            d => exponents.d, q => exponents.q, r => exponents.r, kappa => exponents.kappa,
            beta_plus => exponents.beta_plus, beta_minus => exponents.beta_minus, alpha => exponents.alpha,
            n => grid.n, t_span => grid.t_span, velocity_nodes => grid.velocity_nodes,
            symbol => symbol, deltas => scales.deltas, ks => scales.ks, sizes => scales.sizes,
            modes => scales.modes, seeds => scales.seeds, grid_qr => scales.grid_qr, points => scales.points,
            criteria => scales.criteria, output_dir => output.dir,
        );
        if let Some(m) = self.measure {
            c.measure.kind = match m {
                MeasureArg::Sphere => MeasureChoice::Sphere,
                MeasureArg::Ball => MeasureChoice::Ball,
            };
        }
        if let Some(v) = self.variant {
            c.measure.variant = match v {
                VariantArg::General => StrichartzVariant::General,
                VariantArg::Radial => StrichartzVariant::Radial,
            };
        }
        if let Some(v) = self.data {
            c.measure.data = match v {
                DataArg::Generic => RhoDataKind::Generic,
                DataArg::RadialX => RhoDataKind::RadialX,
            };
        }
        c.output.deterministic |= self.deterministic;
        c.validate()?;
        Ok(c)
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config { path: THREADS_ENV.into(), msg: format!("need a positive integer, got {v:?}") })?;
    // a pool built earlier in the same process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_INPUT,
            };
            let _ = if code == EXIT_PASS { write!(out, "{}", e.render()) } else { write!(err, "{}", e.render()) };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    configure_threads()?;
    let cfg = cli.effective_config()?;
    if cli.show_config {
        write!(out, "{}", cfg.to_toml())?;
        return Ok(EXIT_PASS);
    }
    let Some(name) = cfg.command.clone() else {
        return Err(Error::Config { path: "command".into(), msg: format!("no command given (one of {})", COMMANDS.join(", ")) });
    };
    if !COMMANDS.contains(&name.as_str()) {
        return Err(Error::Config { path: "command".into(), msg: format!("unknown command {name:?}") });
    }
    let t0 = Instant::now();
    let mut art = if name == "selftest" {
        commands::selftest(&cfg, |o| {
            let _ = writeln!(out, "{}", o.line());
        })?
    } else {
        run_command(&name, &cfg)?
    };
    art.report.stamp(t0.elapsed().as_secs_f64(), cfg.output.deterministic);
    let files = art.write(&cfg.output.dir)?;
    writeln!(out, "{}: {} [{}]", name, art.report.summary, if art.report.pass { "PASS" } else { "FAIL" })?;
    writeln!(out, "claim: {}", art.report.claim)?;
    for f in files {
        writeln!(out, "wrote {}", f.display())?;
    }
    if !art.report.pass {
        writeln!(err, "check failed: {}", art.report.summary)?;
        return Ok(EXIT_CHECK);
    }
    Ok(EXIT_PASS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("kinsmooth").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_defaults() {
        let c = parse(&["constants", "--d", "3", "--beta-minus", "0.1", "--ks", "-1,2,3"]).effective_config().unwrap();
        assert_eq!(c.command.as_deref(), Some("constants"));
        assert_eq!(c.exponents.d, 3);
        assert_eq!(c.exponents.beta_minus, 0.1);
        assert_eq!(c.scales.ks, vec![-1, 2, 3]);
        let c = parse(&["thresholds", "--kappa", "-1", "--grid-qr", "2:8:0.5"]).effective_config().unwrap();
        assert_eq!(c.exponents.kappa, -1.0);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "command = \"radon\"\nseed = 9\n[exponents]\nd = 3\nkappa = -0.5\n").unwrap();
        let c = parse(&["--config", p.to_str().unwrap(), "--kappa", "0"]).effective_config().unwrap();
        assert_eq!(c.command.as_deref(), Some("radon"));
        assert_eq!((c.seed, c.exponents.d, c.exponents.kappa), (9, 3, 0.0));
    }

    #[test]
    fn every_command_has_a_name() {
        for (cmd, name) in [(Command::DualityCheck, "duality-check"), (Command::StrichartzProbe, "strichartz-probe")] {
            assert_eq!(cmd.name(), name);
        }
        assert_eq!(COMMANDS.len(), 13);
    }
}
