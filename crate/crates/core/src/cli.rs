//! Command-line front end: `rank`, `infsup` and `converge`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::refelem::BubbleKind;
use crate::stability::{build_macro_matrix, check_m1, infsup_sweep, MAX_INFSUP_LEVEL};
use crate::verify::{run_convergence_study_with, ErrorReport, ExampleId, VelocityPart, VerifyError, MAX_STUDY_LEVEL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_SINGULAR: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

/// Deflated eigenvalues below this are reported as a lost inf-sup bound.
const INFSUP_WARN: f64 = 1e-5;

#[derive(Debug, Parser)]
#[command(name = "quadmini", version, about = "Bubble-enriched Q1-Q1 Stokes elements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact macro-element matrix, its rank and the patch test verdict.
    Rank(CommonArgs),
    /// Discrete inf-sup constants on levels 1..=max-level (at most 4).
    Infsup(CommonArgs),
    /// Convergence study against a manufactured solution.
    Converge(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long, value_enum, default_value_t = BubbleArg::Corner)]
    bubble: BubbleArg,
    #[arg(long, value_parser = ["1", "2"])]
    example: Option<String>,
    #[arg(long)]
    max_level: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    shear: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Velocity field measured by the error norms.
    #[arg(long, value_enum, default_value_t = PartArg::Bilinear)]
    velocity_error: PartArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BubbleArg {
    Standard,
    Corner,
    Linear,
    Quadsym,
}

impl From<BubbleArg> for BubbleKind {
    fn from(b: BubbleArg) -> Self {
        match b {
            BubbleArg::Standard => BubbleKind::Standard,
            BubbleArg::Corner => BubbleKind::Corner,
            BubbleArg::Linear => BubbleKind::Linear,
            BubbleArg::Quadsym => BubbleKind::QuadSym,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PartArg {
    Bilinear,
    Enriched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Rank,
    Infsup,
    Converge,
}

/// Validated run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub bubble: BubbleKind,
    pub example: Option<ExampleId>,
    pub max_level: usize,
    pub shear: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub velocity_part: VelocityPart,
}

impl RunConfig {
    fn from_args(command: CommandKind, a: CommonArgs) -> Result<Self, String> {
        let max_level = match command {
            CommandKind::Rank => 0,
            CommandKind::Infsup => {
                let l = a.max_level.unwrap_or(MAX_INFSUP_LEVEL);
                if !(1..=MAX_INFSUP_LEVEL).contains(&l) {
                    return Err(format!("infsup supports --max-level 1..={MAX_INFSUP_LEVEL}, got {l}"));
                }
                l
            }
            CommandKind::Converge => {
                let l = a.max_level.unwrap_or(MAX_STUDY_LEVEL);
                if !(1..=MAX_STUDY_LEVEL).contains(&l) {
                    return Err(format!("converge supports --max-level 1..={MAX_STUDY_LEVEL}, got {l}"));
                }
                l
            }
        };
        if command != CommandKind::Rank && !(0.0..0.5).contains(&a.shear) {
            return Err(format!("--shear must lie in [0, 0.5), got {}", a.shear));
        }
        let example = a.example.as_deref().map(str::parse).transpose()?;
        if command == CommandKind::Converge && example.is_none() {
            return Err("converge requires --example 1 or --example 2".into());
        }
        Ok(Self {
            command,
            bubble: a.bubble.into(),
            example,
            max_level,
            shear: a.shear,
            format: a.format,
            out: a.out,
            velocity_part: match a.velocity_error {
                PartArg::Bilinear => VelocityPart::Bilinear,
                PartArg::Enriched => VelocityPart::Enriched,
            },
        })
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let (kind, args) = match cli.command {
        Command::Rank(a) => (CommandKind::Rank, a),
        Command::Infsup(a) => (CommandKind::Infsup, a),
        Command::Converge(a) => (CommandKind::Converge, a),
    };
    let config = match RunConfig::from_args(kind, args) {
        Ok(c) => c,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            return EXIT_INVALID;
        }
    };
    execute(&config, stdout, stderr)
}

/// Runs a validated configuration.
pub fn execute(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match config.command {
        CommandKind::Rank => cmd_rank(config),
        CommandKind::Infsup => cmd_infsup(config, stderr),
        CommandKind::Converge => cmd_converge(config),
    };
    match result {
        Ok(text) => match emit(config, &text, stdout) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                EXIT_FAILURE
            }
        },
        Err(CliError::Singular(level)) => {
            let _ = writeln!(
                stderr,
                "error: singular system at level {level} ({} bubble); \
                 the standard bubble is expected to leave a spurious pressure mode",
                config.bubble
            );
            EXIT_SINGULAR
        }
        Err(CliError::Other(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn emit(config: &RunConfig, text: &str, stdout: &mut dyn Write) -> std::io::Result<()> {
    match &config.out {
        Some(path) => fs::write(path, text),
        None => stdout.write_all(text.as_bytes()),
    }
}

enum CliError {
    Singular(usize),
    Other(String),
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Other(e.to_string())
    }
}

pub fn cmd_rank_text(bubble: BubbleKind) -> Result<String, String> {
    let d = build_macro_matrix(bubble).map_err(|e| e.to_string())?;
    let report = check_m1(bubble).map_err(|e| e.to_string())?;
    let mut s = String::new();
    let _ = writeln!(s, "bubble: {bubble}");
    let _ = writeln!(s, "D (9 x 10):");
    let _ = write!(s, "{d}");
    let _ = writeln!(s, "rank: {}", report.rank);
    let _ = writeln!(s, "dim B_i: {}", report.dim_bi);
    let verdict = if report.m1_satisfied { "M1 HOLDS" } else { "M1 FAILS" };
    let _ = writeln!(s, "{verdict}");
    Ok(s)
}

fn cmd_rank(config: &RunConfig) -> Result<String, CliError> {
    cmd_rank_text(config.bubble).map_err(CliError::Other)
}

fn cmd_infsup(config: &RunConfig, stderr: &mut dyn Write) -> Result<String, CliError> {
    let rows = infsup_sweep(config.bubble, config.max_level, config.shear)?;
    let mut s = String::new();
    match config.format {
        Format::Csv => {
            let _ = writeln!(s, "level,n_elem,beta_h");
            for r in &rows {
                let _ = writeln!(s, "{},{},{}", r.level, r.elements, sci(r.beta));
            }
        }
        Format::Markdown => {
            let _ = writeln!(s, "| level | # elem. | beta_h |");
            let _ = writeln!(s, "|---|---|---|");
            for r in &rows {
                let _ = writeln!(s, "| {} | {} | {} |", r.level, r.elements, sci(r.beta));
            }
        }
    }
    for r in rows.iter().filter(|r| r.beta <= INFSUP_WARN) {
        let _ = writeln!(
            stderr,
            "warning: beta_h = {} at level {}: no uniform inf-sup bound for the {} bubble",
            sci(r.beta),
            r.level,
            config.bubble
        );
    }
    Ok(s)
}

fn cmd_converge(config: &RunConfig) -> Result<String, CliError> {
    let example = config
        .example
        .ok_or_else(|| CliError::Other("converge requires --example".into()))?;
    match run_convergence_study_with(
        example,
        config.bubble,
        config.max_level,
        config.shear,
        config.velocity_part,
    ) {
        Ok(report) => Ok(format_report(&report, config.format)),
        Err(VerifyError::Singular { level }) => Err(CliError::Singular(level)),
        Err(e) => Err(e.into()),
    }
}

/// Mantissa/exponent notation with six significant digits, e.g.
/// `3.23129e-02`.
pub fn sci(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn rate(r: Option<f64>) -> String {
    r.map(|v| format!("{v:.2}")).unwrap_or_default()
}

/// Table with columns level, elements, then each error and its rate.
pub fn format_report(report: &ErrorReport, format: Format) -> String {
    let mut s = String::new();
    match format {
        Format::Csv => {
            let _ = writeln!(s, "level,n_elem,h1_u,h1_rate,l2_u,l2_rate,l2_p,p_rate");
            for l in &report.levels {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    l.level,
                    l.elements,
                    sci(l.norms.h1_u),
                    rate(l.h1_rate),
                    sci(l.norms.l2_u),
                    rate(l.l2_rate),
                    sci(l.norms.l2_p),
                    rate(l.p_rate)
                );
            }
        }
        Format::Markdown => {
            let _ = writeln!(
                s,
                "| level | # elem. | H1 error u | rate | L2 error u | rate | L2 error p | rate |"
            );
            let _ = writeln!(s, "|---:|---:|---:|---:|---:|---:|---:|---:|");
            for l in &report.levels {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} | {} | {} | {} | {} |",
                    l.level,
                    l.elements,
                    sci(l.norms.h1_u),
                    rate(l.h1_rate),
                    sci(l.norms.l2_u),
                    rate(l.l2_rate),
                    sci(l.norms.l2_p),
                    rate(l.p_rate)
                );
            }
        }
    }
    s
}
