//! Command implementations for the `mzv` binary.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mzv_core::context::{certified_digits, to_decimal, to_fixed};
use mzv_core::identities::{verify_all, ResultRow, Verdict, VerificationResult};
use mzv_core::multisum::{closed_form, dual_index, i_closed, multisum_eval, ClosedFamily, MultiIndex, SumKind};
use mzv_core::quadrature::integral_by_id;
use mzv_core::series::{arcsin_pow_stream, elem_stream, inv_sqrt_stream, CoefficientStream, ElemFunction};
use mzv_core::special::{constant, ConstantName};
use mzv_core::{Error, Estimate, PrecisionContext};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_EVAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "mzv", version, about = "Multiple zeta values, central binomial series and their identities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalKind {
    Zeta,
    T,
    Mu,
    Mubar,
    Const,
    Closed,
    Integral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a nested sum, constant, closed form or catalog integral.
    Eval {
        kind: EvalKind,
        /// Multi-index (`3,{2}^2`), constant name, closed-form family or integral id.
        target: String,
        #[arg(long, default_value_t = 30)]
        digits: u32,
        /// Parameter for families and one-parameter integrals.
        #[arg(long)]
        n: Option<u32>,
        /// Comma-separated parameters for multi-parameter integrals.
        #[arg(long, value_delimiter = ',')]
        params: Vec<u32>,
    },
    /// Print exact Maclaurin coefficients of a stream.
    Series {
        /// arcsin, arcsin2_over_2, arcsinh, arctan, arctanh, inv_sqrt or arcsin-pow.
        name: String,
        /// Power for `arcsin-pow`.
        power: Option<u32>,
        #[arg(long, default_value_t = 5)]
        terms: u64,
    },
    /// Print the dual of an admissible index.
    Dual { index: String },
    /// Run the identity registry.
    Verify {
        /// Glob over identity ids.
        pattern: Option<String>,
        #[arg(long, conflicts_with = "pattern")]
        filter: Option<String>,
        #[arg(long, conflicts_with_all = ["pattern", "filter"])]
        all: bool,
        #[arg(long, default_value_t = 30)]
        digits: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Treat flagged discrepancies and refuted conjectures as failures.
        #[arg(long)]
        strict: bool,
    },
    /// Write the JSON report for the whole registry.
    Report {
        #[arg(long, default_value_t = 30)]
        digits: u32,
        #[arg(long)]
        filter: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportContext {
    pub digits: u32,
    pub series_cap: u64,
    pub quad_max_level: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub flagged: usize,
    pub conjectures: usize,
}

impl Summary {
    pub fn of(results: &[ResultRow]) -> Self {
        let mut s = Summary::default();
        for r in results {
            match r.verdict {
                Verdict::Pass => s.pass += 1,
                Verdict::Fail => s.fail += 1,
                Verdict::FlagDiscrepancy => s.flagged += 1,
                Verdict::ConjectureSupported | Verdict::ConjectureRefuted => s.conjectures += 1,
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub context: ReportContext,
    pub results: Vec<ResultRow>,
    pub summary: Summary,
    pub wall_time_seconds: f64,
}

impl Report {
    pub fn new(ctx: &PrecisionContext, results: &[VerificationResult], wall_time_seconds: f64) -> Self {
        let mut rows: Vec<ResultRow> = results.iter().map(|r| r.row(ctx.digits())).collect();
        rows.sort_by(|a, b| a.id.cmp(&b.id));
        Report {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            context: ReportContext {
                digits: ctx.digits(),
                series_cap: ctx.series_cap(),
                quad_max_level: ctx.quad_max_level(),
            },
            summary: Summary::of(&rows),
            results: rows,
            wall_time_seconds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(e: impl ToString) -> Self {
        Self {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }

    fn eval(e: impl ToString) -> Self {
        Self {
            code: EXIT_EVAL,
            message: e.to_string(),
        }
    }

    fn io(e: impl ToString) -> Self {
        Self {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn context(digits: u32) -> CliResult<PrecisionContext> {
    PrecisionContext::new(digits).map_err(CliError::usage)
}

fn write_out(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).map_err(CliError::io)
}

fn print_estimate(out: &mut dyn Write, e: &Estimate, digits: u32) -> CliResult<()> {
    let cert = certified_digits(&e.error, digits);
    let text = format!(
        "{}\nerror <= {}\ncertified digits: {cert}\n",
        to_fixed(&e.value, digits as usize),
        to_decimal(&e.error, 3)
    );
    write_out(out, &text)
}

fn parse_sum_kind(kind: EvalKind) -> Option<SumKind> {
    match kind {
        EvalKind::Zeta => Some(SumKind::Zeta),
        EvalKind::T => Some(SumKind::T),
        EvalKind::Mu => Some(SumKind::Mu),
        EvalKind::Mubar => Some(SumKind::MuBar),
        _ => None,
    }
}

fn eval_error(e: Error) -> CliError {
    match e {
        Error::Parse { .. }
        | Error::UnknownConstant(_)
        | Error::UnknownIntegral(_)
        | Error::UnknownStream(_)
        | Error::UnknownIdentity(_)
        | Error::BadParams { .. }
        | Error::InvalidContext(_) => CliError::usage(e),
        _ => CliError::eval(e),
    }
}

fn cmd_eval(
    out: &mut dyn Write,
    kind: EvalKind,
    target: &str,
    digits: u32,
    n: Option<u32>,
    params: &[u32],
) -> CliResult<()> {
    let ctx = context(digits)?;
    let estimate = if let Some(sum) = parse_sum_kind(kind) {
        let index: MultiIndex = target.parse().map_err(CliError::usage)?;
        multisum_eval(sum, &index, &ctx).map_err(eval_error)?.to_estimate()
    } else {
        match kind {
            EvalKind::Const => {
                let name: ConstantName = target.parse().map_err(CliError::usage)?;
                constant(name, &ctx)
            }
            EvalKind::Closed => {
                let n = n.ok_or_else(|| CliError::usage("closed forms need --n"))?;
                if target == "I" || target == "I_n" {
                    i_closed(n, &ctx).map_err(eval_error)?
                } else {
                    let family: ClosedFamily = target
                        .parse()
                        .map_err(|_| CliError::usage(format!("unknown closed-form family `{target}`")))?;
                    closed_form(family, n, &ctx).map_err(eval_error)?
                }
            }
            EvalKind::Integral => {
                let mut p: Vec<u32> = n.into_iter().collect();
                p.extend_from_slice(params);
                integral_by_id(target, &p, &ctx).map_err(eval_error)?.to_estimate()
            }
            _ => unreachable!("nested-sum kinds handled above"),
        }
    };
    print_estimate(out, &estimate, digits)
}

fn stream_by_name(name: &str, power: Option<u32>) -> CliResult<CoefficientStream> {
    match name {
        "arcsin-pow" | "arcsin_pow" => {
            let n = power.ok_or_else(|| CliError::usage("arcsin-pow needs a power"))?;
            arcsin_pow_stream(n).map_err(CliError::usage)
        }
        "inv_sqrt" | "inv-sqrt" => Ok(inv_sqrt_stream()),
        _ => {
            let f: ElemFunction = name.parse().map_err(CliError::usage)?;
            Ok(elem_stream(f))
        }
    }
}

fn cmd_series(out: &mut dyn Write, name: &str, power: Option<u32>, terms: u64) -> CliResult<()> {
    if terms == 0 {
        return Err(CliError::usage("--terms must be at least 1"));
    }
    let s = stream_by_name(name, power)?;
    let mut text = format!("# {} ({})", s.label(), s.tag());
    if s.pi_power() > 0 {
        text.push_str(&format!(" times (pi/2)^{}", s.pi_power()));
    }
    text.push('\n');
    text.push_str("k\ta\tx^m\tcoefficient\n");
    for k in 0..terms {
        text.push_str(&format!("{k}\t{}\tx^{}\t{}\n", s.coeff(k), s.exponent(k), s.literal(k)));
    }
    write_out(out, &text)
}

fn cmd_dual(out: &mut dyn Write, index: &str) -> CliResult<()> {
    let i: MultiIndex = index.parse().map_err(CliError::usage)?;
    let d = dual_index(&i).map_err(CliError::usage)?;
    write_out(out, &format!("{d}\n"))
}

fn text_table(report: &Report) -> String {
    let mut s = format!(
        "{:<32} {:<20} {:<10} {:>6} {:>11} {:>11}\n",
        "id", "verdict", "route", "digits", "abs_diff", "budget"
    );
    for r in &report.results {
        s.push_str(&format!(
            "{:<32} {:<20} {:<10} {:>6} {:>11} {:>11}",
            r.id,
            r.verdict.as_str(),
            r.route.as_str(),
            r.digits_agreed,
            r.abs_diff,
            r.error_budget
        ));
        if let Some(e) = &r.error {
            s.push_str(&format!("  [{e}]"));
        }
        s.push('\n');
    }
    let m = &report.summary;
    s.push_str(&format!(
        "pass {}  fail {}  flagged {}  conjectures {}\n",
        m.pass, m.fail, m.flagged, m.conjectures
    ));
    s
}

fn run_registry(digits: u32, filter: Option<&str>) -> CliResult<Report> {
    let ctx = context(digits)?;
    let start = Instant::now();
    let results = verify_all(&ctx, filter).map_err(CliError::usage)?;
    Ok(Report::new(&ctx, &results, start.elapsed().as_secs_f64()))
}

fn emit(out: &mut dyn Write, text: &str, path: Option<&PathBuf>) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
        None => write_out(out, text),
    }
}

fn failing(report: &Report, strict: bool) -> bool {
    report.results.iter().any(|r| match r.verdict {
        Verdict::Fail => true,
        Verdict::FlagDiscrepancy | Verdict::ConjectureRefuted => strict,
        _ => false,
    })
}

/// Run a parsed command, writing normal output to `out`. Returns the exit code.
pub fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<i32> {
    match cli.command {
        Command::Eval {
            kind,
            target,
            digits,
            n,
            params,
        } => cmd_eval(out, kind, &target, digits, n, &params).map(|_| EXIT_OK),
        Command::Series { name, power, terms } => cmd_series(out, &name, power, terms).map(|_| EXIT_OK),
        Command::Dual { index } => cmd_dual(out, &index).map(|_| EXIT_OK),
        Command::Verify {
            pattern,
            filter,
            all,
            digits,
            format,
            out: path,
            strict,
        } => {
            let filter = if all { None } else { pattern.or(filter) };
            let report = run_registry(digits, filter.as_deref())?;
            let text = match format {
                Format::Text => text_table(&report),
                Format::Json => report.to_json() + "\n",
            };
            emit(out, &text, path.as_ref())?;
            Ok(if failing(&report, strict) { EXIT_FAIL } else { EXIT_OK })
        }
        Command::Report {
            digits,
            filter,
            out: path,
        } => {
            let report = run_registry(digits, filter.as_deref())?;
            emit(out, &(report.to_json() + "\n"), path.as_ref())?;
            Ok(EXIT_OK)
        }
    }
}

/// Parse `args` and run. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
