//! Command-line front end: `fit`, `criteria`, `compare` and `simulate`.
//!
//! Exit codes: 0 success, 1 a simulation check failed, 2 input error,
//! 3 the requested quantity does not apply in this variance mode.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::criteria::{aic_gamma, aic_known_sigma, aic_unknown_sigma, aicc, aicu, akaike_weights};
use crate::error::{Error, Result};
use crate::io::{read_data_columns, read_design};
use crate::regression::{fit_ols, standardize_errors, FitResult, LinearModel, VarianceMode};
use crate::selection::{z_test, Alternative, DeltaComparison};
use crate::sim::report::align;
use crate::sim::{fmt_sig, run_with_workers, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_REFUSED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "infocrit",
    version,
    about = "AIC-family model selection for normal linear regression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Least-squares fit of one design to one dataset.
    Fit(FitArgs),
    /// AIC-family criteria and Akaike weights for several designs.
    Criteria(CriteriaArgs),
    /// z-test of equal expected discrepancy for two designs (known variance).
    Compare(CompareArgs),
    /// Run a Monte-Carlo experiment from a JSON config.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlternativeArg {
    TwoSided,
    M1Closer,
    M2Closer,
}

impl From<AlternativeArg> for Alternative {
    fn from(a: AlternativeArg) -> Self {
        match a {
            AlternativeArg::TwoSided => Alternative::TwoSided,
            AlternativeArg::M1Closer => Alternative::M1Closer,
            AlternativeArg::M2Closer => Alternative::M2Closer,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Also write the output to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// How the error variance is obtained. Without a flag, a `sigma` column in
/// the data selects error bars.
#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct VarianceArgs {
    /// Known common error variance.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Standardize by the data's `sigma` column (known variance 1 afterwards).
    #[arg(long)]
    pub from_error_bars: bool,
    /// Fit the variance by RSS/n.
    #[arg(long)]
    pub unknown_sigma: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub design: PathBuf,
    #[command(flatten)]
    pub variance: VarianceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CriteriaArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Design CSV; repeat for each candidate.
    #[arg(long, required = true)]
    pub design: Vec<PathBuf>,
    #[command(flatten)]
    pub variance: VarianceArgs,
    /// Add AIC_γ = RSS/σ² + γk (known variance only).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Ask for AICc explicitly; refused when the variance is known.
    #[arg(long)]
    pub aicc: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub design1: PathBuf,
    #[arg(long)]
    pub design2: PathBuf,
    #[command(flatten)]
    pub variance: VarianceArgs,
    #[arg(long, value_enum, default_value_t = AlternativeArg::TwoSided)]
    pub alternative: AlternativeArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub config: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Output of `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub variance_mode: VarianceMode,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaRow {
    pub model: String,
    pub n: usize,
    pub k: usize,
    pub rss: f64,
    pub aic: Option<f64>,
    pub aicc: Option<f64>,
    pub aicu: Option<f64>,
    pub aic_gamma: Option<f64>,
    pub akaike_weight: Option<f64>,
    pub notes: Vec<String>,
}

/// Output of `criteria`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub variance_mode: VarianceMode,
    pub gamma: Option<f64>,
    pub dropped_constant: String,
    pub models: Vec<CriteriaRow>,
}

/// Output of `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub comparison: DeltaComparison,
    pub alpha: f64,
    pub reject: bool,
    pub decision: String,
    pub sign_convention: String,
    pub caveat: String,
}

/// Run with process arguments, writing to stdout and stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run(args, &mut out, &mut err)
}

/// Parse `args` and execute; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a).and_then(|r| emit(&a.output, &r, fit_table(&r), out).map(|_| EXIT_OK)),
        Command::Criteria(a) => {
            cmd_criteria(a).and_then(|r| emit(&a.output, &r, criteria_table(&r), out).map(|_| EXIT_OK))
        }
        Command::Compare(a) => {
            cmd_compare(a).and_then(|r| emit(&a.output, &r, compare_table(&r), out).map(|_| EXIT_OK))
        }
        Command::Simulate(a) => cmd_simulate(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::VarianceMode(_) => EXIT_REFUSED,
                _ => EXIT_INPUT,
            }
        }
    }
}

/// The dataset's responses, with each design scaled the same way when error
/// bars are used, and the resulting variance mode.
struct Prepared {
    y: Vec<f64>,
    mode: VarianceMode,
    row_scale: Option<Vec<f64>>,
}

fn prepare(data: &Path, v: &VarianceArgs) -> Result<Prepared> {
    let cols = read_data_columns(data)?;
    let file = data.display().to_string();
    let use_bars = v.from_error_bars || (v.sigma2.is_none() && !v.unknown_sigma && cols.sigma.is_some());
    if use_bars {
        if cols.sigma.is_none() {
            return Err(Error::Parse {
                file,
                row: 1,
                column: "sigma".into(),
                message: "error bars requested but the column is missing".into(),
            });
        }
        let st = standardize_errors(&cols.into_dataset()?, 1.0)?;
        return Ok(Prepared {
            y: st.dataset.y().to_vec(),
            mode: VarianceMode::Known(1.0),
            row_scale: Some(st.row_scale),
        });
    }
    let mode = match (v.sigma2, v.unknown_sigma) {
        (Some(s2), _) => {
            if !(s2.is_finite() && s2 > 0.0) {
                return Err(Error::invalid(format!("--sigma2 must be positive, got {s2}")));
            }
            VarianceMode::Known(s2)
        }
        (None, true) => VarianceMode::Unknown,
        (None, false) => {
            return Err(Error::invalid(
                "no variance information: pass --sigma2, --from-error-bars or --unknown-sigma",
            ))
        }
    };
    Ok(Prepared {
        y: cols.y,
        mode,
        row_scale: None,
    })
}

fn load_model(path: &Path, p: &Prepared) -> Result<LinearModel> {
    let x = read_design(path)?;
    if x.nrows() != p.y.len() {
        return Err(Error::Parse {
            file: path.display().to_string(),
            row: x.nrows() + 1,
            column: String::new(),
            message: format!("design has {} rows but the data has {}", x.nrows(), p.y.len()),
        });
    }
    let m = LinearModel::new(x, p.mode)?;
    match &p.row_scale {
        Some(s) => m.scale_rows(s),
        None => Ok(m),
    }
}

pub fn cmd_fit(a: &FitArgs) -> Result<FitReport> {
    let p = prepare(&a.data, &a.variance)?;
    let m = load_model(&a.design, &p)?;
    Ok(FitReport {
        variance_mode: p.mode,
        fit: fit_ols(&m, &p.y)?,
    })
}

pub fn cmd_criteria(a: &CriteriaArgs) -> Result<CriteriaReport> {
    let p = prepare(&a.data, &a.variance)?;
    let known = p.mode.known_sigma2();
    if known.is_some() && a.aicc {
        return Err(Error::VarianceMode(
            "AICc corrects for a fitted variance; with a known variance use AIC (RSS/σ² + 2k)".into(),
        ));
    }
    if known.is_none() && a.gamma.is_some() {
        return Err(Error::VarianceMode(
            "AIC_gamma is defined with a known variance only".into(),
        ));
    }
    let mut rows = Vec::new();
    for path in &a.design {
        let m = load_model(path, &p)?;
        let fit = fit_ols(&m, &p.y)?;
        let (n, k, rss) = (fit.n, fit.k, fit.rss);
        let mut notes = Vec::new();
        let mut keep = |name: &str, r: Result<f64>| match r {
            Ok(v) => Some(v),
            Err(e) => {
                notes.push(format!("{name}: {e}"));
                None
            }
        };
        let row = match known {
            Some(s2) => CriteriaRow {
                model: path.display().to_string(),
                n,
                k,
                rss,
                aic: keep("AIC", aic_known_sigma(rss, s2, k)),
                aicc: None,
                aicu: None,
                aic_gamma: a.gamma.and_then(|g| keep("AIC_gamma", aic_gamma(rss, s2, k, g))),
                akaike_weight: None,
                notes: Vec::new(),
            },
            None => CriteriaRow {
                model: path.display().to_string(),
                n,
                k,
                rss,
                aic: keep("AIC", aic_unknown_sigma(rss, n, k)),
                aicc: keep("AICc", aicc(rss, n, k)),
                aicu: keep("AICu", aicu(rss, n, k)),
                aic_gamma: None,
                akaike_weight: None,
                notes: Vec::new(),
            },
        };
        rows.push(CriteriaRow { notes, ..row });
    }
    let defined: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.aic.map(|v| (i, v)))
        .collect();
    if !defined.is_empty() {
        let w = akaike_weights(&defined.iter().map(|d| d.1).collect::<Vec<_>>())?;
        for ((i, _), w) in defined.iter().zip(w) {
            rows[*i].akaike_weight = Some(w);
        }
    }
    Ok(CriteriaReport {
        variance_mode: p.mode,
        gamma: a.gamma,
        dropped_constant: match known {
            Some(_) => "n ln(2πσ²)".into(),
            None => "2C_n = n(1 + ln 2π)".into(),
        },
        models: rows,
    })
}

pub fn cmd_compare(a: &CompareArgs) -> Result<CompareReport> {
    let p = prepare(&a.data, &a.variance)?;
    let Some(s2) = p.mode.known_sigma2() else {
        return Err(Error::VarianceMode(
            "the AIC difference test needs a known error variance (--sigma2 or error bars)".into(),
        ));
    };
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Error::invalid(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let m1 = load_model(&a.design1, &p)?;
    let m2 = load_model(&a.design2, &p)?;
    let t = z_test(&m1, &m2, &p.y, s2, a.alternative.into())?;
    let reject = t.rejects(a.alpha);
    let decision = if t.identical_spaces {
        "no test: identical error spaces, the models cannot be distinguished".to_string()
    } else if !t.valid {
        "no test: the variance estimate is not positive".to_string()
    } else if reject {
        let favoured = if t.delta12 > 0.0 { 1 } else { 2 };
        format!(
            "reject equal expected discrepancy at α = {}: model {favoured} is closer",
            a.alpha
        )
    } else {
        format!("do not reject equal expected discrepancy at α = {}", a.alpha)
    };
    Ok(CompareReport {
        comparison: t,
        alpha: a.alpha,
        reject,
        decision,
        sign_convention: "Δ = AIC(model 2) − AIC(model 1); positive z favours model 1".into(),
        caveat: "The normal reference distribution holds when the models are separately \
                 mis-specified: the true mean's distance between the two fitted spaces grows with n \
                 and the trace term stays small. This cannot be verified from data alone."
            .into(),
    })
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = SimConfig::from_path(&a.config)?;
    let report = run_with_workers(&cfg, a.workers.unwrap_or(0))?;
    emit(&a.output, &report, report.to_table(), out)?;
    Ok(if report.all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn emit<T: Serialize>(o: &OutputArgs, value: &T, table: String, out: &mut dyn Write) -> Result<()> {
    let text = match o.format {
        Format::Json => serde_json::to_string_pretty(value).expect("report serializes") + "\n",
        Format::Table => table,
    };
    let io = |e: std::io::Error, path: &str| Error::Io {
        path: path.to_string(),
        source: e,
    };
    out.write_all(text.as_bytes()).map_err(|e| io(e, "<stdout>"))?;
    if let Some(path) = &o.out {
        std::fs::write(path, &text).map_err(|e| io(e, &path.display().to_string()))?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or("undefined".into(), fmt_sig)
}

fn mode_label(m: VarianceMode) -> String {
    match m {
        VarianceMode::Known(s2) => format!("known sigma2 = {}", fmt_sig(s2)),
        VarianceMode::Unknown => "fitted sigma2 = RSS/n".into(),
    }
}

fn fit_table(r: &FitReport) -> String {
    let f = &r.fit;
    let mut rows: Vec<Vec<String>> = f
        .beta_hat
        .iter()
        .enumerate()
        .map(|(j, b)| vec![format!("beta[{}]", j + 1), fmt_sig(*b)])
        .collect();
    rows.push(vec!["rss".into(), fmt_sig(f.rss)]);
    if let Some(s) = f.sigma2_hat {
        rows.push(vec!["sigma2_hat".into(), fmt_sig(s)]);
    }
    rows.push(vec!["n".into(), f.n.to_string()]);
    rows.push(vec!["k".into(), f.k.to_string()]);
    format!(
        "{}\n{}",
        mode_label(r.variance_mode),
        align(&["quantity", "value"], &rows)
    )
}

fn criteria_table(r: &CriteriaReport) -> String {
    let known = r.variance_mode.known_sigma2().is_some();
    let mut header = vec!["model", "n", "k", "rss", "AIC"];
    if !known {
        header.extend(["AICc", "AICu"]);
    }
    if r.gamma.is_some() {
        header.push("AIC_gamma");
    }
    header.push("weight");
    let rows: Vec<Vec<String>> = r
        .models
        .iter()
        .map(|m| {
            let mut row = vec![
                m.model.clone(),
                m.n.to_string(),
                m.k.to_string(),
                fmt_sig(m.rss),
                opt(m.aic),
            ];
            if !known {
                row.extend([opt(m.aicc), opt(m.aicu)]);
            }
            if r.gamma.is_some() {
                row.push(opt(m.aic_gamma));
            }
            row.push(opt(m.akaike_weight));
            row
        })
        .collect();
    let mut s = format!(
        "{}; dropped constant {}",
        mode_label(r.variance_mode),
        r.dropped_constant
    );
    if let Some(g) = r.gamma {
        s.push_str(&format!("; gamma = {}", fmt_sig(g)));
    }
    s.push('\n');
    s.push_str(&align(&header, &rows));
    for m in &r.models {
        for n in &m.notes {
            s.push_str(&format!("note ({}): {n}\n", m.model));
        }
    }
    s
}

fn compare_table(r: &CompareReport) -> String {
    let t = &r.comparison;
    let mut rows = vec![
        vec!["delta12".into(), fmt_sig(t.delta12)],
        vec!["trace_t2".into(), fmt_sig(t.trace_t2)],
        vec!["variance estimate".into(), fmt_sig(t.var_estimate)],
        vec!["z".into(), opt(t.z)],
        vec!["p (two-sided)".into(), opt(t.p_two_sided)],
    ];
    if t.alternative != Alternative::TwoSided {
        rows.push(vec![format!("p ({})", t.alternative), opt(t.p_one_sided)]);
    }
    rows.push(vec!["alpha".into(), fmt_sig(r.alpha)]);
    let mut s = align(&["quantity", "value"], &rows);
    if !t.valid {
        s.push_str("FLAGGED: ");
    }
    s.push_str(&format!("{}\n{}\nnote: {}\n", r.decision, r.sign_convention, r.caveat));
    s
}
