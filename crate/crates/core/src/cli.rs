//! The `fockloss` command line: verification runs, sweeps and Monte-Carlo
//! estimates written as CSV or JSON.
//!
//! Exit status is 0 when every embedded check passes, 1 when one fails and 2
//! for usage errors, including an output file that cannot be written.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use crate::fock::WeightedEnsemble;
use crate::fusion::{id_expand, p_ii, type_ii_fuse, verify_id_preservation, IdState};
use crate::ghz::{analytic_id_ghz, effective_survival, ghz_state, run_ghz_factory, verify_equivalence};
use crate::threshold::threshold_sweep;
use crate::tree::{monte_carlo_tree_cost, TreeSpec};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const SIG_DIGITS: i32 = 12;
const MAX_DECIMALS: i32 = 24;

#[derive(Debug, Parser)]
#[command(
    name = "fockloss",
    version,
    about = "Lossy linear-optics verification runs and resource estimates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the GHZ factory and check its output against the ID-GHZ mixture.
    GhzVerify(GhzArgs),
    /// Check Type-II fusion success rates and ID preservation.
    FusionVerify(FusionArgs),
    /// Monte-Carlo and analytic 2-tree cost of a tree cluster.
    TreeCost(TreeArgs),
    /// Tabulate survivals and the loss-tolerance verdict over a grid.
    ThresholdSweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct GhzArgs {
    #[arg(long, default_value = "1", value_parser = parse_probability)]
    pub eta_s: f64,
    #[arg(long, default_value = "1", value_parser = parse_probability)]
    pub eta_d: f64,
    #[arg(long, default_value = "1e-10", value_parser = parse_tol)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FusionArgs {
    #[arg(long, default_value = "1", value_parser = parse_probability)]
    pub eta_s: f64,
    #[arg(long, default_value = "1", value_parser = parse_probability)]
    pub eta_d: f64,
    /// Loss rate of the fused states; defaults to that of the factory output.
    #[arg(long, value_parser = parse_probability)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value = "1e-10", value_parser = parse_tol)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TreeArgs {
    #[arg(long, default_value = "2,4")]
    pub spec: TreeSpec,
    #[arg(long, default_value = "1", value_parser = parse_probability)]
    pub eta_s: f64,
    #[arg(long, default_value = "1", value_parser = parse_probability)]
    pub eta_d: f64,
    /// Fusion success probability; derived from the efficiencies when omitted.
    #[arg(long, value_parser = parse_probability)]
    pub p_ii: Option<f64>,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated source efficiencies.
    #[arg(long, value_delimiter = ',', value_parser = parse_probability)]
    pub eta_s: Vec<f64>,
    /// Comma-separated detector efficiencies.
    #[arg(long, value_delimiter = ',', value_parser = parse_probability)]
    pub eta_d: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Accepts decimals and fractions such as `2/3`.
pub fn parse_probability(s: &str) -> std::result::Result<f64, String> {
    let v = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let d: f64 = d.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            n / d
        }
        None => s.trim().parse().map_err(|_| format!("{s:?} is not a number"))?,
    };
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{s} is not a probability in [0, 1]"))
    }
}

fn parse_tol(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("tolerance must be a positive number, got {s:?}")),
    }
}

/// Fixed-point with twelve significant digits.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (SIG_DIGITS - 1 - magnitude).clamp(0, MAX_DECIMALS) as usize;
    format!("{x:.decimals$}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => format_number(*x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// A table plus the verdict it supports.
#[derive(Debug, Clone)]
pub struct Report {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub checks: usize,
    pub failed: Vec<String>,
    /// Whether the summary is the table's last row or only printed.
    pub summary_in_table: bool,
}

impl Report {
    fn new(headers: Vec<&'static str>, summary_in_table: bool) -> Self {
        Self {
            headers,
            rows: Vec::new(),
            checks: 0,
            failed: Vec::new(),
            summary_in_table,
        }
    }

    fn quantity(&mut self, name: impl Into<String>, value: impl Into<Cell>) {
        self.rows.push(vec![Cell::Text(name.into()), value.into()]);
    }

    fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failed.push(name.into());
        }
    }

    /// Records a residual row and checks it against `tol`.
    fn residual(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        let name = name.into();
        self.check(name.clone(), value < tol);
        self.quantity(name, value);
    }

    pub fn passed(&self) -> bool {
        self.failed.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "status={} checks={} failed={}",
            if self.passed() { "pass" } else { "fail" },
            self.checks,
            self.failed.len()
        );
        if !self.failed.is_empty() {
            s.push_str(&format!(" first_failure={}", self.failed[0]));
        }
        s
    }

    fn finished_rows(&self) -> Vec<Vec<Cell>> {
        let mut rows = self.rows.clone();
        if self.summary_in_table {
            rows.push(vec![Cell::from("summary"), Cell::Text(self.summary())]);
        }
        rows
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for row in self.finished_rows() {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }

    pub fn to_json(&self) -> Vec<u8> {
        let rows: Vec<Value> = self
            .finished_rows()
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .headers
                    .iter()
                    .zip(row)
                    .map(|(h, c)| (h.to_string(), c.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut out = serde_json::to_vec_pretty(&rows).expect("json rows");
        out.push(b'\n');
        out
    }

    pub fn render(&self, format: Format) -> io::Result<Vec<u8>> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => Ok(self.to_json()),
        }
    }
}

fn pattern_name(p: &impl std::fmt::Display) -> String {
    format!("pattern {p}")
}

pub fn ghz_report(eta_s: f64, eta_d: f64, tol: f64) -> crate::Result<Report> {
    if eta_s * eta_d == 0.0 {
        return Err(crate::Error::InvalidArgument(
            "the factory never heralds when eta_s * eta_d = 0".into(),
        ));
    }
    let mut r = Report::new(vec!["quantity", "value"], true);
    let result = run_ghz_factory(eta_s, eta_d)?;
    let survival = effective_survival(eta_s, eta_d)?;
    // detector loss acts like extra source loss, so the success rate only
    // depends on x = eta_s eta_d
    let x = eta_s * eta_d;
    let f = 1.0 - x;
    let analytic_success =
        (x.powi(6) + 6.0 * x.powi(5) * f + 12.0 * x.powi(4) * f * f + 8.0 * x.powi(3) * f.powi(3)) / 32.0;

    r.quantity("eta_s", eta_s);
    r.quantity("eta_d", eta_d);
    r.quantity("success_probability", result.success_probability);
    r.quantity("analytic_success_probability", analytic_success);
    r.residual(
        "success_residual",
        (result.success_probability - analytic_success).abs(),
        tol,
    );
    for (pattern, rec) in &result.per_pattern {
        r.quantity(pattern_name(pattern), rec.probability);
    }
    for (n, w) in result.sector_weights().iter().enumerate() {
        r.quantity(format!("sector_{n}_weight"), *w);
    }
    r.quantity("state_survival", survival);
    r.quantity("fitted_survival", result.fitted_survival());
    r.residual("survival_residual", (result.fitted_survival() - survival).abs(), tol);
    let density_residual = result.output.density().max_abs_diff(&analytic_id_ghz(survival)?);
    r.residual("density_residual", density_residual, tol);
    r.residual("correction_residual", result.correction_residual(), tol);
    let eq = verify_equivalence(eta_s, eta_d, tol)?;
    r.residual("equivalence_residual", eq.residual, tol);
    r.quantity("equivalence", if eq.passed { "pass" } else { "fail" });
    Ok(r)
}

/// Fusion sizes and loss rates checked on every run.
pub const FUSION_GRID: [(usize, usize); 4] = [(2, 2), (3, 2), (3, 3), (4, 3)];
pub const FUSION_EPSILONS: [f64; 3] = [0.0, 0.1, 0.25];

pub fn fusion_report(eta_s: f64, eta_d: f64, epsilon: Option<f64>, tol: f64) -> crate::Result<Report> {
    let eps = match epsilon {
        Some(e) => e,
        None => 1.0 - effective_survival(eta_s, eta_d)?,
    };
    if eps >= 1.0 {
        return Err(crate::Error::InvalidArgument("epsilon must be below 1".into()));
    }
    let mut r = Report::new(vec!["quantity", "value"], true);
    r.quantity("eta_s", eta_s);
    r.quantity("eta_d", eta_d);
    r.quantity("epsilon", eps);

    // headline: two ID-GHZ_3 states at this loss rate
    let a = id_expand(&IdState {
        ideal: ghz_state(&[1, 2, 3]),
        epsilon: eps,
    })?;
    let b = id_expand(&IdState {
        ideal: ghz_state(&[4, 5, 6]),
        epsilon: eps,
    })?;
    let fused = type_ii_fuse(&a, 3, &b, 4, eta_d)?;
    let expected = p_ii(eps, eta_d)?;
    r.quantity("success_probability", fused.success_probability);
    r.quantity("p_ii", expected);
    r.residual("success_residual", (fused.success_probability - expected).abs(), tol);

    let bell = type_ii_fuse(
        &WeightedEnsemble::pure(ghz_state(&[1, 2])),
        2,
        &WeightedEnsemble::pure(ghz_state(&[3, 4])),
        3,
        1.0,
    )?;
    r.residual(
        "ideal_bell_success_residual",
        (bell.success_probability - 0.5).abs(),
        tol,
    );

    let mut grid_eps: Vec<f64> = FUSION_EPSILONS.to_vec();
    if !grid_eps.contains(&eps) {
        grid_eps.push(eps);
    }
    for &(n, m) in &FUSION_GRID {
        for &e in &grid_eps {
            let rep = verify_id_preservation(n, m, e, eta_d, tol)?;
            let tag = format!("n={n} m={m} epsilon={}", format_number(e));
            r.residual(
                format!("id_preservation {tag} density_residual"),
                rep.density_residual,
                tol,
            );
            r.residual(
                format!("id_preservation {tag} success_residual"),
                rep.success_residual(),
                tol,
            );
        }
    }
    Ok(r)
}

pub fn tree_report(spec: &TreeSpec, p: f64, trials: u64, seed: u64) -> crate::Result<Report> {
    let est = monte_carlo_tree_cost(spec, p, trials, seed)?;
    let mut r = Report::new(
        vec![
            "spec",
            "p_ii",
            "trials",
            "seed",
            "mc_mean",
            "mc_stderr",
            "analytic_mean",
            "bound",
        ],
        false,
    );
    r.rows.push(vec![
        Cell::Text(spec.to_string()),
        Cell::Num(p),
        Cell::Int(trials),
        Cell::Int(seed),
        Cell::Num(est.mean_2trees),
        Cell::Num(est.std_error),
        Cell::Num(est.analytic_mean),
        Cell::Num(est.analytic_bound),
    ]);
    r.check("mc_within_3_stderr", est.within_three_sigma());
    r.check("analytic_within_bound", est.analytic_mean <= est.analytic_bound);
    Ok(r)
}

/// Default sweep axis: 0.50, 0.55, ..., 1.00.
pub fn default_axis() -> Vec<f64> {
    (0..=10).map(|k| (50 + 5 * k) as f64 / 100.0).collect()
}

pub fn sweep_report(eta_s: &[f64], eta_d: &[f64]) -> crate::Result<Report> {
    let mut r = Report::new(
        vec![
            "eta_s",
            "eta_d",
            "epsilon",
            "state_survival",
            "measured_survival",
            "p_ii",
            "tolerant",
        ],
        false,
    );
    for row in threshold_sweep(eta_s, eta_d)? {
        r.check(
            format!("criteria_agree eta_s={} eta_d={}", row.eta_s, row.eta_d),
            row.tolerant == (row.eta_s * row.eta_d > 2.0 / 3.0),
        );
        r.rows.push(vec![
            row.eta_s.into(),
            row.eta_d.into(),
            row.epsilon.into(),
            row.state_survival.into(),
            row.measured_survival.into(),
            row.p_ii.into(),
            Cell::Bool(row.tolerant),
        ]);
    }
    Ok(r)
}

fn build(command: &Command) -> crate::Result<(Report, &OutputArgs)> {
    Ok(match command {
        Command::GhzVerify(a) => (ghz_report(a.eta_s, a.eta_d, a.tol)?, &a.output),
        Command::FusionVerify(a) => (fusion_report(a.eta_s, a.eta_d, a.epsilon, a.tol)?, &a.output),
        Command::TreeCost(a) => {
            let p = match a.p_ii {
                Some(p) => p,
                None => p_ii(1.0 - effective_survival(a.eta_s, a.eta_d)?, a.eta_d)?,
            };
            (tree_report(&a.spec, p, a.trials, a.seed)?, &a.output)
        }
        Command::ThresholdSweep(a) => {
            let s = if a.eta_s.is_empty() {
                default_axis()
            } else {
                a.eta_s.clone()
            };
            let d = if a.eta_d.is_empty() {
                default_axis()
            } else {
                a.eta_d.clone()
            };
            (sweep_report(&s, &d)?, &a.output)
        }
    })
}

fn write_output(bytes: &[u8], out: &OutputArgs) -> io::Result<()> {
    match &out.out {
        Some(path) => File::create(path)?.write_all(bytes),
        None => io::stdout().lock().write_all(bytes),
    }
}

/// Runs the command line and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (report, out) = match build(&cli.command) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let bytes = match report.render(out.format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = write_output(&bytes, out) {
        let target = out
            .out
            .as_ref()
            .map_or("standard output".into(), |p| p.display().to_string());
        eprintln!("error: cannot write {target}: {e}");
        return EXIT_USAGE;
    }
    let summary = report.summary();
    if out.out.is_some() {
        println!("{summary}");
    } else if !report.summary_in_table {
        eprintln!("{summary}");
    }
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
