//! Command-line front end for the liveness analyses.
//!
//! [`run`] parses an argument list, runs one subcommand and returns the exit
//! code together with everything destined for standard output and error, so
//! the binary is a thin wrapper and the behaviour is testable in-process.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use liveness::adversary::{exact_loss, inner_lp_oracle, AdversaryError, ORACLE_MAX_N};
use liveness::analysis::{
    classify_regime, conjecture_check, counterexample_suite, default_stake_scenarios,
    regime_boundaries, stake_sensitivity_table, transition_ct_discrete, transition_ct_limit,
    AnalysisError,
};
use liveness::lower_bound::{
    grid_oracle_minimize_g, minimize_designated_star, minimize_g, minimize_symmetric_star,
    LowerBoundError,
};
use liveness::model::{ModelError, ProtocolParams, ShapeKind, StrategyProfile, MAX_PROVERS};
use liveness::payment::{
    implementable_designated, implementable_symmetric, PaymentError, PaymentRule, MAX_TABLE_PROVERS,
};

/// Exit code for an unknown subcommand.
pub const EXIT_UNKNOWN_SUBCOMMAND: i32 = 2;
/// Exit code for missing, malformed or out-of-range flags.
pub const EXIT_INVALID_FLAGS: i32 = 3;
/// Exit code for instances beyond the enumeration limits.
pub const EXIT_OVERSIZED: i32 = 4;
/// Exit code for any other failure.
pub const EXIT_FAILURE: i32 = 1;

/// Outcome of one invocation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandResult {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    /// Files written by `--out`.
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Parser, Debug)]
#[command(
    name = "liveness",
    version,
    about = "Optimal prover-market mechanisms under liveness faults"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// Honest provers
    #[arg(long, global = true)]
    h: Option<usize>,
    /// Total provers
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Liveness penalty (comma-separated list for sweeps)
    #[arg(
        long = "C",
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    c: Vec<f64>,
    /// Aggregate stake (comma-separated list for sweeps)
    #[arg(
        long = "B",
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    b: Vec<f64>,
    /// Honest fraction h/n (comma-separated list for sweeps)
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    tau: Vec<f64>,
    /// Grid resolution: cells for the grid oracle, points for sweeps
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Write the CSV table (or the JSON document) to this path
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimise the lower bound and report the optimal shape
    Minimize,
    /// Best implementable designated and symmetric mechanisms with their rules
    Implement,
    /// Exact adversarial loss of a rule file against a profile
    Loss {
        /// JSON payment rule, or a document from `implement`
        #[arg(long)]
        rule: PathBuf,
        /// Comma-separated strategy profile; defaults to the one in the rule document
        #[arg(long, value_delimiter = ',')]
        profile: Vec<f64>,
        /// Which mechanism of an `implement` document to use
        #[arg(long, value_enum)]
        shape: Option<ShapeArg>,
    },
    /// Table-LP oracle for a fixed profile
    Oracle {
        /// Comma-separated strategy profile
        #[arg(long, value_delimiter = ',', required = true)]
        profile: Vec<f64>,
    },
    /// Discrete transition penalty C_t
    Transition,
    /// Large-n limit of the transition penalty
    TransitionLimit,
    /// Regime boundaries in C up to --C (default 50)
    Regimes,
    /// Stake sensitivity table
    StakeTable,
    /// Recompute the structural counter-examples
    Counterexamples,
    /// Compare the conjectured optimum with the table-LP oracle
    Conjecture,
    /// CSV of C_t over a tau grid and list of stakes
    SweepCt,
    /// CSV of the optimal loss over a C grid, tau list and stakes
    SweepLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ShapeArg {
    Designated,
    Symmetric,
}

#[derive(Debug)]
enum CliError {
    Flags(String),
    Oversized(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            Self::Flags(_) => EXIT_INVALID_FLAGS,
            Self::Oversized(_) => EXIT_OVERSIZED,
            Self::Failed(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Flags(m) | Self::Oversized(m) | Self::Failed(m) => m,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::Flags(e.to_string())
    }
}

impl From<AdversaryError> for CliError {
    fn from(e: AdversaryError) -> Self {
        match e {
            AdversaryError::TooLarge { .. } => Self::Oversized(e.to_string()),
            AdversaryError::Model(m) => m.into(),
            AdversaryError::Payment(p) => (*p).into(),
            other => Self::Failed(other.to_string()),
        }
    }
}

impl From<PaymentError> for CliError {
    fn from(e: PaymentError) -> Self {
        match e {
            PaymentError::TableTooLarge(_) => Self::Oversized(e.to_string()),
            PaymentError::Adversary(a) => (*a).into(),
            PaymentError::Model(m) => m.into(),
            PaymentError::Lp(_) => Self::Failed(e.to_string()),
            other => Self::Flags(other.to_string()),
        }
    }
}

impl From<LowerBoundError> for CliError {
    fn from(e: LowerBoundError) -> Self {
        match e {
            LowerBoundError::Model(m) => m.into(),
            other => Self::Oversized(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::TooLarge { .. } => Self::Oversized(e.to_string()),
            AnalysisError::Adversary(a) => (*a).into(),
            AnalysisError::Numerics(_) => Self::Failed(e.to_string()),
            other => Self::Flags(other.to_string()),
        }
    }
}

/// A rendered result: the JSON document, a human summary and an optional table.
struct Report {
    doc: Value,
    text: String,
    table: Option<Table>,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Failed(e.to_string());
        w.write_record(&self.header).map_err(fail)?;
        for r in &self.rows {
            w.write_record(r).map_err(fail)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Failed(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Failed(e.to_string()))
    }
}

/// Writes `rows` under `header` as a comma-separated, line-feed terminated file.
pub fn export_csv(header: &[&str], rows: &[Vec<String>], path: &Path) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result types serialise")
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn single(list: &[f64], flag: &str) -> Result<Option<f64>, CliError> {
    match list {
        [] => Ok(None),
        [x] => Ok(Some(*x)),
        _ => Err(CliError::Flags(format!(
            "--{flag} takes a single value for this subcommand"
        ))),
    }
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Flags(format!("missing required flag --{flag}")))
}

impl Opts {
    fn params(&self) -> Result<ProtocolParams, CliError> {
        let h = require(self.h, "h")?;
        let n = require(self.n, "n")?;
        let c = require(single(&self.c, "C")?, "C")?;
        let b = single(&self.b, "B")?.unwrap_or(0.0);
        Ok(ProtocolParams::new(h, n, c, b)?)
    }

    fn stake(&self) -> Result<f64, CliError> {
        Ok(single(&self.b, "B")?.unwrap_or(0.0))
    }
}

fn shape_name(kind: ShapeKind) -> &'static str {
    match kind {
        ShapeKind::Designated => "designated",
        ShapeKind::Symmetric => "symmetric",
    }
}

fn describe(o: &liveness::lower_bound::ShapeOptimum) -> String {
    if !o.is_feasible() {
        return "infeasible".into();
    }
    format!(
        "{} k={} support={} s={:.6} loss={:.6}",
        shape_name(o.shape.kind),
        o.shape.k,
        o.shape.support(),
        o.shape.s,
        o.loss
    )
}

fn minimize(opts: &Opts) -> Result<Report, CliError> {
    let p = opts.params()?;
    let best = minimize_g(&p);
    let d = minimize_designated_star(&p);
    let s = minimize_symmetric_star(&p);
    let mut doc = json!({
        "params": to_value(&p),
        "shape": shape_name(best.shape.kind),
        "optimum": to_value(&best),
        "designated": to_value(&d),
        "symmetric": to_value(&s),
    });
    let mut text = format!(
        "optimum: {}\ndesignated: {}\nsymmetric: {}\n",
        describe(&best),
        describe(&d),
        describe(&s)
    );
    if let Some(grid) = opts.grid {
        let g = grid_oracle_minimize_g(&p, grid)?;
        let _ = writeln!(
            text,
            "grid oracle: g={:.6} over {} profiles",
            g.g, g.evaluated
        );
        doc["grid_oracle"] = to_value(&g);
    }
    Ok(Report {
        doc,
        text,
        table: None,
    })
}

fn implement(opts: &Opts) -> Result<Report, CliError> {
    let p = opts.params()?;
    let d = implementable_designated(&p);
    let s = implementable_symmetric(&p);
    let best = if s.optimum.loss < d.optimum.loss - 1e-9 {
        "symmetric"
    } else {
        "designated"
    };
    let doc = json!({
        "params": to_value(&p),
        "best": best,
        "designated": {
            "optimum": to_value(&d.optimum),
            "profile": to_value(&d.optimum.shape.expand()),
            "rule": to_value(&d.rule),
        },
        "symmetric": {
            "optimum": to_value(&s.optimum),
            "profile": s.optimum.is_feasible().then(|| to_value(&s.optimum.shape.expand())),
            "rule": s.rule().map(to_value),
            "local_minima": to_value(&s.local_minima),
        },
    });
    let text = format!(
        "designated: {}\nsymmetric: {}\nbest: {best}\n",
        describe(&d.optimum),
        describe(&s.optimum)
    );
    Ok(Report {
        doc,
        text,
        table: None,
    })
}

/// Accepts a bare rule, `{"rule": ..}`, or an `implement` document.
fn read_rule(
    path: &Path,
    shape: Option<ShapeArg>,
) -> Result<(PaymentRule, Option<StrategyProfile>), CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Flags(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&raw)
        .map_err(|e| CliError::Flags(format!("{} is not JSON: {e}", path.display())))?;
    let bad =
        |e: serde_json::Error| CliError::Flags(format!("invalid rule in {}: {e}", path.display()));
    if let Ok(rule) = serde_json::from_value::<PaymentRule>(v.clone()) {
        return Ok((rule, None));
    }
    let entry = if v.get("rule").is_some() {
        v.clone()
    } else {
        let key = match shape {
            Some(ShapeArg::Designated) => "designated",
            Some(ShapeArg::Symmetric) => "symmetric",
            None => v
                .get("best")
                .and_then(Value::as_str)
                .unwrap_or("designated"),
        };
        v.get(key)
            .cloned()
            .ok_or_else(|| CliError::Flags(format!("{} has no rule", path.display())))?
    };
    let rule =
        serde_json::from_value(entry.get("rule").cloned().unwrap_or(Value::Null)).map_err(bad)?;
    let profile = match entry.get("profile") {
        Some(p) if !p.is_null() => Some(serde_json::from_value(p.clone()).map_err(bad)?),
        _ => None,
    };
    Ok((rule, profile))
}

fn loss(
    opts: &Opts,
    rule_path: &Path,
    profile: &[f64],
    shape: Option<ShapeArg>,
) -> Result<Report, CliError> {
    let p = opts.params()?;
    if p.n() > MAX_PROVERS {
        return Err(CliError::Oversized(format!(
            "rules support n <= {MAX_PROVERS}, got {}",
            p.n()
        )));
    }
    let (rule, doc_profile) = read_rule(rule_path, shape)?;
    let profile = if profile.is_empty() {
        doc_profile.ok_or_else(|| CliError::Flags("missing required flag --profile".into()))?
    } else {
        StrategyProfile::new(profile.to_vec())?
    };
    if profile.len() != p.n() {
        return Err(CliError::Flags(format!(
            "profile has {} entries, expected n = {}",
            profile.len(),
            p.n()
        )));
    }
    if rule.is_table() && p.n() > MAX_TABLE_PROVERS {
        return Err(CliError::Oversized(format!(
            "tables support n <= {MAX_TABLE_PROVERS}"
        )));
    }
    let rep = exact_loss(&rule, &profile, &p)?;
    let text = format!(
        "loss={:.6} corrupt={:?} deliver={:?}\n",
        rep.loss, rep.argmax_corruption, rep.argmax_delivery
    );
    Ok(Report {
        doc: json!({ "params": to_value(&p), "profile": to_value(&profile), "report": to_value(&rep) }),
        text,
        table: None,
    })
}

fn oracle(opts: &Opts, profile: &[f64]) -> Result<Report, CliError> {
    let p = opts.params()?;
    if p.n() > ORACLE_MAX_N {
        return Err(CliError::Oversized(format!(
            "oracle supports n <= {ORACLE_MAX_N}, got {}",
            p.n()
        )));
    }
    let profile = StrategyProfile::new(profile.to_vec())?;
    let sol = inner_lp_oracle(&profile, &p)?;
    Ok(Report {
        doc: json!({ "params": to_value(&p), "profile": to_value(&profile), "t": sol.t, "rule": to_value(&sol.rule) }),
        text: format!("t={:.6}\n", sol.t),
        table: None,
    })
}

fn transition(opts: &Opts) -> Result<Report, CliError> {
    let h = require(opts.h, "h")?;
    let n = require(opts.n, "n")?;
    let b = opts.stake()?;
    let t = transition_ct_discrete(h, n, b)?;
    let mut text = format!("C_t={:.6}\n", t.c_t);
    if let (Some(f), Some(to)) = (&t.from, &t.to) {
        let _ = writeln!(text, "below: {}\nabove: {}", describe(f), describe(to));
    }
    Ok(Report {
        doc: json!({ "h": h, "n": n, "B": b, "transition": to_value(&t) }),
        text,
        table: None,
    })
}

fn transition_limit(opts: &Opts) -> Result<Report, CliError> {
    let tau = require(single(&opts.tau, "tau")?, "tau")?;
    let sol = transition_ct_limit(tau, opts.stake()?)?;
    Ok(Report {
        doc: to_value(&sol),
        text: format!(
            "C_t={:.6} x={:.6} residual={:e}\n",
            sol.c_t, sol.x, sol.residual
        ),
        table: None,
    })
}

fn regimes(opts: &Opts) -> Result<Report, CliError> {
    let h = require(opts.h, "h")?;
    let n = require(opts.n, "n")?;
    let c_max = single(&opts.c, "C")?.unwrap_or(50.0);
    let bounds = regime_boundaries(h, n, c_max)?;
    let mut table = Table::new(vec!["C", "from", "to"]);
    let mut text = String::new();
    for b in &bounds {
        table.rows.push(vec![
            num(b.c),
            b.from.number().to_string(),
            b.to.number().to_string(),
        ]);
        let _ = writeln!(
            text,
            "C={:.6}: phase {} -> {}",
            b.c,
            b.from.number(),
            b.to.number()
        );
    }
    let mut doc = json!({ "h": h, "n": n, "C_max": c_max, "boundaries": to_value(&bounds) });
    if single(&opts.c, "C")?.is_some() {
        let p = ProtocolParams::unstaked(h, n, c_max)?;
        doc["phase_at_C"] = to_value(&classify_regime(&p));
    }
    Ok(Report {
        doc,
        text,
        table: Some(table),
    })
}

fn stake_table() -> Result<Report, CliError> {
    let rows = stake_sensitivity_table(&default_stake_scenarios())?;
    let mut table = Table::new(vec![
        "h",
        "n",
        "C",
        "B",
        "B_pct",
        "designated",
        "symmetric",
        "reduction_pct",
    ]);
    let mut text = String::new();
    for r in &rows {
        let red = r.reduction_pct.map(num).unwrap_or_default();
        table.rows.push(vec![
            r.h.to_string(),
            r.n.to_string(),
            num(r.penalty),
            num(r.stake),
            num(r.stake_pct),
            num(r.designated),
            num(r.symmetric),
            red.clone(),
        ]);
        let _ = writeln!(
            text,
            "h={} n={} C={} B={} ({}%): D*={:.6} S*={:.6} reduction={}",
            r.h,
            r.n,
            r.penalty,
            r.stake,
            r.stake_pct,
            r.designated,
            r.symmetric,
            r.reduction_pct
                .map(|x| format!("{x:.3}%"))
                .unwrap_or_else(|| "-".into())
        );
    }
    Ok(Report {
        doc: json!({ "rows": to_value(&rows) }),
        text,
        table: Some(table),
    })
}

fn counterexamples() -> Result<Report, CliError> {
    let rep = counterexample_suite()?;
    let mut table = Table::new(vec!["case", "quantity", "expected", "actual", "pass"]);
    let mut text = String::new();
    for c in &rep.checks {
        table.rows.push(vec![
            c.case.clone(),
            c.quantity.clone(),
            c.expected.clone(),
            c.actual.clone(),
            c.pass.to_string(),
        ]);
        let _ = writeln!(
            text,
            "{} {} | {}: expected {} got {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.case,
            c.quantity,
            c.expected,
            c.actual
        );
    }
    Ok(Report {
        doc: json!({ "all_pass": rep.all_pass(), "checks": to_value(&rep.checks) }),
        text,
        table: Some(table),
    })
}

fn conjecture(opts: &Opts) -> Result<Report, CliError> {
    let p = opts.params()?;
    let rep = conjecture_check(&p)?;
    Ok(Report {
        text: format!(
            "conjectured={:.6} oracle_best={:.6} gap={:e} profiles={}\n",
            rep.conjectured, rep.oracle_best, rep.gap, rep.profiles_checked
        ),
        doc: to_value(&rep),
        table: None,
    })
}

fn tau_grid(opts: &Opts) -> Vec<f64> {
    if !opts.tau.is_empty() {
        return opts.tau.clone();
    }
    let m = opts.grid.unwrap_or(19);
    (1..=m).map(|i| i as f64 / (m + 1) as f64).collect()
}

fn sweep_ct(opts: &Opts) -> Result<Report, CliError> {
    let stakes = if opts.b.is_empty() {
        vec![0.0]
    } else {
        opts.b.clone()
    };
    let mut table = Table::new(vec!["tau", "B", "C_t"]);
    let mut points = Vec::new();
    for &b in &stakes {
        for &tau in &tau_grid(opts) {
            let c_t = match opts.n {
                Some(n) => {
                    let h = (tau * n as f64).round() as usize;
                    if h == 0 || h > n {
                        return Err(CliError::Flags(format!(
                            "tau = {tau} gives no valid h for n = {n}"
                        )));
                    }
                    transition_ct_discrete(h, n, b)?.c_t
                }
                None => transition_ct_limit(tau, b)?.c_t,
            };
            table.rows.push(vec![num(tau), num(b), num(c_t)]);
            points.push(json!({ "tau": tau, "B": b, "C_t": c_t }));
        }
    }
    let text = table
        .rows
        .iter()
        .map(|r| format!("tau={} B={} C_t={}\n", r[0], r[1], r[2]))
        .collect();
    Ok(Report {
        doc: json!({ "method": if opts.n.is_some() { "discrete" } else { "limit" }, "n": opts.n, "points": points }),
        text,
        table: Some(table),
    })
}

fn sweep_loss(opts: &Opts) -> Result<Report, CliError> {
    let n = opts.n.unwrap_or(100);
    let stakes = if opts.b.is_empty() {
        vec![0.0]
    } else {
        opts.b.clone()
    };
    let taus = if opts.tau.is_empty() {
        vec![0.5, 2.0 / 3.0, 0.9]
    } else {
        opts.tau.clone()
    };
    let cs = if opts.c.len() > 1 {
        opts.c.clone()
    } else {
        let c_max = opts.c.first().copied().unwrap_or(1e7);
        if !(c_max > 10.0) {
            return Err(CliError::Flags(
                "--C must exceed 10 for a log grid; pass a list instead".into(),
            ));
        }
        let m = opts.grid.unwrap_or(25).max(2);
        (0..m)
            .map(|i| 10f64 * (c_max / 10.0).powf(i as f64 / (m - 1) as f64))
            .collect()
    };
    let mut table = Table::new(vec!["C", "tau", "B", "loss", "shape"]);
    let mut points = Vec::new();
    for &tau in &taus {
        let h = (tau * n as f64).round() as usize;
        for &b in &stakes {
            for &c in &cs {
                let p = ProtocolParams::new(h, n, c, b)?;
                let best = minimize_g(&p);
                let shape = shape_name(best.shape.kind);
                table.rows.push(vec![
                    num(c),
                    num(tau),
                    num(b),
                    num(best.loss),
                    shape.to_string(),
                ]);
                points
                    .push(json!({ "C": c, "tau": tau, "B": b, "loss": best.loss, "shape": shape }));
            }
        }
    }
    let text = table
        .rows
        .iter()
        .map(|r| {
            format!(
                "C={} tau={} B={} loss={} {}\n",
                r[0], r[1], r[2], r[3], r[4]
            )
        })
        .collect();
    Ok(Report {
        doc: json!({ "n": n, "points": points }),
        text,
        table: Some(table),
    })
}

fn dispatch(cli: &Cli) -> Result<Report, CliError> {
    let o = &cli.opts;
    match &cli.command {
        Command::Minimize => minimize(o),
        Command::Implement => implement(o),
        Command::Loss {
            rule,
            profile,
            shape,
        } => loss(o, rule, profile, *shape),
        Command::Oracle { profile } => oracle(o, profile),
        Command::Transition => transition(o),
        Command::TransitionLimit => transition_limit(o),
        Command::Regimes => regimes(o),
        Command::StakeTable => stake_table(),
        Command::Counterexamples => counterexamples(),
        Command::Conjecture => conjecture(o),
        Command::SweepCt => sweep_ct(o),
        Command::SweepLoss => sweep_loss(o),
    }
}

fn render(cli: &Cli, report: Report) -> Result<CommandResult, CliError> {
    let mut res = CommandResult::default();
    if let Some(path) = &cli.opts.out {
        let body = match &report.table {
            Some(t) => t.to_csv()?,
            None => serde_json::to_string_pretty(&report.doc).expect("json") + "\n",
        };
        std::fs::write(path, body)
            .map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display())))?;
        res.artifacts.push(path.clone());
    }
    res.stdout = match cli.opts.format {
        Format::Json => {
            let mut doc = report.doc;
            if let Some(path) = &cli.opts.out {
                doc["artifacts"] = json!([path.display().to_string()]);
            }
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Text => report.text,
        Format::Csv => match &report.table {
            Some(t) => t.to_csv()?,
            None => {
                return Err(CliError::Flags(
                    "--format csv is only available for tabular subcommands".into(),
                ))
            }
        },
    };
    Ok(res)
}

/// Runs the CLI on `argv` (including the program name).
pub fn run<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    return CommandResult {
                        code: 0,
                        stdout: e.to_string(),
                        ..Default::default()
                    }
                }
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_UNKNOWN_SUBCOMMAND,
                _ => EXIT_INVALID_FLAGS,
            };
            let first = e.to_string().lines().next().unwrap_or_default().to_string();
            return CommandResult {
                code,
                stderr: first + "\n",
                ..Default::default()
            };
        }
    };
    match dispatch(&cli).and_then(|r| render(&cli, r)) {
        Ok(r) => r,
        Err(e) => CommandResult {
            code: e.code(),
            stderr: format!("error: {}\n", e.message()),
            ..Default::default()
        },
    }
}
