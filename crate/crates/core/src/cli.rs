//! Command-line front end: `generate`, `verify`, `eval`, `residual`.
//!
//! Exit codes: 0 success, 1 golden mismatch or slope outside tolerance,
//! 2 solver, domain or usage errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::evaluator::{eval_tau_terms, residual_slope, EdgePoint, SeriesSpec};
use crate::geometry::Geometry;
use crate::goldens::{self, default_corpus, load_corpus_dir, load_corpus_file, Format, GoldenEntry};
use crate::recursion::{build_table, Kind, ShadowTable, TableExtent};

#[derive(Debug, Parser)]
#[command(name = "edge-shadows", version, about = "Edge eigenfunctions and shadow functions for Laplace problems near circular edges")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a table of shadow functions and print it.
    Generate(GenerateArgs),
    /// Compare generated shadows with the golden corpus.
    Verify(VerifyArgs),
    /// Evaluate the truncated edge expansion at one point.
    Eval(EvalArgs),
    /// Measure how fast the Laplacian residual of the expansion decays.
    Residual(ResidualArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GeometryArg {
    Crack,
    Vnotch90,
}

impl From<GeometryArg> for Geometry {
    fn from(g: GeometryArg) -> Self {
        match g {
            GeometryArg::Crack => Geometry::Crack,
            GeometryArg::Vnotch90 => Geometry::VNotch90,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Primal,
    Dual,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Primal => Kind::Primal,
            KindArg::Dual => Kind::Dual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Text,
    Latex,
    Json,
    Dsl,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    geometry: GeometryArg,
    #[arg(long, value_enum, default_value = "primal")]
    kind: KindArg,
    /// Eigenvalue index: `3`, a range `3..9`, or a list `1,3,5`.
    #[arg(long, default_value = "1")]
    j: String,
    #[arg(long, default_value_t = 10)]
    max_h: u32,
    #[arg(long, default_value_t = 10)]
    max_f: u32,
    /// Cap on h + f; defaults to the larger of --max-h and --max-f.
    #[arg(long)]
    max_order: Option<u32>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    geometry: Option<GeometryArg>,
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    #[arg(long)]
    j: Option<String>,
    /// Verify the whole corpus.
    #[arg(long)]
    all: bool,
    /// Golden file or directory of `*.dsl` files instead of the built-in corpus.
    #[arg(long)]
    golden: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SeriesArgs {
    #[arg(long, value_enum)]
    geometry: GeometryArg,
    #[arg(long, value_enum, default_value = "primal")]
    kind: KindArg,
    #[arg(long, default_value_t = 1)]
    j: u32,
    /// Truncation order.
    #[arg(long = "K", default_value_t = 0)]
    order: u32,
    /// Fourier mode n of A(θ) = cos(nθ).
    #[arg(long, default_value_t = 0)]
    mode: u32,
    /// Edge radius.
    #[arg(long = "R", default_value_t = 1.0)]
    radius: f64,
}

impl SeriesArgs {
    fn spec(&self) -> SeriesSpec {
        SeriesSpec::new(self.geometry.into(), self.kind.into(), self.j, self.radius, self.mode, self.order)
    }
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    phi: f64,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Include the per-(h, f) contributions.
    #[arg(long)]
    terms: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ResidualArgs {
    #[command(flatten)]
    series: SeriesArgs,
    #[arg(long, default_value_t = 1e-3)]
    rho_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    rho_max: f64,
    #[arg(long, default_value_t = 16)]
    samples: usize,
    #[arg(long, default_value_t = 0.3)]
    tolerance: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { code: 0, stdout, stderr: String::new() }
    }

    fn fail(code: i32, stderr: impl Into<String>) -> Self {
        Outcome { code, stdout: String::new(), stderr: stderr.into() }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() { Outcome::fail(2, text) } else { Outcome::ok(text) };
        }
    };
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Residual(a) => cmd_residual(&a),
    }
}

/// Parses `3`, `3..9` (inclusive) or `1,3,5`.
fn parse_j_list(s: &str) -> Result<Vec<u32>, String> {
    let bad = || format!("invalid --j value `{s}`");
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once("..") {
            let a: u32 = a.trim().parse().map_err(|_| bad())?;
            let b: u32 = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err(format!("--j values must be at least 1 (got `{s}`)"));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn deliver(text: String, output: &Option<PathBuf>) -> Outcome {
    match output {
        None => Outcome::ok(text),
        Some(path) => match std::fs::write(path, text) {
            Ok(()) => Outcome::ok(String::new()),
            Err(e) => Outcome::fail(2, format!("error: cannot write {}: {e}\n", path.display())),
        },
    }
}

fn render_text(table: &ShadowTable) -> String {
    let mut s = String::new();
    for (key, poly) in table.entries() {
        s.push_str(&format!("{key} = {poly}\n"));
    }
    s
}

fn cmd_generate(a: &GenerateArgs) -> Outcome {
    if a.max_h % 2 == 1 {
        return Outcome::fail(2, format!("error: --max-h must be even (got {})\n", a.max_h));
    }
    let js = match parse_j_list(&a.j) {
        Ok(v) => v,
        Err(e) => return Outcome::fail(2, format!("error: {e}\n")),
    };
    let extent = TableExtent { max_h: a.max_h, max_f: a.max_f, max_order: Some(a.max_order.unwrap_or(a.max_h.max(a.max_f))) };
    let table = match build_table(a.geometry.into(), a.kind.into(), &js, extent) {
        Ok(t) => t,
        Err(e) => return Outcome::fail(2, format!("error: {e}\n")),
    };
    let text = match a.format {
        FormatArg::Text => render_text(&table),
        FormatArg::Dsl => goldens::emit_table(&table, Format::Dsl),
        FormatArg::Latex => goldens::emit_table(&table, Format::Latex),
        FormatArg::Json => goldens::emit_table(&table, Format::Json),
    };
    deliver(text, &a.output)
}

fn load_golden(path: &Path) -> Result<Vec<GoldenEntry>, goldens::CorpusError> {
    if path.is_dir() {
        load_corpus_dir(path)
    } else {
        load_corpus_file(path)
    }
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let filtered = a.geometry.is_some() || a.kind.is_some() || a.j.is_some();
    if a.all && filtered {
        return Outcome::fail(2, "error: --all cannot be combined with --geometry, --kind or --j\n");
    }
    if !a.all && !filtered && a.golden.is_none() {
        return Outcome::fail(2, "error: pass --all, --golden, or at least one of --geometry, --kind, --j\n");
    }
    let corpus = match &a.golden {
        Some(p) => load_golden(p),
        None => default_corpus(),
    };
    let corpus = match corpus {
        Ok(c) => c,
        Err(e) => return Outcome::fail(2, format!("error: {e}\n")),
    };
    let js = match a.j.as_deref().map(parse_j_list).transpose() {
        Ok(v) => v,
        Err(e) => return Outcome::fail(2, format!("error: {e}\n")),
    };
    let geometry: Option<Geometry> = a.geometry.map(Into::into);
    let kind: Option<Kind> = a.kind.map(Into::into);
    let selected: Vec<GoldenEntry> = corpus
        .into_iter()
        .filter(|e| geometry.is_none_or(|g| g == e.geometry))
        .filter(|e| kind.is_none_or(|k| k == e.key.kind))
        .filter(|e| js.as_ref().is_none_or(|js| js.contains(&e.key.j)))
        .collect();
    if selected.is_empty() {
        return Outcome::fail(2, "error: no golden entries match the selection\n");
    }
    let report = match goldens::verify_corpus(&selected) {
        Ok(r) => r,
        Err(e) => return Outcome::fail(2, format!("error: {e}\n")),
    };
    let mut out = deliver(report.render(), &a.output);
    if out.code == 0 && !report.is_clean() {
        out.code = 1;
    }
    out
}

fn cmd_eval(a: &EvalArgs) -> Outcome {
    let spec = a.series.spec();
    if let Err(e) = spec.validate() {
        return Outcome::fail(2, format!("error: {e}\n"));
    }
    let point = EdgePoint::new(a.rho, a.phi, a.theta);
    if let Err(e) = spec.check_point(&point) {
        return Outcome::fail(2, format!("error: {e}\n"));
    }
    let table = match spec.build_table() {
        Ok(t) => t,
        Err(e) => return Outcome::fail(2, format!("error: {e}\n")),
    };
    let (tau, terms) = match eval_tau_terms(&spec, &table, &point) {
        Ok(v) => v,
        Err(e) => return Outcome::fail(2, format!("error: {e}\n")),
    };
    let mut doc = json!({
        "geometry": spec.geometry.name(),
        "kind": spec.kind.name(),
        "j": spec.j,
        "K": spec.order,
        "mode": spec.mode,
        "R": spec.radius,
        "rho": a.rho,
        "phi": a.phi,
        "theta": a.theta,
        "tau": tau,
    });
    if a.terms {
        let list: Vec<_> = terms.iter().map(|t| json!({"h": t.key.h, "f": t.key.f, "value": t.value})).collect();
        doc["terms"] = json!(list);
    }
    deliver(format!("{doc}\n"), &a.output)
}

fn cmd_residual(a: &ResidualArgs) -> Outcome {
    let spec = a.series.spec();
    if !(a.tolerance.is_finite() && a.tolerance >= 0.0) {
        return Outcome::fail(2, format!("error: invalid tolerance {}\n", a.tolerance));
    }
    if let Err(e) = spec.validate() {
        return Outcome::fail(2, format!("error: {e}\n"));
    }
    let table = match spec.build_table() {
        Ok(t) => t,
        Err(e) => return Outcome::fail(2, format!("error: {e}\n")),
    };
    let report = match residual_slope(&spec, &table, a.rho_min, a.rho_max, a.samples) {
        Ok(r) => r,
        Err(e) => return Outcome::fail(2, format!("error: {e}\n")),
    };
    let text = format!("{}{}\n", report.to_csv(), report.summary_json());
    let mut out = deliver(text, &a.output);
    if out.code == 0 && !report.within(a.tolerance) {
        out.code = 1;
        out.stderr = format!(
            "slope {:.4} differs from expected {:.4} by more than {}\n",
            report.slope, report.expected, a.tolerance
        );
    }
    out
}
