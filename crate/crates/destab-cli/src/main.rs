use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use destab::amodule::FModule;
use destab::chart::{ChartError, ChartTable};
use destab::dlfree::{authoritative_bound, build_rs};
use destab::hopfss::{run_ss, BarcodeModule, HopfError, Range, SSRun, TransitionReport, UqSeries};
use destab::modlib::{self, ModLibError, BUILTIN_NAMES};
use destab::singer::{Engine, SingerError};

/// Exact mod 2 computations for right modules over the Steenrod algebra.
#[derive(Parser)]
#[command(name = "destab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Adem relations of a module.
    Validate(Common),
    /// The largest unstable submodule.
    Unstable(Common),
    /// The free Dyer-Lashof module R_s M.
    Rs(Common),
    /// The derived functors of destabilization.
    Derived(Common),
    /// The looped derived functors L_s M.
    Ls(Common),
    /// Pages of the algebraic spectral sequence, with a chart.
    Ss(Common),
    /// The chart of one page (E-infinity by default).
    Chart(Common),
    /// List the builtin modules, or print one as a module file.
    Builtin { name: Option<String> },
}

#[derive(Args)]
struct Common {
    /// A module file, or builtin:NAME.
    module: String,
    #[arg(long)]
    max_degree: Option<i64>,
    #[arg(long, default_value_t = 0)]
    s: usize,
    #[arg(long, default_value_t = 2)]
    max_s: usize,
    /// A page 2^k, or "inf".
    #[arg(long)]
    page: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Replace the module by its K-fold suspension.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    suspend: i64,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Csv,
}

enum Failure {
    Input(String),
    Truncation(String),
    Invariant(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Truncation(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Truncation(m) | Failure::Invariant(m) => m,
        }
    }
}

impl From<ModLibError> for Failure {
    fn from(e: ModLibError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<SingerError> for Failure {
    fn from(e: SingerError) -> Self {
        match e {
            SingerError::TruncationInsufficient { .. } => Failure::Truncation(e.to_string()),
            _ => Failure::Invariant(e.to_string()),
        }
    }
}

impl From<HopfError> for Failure {
    fn from(e: HopfError) -> Self {
        match e {
            HopfError::Singer(s) => s.into(),
            _ => Failure::Invariant(e.to_string()),
        }
    }
}

impl From<ChartError> for Failure {
    fn from(e: ChartError) -> Self {
        match e {
            ChartError::Inexact { .. } => Failure::Truncation(e.to_string()),
            ChartError::Malformed(m) => Failure::Invariant(m),
        }
    }
}

type Outcome = Result<String, Failure>;

#[derive(Serialize)]
struct DegreeEntry {
    degree: i64,
    dim: usize,
    basis: Vec<String>,
}

#[derive(Serialize)]
struct Listing {
    what: String,
    module: String,
    bound: i64,
    degrees: Vec<DegreeEntry>,
}

impl Listing {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Text => {
                let mut out = format!("{} of {}, degrees through {}\n", self.what, self.module, self.bound);
                if self.degrees.is_empty() {
                    out.push_str("  zero\n");
                }
                for d in &self.degrees {
                    let _ = writeln!(out, "  {:>3} [{}]: {}", d.degree, d.dim, d.basis.join(", "));
                }
                out
            }
            Format::Json => json(self),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let _ = w.write_record(["degree", "index", "element"]);
                for d in &self.degrees {
                    for (i, b) in d.basis.iter().enumerate() {
                        let _ = w.write_record([d.degree.to_string(), i.to_string(), b.clone()]);
                    }
                }
                String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
            }
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn load(c: &Common) -> Result<FModule, Failure> {
    let m = modlib::resolve(&c.module)?;
    Ok(if c.suspend == 0 { m } else { m.suspend(c.suspend) })
}

fn max_degree(c: &Common) -> Result<i64, Failure> {
    c.max_degree.ok_or_else(|| Failure::Input("--max-degree is required for this command".into()))
}

fn validate(c: &Common) -> Outcome {
    let m = load(c)?;
    let report = m.validate().map_err(|e| Failure::Input(e.to_string()))?;
    let summary = serde_json::json!({
        "module": m.name,
        "valid": true,
        "generators": report.generators,
        "relations_checked": report.relations_checked,
    });
    Ok(match c.format {
        Format::Json => json(&summary),
        Format::Csv => format!(
            "module,valid,generators,relations_checked\n{},true,{},{}\n",
            m.name, report.generators, report.relations_checked
        ),
        Format::Text => format!(
            "{}: valid ({} generators, {} Adem relations checked)\n",
            m.name, report.generators, report.relations_checked
        ),
    })
}

fn unstable(c: &Common) -> Outcome {
    let m = load(c)?;
    let d = max_degree(c)?;
    if d > m.bound() {
        return Err(Failure::Truncation(format!(
            "{} is only known through degree {}, {d} requested",
            m.name,
            m.bound()
        )));
    }
    let u = m.unstable_part();
    let degrees = u
        .spaces
        .iter()
        .filter(|(&n, sp)| n <= d && sp.dim() > 0)
        .map(|(&n, sp)| DegreeEntry {
            degree: n,
            dim: sp.dim(),
            basis: sp.basis().iter().map(|v| m.vector_label(n, v)).collect(),
        })
        .collect();
    Ok(Listing { what: "Unstable part".into(), module: m.name.clone(), bound: d, degrees }.render(c.format))
}

fn rs(c: &Common) -> Outcome {
    let m = load(c)?;
    let d = max_degree(c)?;
    let bound = authoritative_bound(c.s, m.max_degree).unwrap_or(i64::MAX);
    if d > bound {
        return Err(Failure::Truncation(format!("R_{} is exact only through degree {bound}, {d} requested", c.s)));
    }
    let r = build_rs(&m, c.s, d);
    let degrees = r
        .module
        .degrees()
        .filter(|&n| n <= d)
        .map(|n| DegreeEntry {
            degree: n,
            dim: r.module.dim(n),
            basis: r.module.basis(n).iter().map(|&g| r.module.label(g).to_string()).collect(),
        })
        .collect();
    Ok(Listing { what: format!("R_{}", c.s), module: m.name.clone(), bound: d, degrees }.render(c.format))
}

fn classes(degrees: &BTreeMap<i64, destab::singer::ClassList>) -> Vec<DegreeEntry> {
    degrees.iter().map(|(&n, cl)| DegreeEntry { degree: n, dim: cl.dim, basis: cl.labels.clone() }).collect()
}

fn derived(c: &Common) -> Outcome {
    let m = load(c)?;
    let d = max_degree(c)?;
    let engine = Engine::new(&m, d);
    let r = engine.derived_functor(c.s, d, false)?;
    Ok(Listing {
        what: format!("Omega^inf_{}", c.s),
        module: m.name.clone(),
        bound: r.bound,
        degrees: classes(&r.degrees),
    }
    .render(c.format))
}

fn ls(c: &Common) -> Outcome {
    let m = load(c)?;
    let d = max_degree(c)?;
    let engine = Engine::new(&m, d);
    let r = engine.l_functor(c.s, d, false)?;
    Ok(Listing { what: format!("L_{}", c.s), module: m.name.clone(), bound: r.bound, degrees: classes(&r.degrees) }
        .render(c.format))
}

/// Which page to chart: `Some(s)` for `E^{2^s}`, `None` for E-infinity.
fn parse_page(c: &Common) -> Result<Option<usize>, Failure> {
    let Some(p) = c.page.as_deref() else { return Ok(None) };
    if p == "inf" {
        return Ok(None);
    }
    let n: u64 = p.parse().map_err(|_| Failure::Input(format!("--page {p}: expected a power of two or inf")))?;
    if !n.is_power_of_two() {
        return Err(Failure::Input(format!("--page {p}: only pages 2^k carry differentials")));
    }
    let s = n.trailing_zeros() as usize;
    if s > c.max_s {
        return Err(Failure::Input(format!("--page {p} is beyond --max-s {}", c.max_s)));
    }
    Ok(Some(s))
}

struct SsOutput {
    module: String,
    max_degree: i64,
    run: SSRun,
}

fn compute_ss(c: &Common) -> Result<SsOutput, Failure> {
    let m = load(c)?;
    let d = max_degree(c)?;
    // negative-degree primitives push factors above the row being drawn
    let weight = (1i64 << (c.max_s + 1)) - 1;
    let slack = (-m.min_degree().unwrap_or(0)).max(0) * weight;
    let engine = Engine::new(&m, d + slack);
    let range = Range { top_column: c.max_s, max_internal: d + slack };
    let run = run_ss(&engine, c.max_s, range)?;
    Ok(SsOutput { module: m.name.clone(), max_degree: d, run })
}

fn chart_of(out: &SsOutput, page: Option<usize>) -> Result<ChartTable, Failure> {
    let (title, b): (String, &BarcodeModule) = match page {
        Some(s) => (format!("E^{} of {}", 1u64 << s, out.module), out.run.pages[s].barcode()),
        None => (format!("E^inf of {}", out.module), &out.run.e_infinity),
    };
    Ok(ChartTable::from_barcode(title, b, out.max_degree)?)
}

#[derive(Serialize)]
struct ColumnSummary {
    k: usize,
    bound: i64,
    primitive_dims: BTreeMap<i64, usize>,
}

#[derive(Serialize)]
struct PageSummary {
    page: u64,
    columns: Vec<ColumnSummary>,
    differential_ranks: BTreeMap<i64, usize>,
    series: UqSeries,
    series_exact_through: i64,
}

#[derive(Serialize)]
struct SsReport<'a> {
    module: &'a str,
    max_degree: i64,
    pages: Vec<PageSummary>,
    transitions: &'a [TransitionReport],
    e_infinity: UqSeries,
    chart: ChartTable,
}

fn columns(b: &BarcodeModule) -> Vec<ColumnSummary> {
    b.columns
        .iter()
        .enumerate()
        .map(|(k, c)| ColumnSummary { k, bound: c.bound, primitive_dims: c.dims.clone() })
        .collect()
}

fn ss(c: &Common) -> Outcome {
    let page = parse_page(c)?;
    let out = compute_ss(c)?;
    let chart = chart_of(&out, page)?;
    let pages: Vec<PageSummary> = out
        .run
        .pages
        .iter()
        .map(|p| {
            let (series, exact) = destab::hopfss::page_series(p.barcode());
            PageSummary {
                page: p.page(),
                columns: columns(p.barcode()),
                differential_ranks: p.differential_ranks(),
                series,
                series_exact_through: exact,
            }
        })
        .collect();
    let (e_inf, _) = destab::hopfss::page_series(&out.run.e_infinity);
    match c.format {
        Format::Json => Ok(json(&SsReport {
            module: &out.module,
            max_degree: out.max_degree,
            pages,
            transitions: &out.run.transitions,
            e_infinity: e_inf,
            chart,
        })),
        Format::Csv => Ok(chart.to_csv()),
        Format::Text => {
            let mut s = String::new();
            for p in &pages {
                let _ = writeln!(s, "page {}:", p.page);
                for col in &p.columns {
                    let total: usize = col.primitive_dims.values().sum();
                    let _ =
                        writeln!(s, "  column -{}: {} primitives through degree {}", 1u64 << col.k, total, col.bound);
                }
                if p.differential_ranks.is_empty() {
                    s.push_str("  differential: zero\n");
                } else {
                    let ranks: Vec<String> = p.differential_ranks.iter().map(|(n, r)| format!("{n}:{r}")).collect();
                    let _ = writeln!(s, "  differential ranks by source degree: {}", ranks.join(" "));
                }
            }
            for t in &out.run.transitions {
                let _ = writeln!(
                    s,
                    "page {} -> {}: kernel = L checked in {} degrees, cokernel checked in {} degrees, barcode matches",
                    t.page,
                    2 * t.page,
                    t.kernel_checks,
                    t.cokernel_checks
                );
            }
            s.push('\n');
            s.push_str(&chart.render_text());
            Ok(s)
        }
    }
}

fn chart(c: &Common) -> Outcome {
    let page = parse_page(c)?;
    let out = compute_ss(c)?;
    let table = chart_of(&out, page)?;
    Ok(match c.format {
        Format::Text => table.render_text(),
        Format::Json => table.to_json(),
        Format::Csv => table.to_csv(),
    })
}

fn builtin(name: Option<&str>) -> Outcome {
    match name {
        None => Ok(BUILTIN_NAMES.iter().map(|n| format!("builtin:{n}\n")).collect()),
        Some(n) => {
            let n = n.strip_prefix("builtin:").unwrap_or(n);
            Ok(modlib::to_json(&modlib::builtin(n)?))
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("DESTAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().map_err(|_| Failure::Input(format!("DESTAB_THREADS={v}: expected a count")))?;
    // 0 leaves the choice to rayon
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Invariant(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Validate(c) => validate(c),
        Command::Unstable(c) => unstable(c),
        Command::Rs(c) => rs(c),
        Command::Derived(c) => derived(c),
        Command::Ls(c) => ls(c),
        Command::Ss(c) => ss(c),
        Command::Chart(c) => chart(c),
        Command::Builtin { name } => builtin(name.as_deref()),
    });
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("destab: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
