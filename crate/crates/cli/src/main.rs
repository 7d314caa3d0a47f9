//! `sidecomp`: build example fields, decide whether a field splits into
//! strongly irreducible pieces under a bounded idempotent algebra, verify
//! certificates and scan families for divergence.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sidecomp::decomposer::{
    build_example, decide, default_bound, family_builder, field_report, scan_family, verify_certificate, Certificate,
    ExampleName, ExampleParams, Phi, VerificationReport,
};
use sidecomp::field::OperatorField;
use sidecomp::io::{format_f64, FieldFile};
use sidecomp::si::brute_idempotent_search;
use sidecomp::Tolerances;

const DEFAULTS: Tolerances = Tolerances {
    tol_zero: 1e-10,
    tol_cluster: 1e-8,
    max_cond: 1e12,
};

/// Largest fiber the Newton oracle in `fiber-report` will search.
const ORACLE_MAX_DIM: usize = 6;

#[derive(Parser, Debug)]
#[command(name = "sidecomp", version, about = "Strongly irreducible decomposition of sampled operator fields")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Residuals below this (relative) count as zero.
    #[arg(long, global = true, env = "SIDECOMP_TOL_ZERO", default_value_t = DEFAULTS.tol_zero)]
    tol_zero: f64,
    /// Relative eigenvalue clustering radius.
    #[arg(long, global = true, env = "SIDECOMP_TOL_CLUSTER", default_value_t = DEFAULTS.tol_cluster)]
    tol_cluster: f64,
    /// Idempotent norm bound B [default: 10 max(1, field norm)].
    #[arg(long, global = true, env = "SIDECOMP_BOUND")]
    bound: Option<f64>,
    /// Seed for randomized checks.
    #[arg(long, global = true, env = "SIDECOMP_SEED", default_value_t = 0)]
    seed: u64,
    /// Output file, written atomically [default: standard output].
    #[arg(long, global = true, env = "SIDECOMP_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "SIDECOMP_FORMAT", value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write an example field file.
    Make(MakeArgs),
    /// Decide a field and write its certificate.
    /// Exit 0 decomposable, 1 refused within the bound, 3 inconclusive.
    Analyze {
        field: PathBuf,
    },
    /// Re-check a certificate against a field. Exit 0 iff every check passes.
    Verify {
        field: PathBuf,
        certificate: PathBuf,
    },
    /// Growth of the largest central idempotent norm along an example family.
    Scan(ScanArgs),
    /// Per-point spectral summary of a field.
    FiberReport {
        field: PathBuf,
        /// Newton trials per fiber for the idempotent search (0 disables it).
        #[arg(long, default_value_t = 0)]
        oracle_trials: usize,
    },
}

#[derive(Args, Debug)]
struct MakeArgs {
    /// Example: ex2.1, ex2.2, prop4.3, lemma4.4, lemma4.5, normal, const-jordan.
    #[arg(long)]
    name: String,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// Point count for ex2.1 and const-jordan.
    #[arg(long)]
    fibers: Option<usize>,
    /// Grid size m on (0, 1].
    #[arg(long)]
    grid: Option<usize>,
    /// Point count for the normal field.
    #[arg(long)]
    samples: Option<usize>,
    /// Explicit eigenvalues for the normal field.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    values: Option<Vec<f64>>,
    /// Coupling: const:c, indicator:a,b or linear:a,b.
    #[arg(long)]
    phi: Option<String>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// Example family: ex2.1, ex2.2, prop4.3, lemma4.4, lemma4.5, normal, const-jordan.
    #[arg(long)]
    name: String,
    /// First size parameter of an inclusive integer range.
    #[arg(long, requires = "to", conflicts_with = "params")]
    from: Option<usize>,
    /// Last size parameter of the range.
    #[arg(long, requires = "from")]
    to: Option<usize>,
    /// Explicit size parameters, comma separated.
    #[arg(long, value_delimiter = ',')]
    params: Vec<usize>,
    /// Also write plot data (CSV columns param,norm) here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Coupling for the scalar-plus-nilpotent families.
    #[arg(long)]
    phi: Option<String>,
}

struct Failure {
    code: &'static str,
    message: String,
}

impl From<sidecomp::Error> for Failure {
    fn from(e: sidecomp::Error) -> Self {
        Failure {
            code: e.code(),
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: "IO",
        message: format!("{}: {e}", path.display()),
    }
}

type Run = Result<u8, Failure>;

fn write_atomic(path: &Path, content: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_failure(path, e))?;
    tmp.write_all(content.as_bytes()).map_err(|e| io_failure(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_failure(path, e))?;
    tmp.persist(path).map_err(|e| io_failure(path, e.error))?;
    Ok(())
}

/// The artifact goes to `--out` when given. Without `--out`, JSON goes to
/// standard output and text mode prints only the summary.
fn emit(g: &Global, artifact: &str, summary: &str) -> Result<(), Failure> {
    if let Some(path) = &g.out {
        write_atomic(path, artifact)?;
    }
    match (g.format, &g.out) {
        (Format::Json, None) => print!("{artifact}"),
        (Format::Text, _) => print!("{summary}"),
        (Format::Json, Some(_)) => {}
    }
    Ok(())
}

fn tolerances(g: &Global) -> Result<Tolerances, Failure> {
    Tolerances::new(g.tol_zero, g.tol_cluster, DEFAULTS.max_cond).map_err(|e| Failure {
        code: "BAD_PARAMS",
        message: e.to_string(),
    })
}

fn read_field(path: &Path) -> Result<OperatorField, Failure> {
    Ok(FieldFile::read(path)?.field)
}

fn example_params(p: &ParamArgs) -> Result<ExampleParams, Failure> {
    Ok(ExampleParams {
        fibers: p.fibers,
        grid: p.grid,
        samples: p.samples,
        values: p.values.clone(),
        phi: p.phi.as_deref().map(str::parse::<Phi>).transpose()?,
    })
}

fn cmd_make(g: &Global, args: &MakeArgs) -> Run {
    let name: ExampleName = args.name.parse()?;
    let params = example_params(&args.params)?;
    let field = build_example(name, &params)?;
    let mut meta = json!({ "example": name.as_str() });
    for (key, value) in [("fibers", params.fibers), ("grid", params.grid), ("samples", params.samples)] {
        if let Some(v) = value {
            meta[key] = json!(v);
        }
    }
    if let Some(phi) = &params.phi {
        meta["phi"] = json!(phi.to_string());
    }
    let space = field.space();
    let summary = format!(
        "{}: {} points, total dimension {}\n",
        name,
        space.len(),
        space.total_dim()
    );
    let file = FieldFile {
        field,
        meta: Some(meta),
    };
    emit(g, &file.to_json()?, &summary)?;
    Ok(0)
}

fn certificate_summary(c: &Certificate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "verdict: {}", c.verdict);
    let _ = writeln!(s, "bound used: {}", format_f64(c.bound_used));
    let _ = writeln!(s, "central bound: {}", format_f64(c.diagnostics.central_bound));
    if let Some(b) = c.diagnostics.refined_bound {
        let _ = writeln!(s, "atom bound: {}", format_f64(b));
    }
    if let Some(w) = &c.witness {
        let _ = writeln!(
            s,
            "witness: point {} eigenvalue {}{:+}i norm {}",
            w.label,
            w.eigenvalue.re,
            w.eigenvalue.im,
            format_f64(w.norm)
        );
    }
    if !c.splits.is_empty() {
        let _ = writeln!(s, "split points: {}", c.splits.len());
    }
    for label in &c.diagnostics.ill_conditioned {
        let _ = writeln!(s, "ill-conditioned: {label}");
    }
    for note in &c.diagnostics.notes {
        let _ = writeln!(s, "note: {note}");
    }
    s
}

fn cmd_analyze(g: &Global, field: &Path) -> Run {
    let tol = tolerances(g)?;
    let f = read_field(field)?;
    let bound = g.bound.unwrap_or_else(|| default_bound(&f));
    let cert = decide(&f, bound, &tol)?;
    emit(g, &cert.to_json()?, &certificate_summary(&cert))?;
    Ok(cert.verdict.exit_code() as u8)
}

fn report_text(r: &VerificationReport) -> String {
    let mut s = String::new();
    for c in &r.checks {
        let _ = writeln!(s, "{}  {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let _ = writeln!(s, "{}", if r.passed() { "certificate verified" } else { "certificate rejected" });
    s
}

/// Tolerances recorded in the certificate, overridden by flags the user
/// actually set.
fn verify_tolerances(g: &Global, matches: &ArgMatches, recorded: Tolerances) -> Result<Tolerances, Failure> {
    let explicit = |id: &str| {
        matches
            .subcommand()
            .and_then(|(_, m)| m.value_source(id))
            .or_else(|| matches.value_source(id))
            .is_some_and(|s| s != ValueSource::DefaultValue)
    };
    let t = Tolerances {
        tol_zero: if explicit("tol_zero") { g.tol_zero } else { recorded.tol_zero },
        tol_cluster: if explicit("tol_cluster") { g.tol_cluster } else { recorded.tol_cluster },
        max_cond: recorded.max_cond,
    };
    t.validate().map_err(|e| Failure {
        code: "BAD_PARAMS",
        message: e.to_string(),
    })?;
    Ok(t)
}

fn cmd_verify(g: &Global, matches: &ArgMatches, field: &Path, certificate: &Path) -> Run {
    let f = read_field(field)?;
    let cert = Certificate::read(certificate)?;
    let tol = verify_tolerances(g, matches, cert.tolerances)?;
    let report = verify_certificate(&f, &cert, &tol)?;
    for c in report.failures() {
        eprintln!("FAIL {}: {}", c.name, c.detail);
    }
    let artifact = serde_json::to_string_pretty(&json!({
        "verdict": cert.verdict,
        "passed": report.passed(),
        "checks": report.checks,
    }))
    .map_err(sidecomp::Error::from)?
        + "\n";
    emit(g, &artifact, &report_text(&report))?;
    Ok(if report.passed() { 0 } else { 1 })
}

fn cmd_scan(g: &Global, args: &ScanArgs) -> Run {
    let tol = tolerances(g)?;
    let name: ExampleName = args.name.parse()?;
    let params: Vec<usize> = match (args.from, args.to) {
        (Some(a), Some(b)) if a <= b => (a..=b).collect(),
        (Some(_), Some(_)) => {
            return Err(Failure {
                code: "BAD_PARAMS",
                message: "--from must not exceed --to".into(),
            })
        }
        _ => args.params.clone(),
    };
    let base = ExampleParams {
        phi: args.phi.as_deref().map(str::parse::<Phi>).transpose()?,
        ..Default::default()
    };
    let report = scan_family(family_builder(name, base), &params, &tol)?;
    if let Some(path) = &args.csv {
        write_atomic(path, &report.to_csv())?;
    }
    let mut summary = String::from("param\tmax_central_norm\tpoint\n");
    for row in &report.rows {
        let _ = writeln!(summary, "{}\t{}\t{}", row.param, format_f64(row.max_central_norm), row.label);
    }
    let _ = writeln!(
        summary,
        "trend: {} (slope {:.4}, R^2 {:.4})",
        report.trend, report.slope, report.r_squared
    );
    let artifact = serde_json::to_string_pretty(&report).map_err(sidecomp::Error::from)? + "\n";
    emit(g, &artifact, &summary)?;
    Ok(0)
}

fn cmd_fiber_report(g: &Global, field: &Path, trials: usize) -> Run {
    let tol = tolerances(g)?;
    let f = read_field(field)?;
    let report = field_report(&f, &tol);
    let mut oracle = Vec::new();
    if trials > 0 {
        for (k, (p, a)) in f.iter().enumerate() {
            if a.nrows() > ORACLE_MAX_DIM {
                continue;
            }
            let found = brute_idempotent_search(a, trials, g.seed.wrapping_add(k as u64), &tol)?;
            oracle.push(json!({ "label": p.label, "idempotents_found": found.len() }));
        }
    }
    let mut text = String::from("point\tsi\tblocks\tmax_central_norm\n");
    for s in &report.fibers {
        let _ = writeln!(
            text,
            "{}\t{}\t{:?}\t{}{}",
            s.label,
            s.si,
            s.block_sizes,
            format_f64(s.max_central_norm),
            if s.notes.is_empty() { String::new() } else { format!("\t{}", s.notes.join("; ")) }
        );
    }
    let _ = writeln!(text, "central bound: {}", format_f64(report.central_bound));
    for o in &oracle {
        let _ = writeln!(text, "oracle {}: {} idempotents", o["label"].as_str().unwrap_or(""), o["idempotents_found"]);
    }
    let mut doc = serde_json::to_value(&report).map_err(sidecomp::Error::from)?;
    if trials > 0 {
        doc["oracle"] = json!({ "trials": trials, "seed": g.seed, "fibers": oracle });
    }
    let artifact = serde_json::to_string_pretty(&doc).map_err(sidecomp::Error::from)? + "\n";
    emit(g, &artifact, &text)?;
    Ok(0)
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let g = &cli.global;
    let outcome = match &cli.command {
        Command::Make(args) => cmd_make(g, args),
        Command::Analyze { field } => cmd_analyze(g, field),
        Command::Verify { field, certificate } => cmd_verify(g, &matches, field, certificate),
        Command::Scan(args) => cmd_scan(g, args),
        Command::FiberReport { field, oracle_trials } => cmd_fiber_report(g, field, *oracle_trials),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error [{}]: {}", f.code, f.message);
            ExitCode::from(2)
        }
    }
}
