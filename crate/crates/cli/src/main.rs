//! `fermatdyn`: batch front end for heights, orbit decisions, Fermat checks,
//! key-lemma certificates and density scans.
//!
//! Exit codes: 0 success, 1 counterexample found by `check-fermat`,
//! 2 unreadable or malformed input, 3 mathematical domain error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use fermatdyn::arith::{parse_rational, MultiIndex, Point};
use fermatdyn::density::fermat_density_scan;
use fermatdyn::endo::{EndoSystem, SystemDescriptor, SystemIndex};
use fermatdyn::error::Error;
use fermatdyn::fermat::{certify_threshold_with_law, check_fermat_property, DegreeLaw, FermatReport, Hypersurface};
use fermatdyn::heights::{min_positive_height, HeightEngine, MinPositiveHeight};

#[derive(Parser)]
#[command(name = "fermatdyn", version, about = "Canonical heights and Fermat-type searches for endomorphism systems over Q")]
struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true, env = "FERMATDYN_WORKERS")]
    workers: Option<usize>,
    /// Write a run manifest (version, config digest, timing) to this file.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical heights of points, one JSON line per point.
    Height(HeightArgs),
    /// Height-zero decision with its orbit witness, one JSON line per point.
    Orbit(OrbitArgs),
    /// Search Y_N up to a height bound and classify the hits.
    CheckFermat(CheckFermatArgs),
    /// Key-lemma threshold certificate from a point set and a(h_F).
    Certify(CertifyArgs),
    /// Fermat's property over a box of indices.
    ScanDensity(ScanDensityArgs),
    /// Smallest positive canonical height over a search box.
    MinHeight(MinHeightArgs),
    /// System descriptor utilities.
    Systems {
        #[command(subcommand)]
        action: SystemsCommand,
    },
}

#[derive(Subcommand)]
enum SystemsCommand {
    /// Parse and build descriptors, reporting each as a JSON line.
    Validate { files: Vec<PathBuf> },
}

#[derive(Args)]
struct Output {
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PointInput {
    /// JSON file with an array of points.
    #[arg(long)]
    points: Option<PathBuf>,
    /// A point such as `(1:2)` or `(1:0)x(1:-1)`; repeatable.
    #[arg(long = "point", allow_hyphen_values = true)]
    point: Vec<String>,
}

#[derive(Args)]
struct HeightArgs {
    #[arg(long)]
    system: PathBuf,
    #[command(flatten)]
    input: PointInput,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    /// Member to iterate (`N` or `I1,...,In`); the start index if absent.
    #[arg(long)]
    index: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct OrbitArgs {
    #[arg(long)]
    system: PathBuf,
    #[command(flatten)]
    input: PointInput,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CheckFermatArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    surface: PathBuf,
    /// `N` or `I1,...,In`.
    #[arg(long)]
    index: String,
    #[arg(long)]
    bound: u64,
    /// Also write the hits as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    System,
    Linear,
    Square,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    system: PathBuf,
    /// A check-fermat report whose hits form S.
    #[arg(long, conflicts_with = "points")]
    report: Option<PathBuf>,
    /// JSON array of points forming S.
    #[arg(long)]
    points: Option<PathBuf>,
    /// A min-height report supplying a_lower.
    #[arg(long, required_unless_present = "min_bound")]
    min_height: Option<PathBuf>,
    /// Compute a_lower over this search box instead of reading it.
    #[arg(long)]
    min_bound: Option<u64>,
    #[arg(long, value_enum, default_value = "system")]
    degree_law: LawArg,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Single,
    Multi,
}

#[derive(Args)]
struct ScanDensityArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    surface: PathBuf,
    /// Upper corner `m1,...,mn`.
    #[arg(long = "box")]
    box_: String,
    /// Lower corner of the scanned indices (all ones if absent).
    #[arg(long)]
    from: Option<String>,
    #[arg(long)]
    bound: u64,
    /// Attach the prime selection for this epsilon (a rational in (0, 1]).
    #[arg(long)]
    epsilon: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct MinHeightArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    bound: u64,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[command(flatten)]
    output: Output,
}

enum Failure {
    /// Exit 2.
    Input(String),
    /// Exit 3.
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(m) => Failure::Input(m),
            other => Failure::Domain(other.to_string()),
        }
    }
}

type Outcome = Result<(u8, Value), Failure>;

/// Inputs read during the run, hashed into the manifest digest.
#[derive(Default)]
struct Inputs {
    files: Vec<(String, String)>,
}

impl Inputs {
    fn read(&mut self, path: &Path) -> Result<String, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
        self.files.push((path.display().to_string(), hex(&Sha256::digest(text.as_bytes()))));
        Ok(text)
    }

    fn system(&mut self, path: &Path) -> Result<EndoSystem, Failure> {
        let text = self.read(path)?;
        let d = SystemDescriptor::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        Ok(d.build()?)
    }

    fn surface(&mut self, path: &Path) -> Result<Hypersurface, Failure> {
        let text = self.read(path)?;
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }

    fn json<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Result<T, Failure> {
        let text = self.read(path)?;
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }

    fn points(&mut self, input: &PointInput) -> Result<Vec<Point>, Failure> {
        let mut out: Vec<Point> = match &input.points {
            Some(p) => self.json(p)?,
            None => Vec::new(),
        };
        for s in &input.point {
            out.push(s.parse().map_err(|e: Error| Failure::Input(format!("point {s:?}: {e}")))?);
        }
        if out.is_empty() {
            return Err(Failure::Input("no points given (use --points or --point)".into()));
        }
        Ok(out)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_list(s: &str) -> Result<Vec<u64>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| Failure::Input(format!("not a positive integer list: {s:?}"))))
        .collect()
}

fn parse_index(s: &str, system: &EndoSystem) -> Result<SystemIndex, Failure> {
    let v = parse_list(s)?;
    if system.is_product() {
        Ok(SystemIndex::Multi(MultiIndex::new(v)?))
    } else if v.len() == 1 {
        Ok(SystemIndex::Scalar(v[0]))
    } else {
        Err(Failure::Input(format!("index {s:?} is a multi-index but the system is not a product")))
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Input(format!("cannot write to stdout: {e}")))
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn lines<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| serde_json::to_string(v).expect("result serializes") + "\n")
        .collect()
}

fn cmd_height(a: &HeightArgs, io: &mut Inputs) -> Outcome {
    let system = io.system(&a.system)?;
    let points = io.points(&a.input)?;
    if !(a.tolerance > 0.0) {
        return Err(Error::InvalidTolerance.into());
    }
    let engine = match &a.index {
        Some(s) => HeightEngine::with_member(&system, &parse_index(s, &system)?)?,
        None => HeightEngine::new(&system)?,
    };
    for p in &points {
        system.space().check_point(p)?;
    }
    let results = points
        .par_iter()
        .map(|p| engine.canonical_height(p, a.tolerance))
        .collect::<Result<Vec<_>, _>>()?;
    emit(&a.output.out, &lines(&results))?;
    Ok((0, json!({ "points": results.len() })))
}

fn cmd_orbit(a: &OrbitArgs, io: &mut Inputs) -> Outcome {
    let system = io.system(&a.system)?;
    let points = io.points(&a.input)?;
    let engine = HeightEngine::new(&system)?;
    for p in &points {
        system.space().check_point(p)?;
    }
    let certs = points
        .par_iter()
        .map(|p| engine.is_height_zero(p))
        .collect::<Result<Vec<_>, _>>()?;
    let zero = certs.iter().filter(|c| c.is_zero()).count();
    emit(&a.output.out, &lines(&certs))?;
    Ok((0, json!({ "points": certs.len(), "height_zero": zero })))
}

fn write_csv(path: &Path, report: &FermatReport) -> Result<(), Failure> {
    let fail = |e: csv::Error| Failure::Input(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record(["point", "verdict", "naive_height"]).map_err(fail)?;
    for hit in &report.points_found {
        let verdict = serde_json::to_value(hit.verdict).expect("verdict serializes");
        w.write_record([
            hit.point.to_string(),
            verdict.as_str().unwrap_or_default().to_string(),
            format!("{:.17e}", hit.naive_height),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn cmd_check_fermat(a: &CheckFermatArgs, io: &mut Inputs) -> Outcome {
    let system = io.system(&a.system)?;
    let surface = io.surface(&a.surface)?;
    let index = parse_index(&a.index, &system)?;
    let report = check_fermat_property(&system, &index, &surface, a.bound)?;
    emit(&a.output.out, &pretty(&report))?;
    if let Some(path) = &a.csv {
        write_csv(path, &report)?;
    }
    let code = if report.holds() { 0 } else { 1 };
    Ok((
        code,
        json!({
            "hits": report.points_found.len(),
            "points_searched": report.points_searched,
            "verdict": report.verdict,
        }),
    ))
}

fn cmd_certify(a: &CertifyArgs, io: &mut Inputs) -> Outcome {
    let system = io.system(&a.system)?;
    let s: Vec<Point> = match (&a.report, &a.points) {
        (Some(path), _) => {
            let report: FermatReport = io.json(path)?;
            report.points_found.into_iter().map(|h| h.point).collect()
        }
        (None, Some(path)) => io.json(path)?,
        (None, None) => return Err(Failure::Input("S is required: pass --report or --points".into())),
    };
    let min: MinPositiveHeight = match (&a.min_height, a.min_bound) {
        (Some(path), _) => io.json(path)?,
        (None, Some(h)) => min_positive_height(&system, h, a.tolerance)?,
        (None, None) => return Err(Failure::Input("pass --min-height or --min-bound".into())),
    };
    let law = match a.degree_law {
        LawArg::System => DegreeLaw::System,
        LawArg::Linear => DegreeLaw::Linear,
        LawArg::Square => DegreeLaw::Square,
    };
    let cert = certify_threshold_with_law(&system, &s, &min, a.tolerance, law)?;
    emit(&a.output.out, &pretty(&cert))?;
    Ok((0, json!({ "m0": cert.m0, "s": cert.s.len() })))
}

fn cmd_scan_density(a: &ScanDensityArgs, io: &mut Inputs) -> Outcome {
    let system = io.system(&a.system)?;
    let surface = io.surface(&a.surface)?;
    match (a.mode, system.is_product()) {
        (Mode::Single, true) => return Err(Failure::Input("--mode single needs a non-product system".into())),
        (Mode::Multi, false) => return Err(Failure::Input("--mode multi needs a product system".into())),
        _ => {}
    }
    let box_ = parse_list(&a.box_)?;
    let from = a.from.as_deref().map(parse_list).transpose()?;
    let epsilon = a
        .epsilon
        .as_deref()
        .map(|e| parse_rational(e).map_err(|err| Failure::Input(format!("epsilon {e:?}: {err}"))))
        .transpose()?;
    let report = fermat_density_scan(&system, &surface, &box_, from.as_deref(), a.bound, epsilon.as_ref())?;
    emit(&a.output.out, &pretty(&report))?;
    Ok((
        0,
        json!({ "indices": report.indices.len(), "member_count": report.member_count, "volume": report.volume }),
    ))
}

fn cmd_min_height(a: &MinHeightArgs, io: &mut Inputs) -> Outcome {
    let system = io.system(&a.system)?;
    let r = min_positive_height(&system, a.bound, a.tolerance)?;
    emit(&a.output.out, &pretty(&r))?;
    Ok((0, json!({ "value": r.value, "certified_global": r.certified_global })))
}

fn cmd_validate(files: &[PathBuf], io: &mut Inputs) -> Outcome {
    if files.is_empty() {
        return Err(Failure::Input("no descriptor files given".into()));
    }
    let mut out = String::new();
    let mut worst = 0u8;
    for f in files {
        let line = match io.system(f) {
            Ok(s) => json!({
                "file": f.display().to_string(),
                "valid": true,
                "descriptor": s.descriptor(),
                "space": s.space(),
            }),
            Err(e) => {
                let (code, msg) = match e {
                    Failure::Input(m) => (2, m),
                    Failure::Domain(m) => (3, m),
                };
                worst = worst.max(code);
                json!({ "file": f.display().to_string(), "valid": false, "error": msg })
            }
        };
        out.push_str(&serde_json::to_string(&line).expect("line serializes"));
        out.push('\n');
    }
    emit(&None, &out)?;
    match worst {
        0 => Ok((0, json!({ "files": files.len() }))),
        2 => Err(Failure::Input("invalid descriptor".into())),
        _ => Err(Failure::Domain("invalid descriptor".into())),
    }
}

#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    config_digest: String,
    wall_time_seconds: f64,
    exit_code: u8,
    summary: Value,
}

const NON_CONFIG_FLAGS: [&str; 4] = ["--workers", "--manifest", "--out", "--csv"];

/// Digest of the arguments that determine the payload (worker count and
/// output locations excluded) and of every input file.
fn config_digest(inputs: &Inputs) -> String {
    let mut args: Vec<String> = Vec::new();
    let mut skip = false;
    for arg in std::env::args().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if NON_CONFIG_FLAGS.contains(&arg.as_str()) {
            skip = true;
            continue;
        }
        if NON_CONFIG_FLAGS.iter().any(|f| arg.starts_with(&format!("{f}="))) {
            continue;
        }
        args.push(arg);
    }
    let doc = json!({ "args": args, "inputs": inputs.files });
    hex(&Sha256::digest(doc.to_string().as_bytes()))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Height(_) => "height",
        Command::Orbit(_) => "orbit",
        Command::CheckFermat(_) => "check-fermat",
        Command::Certify(_) => "certify",
        Command::ScanDensity(_) => "scan-density",
        Command::MinHeight(_) => "min-height",
        Command::Systems { .. } => "systems validate",
    }
}

fn run(cli: &Cli, io: &mut Inputs) -> Outcome {
    match &cli.command {
        Command::Height(a) => cmd_height(a, io),
        Command::Orbit(a) => cmd_orbit(a, io),
        Command::CheckFermat(a) => cmd_check_fermat(a, io),
        Command::Certify(a) => cmd_certify(a, io),
        Command::ScanDensity(a) => cmd_scan_density(a, io),
        Command::MinHeight(a) => cmd_min_height(a, io),
        Command::Systems {
            action: SystemsCommand::Validate { files },
        } => cmd_validate(files, io),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(3);
        }
    };
    let mut inputs = Inputs::default();
    let result = pool.install(|| run(&cli, &mut inputs));
    let (code, summary) = match result {
        Ok((code, summary)) => (code, summary),
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            (2, json!({ "error": m }))
        }
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            (3, json!({ "error": m }))
        }
    };
    if let Some(path) = &cli.manifest {
        let manifest = RunManifest {
            tool: "fermatdyn",
            version: env!("CARGO_PKG_VERSION"),
            command: command_name(&cli.command).into(),
            config_digest: config_digest(&inputs),
            wall_time_seconds: started.elapsed().as_secs_f64(),
            exit_code: code,
            summary,
        };
        if let Err(e) = fs::write(path, pretty(&manifest)) {
            eprintln!("error: cannot write manifest {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}
