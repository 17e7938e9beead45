use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use nsolit::check::{self, CheckOptions, Fault, Suite};
use nsolit::geometry::GeometryError;
use nsolit::metric::{parse_metric, MetricError};
use nsolit::pde::{integrate_flow, FlowConfig, FlowKind, PdeError, Trajectory};
use nsolit::pipeline::compute_tables;
use nsolit::report::{self, diagnostics_csv, field_to_csv, fmt_e, FileHash, Manifest, Num};

const EXIT_CHECK: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_SINGULAR: u8 = 3;
const EXIT_BLOWUP: u8 = 4;

#[derive(Parser)]
#[command(name = "nsolit", version, about = "Tangent-bundle geometry tables and vector mKdV / sine-Gordon flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Geometry,
    Hierarchy,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    Connection,
}

#[derive(Subcommand)]
enum Command {
    /// Geometry tables of a metric file.
    Geometry {
        metric: PathBuf,
        #[arg(long, default_value_t = 4)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Integrate a flow described by a JSON config.
    Flow {
        config: PathBuf,
        #[arg(long, default_value = "nsolit-run")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Integrate the sine-Gordon (or, with --minus1, the −1) flow from a JSON config.
    Sg {
        config: PathBuf,
        #[arg(long)]
        minus1: bool,
        #[arg(long, default_value = "nsolit-run")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run the invariant suites and print a JSON report.
    Check {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Print the closed-form flow and Hamiltonian for k = 0, 1, 2.
    Expand {
        #[arg(value_parser = clap::value_parser!(u32).range(0..=2))]
        k: u32,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure { code, message: message.into() }
    }
}

fn main() -> ExitCode {
    let threads = configure_threads();
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().collect();
    match run(cli, &args, threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> usize {
    if let Some(n) = std::env::var("NSOLIT_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    rayon::current_num_threads()
}

fn run(cli: Cli, args: &[String], threads: usize) -> Result<(), Failure> {
    let start = Instant::now();
    match cli.command {
        Command::Geometry { metric, samples, seed, out, format } => {
            cmd_geometry(&metric, samples, seed, out.as_deref(), format, args, threads, start)
        }
        Command::Flow { config, out, format } => cmd_flow(&config, None, &out, format, args, threads, start),
        Command::Sg { config, minus1, out, format } => {
            let kind = if minus1 { FlowKind::Minus1 } else { FlowKind::Sg };
            cmd_flow(&config, Some(kind), &out, format, args, threads, start)
        }
        Command::Check { suite, samples, seed, out, inject_fault } => {
            let suite = match suite {
                SuiteArg::Geometry => Suite::Geometry,
                SuiteArg::Hierarchy => Suite::Hierarchy,
                SuiteArg::All => Suite::All,
            };
            let fault = match inject_fault {
                Some(FaultArg::Connection) => Fault::Connection,
                None => Fault::None,
            };
            let rep = check::run(suite, &CheckOptions { samples, seed, fault });
            let text = rep.to_json();
            match out {
                Some(dir) => {
                    let path = dir.join("check.json");
                    write_file(&dir, "check.json", &text)?;
                    write_manifest(&dir, "check", args, Some(seed), None, threads, vec![], vec![(path, text)], start)?;
                }
                None => print!("{text}"),
            }
            if rep.passed {
                Ok(())
            } else {
                let names: Vec<&str> = rep.failures().map(|c| c.name.as_str()).collect();
                Err(Failure::new(EXIT_CHECK, format!("failed invariants: {}", names.join(", "))))
            }
        }
        Command::Expand { k } => {
            print!("{}", expand_text(k));
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::new(1, format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, text)
        .and_then(|_| fs::rename(&tmp, &path))
        .map_err(|e| Failure::new(1, format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

#[allow(clippy::too_many_arguments)]
fn write_manifest(
    dir: &Path,
    command: &str,
    args: &[String],
    seed: Option<u64>,
    config: Option<serde_json::Value>,
    threads: usize,
    inputs: Vec<(PathBuf, String)>,
    outputs: Vec<(PathBuf, String)>,
    start: Instant,
) -> Result<(), Failure> {
    let m = Manifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        args: args.iter().skip(1).cloned().collect(),
        config,
        seed,
        threads,
        inputs: inputs.iter().map(|(p, t)| FileHash::of(p, t.as_bytes())).collect(),
        outputs: outputs.iter().map(|(p, t)| FileHash::of(p, t.as_bytes())).collect(),
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    write_file(dir, "manifest.json", &m.to_json()).map(|_| ())
}

#[allow(clippy::too_many_arguments)]
fn cmd_geometry(
    path: &Path,
    samples: usize,
    seed: u64,
    out: Option<&Path>,
    format: Format,
    args: &[String],
    threads: usize,
    start: Instant,
) -> Result<(), Failure> {
    let src = read(path)?;
    let spec = parse_metric(&src).map_err(|e| match e {
        MetricError::Singular(_) => Failure::new(EXIT_SINGULAR, format!("{}: {e}", path.display())),
        MetricError::Parse { .. } => Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())),
    })?;
    let tables = compute_tables(&spec).map_err(|e| match e {
        GeometryError::Singular(_) | GeometryError::Degenerate(_) => Failure::new(EXIT_SINGULAR, e.to_string()),
        other => Failure::new(1, other.to_string()),
    })?;
    let points = spec.sample_xy(samples, seed);
    let (name, text) = match format {
        Format::Json => {
            ("geometry.json", report::geometry_json(&tables, &points).map_err(|e| Failure::new(1, e.to_string()))?)
        }
        Format::Csv => ("geometry.csv", geometry_csv(&tables, &points)?),
    };
    match out {
        Some(dir) => {
            let p = write_file(dir, name, &text)?;
            write_manifest(dir, "geometry", args, Some(seed), None, threads, vec![(path.to_path_buf(), src)], vec![(p, text)], start)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn geometry_csv(t: &nsolit::pipeline::GeometryTables, points: &[Vec<f64>]) -> Result<String, Failure> {
    let vars = t.vars();
    let mut out = String::from("table,index,symbolic");
    for k in 0..points.len() {
        out.push_str(&format!(",p{}", k + 1));
    }
    out.push('\n');
    let scalars = nsolit::tensor::Tensor::from_fn(&[2], |ix| {
        if ix[0] == 0 {
            t.ricci.r_arrow.clone()
        } else {
            t.ricci.s_arrow.clone()
        }
    });
    let mut named = t.named();
    named.push(("scalars", &scalars));
    let mut w = csv::Writer::from_writer(Vec::new());
    for (name, tensor) in named {
        let samples = tensor.sample(&vars, points).map_err(|e| Failure::new(1, e.to_string()))?;
        for (flat, sym) in tensor.to_strings().into_iter().enumerate() {
            let idx: Vec<String> = tensor.index_of(flat).iter().map(|i| (i + 1).to_string()).collect();
            let mut rec = vec![name.to_string(), idx.join(" "), sym];
            rec.extend(samples.iter().map(|row| fmt_e(row[flat])));
            w.write_record(&rec).map_err(|e| Failure::new(1, e.to_string()))?;
        }
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Failure::new(1, e.to_string()))?).expect("utf-8");
    out.push_str(&body);
    Ok(out)
}

fn pde_failure(e: PdeError) -> Failure {
    match e {
        PdeError::BlowUp { .. } | PdeError::Singular { .. } => Failure::new(EXIT_BLOWUP, e.to_string()),
        PdeError::Config(_) | PdeError::Io { .. } | PdeError::Field(_) => Failure::new(EXIT_PARSE, e.to_string()),
        PdeError::Hierarchy(_) => Failure::new(EXIT_BLOWUP, e.to_string()),
    }
}

#[derive(serde::Serialize)]
struct SnapshotJson {
    tau: Num,
    v: Vec<Vec<Num>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    e_perp: Option<Vec<Vec<Num>>>,
}

fn rows(v: &nsolit::spectral::VField) -> Vec<Vec<Num>> {
    (0..v.n).map(|j| v.at(j).iter().map(|x| Num(*x)).collect()).collect()
}

fn trajectory_outputs(t: &Trajectory, format: Format) -> Vec<(String, String)> {
    match format {
        Format::Csv => {
            let mut files = Vec::new();
            for (i, s) in t.snapshots.iter().enumerate() {
                files.push((format!("snapshot_{i:05}.csv"), field_to_csv(&s.v)));
                if let Some(e) = &s.e_perp {
                    files.push((format!("eperp_{i:05}.csv"), field_to_csv(e)));
                }
            }
            files.push(("diagnostics.csv".into(), diagnostics_csv(&t.diagnostics)));
            files
        }
        Format::Json => {
            let snaps: Vec<SnapshotJson> = t
                .snapshots
                .iter()
                .map(|s| SnapshotJson { tau: Num(s.tau), v: rows(&s.v), e_perp: s.e_perp.as_ref().map(rows) })
                .collect();
            let mut text = serde_json::to_string_pretty(&snaps).expect("snapshots serialize");
            text.push('\n');
            vec![("snapshots.json".into(), text), ("diagnostics.csv".into(), diagnostics_csv(&t.diagnostics))]
        }
    }
}

fn cmd_flow(
    path: &Path,
    force: Option<FlowKind>,
    out: &Path,
    format: Format,
    args: &[String],
    threads: usize,
    start: Instant,
) -> Result<(), Failure> {
    let src = read(path)?;
    let mut cfg: FlowConfig =
        serde_json::from_str(&src).map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    if let Some(kind) = force {
        cfg.kind = kind;
    }
    let traj = integrate_flow(&cfg).map_err(pde_failure)?;
    let mut outputs = Vec::new();
    for (name, text) in trajectory_outputs(&traj, format) {
        let p = write_file(out, &name, &text)?;
        outputs.push((p, text));
    }
    let echo = serde_json::to_string_pretty(&cfg).expect("config serializes") + "\n";
    let p = write_file(out, "config.json", &echo)?;
    outputs.push((p, echo));
    write_manifest(out, "flow", args, None, serde_json::to_value(&cfg).ok(), threads, vec![(path.to_path_buf(), src)], outputs, start)
}

fn expand_text(k: u32) -> String {
    let flow = match k {
        0 => "v_l".to_string(),
        1 => "v_3l + (3/2)|v|^2 v_l".to_string(),
        _ => "v_5l + (5/2)(|v|^2 v_2l)_l + (5/2)((|v|^2)_ll - |v_l|^2 + (3/4)|v|^4) v_l".to_string(),
    };
    let mut s = format!("flow k={k}\n  v_tau = {flow}\n");
    if k > 0 {
        let prev = match k {
            1 => "v_l",
            _ => "v_3l + (3/2)|v|^2 v_l",
        };
        s.push_str(&format!("  kappa term: - kappa ({prev})\n"));
    }
    if k == 2 {
        s.push_str(
            "  printed variant: v_5l + (5/2)(|v|^2 v_2l)_l + (5/2)((|v|^2)_ll + |v_l|^2 + (3/4)|v|^4) v_l - (1/2)|v_l|^2 v\n",
        );
    }
    let ham = match k {
        0 => "(1/2)|v|^2".to_string(),
        1 => "-(1/2)|v_l|^2 + (1/8)|v|^4".to_string(),
        _ => "(1/2)|v_2l|^2 - (3/4)|v|^2|v_l|^2 - (1/2)Q + (1/16)|v|^6, Q = (v.v_l)^2 (H2a) or v.v_l (H2b)".to_string(),
    };
    s.push_str(&format!("hamiltonian H^({k})\n  density = {ham}\n"));
    s
}
