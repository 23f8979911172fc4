//! Command implementations for the `resform` binary. Everything returns the
//! produced artifacts as bytes so runs are testable and byte-deterministic.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sha2::{Digest, Sha256};

use resform::gasket::{build_gasket, convergence_report, ConductanceMode, GasketSpec};
use resform::metric::{CoverMode, FiniteMetricMeasureSpace, SpaceSpec};
use resform::network::{ElectricalNetwork, NetworkSpec};
use resform::walk::{
    derive_seed, exit_time_report, local_time_modulus_report, simulate_csrw, simulate_discrete,
    trace_path, verify_trace_coupling, WalkKind, WalkPath,
};
use resform::{
    fused_metric_error_report, ghp_distance_bounds, resistance_between_sets, resistance_matrix,
    trace_network, TraceMethod,
};

pub const OUT_DIR_ENV: &str = "RESFORM_OUT_DIR";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Compute(resform::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Io(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
            CliError::Compute(err) => write!(f, "computation error: {err}"),
        }
    }
}

impl From<resform::Error> for CliError {
    fn from(err: resform::Error) -> Self {
        match err {
            resform::Error::Io(_) | resform::Error::Json(_) => CliError::Io(err.to_string()),
            other => CliError::Compute(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "resform",
    version,
    about = "Electrical networks as resistance metric spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Effective resistances, optionally against a fused subnetwork.
    Resistance(ResistanceArgs),
    /// Reduce a network onto a subset or a resistance ball.
    Trace(TraceArgs),
    /// Simulate walks and emit paths or diagnostic reports.
    Walk(WalkArgs),
    /// Covering numbers, entropy tails, Prohorov and GHP distances.
    Metric(MetricArgs),
    /// Build Sierpinski gasket approximation networks.
    Gasket(GasketArgs),
    /// Chain gasket builds into per-radius convergence diagnostics.
    Converge(ConvergeArgs),
}

#[derive(Args, Debug)]
pub struct ResistanceArgs {
    /// Network file (JSON).
    #[arg(long)]
    pub net: PathBuf,
    /// Vertex pairs "x,y"; may repeat.
    #[arg(long = "pairs")]
    pub pairs: Vec<String>,
    /// All vertex pairs (default when no --pairs given).
    #[arg(long)]
    pub all: bool,
    /// Fuse the complement of this comma-separated vertex set and report
    /// fused resistances and error bounds alongside.
    #[arg(long)]
    pub fuse: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Schur,
    Hitting,
    Both,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[arg(long)]
    pub net: PathBuf,
    /// Comma-separated vertex ids forming the subset B.
    #[arg(long)]
    pub subset: Option<String>,
    /// Trace onto the open resistance ball of this radius instead.
    #[arg(long)]
    pub ball: Option<f64>,
    #[arg(long, value_enum, default_value = "schur")]
    pub method: MethodArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Discrete,
    Csrw,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportArg {
    Modulus,
    Exit,
    Coupling,
}

#[derive(Args, Debug)]
pub struct WalkArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long, value_enum, default_value = "discrete")]
    pub kind: KindArg,
    /// Steps for discrete walks.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Time horizon for csrw walks.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, default_value = "1")]
    pub samples: usize,
    #[arg(long, default_value = "0")]
    pub seed: u64,
    /// Observe paths through their trace onto this subset.
    #[arg(long = "trace-subset")]
    pub trace_subset: Option<String>,
    #[arg(long, value_enum)]
    pub report: Option<ReportArg>,
    /// Modulus report: time parameter T (horizon is T * m(G) * r(G)).
    #[arg(long = "t-param", default_value = "1.0")]
    pub t_param: f64,
    /// Modulus report: Hoelder exponent in (0, 1/2).
    #[arg(long, default_value = "0.25")]
    pub alpha: f64,
    /// Exit report: ball radius.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Exit report: comma-separated delta grid.
    #[arg(long)]
    pub delta: Option<String>,
    /// Exit report: comma-separated lambda grid.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Exit report: time bound t.
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct MetricArgs {
    /// Space file: explicit {points, root, d, mass} JSON, or a network file
    /// whose resistance metric and associated measure are taken.
    #[arg(long)]
    pub space: PathBuf,
    /// Covering number at this scale (exact up to 64 points).
    #[arg(long)]
    pub cover: Option<f64>,
    /// Entropy tail parameters "alpha,m".
    #[arg(long)]
    pub entropy: Option<String>,
    /// Second space file for a Prohorov distance (same points and metric).
    #[arg(long)]
    pub prohorov: Option<PathBuf>,
    /// Second space file for GHP bounds.
    #[arg(long)]
    pub ghp: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct GasketArgs {
    #[arg(long)]
    pub level: u32,
    #[arg(long, default_value = "0")]
    pub window: u32,
    /// "det" or "rand:lo,hi".
    #[arg(long, default_value = "det")]
    pub mode: String,
    #[arg(long, default_value = "0")]
    pub seed: u64,
    /// "m,window0,n1,n2,..." emits a convergence table instead of the
    /// network file.
    #[arg(long)]
    pub report: Option<String>,
    /// Seeds averaged per level in random-mode convergence reports.
    #[arg(long = "avg-seeds", default_value = "5")]
    pub avg_seeds: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    /// Comma-separated gasket levels.
    #[arg(long)]
    pub levels: String,
    #[arg(long, default_value = "0")]
    pub window: u32,
    #[arg(long, default_value = "det")]
    pub mode: String,
    #[arg(long, default_value = "0")]
    pub seed: u64,
    /// Comma-separated restriction radii.
    #[arg(long)]
    pub radii: String,
    #[arg(long, default_value = "0.25")]
    pub alpha: f64,
    /// Entropy tail start index.
    #[arg(long = "tail-start", default_value = "1")]
    pub tail_start: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// One produced artifact: destination path and content bytes.
pub struct Artifact {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

struct Meta {
    config_hash: String,
    seed: Option<u64>,
}

impl Meta {
    fn csv_header(&self) -> String {
        let seed = match self.seed {
            Some(s) => s.to_string(),
            None => "none".to_string(),
        };
        format!(
            "# tool=resform version={} config={} seed={}\n",
            env!("CARGO_PKG_VERSION"),
            self.config_hash,
            seed
        )
    }

    fn json_value(&self) -> serde_json::Value {
        json!({
            "tool": "resform",
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": self.config_hash,
            "seed": self.seed,
        })
    }
}

/// 12 significant digits for CSV cells.
pub fn fmt_csv(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:.11e}")
}

fn config_hash(argv: &[String]) -> String {
    let mut hasher = Sha256::new();
    for arg in argv {
        hasher.update(arg.as_bytes());
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Loads a network file; accepts both a bare spec and a wrapped
/// {"meta": ..., "network": spec} document as written by `gasket`.
pub fn load_network(path: &Path) -> CliResult<ElectricalNetwork> {
    let text = read_file(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let spec_value = value.get("network").cloned().unwrap_or(value);
    let spec: NetworkSpec = serde_json::from_value(spec_value)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ElectricalNetwork::from_spec(&spec).map_err(CliError::from)
}

/// Loads a space file: explicit space JSON, or a network file whose
/// resistance metric space is taken.
pub fn load_space(path: &Path) -> CliResult<FiniteMetricMeasureSpace> {
    let text = read_file(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let inner = value.get("space").cloned().unwrap_or_else(|| value.clone());
    if inner.get("d").is_some() {
        let spec: SpaceSpec = serde_json::from_value(inner)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        return spec.build().map_err(CliError::from);
    }
    let net = load_network(path)?;
    Ok(FiniteMetricMeasureSpace::from_network(&net))
}

fn parse_u64_list(text: &str, what: &str) -> CliResult<Vec<u64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("bad {what} entry: {s}")))
        })
        .collect()
}

fn parse_f64_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad {what} entry: {s}")))
        })
        .collect()
}

fn parse_mode(text: &str, seed: u64) -> CliResult<ConductanceMode> {
    if text == "det" {
        return Ok(ConductanceMode::Deterministic);
    }
    if let Some(range) = text.strip_prefix("rand:") {
        let parts = parse_f64_list(range, "mode range")?;
        if parts.len() != 2 {
            return Err(CliError::Config(format!(
                "mode needs rand:lo,hi, got {text}"
            )));
        }
        return Ok(ConductanceMode::Random {
            lo: parts[0],
            hi: parts[1],
            seed,
        });
    }
    Err(CliError::Config(format!(
        "unknown mode {text} (expected det or rand:lo,hi)"
    )))
}

fn resolve_ids(net: &ElectricalNetwork, ids: &[u64]) -> CliResult<Vec<usize>> {
    ids.iter()
        .map(|&id| {
            net.index_of(id)
                .ok_or_else(|| CliError::Config(format!("vertex {id} not in network")))
        })
        .collect()
}

/// Executes a parsed command line; `argv` is hashed into output metadata.
pub fn run(cli: &Cli, argv: &[String]) -> CliResult<Vec<Artifact>> {
    let hash = config_hash(argv);
    match &cli.command {
        Command::Resistance(args) => cmd_resistance(args, hash),
        Command::Trace(args) => cmd_trace(args, hash),
        Command::Walk(args) => cmd_walk(args, hash),
        Command::Metric(args) => cmd_metric(args, hash),
        Command::Gasket(args) => cmd_gasket(args, hash),
        Command::Converge(args) => cmd_converge(args, hash),
    }
}

pub fn write_artifacts(artifacts: &[Artifact]) -> CliResult<()> {
    for artifact in artifacts {
        let path = resolve_out(&artifact.path);
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
            }
        }
        std::fs::write(&path, &artifact.bytes)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_resistance(args: &ResistanceArgs, hash: String) -> CliResult<Vec<Artifact>> {
    let net = load_network(&args.net)?;
    let meta = Meta {
        config_hash: hash,
        seed: None,
    };

    let fuse_subset: Option<Vec<usize>> = match &args.fuse {
        Some(text) => Some(resolve_ids(&net, &parse_u64_list(text, "fuse")?)?),
        None => None,
    };
    let pairs: Vec<(usize, usize)> = if args.pairs.is_empty() || args.all {
        // Default: every pair, restricted to the fused subset when one is
        // given (fused resistances are only defined inside it).
        let universe: Vec<usize> = match &fuse_subset {
            Some(b) => b.clone(),
            None => (0..net.n_vertices()).collect(),
        };
        universe
            .iter()
            .flat_map(|&x| {
                universe
                    .iter()
                    .filter(move |&&y| y > x)
                    .map(move |&y| (x, y))
            })
            .collect()
    } else {
        let mut out = Vec::new();
        for text in &args.pairs {
            let ids = parse_u64_list(text, "pair")?;
            if ids.len() != 2 {
                return Err(CliError::Config(format!("pair needs two ids: {text}")));
            }
            let idx = resolve_ids(&net, &ids)?;
            out.push((idx[0], idx[1]));
        }
        out
    };

    let mut csv = meta.csv_header();
    match &fuse_subset {
        None => {
            let rm = resistance_matrix(&net);
            csv.push_str("x,y,R\n");
            for &(x, y) in &pairs {
                let _ = writeln!(
                    csv,
                    "{},{},{}",
                    net.id(x),
                    net.id(y),
                    fmt_csv(rm.value(x, y))
                );
            }
        }
        Some(b) => {
            for &(x, y) in &pairs {
                if !b.contains(&x) || !b.contains(&y) {
                    return Err(CliError::Config(format!(
                        "pair ({}, {}) not inside the fused subset",
                        net.id(x),
                        net.id(y)
                    )));
                }
            }
            let report = fused_metric_error_report(&net, b, &pairs)?;
            csv.push_str("x,y,R,R_fused,bound\n");
            for row in report {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    row.x,
                    row.y,
                    fmt_csv(row.resistance),
                    fmt_csv(row.fused),
                    fmt_csv(row.bound)
                );
            }
        }
    }
    Ok(vec![Artifact {
        path: args.out.clone(),
        bytes: csv.into_bytes(),
    }])
}

fn trace_json(net: &ElectricalNetwork, result: &resform::TraceResult) -> serde_json::Value {
    json!({
        "method": match result.method {
            TraceMethod::Schur => "schur",
            TraceMethod::Hitting => "hitting",
        },
        "subset": result.subset.iter().map(|&x| net.id(x)).collect::<Vec<_>>(),
        "crossing_conductance": result.crossing,
        "defects": result
            .subset
            .iter()
            .zip(&result.defect)
            .map(|(&x, &d)| json!({"vertex": net.id(x), "defect": d}))
            .collect::<Vec<_>>(),
        "network": result.reduced.to_spec(),
    })
}

fn cmd_trace(args: &TraceArgs, hash: String) -> CliResult<Vec<Artifact>> {
    let net = load_network(&args.net)?;
    let meta = Meta {
        config_hash: hash,
        seed: None,
    };

    let subset: Vec<usize> = match (&args.subset, args.ball) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "use either --subset or --ball, not both".into(),
            ))
        }
        (Some(text), None) => resolve_ids(&net, &parse_u64_list(text, "subset")?)?,
        (None, Some(r)) => resform::resistance_ball(&net, r),
        (None, None) => {
            return Err(CliError::Config(
                "one of --subset or --ball required".into(),
            ))
        }
    };

    let methods: Vec<TraceMethod> = match args.method {
        MethodArg::Schur => vec![TraceMethod::Schur],
        MethodArg::Hitting => vec![TraceMethod::Hitting],
        MethodArg::Both => vec![TraceMethod::Schur, TraceMethod::Hitting],
    };
    let mut results = Vec::new();
    for method in methods {
        let tr = trace_network(&net, &subset, method)?;
        results.push(trace_json(&net, &tr));
    }
    let doc = json!({ "meta": meta.json_value(), "results": results });
    let bytes = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(vec![Artifact {
        path: args.out.clone(),
        bytes,
    }])
}

fn path_rows(csv: &mut String, net: &ElectricalNetwork, sample: usize, path: &WalkPath) {
    for (k, &state) in path.states.iter().enumerate() {
        let t = match path.kind {
            WalkKind::Discrete => k as f64,
            WalkKind::Csrw => {
                if k == 0 {
                    0.0
                } else {
                    path.times[k - 1]
                }
            }
        };
        let _ = writeln!(csv, "{},{},{},{}", sample, k, fmt_csv(t), net.id(state));
    }
}

fn cmd_walk(args: &WalkArgs, hash: String) -> CliResult<Vec<Artifact>> {
    let net = load_network(&args.net)?;
    let meta = Meta {
        config_hash: hash,
        seed: Some(args.seed),
    };
    let trace_subset: Option<Vec<usize>> = match &args.trace_subset {
        Some(text) => Some(resolve_ids(&net, &parse_u64_list(text, "trace-subset")?)?),
        None => None,
    };

    let mut csv = meta.csv_header();
    match args.report {
        None => {
            csv.push_str("sample,k,t,state\n");
            for i in 0..args.samples {
                let seed = derive_seed(args.seed, i as u64);
                let path = match args.kind {
                    KindArg::Discrete => {
                        let steps = args.steps.ok_or_else(|| {
                            CliError::Config("--steps required for discrete walks".into())
                        })?;
                        simulate_discrete(&net, net.root(), steps, seed)
                    }
                    KindArg::Csrw => {
                        let horizon = args.horizon.ok_or_else(|| {
                            CliError::Config("--horizon required for csrw walks".into())
                        })?;
                        simulate_csrw(&net, net.root(), horizon, seed)
                    }
                };
                match &trace_subset {
                    Some(b) => {
                        let traced = trace_path(&path, b)?;
                        path_rows(&mut csv, &net, i, &traced);
                    }
                    None => path_rows(&mut csv, &net, i, &path),
                }
            }
        }
        Some(ReportArg::Coupling) => {
            let b = trace_subset.ok_or_else(|| {
                CliError::Config("--trace-subset required for the coupling report".into())
            })?;
            let steps = args.steps.unwrap_or(1);
            let report = verify_trace_coupling(&net, &b, steps, args.samples, args.seed)?;
            let _ = writeln!(csv, "# chi_square={}", fmt_csv(report.chi_square));
            let _ = writeln!(csv, "# dof={}", report.dof);
            let _ = writeln!(csv, "# p_value={}", fmt_csv(report.p_value));
            csv.push_str("from,to,observed,expected_probability\n");
            for (i, &x) in report.subset.iter().enumerate() {
                for (j, &y) in report.subset.iter().enumerate() {
                    if report.expected_law[i][j] > 0.0 || report.counts[i][j] > 0 {
                        let _ = writeln!(
                            csv,
                            "{},{},{},{}",
                            net.id(x),
                            net.id(y),
                            report.counts[i][j],
                            fmt_csv(report.expected_law[i][j])
                        );
                    }
                }
            }
        }
        Some(ReportArg::Exit) => {
            let radius = args
                .radius
                .ok_or_else(|| CliError::Config("--radius required for the exit report".into()))?;
            let deltas = parse_f64_list(
                args.delta.as_deref().ok_or_else(|| {
                    CliError::Config("--delta required for the exit report".into())
                })?,
                "delta",
            )?;
            let lambdas = parse_f64_list(
                args.lambda.as_deref().ok_or_else(|| {
                    CliError::Config("--lambda required for the exit report".into())
                })?,
                "lambda",
            )?;
            let t = args
                .time
                .ok_or_else(|| CliError::Config("--time required for the exit report".into()))?;
            csv.push_str(
                "lambda,delta,t,radius,resistance,small_ball_mass,empirical,stderr,bound\n",
            );
            for &lambda in &lambdas {
                for &delta in &deltas {
                    let report =
                        exit_time_report(&net, radius, delta, lambda, t, args.samples, args.seed)?;
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{},{},{}",
                        fmt_csv(lambda),
                        fmt_csv(delta),
                        fmt_csv(t),
                        fmt_csv(radius),
                        fmt_csv(report.resistance_to_complement),
                        fmt_csv(report.small_ball_mass),
                        fmt_csv(report.empirical),
                        fmt_csv(report.std_error),
                        fmt_csv(report.bound)
                    );
                }
            }
        }
        Some(ReportArg::Modulus) => {
            let report =
                local_time_modulus_report(&net, args.t_param, args.alpha, args.samples, args.seed)?;
            let _ = writeln!(csv, "# r_diam={}", fmt_csv(report.r_diam));
            let _ = writeln!(csv, "# m_total={}", fmt_csv(report.m_total));
            let _ = writeln!(csv, "# horizon={}", fmt_csv(report.horizon));
            let _ = writeln!(csv, "# fitted_slope={}", fmt_csv(report.fitted_slope));
            csv.push_str("section,p1,p2,p3\n");
            for (lam, freq) in report.lambdas.iter().zip(&report.frequencies) {
                let _ = writeln!(csv, "survival,{},{},", fmt_csv(*lam), fmt_csv(*freq));
            }
            for entry in &report.dyadic {
                let _ = writeln!(
                    csv,
                    "dyadic,{},{},{}",
                    entry.level,
                    fmt_csv(entry.threshold),
                    fmt_csv(entry.exceedance)
                );
            }
        }
    }
    Ok(vec![Artifact {
        path: args.out.clone(),
        bytes: csv.into_bytes(),
    }])
}

fn cmd_metric(args: &MetricArgs, hash: String) -> CliResult<Vec<Artifact>> {
    let space = load_space(&args.space)?;
    let meta = Meta {
        config_hash: hash,
        seed: None,
    };

    let mut doc = serde_json::Map::new();
    doc.insert("meta".into(), meta.json_value());
    doc.insert(
        "summary".into(),
        json!({
            "points": space.len(),
            "total_mass": space.total_mass(),
            "diameter": space.diameter(),
        }),
    );
    // Full space spec, so this output feeds back into --space directly.
    doc.insert(
        "space".into(),
        serde_json::to_value(space.to_spec()).map_err(|e| CliError::Io(e.to_string()))?,
    );

    if let Some(eps) = args.cover {
        let mode = if space.len() <= resform::metric::EXACT_COVER_LIMIT {
            CoverMode::Exact
        } else {
            CoverMode::Greedy
        };
        let report = space.covering_number(eps, mode)?;
        doc.insert(
            "cover".into(),
            json!({
                "epsilon": report.epsilon,
                "count": report.count,
                "centers": report.centers.iter().map(|&i| space.labels()[i]).collect::<Vec<_>>(),
                "mode": match report.mode { CoverMode::Exact => "exact", CoverMode::Greedy => "greedy" },
            }),
        );
    }

    if let Some(text) = &args.entropy {
        let parts = parse_f64_list(text, "entropy")?;
        if parts.len() != 2 {
            return Err(CliError::Config("--entropy needs alpha,m".into()));
        }
        let alpha = parts[0];
        let m = parts[1] as usize;
        let value = space.entropy_tail(alpha, m, 1.0)?;
        doc.insert(
            "entropy_tail".into(),
            json!({"alpha": alpha, "m": m, "value": value}),
        );
    }

    if let Some(other_path) = &args.prohorov {
        let other = load_space(other_path)?;
        if other.labels() != space.labels() {
            return Err(CliError::Config(
                "prohorov requires the same point set".into(),
            ));
        }
        let n = space.len();
        for i in 0..n {
            for j in 0..n {
                if (space.distance(i, j) - other.distance(i, j)).abs() > 1e-9 {
                    return Err(CliError::Config("prohorov requires the same metric".into()));
                }
            }
        }
        let value = space.prohorov_distance(space.mass(), other.mass())?;
        doc.insert("prohorov".into(), json!(value));
    }

    if let Some(other_path) = &args.ghp {
        let other = load_space(other_path)?;
        let bounds = ghp_distance_bounds(&space, &other);
        doc.insert(
            "ghp".into(),
            json!({"lower": bounds.lower, "upper": bounds.upper}),
        );
    }

    let bytes = serde_json::to_vec_pretty(&serde_json::Value::Object(doc))
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(vec![Artifact {
        path: args.out.clone(),
        bytes,
    }])
}

fn cmd_gasket(args: &GasketArgs, hash: String) -> CliResult<Vec<Artifact>> {
    let mode = parse_mode(&args.mode, args.seed)?;
    let meta = Meta {
        config_hash: hash,
        seed: Some(args.seed),
    };

    match &args.report {
        None => {
            let spec = GasketSpec::new(args.level, args.window, mode);
            let build = build_gasket(&spec)?;
            let doc = json!({
                "meta": meta.json_value(),
                "gasket": {
                    "level": spec.level,
                    "window": spec.window,
                    "a_n": spec.a_n,
                    "b_n": spec.b_n,
                    "mode": args.mode,
                },
                "network": build.net.to_spec(),
            });
            let bytes = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
            Ok(vec![Artifact {
                path: args.out.clone(),
                bytes,
            }])
        }
        Some(text) => {
            let text = text.strip_prefix("convergence:").unwrap_or(text);
            let parts = parse_u64_list(text, "report")?;
            if parts.len() < 3 {
                return Err(CliError::Config(
                    "--report needs [convergence:]m,window0,level1[,level2,...]".into(),
                ));
            }
            let m = parts[0] as u32;
            let window0 = parts[1] as u32;
            let levels: Vec<u32> = parts[2..].iter().map(|&v| v as u32).collect();
            let seeds: Vec<u64> = match mode {
                ConductanceMode::Deterministic => Vec::new(),
                ConductanceMode::Random { .. } => (0..args.avg_seeds as u64)
                    .map(|i| derive_seed(args.seed, i))
                    .collect(),
            };
            let report = convergence_report(&levels, m, window0, &mode, &seeds)?;
            let mut csv = meta.csv_header();
            csv.push_str("level,sup_deviation\n");
            for row in &report.rows {
                let _ = writeln!(csv, "{},{}", row.level, fmt_csv(row.sup_deviation));
            }
            Ok(vec![Artifact {
                path: args.out.clone(),
                bytes: csv.into_bytes(),
            }])
        }
    }
}

fn cmd_converge(args: &ConvergeArgs, hash: String) -> CliResult<Vec<Artifact>> {
    let levels = parse_u64_list(&args.levels, "levels")?;
    let radii = parse_f64_list(&args.radii, "radii")?;
    let mode = parse_mode(&args.mode, args.seed)?;
    let meta = Meta {
        config_hash: hash,
        seed: Some(args.seed),
    };

    let mut csv = meta.csv_header();
    csv.push_str("level,radius,ball_points,resistance_to_complement,entropy_tail\n");
    for &level in &levels {
        let spec = GasketSpec::new(level as u32, args.window, mode.clone());
        let build = build_gasket(&spec)?;
        let space = FiniteMetricMeasureSpace::from_network(&build.net);
        for &radius in &radii {
            let ball = resform::resistance_ball(&build.net, radius);
            let complement: Vec<usize> = {
                let mut inside = vec![false; build.net.n_vertices()];
                for &x in &ball {
                    inside[x] = true;
                }
                (0..build.net.n_vertices())
                    .filter(|&x| !inside[x])
                    .collect()
            };
            let resistance = if complement.is_empty() {
                f64::INFINITY
            } else {
                resistance_between_sets(&build.net, &[build.net.root()], &complement)?
            };
            let restricted = space.restrict(radius);
            let tail = restricted.entropy_tail(args.alpha, args.tail_start, 1.0)?;
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                level,
                fmt_csv(radius),
                restricted.len(),
                fmt_csv(resistance),
                fmt_csv(tail)
            );
        }
    }
    Ok(vec![Artifact {
        path: args.out.clone(),
        bytes: csv.into_bytes(),
    }])
}
