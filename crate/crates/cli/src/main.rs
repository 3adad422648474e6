use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use epd_gossip::experiments::{
    alpha_sweep, profile_1d, rates, shape2d, verify_checks, VerifySummary, VerifyConfig,
};
use epd_gossip::io::{resolve_filter, write_field_csv, write_metrics_csv, RunDescriptor};
use epd_gossip::lattice::ScalarField;
use epd_gossip::oracle::{epd_filtered_on_lattice, Covariance, EpdSolution};
use epd_gossip::schedule::{jacobi_general_schedule, jacobi_printed_schedule};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "epd-gossip", version, about = "Gossip iterations on lattices and their PDE scaling limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration; every field has a default
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 1 gives bitwise reproducible output
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// 1-d profiles of simple and Jacobi iterates against the heat and EPD oracles
    Profile,
    /// 2-d iterates on a grid for simple and Jacobi gossip
    Shape2d,
    /// Jacobi (alpha, 0) profiles for several alpha
    AlphaSweep,
    /// Squared l2 norm against the predicted sharp rate
    Rates,
    /// Run every acceptance check; exit 1 on any failure
    VerifyAll,
    /// Run a single recursion from a run descriptor
    Run,
    /// Dump the EPD density and its band-limited samples on a box
    Oracle,
}

impl Command {
    fn tag(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Shape2d => "shape2d",
            Command::AlphaSweep => "alpha_sweep",
            Command::Rates => "rates",
            Command::VerifyAll => "verify_all",
            Command::Run => "run",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ProfileConfig {
    experiment: Option<String>,
    filter: String,
    rounds: Vec<usize>,
    quad_points: Option<usize>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            filter: "lazy1".into(),
            rounds: vec![15, 50, 200],
            quad_points: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ShapeConfig {
    experiment: Option<String>,
    filter: String,
    n: usize,
}

impl Default for ShapeConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            filter: "triangular".into(),
            n: 30,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepConfig {
    experiment: Option<String>,
    filter: String,
    alphas: Vec<f64>,
    n: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            filter: "lazy1".into(),
            alphas: vec![0.25, 0.5, 0.75],
            n: 200,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RatesConfig {
    experiment: Option<String>,
    filter: String,
    /// "jacobi" or {"alpha": .., "beta": ..}
    schedule: serde_json::Value,
    n_max: usize,
    window: (usize, usize),
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            filter: "triangular".into(),
            schedule: "jacobi".into(),
            n_max: 200,
            window: (100, 200),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct VerifyAllConfig {
    experiment: Option<String>,
    #[serde(flatten)]
    inner: VerifyConfig,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OracleConfig {
    experiment: Option<String>,
    alpha: f64,
    covariance: Vec<Vec<f64>>,
    time: f64,
    #[serde(rename = "box")]
    box_radius: usize,
    quad_points: Option<usize>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            alpha: 1.0,
            covariance: vec![vec![2.0 / 3.0, 1.0 / 3.0], vec![1.0 / 3.0, 2.0 / 3.0]],
            time: 10.0,
            box_radius: 15,
            quad_points: None,
        }
    }
}

trait Tagged {
    fn experiment(&self) -> Option<&str>;
}

macro_rules! tagged {
    ($($t:ty),*) => {$(
        impl Tagged for $t {
            fn experiment(&self) -> Option<&str> {
                self.experiment.as_deref()
            }
        }
    )*};
}
tagged!(ProfileConfig, ShapeConfig, SweepConfig, RatesConfig, VerifyAllConfig, OracleConfig);

fn load_config<T: DeserializeOwned + Default + Tagged>(path: Option<&Path>, command: Command) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: T = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(tag) = config.experiment() {
        if tag != command.tag() {
            bail!("config is for experiment {tag:?}, not {:?}", command.tag());
        }
    }
    Ok(config)
}

fn config_base(path: Option<&Path>) -> PathBuf {
    path.and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_field(path: &Path, field: &ScalarField) -> Result<()> {
    write_field_csv(field, create(path)?)?;
    Ok(())
}

fn cmd_profile(cli: &Cli) -> Result<bool> {
    let cfg: ProfileConfig = load_config(cli.config.as_deref(), Command::Profile)?;
    let filter = resolve_filter(&cfg.filter, &config_base(cli.config.as_deref()))?;
    if cfg.rounds.contains(&0) {
        bail!("rounds must be positive");
    }
    let profiles = cfg
        .rounds
        .par_iter()
        .map(|&n| profile_1d(&filter, n, cfg.quad_points).map(|rows| (n, rows)))
        .collect::<Result<Vec<_>, _>>()?;
    for (n, rows) in profiles {
        let path = cli.out.join(format!("profile_n{n}.csv"));
        write_rows(&path, &rows)?;
        println!("wrote {}", path.display());
    }
    Ok(true)
}

#[derive(Serialize)]
struct ShapeSummary {
    n: usize,
    filter: String,
    covariance: [[f64; 2]; 2],
    time: f64,
    cv_simple: f64,
    cv_jacobi: f64,
}

fn cmd_shape2d(cli: &Cli) -> Result<bool> {
    let cfg: ShapeConfig = load_config(cli.config.as_deref(), Command::Shape2d)?;
    let filter = resolve_filter(&cfg.filter, &config_base(cli.config.as_deref()))?;
    let s = shape2d(&filter, cfg.n)?;
    write_field(&cli.out.join(format!("shape2d_simple_n{}.csv", s.n)), &s.simple)?;
    write_field(&cli.out.join(format!("shape2d_jacobi_n{}.csv", s.n)), &s.jacobi)?;
    let summary = ShapeSummary {
        n: s.n,
        filter: filter.label().to_string(),
        covariance: s.covariance,
        time: s.time,
        cv_simple: s.cv_simple,
        cv_jacobi: s.cv_jacobi,
    };
    write_json(&cli.out.join(format!("shape2d_n{}.json", s.n)), &summary)?;
    println!(
        "n={} interior coefficient of variation: simple {:.4}, jacobi {:.4}",
        s.n, s.cv_simple, s.cv_jacobi
    );
    Ok(true)
}

#[derive(Serialize)]
struct SweepSummary {
    alpha: f64,
    n: usize,
    center: f64,
    edge_vertex: i64,
    edge: f64,
    interior_ratio: f64,
    warning: Option<String>,
}

fn cmd_alpha_sweep(cli: &Cli) -> Result<bool> {
    let cfg: SweepConfig = load_config(cli.config.as_deref(), Command::AlphaSweep)?;
    let filter = resolve_filter(&cfg.filter, &config_base(cli.config.as_deref()))?;
    let profiles = cfg
        .alphas
        .par_iter()
        .map(|&a| alpha_sweep(&filter, &[a], cfg.n).map(|mut p| p.remove(0)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut summary = Vec::new();
    for p in profiles {
        if let Some(w) = &p.warning {
            eprintln!("warning: {w}");
        }
        write_rows(&cli.out.join(format!("alpha_sweep_a{}.csv", p.alpha)), &p.rows)?;
        println!(
            "alpha={} center {:.4e} edge {:.4e} interior max/min {:.3}",
            p.alpha, p.center, p.edge, p.interior_ratio
        );
        summary.push(SweepSummary {
            alpha: p.alpha,
            n: p.n,
            center: p.center,
            edge_vertex: p.edge_vertex,
            edge: p.edge,
            interior_ratio: p.interior_ratio,
            warning: p.warning,
        });
    }
    write_json(&cli.out.join("alpha_sweep.json"), &summary)?;
    Ok(true)
}

fn cmd_rates(cli: &Cli) -> Result<bool> {
    let cfg: RatesConfig = load_config(cli.config.as_deref(), Command::Rates)?;
    let filter = resolve_filter(&cfg.filter, &config_base(cli.config.as_deref()))?;
    #[derive(Deserialize)]
    struct Params {
        alpha: f64,
        beta: f64,
    }
    let schedule = match &cfg.schedule {
        serde_json::Value::String(s) if s == "jacobi" => jacobi_printed_schedule(filter.dim()),
        other => {
            let p: Params = serde_json::from_value(other.clone())
                .context("schedule must be \"jacobi\" or {\"alpha\": .., \"beta\": ..}")?;
            jacobi_general_schedule(p.alpha, p.beta)?
        }
    };
    let r = rates(&filter, &schedule, cfg.n_max, cfg.window)?;
    write_rows(&cli.out.join("rates.csv"), &r.rows)?;
    write_json(&cli.out.join("rates_report.json"), &r.report)?;
    fs::write(cli.out.join("rates_report.csv"), r.report.to_csv())?;
    let last = r.rows.last().map(|row| row.ratio).unwrap_or(f64::NAN);
    println!(
        "constant {:.6}, final ratio {:.5}, slope over [{}, {}] {:.4}",
        r.constant, last, r.window.0, r.window.1, r.slope
    );
    Ok(true)
}

fn cmd_verify_all(cli: &Cli) -> Result<bool> {
    let cfg: VerifyAllConfig = load_config(cli.config.as_deref(), Command::VerifyAll)?;
    let checks = verify_checks(&cfg.inner, &config_base(cli.config.as_deref()))?;
    let outcomes: Vec<_> = checks.par_iter().map(|c| c.run()).collect();
    for o in &outcomes {
        println!(
            "{} {:<26} {:>7.2}s  {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.seconds,
            o.detail
        );
    }
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let metadata = BTreeMap::from([
        ("finished_unix".to_string(), stamp.to_string()),
        ("threads".to_string(), cli.threads.to_string()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ]);
    let summary = VerifySummary::new(outcomes, metadata);
    write_json(&cli.out.join("verify_summary.json"), &summary)?;
    let failed = summary.checks.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", summary.checks.len() - failed, summary.checks.len());
    Ok(summary.passed)
}

fn cmd_run(cli: &Cli) -> Result<bool> {
    let path = cli
        .config
        .as_deref()
        .context("run needs --config <run descriptor>")?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let descriptor = RunDescriptor::parse(&text)?;
    let trace = descriptor.run(&config_base(Some(path)))?;
    write_metrics_csv(&trace.metrics, create(&cli.out.join("metrics.csv"))?)?;
    for (n, field) in &trace.snapshots {
        write_field(&cli.out.join(format!("field_n{n}.csv")), field)?;
    }
    let last = trace.metrics.last().expect("round 0 is always recorded");
    println!(
        "{} / {}: {} rounds, final l2_sq {:.6e}, mass {:.12}",
        trace.filter_id, trace.schedule_id, trace.rounds, last.l2_sq, last.mass
    );
    Ok(true)
}

#[derive(Serialize)]
struct OracleRow {
    vertex: String,
    u: f64,
    u_filtered: f64,
}

fn cmd_oracle(cli: &Cli) -> Result<bool> {
    let cfg: OracleConfig = load_config(cli.config.as_deref(), Command::Oracle)?;
    let d = cfg.covariance.len();
    if d == 0 || cfg.covariance.iter().any(|row| row.len() != d) {
        bail!("covariance must be a nonempty square matrix");
    }
    let q = DMatrix::from_row_iterator(d, d, cfg.covariance.iter().flatten().copied());
    let sol = EpdSolution::new(cfg.alpha, Covariance::new(q)?, cfg.time)?;
    let filtered = epd_filtered_on_lattice(&sol, cfg.box_radius, cfg.quad_points)?;
    let mut rows = Vec::with_capacity(filtered.values().len());
    for (v, uf) in filtered.iter() {
        let y: Vec<f64> = v.iter().map(|&c| c as f64).collect();
        rows.push(OracleRow {
            vertex: v.iter().map(i64::to_string).collect::<Vec<_>>().join(" "),
            u: sol.eval(&y)?,
            u_filtered: uf,
        });
    }
    write_rows(&cli.out.join("oracle.csv"), &rows)?;
    println!("wrote {} vertices", rows.len());
    Ok(true)
}

fn run(cli: &Cli) -> Result<bool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
        .context("starting thread pool")?;
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match cli.command {
        Command::Profile => cmd_profile(cli),
        Command::Shape2d => cmd_shape2d(cli),
        Command::AlphaSweep => cmd_alpha_sweep(cli),
        Command::Rates => cmd_rates(cli),
        Command::VerifyAll => cmd_verify_all(cli),
        Command::Run => cmd_run(cli),
        Command::Oracle => cmd_oracle(cli),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
