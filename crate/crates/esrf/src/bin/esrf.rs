//! Benchmark CLI: runs single experiments or threshold sweeps from flat
//! key=value configs plus flag overrides (flags win).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use esrf::config::RunConfig;
use esrf::runner::{emit_sweep, run_experiment};

#[derive(Parser)]
#[command(name = "esrf", about = "Streaming random forest benchmarks", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and append its row to the results CSV.
    Run(RunArgs),
    /// Run a tg x ts threshold grid over one stream and write a pivot CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file; flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Stream spec: sea[_a|_g], agrawal, agr_a, agr_g, led[_a|_g], rtg,
    /// rbf[_m|_f], hyperplane or file.
    #[arg(long)]
    stream: Option<String>,
    /// Dataset file (with --stream file).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Dataset file format.
    #[arg(long, value_parser = ["arff", "csv"])]
    format: Option<String>,
    /// Instances to evaluate (0 = until the file ends).
    #[arg(long)]
    instances: Option<u64>,
    #[arg(long, value_parser = ["arf", "srf", "esrf"])]
    learner: Option<String>,
    /// ARF ensemble size.
    #[arg(long)]
    n_trees: Option<usize>,
    /// Initial forefront set size.
    #[arg(long)]
    fs: Option<usize>,
    /// Candidate set size.
    #[arg(long)]
    cs: Option<usize>,
    /// Resize factor (grow set size).
    #[arg(long)]
    r: Option<usize>,
    /// Grow threshold.
    #[arg(long, allow_hyphen_values = true)]
    tg: Option<String>,
    /// Shrink threshold.
    #[arg(long, allow_hyphen_values = true)]
    ts: Option<String>,
    /// EWMA window W.
    #[arg(long)]
    window: Option<f64>,
    /// Forefront floor for shrink operations.
    #[arg(long)]
    min_fs: Option<usize>,
    /// Ceiling on |FS|+|CS|+|GS|.
    #[arg(long)]
    max_total: Option<usize>,
    /// Cross-validation folds (1 = plain prequential).
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    report_interval: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Results CSV with baseline rows for the delta/speedup columns.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Learner tag to match in the baseline file (default: any arf row).
    #[arg(long)]
    baseline_learner: Option<String>,
    /// Results CSV (appended).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-run timeline CSV.
    #[arg(long)]
    timeline_out: Option<PathBuf>,
    /// Worker threads (run: member-parallel training; sweep: grid points).
    #[arg(long)]
    jobs: Option<usize>,
    /// Dataset label override for result rows.
    #[arg(long)]
    dataset: Option<String>,
    /// Base concept id (SEA 1-4, Agrawal 1-10, LED segment shift).
    #[arg(long)]
    function: Option<u32>,
    /// Drift-target concept id for _a/_g streams.
    #[arg(long)]
    target_function: Option<u32>,
    /// Label/attribute noise fraction (SEA, LED, hyperplane).
    #[arg(long)]
    noise: Option<f64>,
    /// Agrawal numeric perturbation fraction.
    #[arg(long)]
    perturbation: Option<f64>,
    /// RBF centroid count.
    #[arg(long)]
    centroids: Option<usize>,
    /// RBF centroid drift speed.
    #[arg(long)]
    speed: Option<f64>,
    /// Hyperplane weight drift magnitude.
    #[arg(long)]
    mag_change: Option<f64>,
    /// Hyperplane drifting attribute count.
    #[arg(long)]
    drift_attrs: Option<usize>,
    /// Center of the drift window (default instances/2).
    #[arg(long)]
    drift_position: Option<u64>,
    /// Drift window width (default 1 abrupt, instances/10 gradual).
    #[arg(long)]
    drift_width: Option<u64>,
    /// 0-based class column override for ARFF files.
    #[arg(long)]
    class_index: Option<usize>,
    /// CSV files carry a header row.
    #[arg(long)]
    has_header: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated grow thresholds for the grid.
    #[arg(long, required = true)]
    tg_grid: String,
    /// Comma-separated shrink thresholds for the grid.
    #[arg(long, required = true)]
    ts_grid: String,
    /// Pivot CSV path (tg rows x ts columns, delta_pp cells).
    #[arg(long, default_value = "pivot.csv")]
    pivot_out: PathBuf,
}

fn build_config(common: &CommonArgs) -> Result<RunConfig, String> {
    let mut config = RunConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        config.apply_text(&text).map_err(|e| e.to_string())?;
    }
    // Flags override file entries through the same key=value path.
    let mut pairs: Vec<(&str, String)> = Vec::new();
    macro_rules! flag {
        ($key:literal, $field:expr) => {
            if let Some(v) = &$field {
                pairs.push(($key, v.to_string()));
            }
        };
    }
    flag!("dataset", common.dataset);
    flag!("stream", common.stream);
    flag!("data", common.data.as_ref().map(|p| p.display().to_string()));
    flag!("format", common.format);
    flag!("instances", common.instances);
    flag!("learner", common.learner);
    flag!("n_trees", common.n_trees);
    flag!("fs", common.fs);
    flag!("cs", common.cs);
    flag!("r", common.r);
    flag!("tg", common.tg);
    flag!("ts", common.ts);
    flag!("window", common.window);
    flag!("min_fs", common.min_fs);
    flag!("max_total", common.max_total);
    flag!("folds", common.folds);
    flag!("report_interval", common.report_interval);
    flag!("seed", common.seed);
    flag!(
        "baseline",
        common.baseline.as_ref().map(|p| p.display().to_string())
    );
    flag!("baseline_learner", common.baseline_learner);
    flag!("out", common.out.as_ref().map(|p| p.display().to_string()));
    flag!(
        "timeline_out",
        common.timeline_out.as_ref().map(|p| p.display().to_string())
    );
    flag!("jobs", common.jobs);
    flag!("function", common.function);
    flag!("target_function", common.target_function);
    flag!("noise", common.noise);
    flag!("perturbation", common.perturbation);
    flag!("centroids", common.centroids);
    flag!("speed", common.speed);
    flag!("mag_change", common.mag_change);
    flag!("drift_attrs", common.drift_attrs);
    flag!("drift_position", common.drift_position);
    flag!("drift_width", common.drift_width);
    flag!("class_index", common.class_index);
    if common.has_header {
        pairs.push(("has_header", "true".to_string()));
    }
    for (key, value) in pairs {
        config.apply_pair(key, &value).map_err(|e| e.to_string())?;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn parse_grid(label: &str, text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("{label}: bad threshold '{t}'"))
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => build_config(&args.common).and_then(|config| {
            run_experiment(&config)
                .map(|row| {
                    println!("{row}", row = row.to_csv_line());
                })
                .map_err(|e| e.to_string())
        }),
        Command::Sweep(args) => build_config(&args.common).and_then(|base| {
            let tg_grid = parse_grid("tg-grid", &args.tg_grid)?;
            let ts_grid = parse_grid("ts-grid", &args.ts_grid)?;
            let mut grid = Vec::new();
            for &tg in &tg_grid {
                for &ts in &ts_grid {
                    let mut config = base.clone();
                    config.tg = tg;
                    config.ts = ts;
                    config.validate().map_err(|e| e.to_string())?;
                    grid.push(config);
                }
            }
            emit_sweep(&grid, &args.pivot_out)
                .map(|rows| {
                    for row in rows {
                        println!("{}", row.to_csv_line());
                    }
                })
                .map_err(|e| e.to_string())
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("esrf: {message}");
            ExitCode::FAILURE
        }
    }
}
