//! `convsim` — CLI harness for the accelerator datapath simulator.
//!
//! Subcommands: `layer` (single conv layer), `network` (full model),
//! `tree` (adder-tree cost tables / schedule dump), `trace` (window-buffer
//! cycle trace). Exit codes: 0 success, 2 usage or config parse error,
//! 3 validation error, 4 I/O error, 5 simulation/shape error.

mod config;
mod report;

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use convsim_core::dataflow::{self, PipelineConfig};
use convsim_core::perf;
use convsim_core::tree::{ReductionSchedule, TreeVariant};
use convsim_core::{Error as CoreError, FeatureMap, Fixed16};

use config::ConfigFile;
use report::{ensure_dir, write_file, LayerRunReport, NetworkRunReport};

#[derive(Debug)]
pub enum CliError {
    Parse {
        path: PathBuf,
        message: String,
    },
    Validation {
        field: String,
        message: String,
    },
    Io {
        context: String,
        source: std::io::Error,
    },
    Core(CoreError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse { path, message } => {
                write!(f, "config {} failed to parse: {}", path.display(), message)
            }
            CliError::Validation { field, message } => write!(f, "{}: {}", field, message),
            CliError::Io { context, source } => write!(f, "{}: {}", context, source),
            CliError::Core(e) => write!(f, "{}", e),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Validation { .. } => 3,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                CoreError::Io(_)
                | CoreError::BadMagic { .. }
                | CoreError::BadRank { .. }
                | CoreError::Truncated { .. }
                | CoreError::TrailingData { .. } => 4,
                _ => 5,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Classic,
    Improved,
}

impl From<VariantArg> for TreeVariant {
    fn from(v: VariantArg) -> TreeVariant {
        match v {
            VariantArg::Classic => TreeVariant::Classic,
            VariantArg::Improved => TreeVariant::Improved,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "convsim",
    version,
    about = "Fixed-point CNN accelerator datapath simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for reports and tensors (stdout-only when omitted)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed for generated inputs and weights
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Engine clock in MHz (overrides the config; default 100)
    #[arg(long, global = true, value_name = "MHZ")]
    clock_mhz: Option<f64>,

    /// Reduction tree layout (default improved)
    #[arg(long, global = true, value_enum)]
    variant: Option<VariantArg>,

    /// Input channels processed concurrently (default: all)
    #[arg(long, global = true, value_name = "COUNT")]
    pn: Option<usize>,

    /// Output channels processed concurrently (default: all)
    #[arg(long, global = true, value_name = "COUNT")]
    pm: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one convolution layer on the streaming engine
    Layer,
    /// Simulate a full network (convolutions on the engine)
    Network,
    /// Emit adder-tree cost tables, or dump one schedule with --dump
    Tree {
        /// Smallest input count in the table
        #[arg(long, value_name = "N")]
        eta_min: Option<usize>,
        /// Largest input count in the table
        #[arg(long, value_name = "N")]
        eta_max: Option<usize>,
        /// Dump the wiring of a single schedule instead of cost tables
        #[arg(long)]
        dump: bool,
        /// Input count for --dump
        #[arg(long, value_name = "N")]
        eta: Option<usize>,
    },
    /// Export the per-cycle window-buffer trace of one channel plane
    Trace {
        #[arg(long, value_name = "ROWS")]
        height: Option<usize>,
        #[arg(long, value_name = "COLS")]
        width: Option<usize>,
        /// Window side length
        #[arg(long, value_name = "K")]
        kernel: Option<usize>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn validation(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.pn == Some(0) {
        return Err(validation("--pn", "must be at least 1"));
    }
    if cli.pm == Some(0) {
        return Err(validation("--pm", "must be at least 1"));
    }
    match &cli.command {
        Command::Layer => run_layer_cmd(cli),
        Command::Network => run_network_cmd(cli),
        Command::Tree {
            eta_min,
            eta_max,
            dump,
            eta,
        } => run_tree_cmd(cli, *eta_min, *eta_max, *dump, *eta),
        Command::Trace {
            height,
            width,
            kernel,
        } => run_trace_cmd(cli, *height, *width, *kernel),
    }
}

fn load_config(cli: &Cli) -> Result<(ConfigFile, PathBuf), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| validation("--config", "a configuration file is required"))?;
    Ok((ConfigFile::load(path)?, path.clone()))
}

fn clock_hz(cli: &Cli, cfg: &ConfigFile) -> Result<f64, CliError> {
    let mhz = cli.clock_mhz.or(cfg.clock_mhz).unwrap_or(100.0);
    if !mhz.is_finite() || mhz <= 0.0 {
        return Err(validation(
            "clock_mhz",
            format!("must be positive, got {mhz}"),
        ));
    }
    Ok(mhz * 1e6)
}

fn power_watts(cfg: &ConfigFile) -> Result<Option<f64>, CliError> {
    match cfg.power_watts {
        Some(p) if !p.is_finite() || p <= 0.0 => Err(validation(
            "power_watts",
            format!("must be positive, got {p}"),
        )),
        other => Ok(other),
    }
}

fn variant(cli: &Cli) -> TreeVariant {
    cli.variant.map(TreeVariant::from).unwrap_or_default()
}

fn run_layer_cmd(cli: &Cli) -> Result<(), CliError> {
    let (cfg, path) = load_config(cli)?;
    let clock = clock_hz(cli, &cfg)?;
    let power = power_watts(&cfg)?;
    let input_spec = cfg
        .input
        .as_ref()
        .ok_or_else(|| validation("input", "missing [input] section"))?;
    let layer_spec = cfg
        .layer
        .as_ref()
        .ok_or_else(|| validation("layer", "missing [layer] section"))?;

    let mut builder = config::Builder::new(cli.seed, &path);
    let input = builder.build_input(input_spec)?;
    let (kernels, stride_h, stride_w) = builder.build_single_conv(layer_spec, input.channels())?;
    convsim_core::tensor::output_dims(
        input.height(),
        input.width(),
        kernels.kernel_h(),
        kernels.kernel_w(),
        stride_h,
        stride_w,
    )
    .map_err(|e| validation("layer", e.to_string()))?;

    let pipeline = PipelineConfig {
        stride_h,
        stride_w,
        variant: variant(cli),
        pn: cli.pn,
        pm: cli.pm,
    };
    let (output, stats) =
        dataflow::run_layer(&input, &kernels, &pipeline).map_err(CliError::Core)?;

    let report = LayerRunReport {
        out_shape: (output.channels(), output.height(), output.width()),
        variant: pipeline.variant,
        pn: cli.pn,
        pm: cli.pm,
        stats: &stats,
        clock_hz: clock,
        power_watts: power,
        seed: cli.seed,
    };
    print!("{}", report.summary()?);
    if let Some(out_dir) = &cli.out {
        ensure_dir(out_dir)?;
        write_file(&out_dir.join("layer_report.csv"), &report.csv()?)?;
        write_file(&out_dir.join("summary.txt"), &report.summary()?)?;
        output
            .save(out_dir.join("output.ct16"))
            .map_err(CliError::Core)?;
    }
    Ok(())
}

fn run_network_cmd(cli: &Cli) -> Result<(), CliError> {
    let (cfg, path) = load_config(cli)?;
    let clock = clock_hz(cli, &cfg)?;
    let power = power_watts(&cfg)?;
    let input_spec = cfg
        .input
        .as_ref()
        .ok_or_else(|| validation("input", "missing [input] section"))?;
    let layer_specs = cfg
        .layers
        .as_deref()
        .filter(|l| !l.is_empty())
        .ok_or_else(|| validation("layers", "missing [[layers]] list"))?;

    let mut builder = config::Builder::new(cli.seed, &path);
    let input = builder.build_input(input_spec)?;
    let layers = builder.build_network(
        layer_specs,
        (input.channels(), input.height(), input.width()),
    )?;

    let (scores, stats) = dataflow::run_network(&input, &layers, variant(cli), cli.pn, cli.pm)
        .map_err(CliError::Core)?;

    let report = NetworkRunReport {
        stats: &stats,
        scores: &scores,
        variant: variant(cli),
        pn: cli.pn,
        pm: cli.pm,
        clock_hz: clock,
        power_watts: power,
        seed: cli.seed,
    };
    print!("{}", report.summary()?);
    if let Some(out_dir) = &cli.out {
        ensure_dir(out_dir)?;
        write_file(&out_dir.join("network_report.csv"), &report.csv())?;
        write_file(&out_dir.join("scores.csv"), &report.scores_csv())?;
        write_file(&out_dir.join("summary.txt"), &report.summary()?)?;
        // Scores as a rank-3 tensor for bit-exact downstream comparison.
        FeatureMap::new(scores.len(), 1, 1, scores.clone())
            .and_then(|fm| fm.save(out_dir.join("output.ct16")))
            .map_err(CliError::Core)?;
    }
    Ok(())
}

fn run_tree_cmd(
    cli: &Cli,
    eta_min: Option<usize>,
    eta_max: Option<usize>,
    dump: bool,
    eta: Option<usize>,
) -> Result<(), CliError> {
    // Config is optional here; flags win over config values.
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let tree_cfg = cfg.tree.as_ref();

    if dump {
        let eta = eta.ok_or_else(|| validation("--eta", "required with --dump"))?;
        if eta == 0 {
            return Err(validation("--eta", "must be at least 1"));
        }
        let v = variant(cli);
        let schedule = ReductionSchedule::build(v, eta).map_err(CliError::Core)?;
        let text = schedule.dump();
        print!("{text}");
        if let Some(out_dir) = &cli.out {
            ensure_dir(out_dir)?;
            write_file(
                &out_dir.join(format!("schedule_{}_{}.txt", v.name(), eta)),
                &text,
            )?;
        }
        return Ok(());
    }

    let lo = eta_min.or(tree_cfg.and_then(|t| t.eta_min)).unwrap_or(2);
    let hi = eta_max.or(tree_cfg.and_then(|t| t.eta_max)).unwrap_or(256);
    if lo == 0 {
        return Err(validation("tree.eta_min", "must be at least 1"));
    }
    if hi < lo {
        return Err(validation(
            "tree.eta_max",
            format!("must be at least eta_min ({lo}), got {hi}"),
        ));
    }
    let rows = perf::compare_trees(lo..=hi).map_err(CliError::Core)?;
    let mut costs = Vec::new();
    perf::write_cost_csv(&rows, &mut costs).map_err(|e| CliError::Io {
        context: "formatting cost table".into(),
        source: e,
    })?;
    let mut compare = Vec::new();
    perf::write_compare_csv(&rows, &mut compare).map_err(|e| CliError::Io {
        context: "formatting comparison table".into(),
        source: e,
    })?;
    let compare = String::from_utf8(compare).expect("csv is utf-8");
    let costs = String::from_utf8(costs).expect("csv is utf-8");
    if let Some(out_dir) = &cli.out {
        ensure_dir(out_dir)?;
        write_file(&out_dir.join("tree_costs.csv"), &costs)?;
        write_file(&out_dir.join("tree_compare.csv"), &compare)?;
        println!(
            "tree cost tables for eta in [{lo}, {hi}] written to {}",
            out_dir.display()
        );
    } else {
        print!("{compare}");
    }
    Ok(())
}

fn run_trace_cmd(
    cli: &Cli,
    height: Option<usize>,
    width: Option<usize>,
    kernel: Option<usize>,
) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let trace_cfg = cfg.trace.as_ref();
    let resolve = |flag: Option<usize>, from_cfg: Option<usize>, field: &str| {
        let v = flag.or(from_cfg).ok_or_else(|| {
            validation(
                field,
                "missing (pass the flag or set [trace] in the config)",
            )
        })?;
        if v == 0 {
            return Err(validation(field, "must be at least 1"));
        }
        Ok(v)
    };
    let height = resolve(height, trace_cfg.and_then(|t| t.height), "--height")?;
    let width = resolve(width, trace_cfg.and_then(|t| t.width), "--width")?;
    let kernel = resolve(kernel, trace_cfg.and_then(|t| t.kernel), "--kernel")?;

    // Trace timing is data-independent; a zero plane keeps runs reproducible.
    let plane = vec![Fixed16::ZERO; height * width];
    let (trace, _) =
        dataflow::stream_windows(&plane, height, width, kernel).map_err(CliError::Core)?;
    let mut csv = Vec::new();
    trace.write_csv(&mut csv).map_err(|e| CliError::Io {
        context: "formatting trace".into(),
        source: e,
    })?;
    let csv = String::from_utf8(csv).expect("csv is utf-8");
    if let Some(out_dir) = &cli.out {
        ensure_dir(out_dir)?;
        write_file(&out_dir.join("trace.csv"), &csv)?;
        println!(
            "trace: {}x{} plane, window {}x{}, warmup {} cycles, {} valid windows over {} cycles -> {}",
            height,
            width,
            kernel,
            kernel,
            trace.warmup_cycles(),
            trace.valid_count(),
            trace.total_cycles(),
            out_dir.join("trace.csv").display()
        );
    } else {
        print!("{csv}");
    }
    Ok(())
}
