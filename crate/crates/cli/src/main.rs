use std::path::PathBuf;
use std::process::ExitCode;

use carpetdim::{Error, Result};
use carpetdim_cli::config::{self, BoxTarget, RunConfig, SMethod, Task};
use carpetdim_cli::{exit_code, render_summary, run};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "carpetdim", version, about = "Dimension toolkit for self-affine carpets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Validate the carpet and echo it in canonical form.
    Validate,
    /// Equivalence classes of words up to length --kmax.
    Classes,
    /// Overlap exponent lower bounds H_k up to --kmax.
    H,
    /// Exact binned projected measure at --depth with --bins bins.
    Measure,
    /// L^q spectrum estimate over --qs and --depths.
    Tau,
    /// Asymptote slope s by --method.
    S,
    /// Box-counting dimension of --target over --scales.
    Boxdim,
    /// Two-scale Assouad estimate over --ks.
    Assouad,
    /// Full dimension report.
    Report,
    /// Two-map family sweep over --betas with fixed --alpha.
    Sweep,
    /// Several tasks in one run.
    Run {
        /// Comma-separated task names.
        #[arg(long = "task", value_delimiter = ',')]
        tasks: Vec<String>,
        /// JSON run configuration; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct Opts {
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Carpet JSON, inline when it starts with `{`, else a file path.
    #[arg(long, global = true)]
    carpet: Option<String>,
    /// Vertical ratio override, e.g. 1/3.
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    max_words: Option<u64>,
    #[arg(long, global = true)]
    max_bins: Option<usize>,
    #[arg(long, global = true)]
    max_depth: Option<usize>,
    #[arg(long, global = true)]
    max_points: Option<usize>,
    #[arg(long, global = true)]
    kmax: Option<usize>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    bins: Option<usize>,
    /// Moment orders, e.g. 1,2,4,8.
    #[arg(long, global = true)]
    qs: Option<String>,
    /// Depths, e.g. 8..14.
    #[arg(long, global = true)]
    depths: Option<String>,
    #[arg(long, global = true, value_enum)]
    method: Option<SMethod>,
    #[arg(long, global = true, value_enum)]
    target: Option<BoxTarget>,
    /// Scales, e.g. 2^-6..2^-14 or 1/8,1/16.
    #[arg(long, global = true, allow_hyphen_values = true)]
    scales: Option<String>,
    #[arg(long, global = true)]
    ks: Option<String>,
    /// Horizontal ratios, e.g. 0.55,0.6,2^-1/2.
    #[arg(long, global = true, allow_hyphen_values = true)]
    betas: Option<String>,
    /// Weak separation flag for the projection.
    #[arg(long, global = true)]
    wsp: Option<bool>,
    #[arg(long, global = true)]
    ad_pif: Option<f64>,
    #[arg(long, global = true)]
    dim_nu_beta: Option<f64>,
    /// Known value of s; overrides estimates.
    #[arg(long = "s-value", global = true)]
    s_value: Option<f64>,
}

fn build_config(cli: Cli) -> Result<RunConfig> {
    let (mut cfg, tasks) = match cli.command {
        Command::Run { tasks, config } => {
            let cfg = match config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
                    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?
                }
                None => RunConfig::default(),
            };
            let tasks = tasks.iter().map(|t| t.parse()).collect::<Result<Vec<Task>>>()?;
            (cfg, tasks)
        }
        single => {
            let task = match single {
                Command::Validate => Task::Validate,
                Command::Classes => Task::Classes,
                Command::H => Task::H,
                Command::Measure => Task::Measure,
                Command::Tau => Task::Tau,
                Command::S => Task::S,
                Command::Boxdim => Task::Boxdim,
                Command::Assouad => Task::Assouad,
                Command::Report => Task::Report,
                Command::Sweep => Task::Sweep,
                Command::Run { .. } => unreachable!(),
            };
            (RunConfig::default(), vec![task])
        }
    };
    if !tasks.is_empty() {
        cfg.tasks = tasks;
    }
    let o = cli.opts;
    if o.preset.is_some() || o.carpet.is_some() {
        cfg.preset = o.preset;
        cfg.carpet = o.carpet;
    }
    macro_rules! set {
        ($($field:ident <- $val:expr),* $(,)?) => { $(if let Some(v) = $val { cfg.$field = v; })* };
    }
    set!(out <- o.out, seed <- o.seed, kmax <- o.kmax, s_method <- o.method, target <- o.target);
    if let Some(v) = o.max_words {
        cfg.budgets.max_words = v;
    }
    if let Some(v) = o.max_bins {
        cfg.budgets.max_bins = v;
    }
    if let Some(v) = o.max_depth {
        cfg.budgets.max_depth = v;
    }
    if let Some(v) = o.max_points {
        cfg.budgets.max_points = v;
    }
    cfg.alpha = o.alpha.or(cfg.alpha);
    cfg.depth = o.depth.or(cfg.depth);
    cfg.bins = o.bins.or(cfg.bins);
    cfg.wsp = o.wsp.or(cfg.wsp);
    cfg.ad_pif = o.ad_pif.or(cfg.ad_pif);
    cfg.dim_nu_beta = o.dim_nu_beta.or(cfg.dim_nu_beta);
    cfg.s_user = o.s_value.or(cfg.s_user);
    if let Some(q) = o.qs {
        cfg.qs = Some(config::parse_f64_list(&q)?);
    }
    if let Some(d) = o.depths {
        cfg.depths = Some(config::parse_usize_list(&d)?);
    }
    if let Some(k) = o.ks {
        cfg.ks = Some(config::parse_usize_list(&k)?);
    }
    if let Some(s) = o.scales {
        cfg.scales = Some(config::parse_string_list(&s));
    }
    if let Some(b) = o.betas {
        cfg.betas = Some(config::parse_string_list(&b));
    }
    Ok(cfg)
}

fn init_threads() {
    if let Some(n) = std::env::var("CARPETDIM_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let outcome = build_config(cli).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(o) => {
            print!("{}", render_summary(&o.summary));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
