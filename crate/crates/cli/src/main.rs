//! Command-line driver: parses a run configuration (file plus flag
//! overrides), validates it, and dispatches to the pipeline registered
//! under the subcommand name. Outputs land in the run directory together
//! with a checksummed manifest.

mod config;
mod output;
mod pipelines;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

use config::{parse_f64_list, parse_grid, parse_usize_list, RunConfig};

#[derive(Parser)]
#[command(name = "pairgraph", version, about = "Pairing on quantum graphs: spectra, sweeps, fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Configuration file (flat `key = value` lines); flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Chain length, e.g. `40` or `N=40`
    #[arg(long)]
    chain: Option<String>,
    /// Number of lateral sites attached to one backbone node (0..=3)
    #[arg(long)]
    side_sites: Option<usize>,
    /// 1-based backbone position of the lateral sites
    #[arg(long)]
    attach_pos: Option<usize>,
    /// `open` or `periodic`
    #[arg(long)]
    boundary: Option<String>,
    /// Edge-list file instead of a chain spec
    #[arg(long)]
    graph_file: Option<PathBuf>,
    /// `bcs` or `hubbard`
    #[arg(long)]
    interaction: Option<String>,
    /// Coupling(s) in units of K, comma-separated
    #[arg(long)]
    g: Option<String>,
    /// Coupling grid `start:stop:count`
    #[arg(long)]
    g_grid: Option<String>,
    /// Pair count(s), comma-separated
    #[arg(long)]
    np: Option<String>,
    /// Histogram bin width in units of K
    #[arg(long)]
    bin_width: Option<f64>,
    /// Symmetric-sector state indices (0 = ground), comma-separated
    #[arg(long)]
    states: Option<String>,
    /// Sweep the lateral-site position instead of the coupling
    #[arg(long)]
    sweep_attach: bool,
    /// Output directory (default: $PAIRGRAPH_OUTPUT_DIR or ./pairgraph-out)
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// `csv` or `json`
    #[arg(long)]
    format: Option<String>,
    /// Worker threads for sweeps (default: logical cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Residual bound for accepting solver output
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-particle spectrum of the graph
    Spectrum(CommonArgs),
    /// Two-particle spectra and the ground-state wavefunction
    Twobody(CommonArgs),
    /// Depairing energy against the lateral-site position
    #[command(name = "sweep-depairing")]
    SweepDepairing(CommonArgs),
    /// Two-particle density of states
    Dos(CommonArgs),
    /// Pair-distance distribution P(r)
    Pdist(CommonArgs),
    /// Coherence length against the coupling
    Coherence(CommonArgs),
    /// Spectroscopic gap from the pairing equations
    #[command(name = "richardson-gap")]
    RichardsonGap(CommonArgs),
    /// Spectroscopic gap against the lateral-site position
    #[command(name = "gap-sweep")]
    GapSweep(CommonArgs),
    /// Level occupations of the many-body ground state with their fit
    Occupations(CommonArgs),
    /// Pairing parameter extracted by the occupation fit
    #[command(name = "bcs-fit")]
    BcsFit(CommonArgs),
    /// Check a configuration file and report every violation
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match cli.command {
        Command::Spectrum(a) => ("spectrum", a),
        Command::Twobody(a) => ("twobody", a),
        Command::SweepDepairing(a) => ("sweep-depairing", a),
        Command::Dos(a) => ("dos", a),
        Command::Pdist(a) => ("pdist", a),
        Command::Coherence(a) => ("coherence", a),
        Command::RichardsonGap(a) => ("richardson-gap", a),
        Command::GapSweep(a) => ("gap-sweep", a),
        Command::Occupations(a) => ("occupations", a),
        Command::BcsFit(a) => ("bcs-fit", a),
        Command::Validate { config } => return run_validate(&config),
    };
    let config = match build_config(name, &args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {:#}", e);
            return ExitCode::from(2);
        }
    };
    let violations = config.validate();
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("configuration error: {}", v);
        }
        return ExitCode::from(2);
    }
    if let Some(workers) = config.workers {
        // a pool may already exist when tests drive main twice; that is fine
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    let registry = pipelines::registry();
    let index = match pipelines::find(&registry, &config.command) {
        Some(i) => i,
        None => {
            eprintln!("configuration error: unknown command `{}`", config.command);
            return ExitCode::from(2);
        }
    };
    let start = Instant::now();
    match registry[index].run(&config) {
        Ok(result) => {
            for point in &result.failed_points {
                eprintln!("point failed: {}", point);
            }
            match output::persist(&config, &result.artifacts, result.failed_points, start.elapsed())
            {
                Ok(manifest) => {
                    println!("wrote {}", manifest.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("output error: {:#}", e);
                    ExitCode::from(3)
                }
            }
        }
        Err(e) => {
            eprintln!("solver error: {:#}", e);
            ExitCode::from(3)
        }
    }
}

fn run_validate(path: &PathBuf) -> ExitCode {
    let text = match output::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("configuration error: {:#}", e);
            return ExitCode::from(2);
        }
    };
    let config = match RunConfig::from_flat_text(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {:#}", e);
            return ExitCode::from(2);
        }
    };
    let violations = config.validate();
    if violations.is_empty() {
        println!("ok");
        ExitCode::SUCCESS
    } else {
        for v in &violations {
            println!("violation: {}", v);
        }
        ExitCode::from(2)
    }
}

fn build_config(name: &str, args: &CommonArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_flat_text(&output::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    config.command = name.to_string();
    if let Some(chain) = &args.chain {
        let digits = chain.strip_prefix("N=").unwrap_or(chain);
        config.chain_sites = Some(
            digits
                .parse()
                .map_err(|_| anyhow!("--chain expects a site count, got `{}`", chain))?,
        );
    }
    if let Some(m) = args.side_sites {
        config.side_sites = m;
    }
    if let Some(n) = args.attach_pos {
        config.attach_pos = Some(n);
    }
    if let Some(b) = &args.boundary {
        config.boundary = b.clone();
    }
    if let Some(p) = &args.graph_file {
        config.graph_file = Some(p.clone());
    }
    if let Some(i) = &args.interaction {
        config.interaction = i.clone();
    }
    match (&args.g, &args.g_grid) {
        (Some(_), Some(_)) => return Err(anyhow!("--g and --g-grid are mutually exclusive")),
        (Some(list), None) => config.g_list = parse_f64_list(list).map_err(|e| anyhow!(e))?,
        (None, Some(grid)) => config.g_list = parse_grid(grid).map_err(|e| anyhow!(e))?,
        (None, None) => {}
    }
    if let Some(np) = &args.np {
        config.np_list = parse_usize_list(np).map_err(|e| anyhow!(e))?;
    }
    if let Some(w) = args.bin_width {
        config.bin_width = w;
    }
    if let Some(s) = &args.states {
        config.states = parse_usize_list(s).map_err(|e| anyhow!(e))?;
    }
    if args.sweep_attach {
        config.sweep_attach = true;
    }
    if let Some(dir) = &args.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(f) = &args.format {
        config.format = f.clone();
    }
    if let Some(w) = args.workers {
        config.workers = Some(w);
    }
    if let Some(t) = args.tolerance {
        config.tolerance = t;
    }
    Ok(config)
}
