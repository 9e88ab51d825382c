//! `signet`: orient, simulate and sweep signalling network models from the
//! command line.
//!
//! Exit codes: 0 success, 2 input/parse failure, 3 validation failure,
//! 4 simulation or metric failure.

mod figures;

use clap::{Args, Parser, Subcommand};
use signet_core::diag::has_errors;
use signet_core::dsl;
use signet_core::dynamics::{self, StateVector, SteadyStatus};
use signet_core::metrics::{self, ParamRanges, SweepRecord};
use signet_core::net::{EdgeClass, EdgeKind, ModelConfig, Network};
use signet_core::orient::{self, StimulusOrientation};
use signet_core::{assets, Diagnostic};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "signet",
    version,
    about = "Signalling network orientation and simulation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone, Default)]
struct ConfigFlags {
    /// Bias parameter in [-1, 1].
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,
    /// Relative integrator tolerance.
    #[arg(long)]
    tol_rel: Option<f64>,
    /// Absolute integrator tolerance.
    #[arg(long)]
    tol_abs: Option<f64>,
    /// Steady-state threshold on the sup norm of the derivative.
    #[arg(long)]
    eps_ss: Option<f64>,
    /// Horizon after which a run counts as non-convergent.
    #[arg(long)]
    t_max: Option<f64>,
    /// Stimulus level substituted into every stimulus of the asset.
    #[arg(long, allow_negative_numbers = true)]
    stimulus_level: Option<f64>,
}

impl ConfigFlags {
    fn apply(&self, cfg: &mut ModelConfig) -> Result<(), CliError> {
        if let Some(v) = self.phi {
            cfg.phi = v;
        }
        if let Some(v) = self.tol_rel {
            cfg.tol_rel = v;
        }
        if let Some(v) = self.tol_abs {
            cfg.tol_abs = v;
        }
        if let Some(v) = self.eps_ss {
            cfg.eps_ss = v;
        }
        if let Some(v) = self.t_max {
            cfg.t_max = v;
        }
        if let Some(v) = self.stimulus_level {
            cfg.stimulus_level = v;
        }
        cfg.check()
            .map_err(|e| CliError::Parse(format!("bad flag value: {e}")))
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Write one asset file per edge-kind pattern of a linear pathway.
    Enumerate {
        /// Pathway length (node count), 2..=12.
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u8).range(2..=12))]
        length: u8,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Write the base pathway plus its ten single-feedback variants.
    FeedbackFamily {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Sweep the divergence metrics over a bias grid, one CSV row per point.
    Sweep {
        /// Asset file path or bundled asset name.
        #[arg(long)]
        asset: String,
        /// Grid specification `lo:hi:n`; defaults to -1:1:41.
        #[arg(long, allow_hyphen_values = true)]
        phi_grid: Option<String>,
        #[arg(long, default_value_t = 150)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output CSV path; multi-output assets get one file per output.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Emit the per-panel CSV data for one figure plus a plot-script stub.
    Figures {
        /// One of fig6, fig7, fig8_ss, fig8_tau, fig10, fig11, nullclines.
        #[arg(long)]
        figure: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 150)]
        samples: usize,
        #[arg(long, allow_hyphen_values = true)]
        phi_grid: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Rewrite an asset into oriented form and report the flips made.
    Orient {
        #[arg(long)]
        asset: String,
        /// Path for the oriented network file.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Simulate an asset next to its oriented form and write paired
    /// trajectories.
    Compare {
        #[arg(long)]
        asset: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Check asset files and print diagnostics.
    Validate {
        /// Asset file paths.
        paths: Vec<PathBuf>,
    },
    /// Write every bundled asset to a directory.
    Assets {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    Parse(String),
    Validate(String),
    Simulate(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validate(_) => 3,
            CliError::Simulate(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m)
            | CliError::Validate(m)
            | CliError::Simulate(m)
            | CliError::Io(m) => m,
        }
    }
}

impl From<dynamics::DynamicsError> for CliError {
    fn from(e: dynamics::DynamicsError) -> Self {
        CliError::Simulate(e.to_string())
    }
}

impl From<metrics::MetricsError> for CliError {
    fn from(e: metrics::MetricsError) -> Self {
        CliError::Simulate(e.to_string())
    }
}

impl From<orient::OrientError> for CliError {
    fn from(e: orient::OrientError) -> Self {
        CliError::Simulate(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("signet: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Enumerate {
            length,
            out,
            config,
        } => cmd_enumerate(length as usize, &out, &config),
        Cmd::FeedbackFamily { out, config } => cmd_feedback_family(&out, &config),
        Cmd::Sweep {
            asset,
            phi_grid,
            samples,
            seed,
            out,
            config,
        } => cmd_sweep(&asset, phi_grid.as_deref(), samples, seed, &out, &config),
        Cmd::Figures {
            figure,
            seed,
            samples,
            phi_grid,
            out,
            config,
        } => {
            let mut cfg = ModelConfig::default();
            config.apply(&mut cfg)?;
            let grid = match phi_grid.as_deref() {
                Some(s) => parse_grid(s)?,
                None => metrics::default_phi_grid(),
            };
            figures::run(&figure, seed, samples, &grid, &out, &cfg)
        }
        Cmd::Orient { asset, out, config } => cmd_orient(&asset, &out, &config),
        Cmd::Compare { asset, out, config } => cmd_compare(&asset, &out, &config),
        Cmd::Validate { paths } => cmd_validate(&paths),
        Cmd::Assets { out } => cmd_assets(&out),
    }
}

fn render_diags(path: &str, diags: &[Diagnostic]) -> String {
    let mut out = String::new();
    for d in diags {
        let _ = writeln!(out, "{path}: {d}");
    }
    out
}

/// Loads an asset from a file path, falling back to the bundled catalog when
/// the argument names a bundled asset.
fn load_asset(spec: &str, flags: &ConfigFlags) -> Result<(Network, ModelConfig), CliError> {
    let (network, mut cfg) = if Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec)?;
        match dsl::parse(&text) {
            Ok(doc) => (doc.network, doc.config),
            Err(diags) => {
                return Err(CliError::Parse(format!(
                    "cannot parse `{spec}`:\n{}",
                    render_diags(spec, &diags)
                )))
            }
        }
    } else if let Some((_, net)) = assets::catalog()
        .into_iter()
        .find(|(name, net)| name == spec || net.id() == spec)
    {
        (net, ModelConfig::default())
    } else {
        return Err(CliError::Parse(format!(
            "`{spec}` is neither an asset file nor a bundled asset name"
        )));
    };
    flags.apply(&mut cfg)?;
    let network = match flags.stimulus_level {
        Some(level) => set_stimulus_levels(&network, level)?,
        None => network,
    };
    Ok((network, cfg))
}

fn set_stimulus_levels(network: &Network, level: f64) -> Result<Network, CliError> {
    let mut parts = assets::network_to_parts(network);
    for s in &mut parts.stimuli {
        s.level = level;
    }
    Network::from_parts(parts)
        .map_err(|d| CliError::Parse(format!("bad stimulus level:\n{}", render_diags("-", &d))))
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Parse(format!("bad grid `{spec}`, expected `lo:hi:n` with n >= 1"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(bad());
    }
    Ok(metrics::phi_grid(lo, hi, n))
}

fn write_asset_files(
    dir: &Path,
    items: &[(String, Network)],
    cfg: &ModelConfig,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for (name, net) in items {
        std::fs::write(dir.join(format!("{name}.net")), dsl::serialize(net, cfg))?;
    }
    println!("wrote {} asset files to {}", items.len(), dir.display());
    Ok(())
}

fn cmd_enumerate(length: usize, out: &Path, flags: &ConfigFlags) -> Result<(), CliError> {
    let mut cfg = ModelConfig::default();
    flags.apply(&mut cfg)?;
    let mut items = assets::enumerate_patterns(length);
    if let Some(level) = flags.stimulus_level {
        for (_, net) in &mut items {
            *net = set_stimulus_levels(net, level)?;
        }
    }
    write_asset_files(out, &items, &cfg)
}

fn cmd_feedback_family(out: &Path, flags: &ConfigFlags) -> Result<(), CliError> {
    let mut cfg = ModelConfig::default();
    flags.apply(&mut cfg)?;
    let mut items = assets::feedback_family();
    if let Some(level) = flags.stimulus_level {
        for (_, net) in &mut items {
            *net = set_stimulus_levels(net, level)?;
        }
    }
    write_asset_files(out, &items, &cfg)
}

fn cmd_assets(out: &Path) -> Result<(), CliError> {
    write_asset_files(out, &assets::catalog(), &ModelConfig::default())
}

pub(crate) const SWEEP_HEADER: &str =
    "phi,n_samples,n_excluded,n_nonconv,dss_mean,dss_std,dtau_mean,dtau_std";

pub(crate) fn sweep_csv(records: &[&SweepRecord]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.phi,
            r.n_samples,
            r.n_excluded_degenerate,
            r.n_non_convergent,
            r.delta_ss_mean,
            r.delta_ss_std,
            r.delta_tau_mean,
            r.delta_tau_std
        );
    }
    out
}

/// Splits an `--out foo.csv` path into per-output files `foo.<output>.csv`
/// when the network has more than one output.
fn per_output_paths(out: &Path, outputs: &[String]) -> Vec<(String, PathBuf)> {
    if outputs.len() == 1 {
        return vec![(outputs[0].clone(), out.to_path_buf())];
    }
    outputs
        .iter()
        .map(|o| {
            let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
            let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
            (o.clone(), out.with_file_name(format!("{stem}.{o}.{ext}")))
        })
        .collect()
}

fn cmd_sweep(
    asset: &str,
    phi_grid: Option<&str>,
    samples: usize,
    seed: u64,
    out: &Path,
    flags: &ConfigFlags,
) -> Result<(), CliError> {
    let (network, cfg) = load_asset(asset, flags)?;
    let grid = match (phi_grid, flags.phi) {
        (Some(s), _) => parse_grid(s)?,
        (None, Some(phi)) => vec![phi],
        (None, None) => metrics::default_phi_grid(),
    };
    let ensemble = metrics::sample_params(&network, samples, seed, &ParamRanges::default())?;
    let records = metrics::phi_sweep(&network, &grid, &ensemble, &cfg)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let outputs: Vec<String> = network.outputs().iter().cloned().collect();
    for (output, path) in per_output_paths(out, &outputs) {
        let rows: Vec<&SweepRecord> = records.iter().filter(|r| r.output == output).collect();
        std::fs::write(&path, sweep_csv(&rows))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn orientation_word(o: StimulusOrientation) -> &'static str {
    match o {
        StimulusOrientation::Activated => "activated",
        StimulusOrientation::Inhibited => "inhibited",
    }
}

fn cmd_orient(asset: &str, out: &Path, flags: &ConfigFlags) -> Result<(), CliError> {
    let (network, cfg) = load_asset(asset, flags)?;
    let (oriented, report) = orient::orient_network(&network)?;
    // The rewrite must leave every pathway edge activating; anything else is
    // a bug, not an input problem.
    assert!(oriented
        .edges()
        .iter()
        .filter(|e| e.class == EdgeClass::Pathway)
        .all(|e| e.kind == EdgeKind::Activation));
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out, dsl::serialize(&oriented, &cfg))?;

    println!("oriented `{}` -> {}", network.id(), out.display());
    let flipped: Vec<&str> = report.flipped_nodes.iter().map(String::as_str).collect();
    println!(
        "flipped nodes: {}",
        if flipped.is_empty() {
            "none".into()
        } else {
            flipped.join(", ")
        }
    );
    println!("edge toggles: {}", report.toggled_edges.len());
    for (pw, o) in &report.stimulus_orientation {
        println!("stimulus of pathway {pw}: {}", orientation_word(*o));
    }
    Ok(())
}

fn cmd_compare(asset: &str, out: &Path, flags: &ConfigFlags) -> Result<(), CliError> {
    let (network, cfg) = load_asset(asset, flags)?;
    let x0 = StateVector::zeros(network.nodes().len());
    // Horizon: the later of the two steady-state times, or t_max when a run
    // does not settle.
    let (oriented, _) = orient::orient_network(&network)?;
    let (_, t_u, _) = dynamics::run_to_steady_state(&network, &x0, &cfg)?;
    let (_, t_o, _) = dynamics::run_to_steady_state(&oriented, &x0, &cfg)?;
    let t_end = t_u.max(t_o).max(1.0);
    let cmp = dynamics::compare_outputs(&network, &cfg, &x0, t_end, 1001)?;

    let outputs: Vec<String> = network.outputs().iter().cloned().collect();
    let mut csv = String::from("t");
    for o in &outputs {
        let _ = write!(csv, ",x_{o}_unoriented,x_{o}_oriented");
    }
    csv.push('\n');
    for (w, t) in cmp.unoriented.times.iter().enumerate() {
        let _ = write!(csv, "{t}");
        for o in &outputs {
            let i = network.node_index(o).expect("output exists");
            let _ = write!(
                csv,
                ",{},{}",
                cmp.unoriented.states[w][i], cmp.oriented.states[w][i]
            );
        }
        csv.push('\n');
    }
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out, csv)?;

    println!("wrote {}", out.display());
    println!("max output deviation: {:e}", cmp.max_output_deviation());
    for (node, dev) in &cmp.flip_negation_deviation {
        println!("flip negation deviation {node}: {dev:e}");
    }
    if cmp.unoriented.status == SteadyStatus::NonConvergent
        || cmp.oriented.status == SteadyStatus::NonConvergent
    {
        println!("warning: at least one form did not reach steady state by t_max");
    }
    Ok(())
}

fn cmd_validate(paths: &[PathBuf]) -> Result<(), CliError> {
    if paths.is_empty() {
        return Err(CliError::Validate("no asset paths given".into()));
    }
    let mut failed = false;
    for path in paths {
        let shown = path.display().to_string();
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("{shown}: error: {e}");
                failed = true;
                continue;
            }
        };
        match dsl::parse(&text) {
            Ok(doc) => {
                // Warnings already include the structural validator findings.
                print!("{}", render_diags(&shown, &doc.warnings));
                if has_errors(&doc.warnings) {
                    failed = true;
                } else {
                    println!("{shown}: ok");
                }
            }
            Err(diags) => {
                eprint!("{}", render_diags(&shown, &diags));
                failed = true;
            }
        }
    }
    if failed {
        Err(CliError::Validate("validation failed".into()))
    } else {
        Ok(())
    }
}
