//! Per-figure CSV emission: bias sweeps across the pattern and feedback
//! asset families, the integrated-network panels, paired trajectories and
//! single-edge nullclines.

use crate::{sweep_csv, CliError};
use signet_core::dynamics::{self, StateVector};
use signet_core::metrics::{self, ParamRanges, SweepRecord};
use signet_core::net::{edge_rates, EdgeKind, ModelConfig, Network};
use signet_core::orient::{self, StimulusOrientation};
use signet_core::{assets, metrics::CompoundRow};
use std::fmt::Write as _;
use std::path::Path;

pub fn run(
    figure: &str,
    seed: u64,
    samples: usize,
    grid: &[f64],
    out: &Path,
    cfg: &ModelConfig,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    match figure {
        "fig6" => fig6(seed, samples, grid, out, cfg)?,
        "fig7" => fig7(seed, samples, grid, out, cfg)?,
        "fig8_ss" | "fig8_tau" => fig8(figure, seed, samples, grid, out, cfg)?,
        "fig10" => fig10(seed, samples, grid, out, cfg)?,
        "fig11" => fig11(out, cfg)?,
        "nullclines" => nullclines(out)?,
        other => {
            return Err(CliError::Parse(format!(
                "unknown figure `{other}`; expected fig6, fig7, fig8_ss, fig8_tau, fig10, fig11 or nullclines"
            )))
        }
    }
    write_plot_stub(figure, out)?;
    Ok(())
}

fn pattern_part(id: &str) -> &str {
    id.rsplit('-').next().unwrap_or(id)
}

fn sweep_asset(
    net: &Network,
    seed: u64,
    samples: usize,
    grid: &[f64],
    cfg: &ModelConfig,
) -> Result<Vec<SweepRecord>, CliError> {
    let ensemble = metrics::sample_params(net, samples, seed, &ParamRanges::default())?;
    Ok(metrics::phi_sweep(net, grid, &ensemble, cfg)?)
}

fn orientation_class(net: &Network, pathway: &str) -> Result<&'static str, CliError> {
    let (_, report) = orient::orient_network(net)?;
    Ok(match report.stimulus_orientation.get(pathway) {
        Some(StimulusOrientation::Inhibited) => "inhibited",
        _ => "activated",
    })
}

/// One sweep panel per length-5 pattern that needs at least one flip.
fn fig6(
    seed: u64,
    samples: usize,
    grid: &[f64],
    out: &Path,
    cfg: &ModelConfig,
) -> Result<(), CliError> {
    let mut written = 0usize;
    for (name, net) in assets::enumerate_patterns(5) {
        let kinds = net.pathway_kinds("p").expect("pattern pathway");
        let flips = orient::predicted_flips(&kinds).len();
        if flips == 0 {
            continue;
        }
        let records = sweep_asset(&net, seed, samples, grid, cfg)?;
        let pattern = pattern_part(&name);
        let meta = format!(
            "# pattern={pattern} flips={flips} stimulus={}\n",
            orientation_class(&net, "p")?
        );
        let rows: Vec<&SweepRecord> = records.iter().collect();
        std::fs::write(
            out.join(format!("fig6_{pattern}.csv")),
            meta + &sweep_csv(&rows),
        )?;
        written += 1;
    }
    println!("wrote {written} panel files to {}", out.display());
    Ok(())
}

/// Summed single-flip steady-state error against the all-flips pattern.
fn fig7(
    seed: u64,
    samples: usize,
    grid: &[f64],
    out: &Path,
    cfg: &ModelConfig,
) -> Result<(), CliError> {
    let mut singles: Vec<Vec<SweepRecord>> = Vec::new();
    let mut multi: Option<Vec<SweepRecord>> = None;
    for (name, net) in assets::enumerate_patterns(5) {
        let kinds = net.pathway_kinds("p").expect("pattern pathway");
        let flips = orient::predicted_flips(&kinds).len();
        if flips != 1 && flips != 4 {
            continue;
        }
        let records = sweep_asset(&net, seed, samples, grid, cfg)?;
        let pattern = pattern_part(&name);
        let rows: Vec<&SweepRecord> = records.iter().collect();
        std::fs::write(
            out.join(format!("fig7_{pattern}.csv")),
            format!("# pattern={pattern} flips={flips}\n") + &sweep_csv(&rows),
        )?;
        if flips == 1 {
            singles.push(records);
        } else {
            multi = Some(records);
        }
    }
    let multi = multi.expect("the four-flip pattern exists");
    let refs: Vec<&[SweepRecord]> = singles.iter().map(Vec::as_slice).collect();
    let rows: Vec<CompoundRow> = metrics::compound_error(&refs, &multi)?;
    let mut csv = String::from("phi,single_flip_sum,multi_flip\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{}", r.phi, r.single_flip_sum, r.multi_flip);
    }
    std::fs::write(out.join("fig7.csv"), csv)?;
    println!(
        "wrote {} panel files to {}",
        singles.len() + 2,
        out.display()
    );
    Ok(())
}

/// One sweep panel per single-feedback variant, tagged with the feedback
/// span. The _ss and _tau variants share data; both metric columns are
/// always present.
fn fig8(
    figure: &str,
    seed: u64,
    samples: usize,
    grid: &[f64],
    out: &Path,
    cfg: &ModelConfig,
) -> Result<(), CliError> {
    let mut written = 0usize;
    for (name, net) in assets::feedback_family() {
        let records = sweep_asset(&net, seed, samples, grid, cfg)?;
        // Names are fb-x<j>-x<i> with the feedback running j -> i upstream.
        let nums: Vec<usize> = name
            .split(|c: char| !c.is_ascii_digit())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().unwrap_or(0))
            .collect();
        let distance = match nums.as_slice() {
            [j, i] if j > i => j - i,
            _ => 0,
        };
        let rows: Vec<&SweepRecord> = records.iter().collect();
        std::fs::write(
            out.join(format!("{figure}_{name}.csv")),
            format!("# feedback={name} distance={distance}\n") + &sweep_csv(&rows),
        )?;
        written += 1;
    }
    println!("wrote {written} panel files to {}", out.display());
    Ok(())
}

/// Bias sweeps of the integrated surrogate network, one panel per output.
fn fig10(
    seed: u64,
    samples: usize,
    grid: &[f64],
    out: &Path,
    cfg: &ModelConfig,
) -> Result<(), CliError> {
    let net = assets::egfr_surrogate();
    let records = sweep_asset(&net, seed, samples, grid, cfg)?;
    let mut written = 0usize;
    for output in net.outputs() {
        let rows: Vec<&SweepRecord> = records.iter().filter(|r| &r.output == output).collect();
        std::fs::write(
            out.join(format!("fig10_{output}.csv")),
            format!("# output={output}\n") + &sweep_csv(&rows),
        )?;
        written += 1;
    }
    println!("wrote {written} panel files to {}", out.display());
    Ok(())
}

/// Paired output trajectories of the surrogate network at three bias values.
fn fig11(out: &Path, cfg: &ModelConfig) -> Result<(), CliError> {
    let net = assets::egfr_surrogate();
    let x0 = StateVector::zeros(net.nodes().len());
    let mut written = 0usize;
    for phi in [-0.5, 0.0, 0.5] {
        let cfg = ModelConfig { phi, ..cfg.clone() };
        let (oriented, _) = orient::orient_network(&net)?;
        let (_, t_u, _) = dynamics::run_to_steady_state(&net, &x0, &cfg)?;
        let (_, t_o, _) = dynamics::run_to_steady_state(&oriented, &x0, &cfg)?;
        let t_end = t_u.max(t_o).max(1.0);
        let cmp = dynamics::compare_outputs(&net, &cfg, &x0, t_end, 1001)?;
        for output in net.outputs() {
            let i = net.node_index(output).expect("output exists");
            for (form, traj) in [("unoriented", &cmp.unoriented), ("oriented", &cmp.oriented)] {
                let mut csv = String::from("t,x\n");
                for (w, t) in traj.times.iter().enumerate() {
                    let _ = writeln!(csv, "{t},{}", traj.states[w][i]);
                }
                std::fs::write(out.join(format!("fig11_{output}_{form}_phi{phi}.csv")), csv)?;
                written += 1;
            }
        }
    }
    println!("wrote {written} trajectory files to {}", out.display());
    Ok(())
}

/// Solves the single-edge balance r+ = r- for the target state x over a grid
/// of source states y. The balance is monotone in x (production falls, decay
/// rises), so bisection over [-1, 1] always lands on the unique root.
fn nullcline_points(kind: EdgeKind, phi: f64) -> Vec<(f64, f64)> {
    const ALPHA: f64 = 1.0;
    const BETA: f64 = 5.0;
    let g = |x: f64, y: f64| {
        let (rp, rm) = edge_rates(x, y, kind, ALPHA, BETA, phi).expect("valid parameters");
        rp - rm
    };
    let mut pts = Vec::with_capacity(201);
    for k in 0..201 {
        let y = -1.0 + 2.0 * k as f64 / 200.0;
        let (mut a, mut b) = (-1.0f64, 1.0f64);
        let (ga, gb) = (g(a, y), g(b, y));
        if ga == 0.0 {
            pts.push((y, a));
            continue;
        }
        if gb == 0.0 || ga.signum() == gb.signum() {
            if gb == 0.0 {
                pts.push((y, b));
            }
            continue;
        }
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            if g(mid, y).signum() == ga.signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        pts.push((y, 0.5 * (a + b)));
    }
    pts
}

fn nullclines(out: &Path) -> Result<(), CliError> {
    for (kind, label) in [
        (EdgeKind::Activation, "activation"),
        (EdgeKind::Inhibition, "inhibition"),
    ] {
        let mut csv = String::from("phi,y,x\n");
        for phi in [-0.6, -0.3, 0.0, 0.3, 0.6] {
            for (y, x) in nullcline_points(kind, phi) {
                let _ = writeln!(csv, "{phi},{y},{x}");
            }
        }
        std::fs::write(out.join(format!("nullclines_{label}.csv")), csv)?;
    }
    println!("wrote 2 panel files to {}", out.display());
    Ok(())
}

fn write_plot_stub(figure: &str, out: &Path) -> Result<(), CliError> {
    let stub = format!(
        "#!/usr/bin/env python3\n\
         \"\"\"Plot stub for {figure}: renders every CSV in this directory.\"\"\"\n\
         import csv\n\
         import glob\n\
         import os\n\n\
         import matplotlib.pyplot as plt\n\n\
         here = os.path.dirname(os.path.abspath(__file__))\n\
         for path in sorted(glob.glob(os.path.join(here, '{figure}*.csv'))):\n\
         \x20\x20\x20\x20with open(path) as fh:\n\
         \x20\x20\x20\x20\x20\x20\x20\x20rows = [r for r in fh if not r.startswith('#')]\n\
         \x20\x20\x20\x20data = list(csv.DictReader(rows))\n\
         \x20\x20\x20\x20if not data:\n\
         \x20\x20\x20\x20\x20\x20\x20\x20continue\n\
         \x20\x20\x20\x20cols = list(data[0])\n\
         \x20\x20\x20\x20xs = [float(r[cols[0]]) for r in data]\n\
         \x20\x20\x20\x20plt.figure()\n\
         \x20\x20\x20\x20for col in cols[1:]:\n\
         \x20\x20\x20\x20\x20\x20\x20\x20try:\n\
         \x20\x20\x20\x20\x20\x20\x20\x20\x20\x20\x20\x20ys = [float(r[col]) for r in data]\n\
         \x20\x20\x20\x20\x20\x20\x20\x20except ValueError:\n\
         \x20\x20\x20\x20\x20\x20\x20\x20\x20\x20\x20\x20continue\n\
         \x20\x20\x20\x20\x20\x20\x20\x20plt.plot(xs, ys, label=col)\n\
         \x20\x20\x20\x20plt.title(os.path.basename(path))\n\
         \x20\x20\x20\x20plt.legend()\n\
         \x20\x20\x20\x20plt.savefig(path.replace('.csv', '.png'), dpi=150)\n\
         \x20\x20\x20\x20plt.close()\n"
    );
    std::fs::write(out.join(format!("plot_{figure}.py")), stub)?;
    Ok(())
}
