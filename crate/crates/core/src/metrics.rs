//! Divergence metrics between a network and its oriented form: the steady
//! state difference delta_ss, the transient difference delta_tau, seeded
//! parameter ensembles and bias sweeps.
//!
//! The (phi x sample) work grid is embarrassingly parallel; ensembles are
//! pre-generated and reductions run in sample order, so results do not depend
//! on worker count or scheduling.

use crate::dynamics::{self, StateVector, SteadyStatus};
use crate::net::{ModelConfig, Network, NetworkError};
use crate::orient::{self, OrientError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid sampling ranges: {0}")]
    BadRanges(String),
    #[error("ensemble must contain at least one parameter set")]
    EmptyEnsemble,
    #[error("network has no output nodes")]
    NoOutputs,
    #[error("sweeps do not share the same phi grid")]
    GridMismatch,
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Orient(#[from] OrientError),
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
}

/// Per-edge kinetic parameters for one ensemble member, in `edges()` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Where this set came from, e.g. `seed=42/sample=7`.
    pub provenance: String,
}

/// Sampling ranges: alpha log-uniform, beta uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRanges {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
}

impl Default for ParamRanges {
    fn default() -> Self {
        ParamRanges {
            alpha_min: 0.25,
            alpha_max: 4.0,
            beta_min: 2.0,
            beta_max: 20.0,
        }
    }
}

impl ParamRanges {
    fn check(&self) -> Result<(), MetricsError> {
        if !(self.alpha_min > 0.0) || !(self.alpha_max >= self.alpha_min) {
            return Err(MetricsError::BadRanges(format!(
                "alpha range [{}, {}] must be positive and ordered",
                self.alpha_min, self.alpha_max
            )));
        }
        if !(self.beta_min > 1.0) || !(self.beta_max >= self.beta_min) {
            return Err(MetricsError::BadRanges(format!(
                "beta range [{}, {}] must stay above 1 and be ordered",
                self.beta_min, self.beta_max
            )));
        }
        Ok(())
    }
}

/// Deterministic pseudo-random parameter ensemble: same seed, same ensemble.
pub fn sample_params(
    network: &Network,
    n: usize,
    seed: u64,
    ranges: &ParamRanges,
) -> Result<Vec<ParamSet>, MetricsError> {
    ranges.check()?;
    if n == 0 {
        return Err(MetricsError::EmptyEnsemble);
    }
    let n_edges = network.edges().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (la, lb) = (ranges.alpha_min.ln(), ranges.alpha_max.ln());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut alphas = Vec::with_capacity(n_edges);
        let mut betas = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            alphas.push(rng.random_range(la..=lb).exp());
            betas.push(rng.random_range(ranges.beta_min..=ranges.beta_max));
        }
        out.push(ParamSet {
            alphas,
            betas,
            provenance: format!("seed={seed}/sample={i}"),
        });
    }
    Ok(out)
}

/// Per-phi, per-output aggregate of the divergence metrics over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub output: String,
    pub phi: f64,
    pub n_samples: usize,
    /// Samples whose normalised transient is undefined (steady state too
    /// close to neutral); excluded from delta_tau only.
    pub n_excluded_degenerate: usize,
    pub n_non_convergent: usize,
    pub delta_ss_mean: f64,
    pub delta_ss_std: f64,
    pub delta_tau_mean: f64,
    pub delta_tau_std: f64,
}

impl SweepRecord {
    /// Samples contributing to delta_tau.
    pub fn n_included(&self) -> usize {
        self.n_samples - self.n_excluded_degenerate - self.n_non_convergent
    }
}

/// Steady states below this magnitude make the normalised transient metric
/// meaningless; such samples are excluded and counted.
pub const DEGENERACY_THRESHOLD: f64 = 0.01;

const TAU_SAMPLES: usize = 1001;

#[derive(Clone, Copy)]
struct EvalOptions {
    compute_tau: bool,
}

/// One sample's contribution, per output node.
enum SampleOutcome {
    NonConvergent,
    Converged {
        /// (delta_ss contribution, optional delta_tau contribution) per output.
        per_output: Vec<(f64, Option<f64>)>,
    },
}

fn eval_sample(
    unoriented: &Network,
    oriented: &Network,
    params: &ParamSet,
    output_indices: &[usize],
    config: &ModelConfig,
    opts: EvalOptions,
) -> SampleOutcome {
    let run = |net: &Network| -> Option<(StateVector, f64)> {
        let sub = net.with_params(&params.alphas, &params.betas).ok()?;
        let x0 = StateVector::zeros(sub.nodes().len());
        match dynamics::run_to_steady_state(&sub, &x0, config) {
            Ok((x, t, SteadyStatus::Converged)) => Some((x, t)),
            // Non-convergence and numeric failure are both excluded and
            // counted rather than aborting the ensemble.
            _ => None,
        }
    };
    let Some((xu, tu)) = run(unoriented) else {
        return SampleOutcome::NonConvergent;
    };
    let Some((xo, to)) = run(oriented) else {
        return SampleOutcome::NonConvergent;
    };

    let tau_curves = if opts.compute_tau {
        let t_end = tu.max(to);
        if t_end > 0.0 {
            let integrate = |net: &Network| {
                let sub = net.with_params(&params.alphas, &params.betas).ok()?;
                let x0 = StateVector::zeros(sub.nodes().len());
                dynamics::integrate(&sub, &x0, t_end, config, TAU_SAMPLES).ok()
            };
            match (integrate(unoriented), integrate(oriented)) {
                (Some(a), Some(b)) => Some((a, b)),
                _ => return SampleOutcome::NonConvergent,
            }
        } else {
            None
        }
    } else {
        None
    };

    let per_output = output_indices
        .iter()
        .map(|&i| {
            let d = xu.0[i];
            let dbar = xo.0[i];
            let dss = d - dbar;
            let degenerate = d.abs() < DEGENERACY_THRESHOLD || dbar.abs() < DEGENERACY_THRESHOLD;
            let dtau = if !opts.compute_tau || degenerate {
                None
            } else {
                match &tau_curves {
                    None => Some(0.0),
                    Some((tu_traj, to_traj)) => {
                        // Trapezoidal quadrature of the normalised difference.
                        let dt = tu_traj.times[1] - tu_traj.times[0];
                        let mut acc = 0.0;
                        for w in 0..tu_traj.times.len() {
                            let v = tu_traj.states[w][i] / d - to_traj.states[w][i] / dbar;
                            let weight = if w == 0 || w + 1 == tu_traj.times.len() {
                                0.5
                            } else {
                                1.0
                            };
                            acc += weight * v;
                        }
                        Some(acc * dt)
                    }
                }
            };
            (dss, dtau)
        })
        .collect();
    SampleOutcome::Converged { per_output }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn bias_point(
    network: &Network,
    oriented: &Network,
    phi: f64,
    ensemble: &[ParamSet],
    config: &ModelConfig,
    opts: EvalOptions,
) -> Result<Vec<SweepRecord>, MetricsError> {
    if ensemble.is_empty() {
        return Err(MetricsError::EmptyEnsemble);
    }
    let outputs: Vec<String> = network.outputs().iter().cloned().collect();
    if outputs.is_empty() {
        return Err(MetricsError::NoOutputs);
    }
    let output_indices: Vec<usize> = outputs
        .iter()
        .map(|o| network.node_index(o).expect("output exists"))
        .collect();
    let cfg = ModelConfig {
        phi,
        ..config.clone()
    };
    cfg.check()?;

    let outcomes: Vec<SampleOutcome> = ensemble
        .par_iter()
        .map(|ps| eval_sample(network, oriented, ps, &output_indices, &cfg, opts))
        .collect();

    let mut records = Vec::with_capacity(outputs.len());
    for (k, output) in outputs.iter().enumerate() {
        let mut dss = Vec::new();
        let mut dtau = Vec::new();
        let mut non_convergent = 0usize;
        let mut degenerate = 0usize;
        for outcome in &outcomes {
            match outcome {
                SampleOutcome::NonConvergent => non_convergent += 1,
                SampleOutcome::Converged { per_output } => {
                    let (ss, tau) = per_output[k];
                    dss.push(ss);
                    match tau {
                        Some(v) => dtau.push(v),
                        None if opts.compute_tau => degenerate += 1,
                        None => {}
                    }
                }
            }
        }
        let (ss_mean, ss_std) = mean_std(&dss);
        let (tau_mean, tau_std) = if opts.compute_tau {
            mean_std(&dtau)
        } else {
            (f64::NAN, f64::NAN)
        };
        records.push(SweepRecord {
            output: output.clone(),
            phi,
            n_samples: ensemble.len(),
            n_excluded_degenerate: degenerate,
            n_non_convergent: non_convergent,
            delta_ss_mean: ss_mean,
            delta_ss_std: ss_std,
            delta_tau_mean: tau_mean,
            delta_tau_std: tau_std,
        });
    }
    Ok(records)
}

/// Ensemble-averaged steady-state difference between the network and its
/// oriented form, one record per output node. The transient fields are NaN.
pub fn delta_ss(
    network: &Network,
    phi: f64,
    ensemble: &[ParamSet],
    config: &ModelConfig,
) -> Result<Vec<SweepRecord>, MetricsError> {
    let (oriented, _) = orient::orient_network(network)?;
    bias_point(
        network,
        &oriented,
        phi,
        ensemble,
        config,
        EvalOptions { compute_tau: false },
    )
}

/// Ensemble-averaged integral of the normalised transient difference; also
/// fills the steady-state fields since both metrics share the same runs.
pub fn delta_tau(
    network: &Network,
    phi: f64,
    ensemble: &[ParamSet],
    config: &ModelConfig,
) -> Result<Vec<SweepRecord>, MetricsError> {
    let (oriented, _) = orient::orient_network(network)?;
    bias_point(
        network,
        &oriented,
        phi,
        ensemble,
        config,
        EvalOptions { compute_tau: true },
    )
}

/// A uniform grid of `n` points over [lo, hi].
pub fn phi_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1);
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// The default 41-point grid over [-1, 1].
pub fn default_phi_grid() -> Vec<f64> {
    phi_grid(-1.0, 1.0, 41)
}

/// Runs both metrics at every grid point with one shared ensemble, so curves
/// are comparable across phi. Records are ordered by (phi, output).
pub fn phi_sweep(
    network: &Network,
    grid: &[f64],
    ensemble: &[ParamSet],
    config: &ModelConfig,
) -> Result<Vec<SweepRecord>, MetricsError> {
    let (oriented, _) = orient::orient_network(network)?;
    let per_phi: Vec<Result<Vec<SweepRecord>, MetricsError>> = grid
        .par_iter()
        .map(|&phi| {
            bias_point(
                network,
                &oriented,
                phi,
                ensemble,
                config,
                EvalOptions { compute_tau: true },
            )
        })
        .collect();
    let mut out = Vec::new();
    for r in per_phi {
        out.extend(r?);
    }
    Ok(out)
}

/// One row of the compounding comparison: the summed single-flip error
/// against the error of the pathway needing all four flips.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundRow {
    pub phi: f64,
    pub single_flip_sum: f64,
    pub multi_flip: f64,
}

/// Per-phi comparison of the summed single-flip delta_ss curves against the
/// four-flip curve. All sweeps must be single-output and share the grid.
pub fn compound_error(
    single_flip_sweeps: &[&[SweepRecord]],
    multi_flip_sweep: &[SweepRecord],
) -> Result<Vec<CompoundRow>, MetricsError> {
    for s in single_flip_sweeps {
        if s.len() != multi_flip_sweep.len() {
            return Err(MetricsError::GridMismatch);
        }
        for (a, b) in s.iter().zip(multi_flip_sweep) {
            if (a.phi - b.phi).abs() > 1e-12 {
                return Err(MetricsError::GridMismatch);
            }
        }
    }
    Ok(multi_flip_sweep
        .iter()
        .enumerate()
        .map(|(i, rec)| CompoundRow {
            phi: rec.phi,
            single_flip_sum: single_flip_sweeps.iter().map(|s| s[i].delta_ss_mean).sum(),
            multi_flip: rec.delta_ss_mean,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use crate::net::EdgeKind::{Activation as A, Inhibition as I};

    fn small_ensemble(net: &Network, n: usize) -> Vec<ParamSet> {
        sample_params(net, n, 42, &ParamRanges::default()).unwrap()
    }

    #[test]
    fn ensembles_are_deterministic_and_seed_sensitive() {
        let net = assets::fig5_pathway();
        let a = sample_params(&net, 150, 42, &ParamRanges::default()).unwrap();
        let b = sample_params(&net, 150, 42, &ParamRanges::default()).unwrap();
        assert_eq!(a, b);
        let c = sample_params(&net, 150, 43, &ParamRanges::default()).unwrap();
        assert_ne!(a[0].alphas, c[0].alphas);
        for ps in &a {
            assert!(ps.betas.iter().all(|&b| b > 1.0));
            assert!(ps.alphas.iter().all(|&a| a > 0.0));
        }
    }

    #[test]
    fn invalid_ranges_rejected() {
        let net = assets::fig5_pathway();
        let r = ParamRanges {
            beta_min: 1.0,
            ..ParamRanges::default()
        };
        assert!(matches!(
            sample_params(&net, 5, 1, &r),
            Err(MetricsError::BadRanges(_))
        ));
        assert!(matches!(
            sample_params(&net, 0, 1, &ParamRanges::default()),
            Err(MetricsError::EmptyEnsemble)
        ));
    }

    #[test]
    fn unbiased_metrics_vanish() {
        let net = assets::pattern_pathway(&[I, I, A, A], 0.5);
        let ens = small_ensemble(&net, 8);
        let recs = delta_tau(&net, 0.0, &ens, &ModelConfig::default()).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.n_non_convergent, 0);
        assert!(r.delta_ss_mean.abs() <= 1e-6, "dss {}", r.delta_ss_mean);
        assert!(r.delta_tau_mean.abs() <= 1e-4, "dtau {}", r.delta_tau_mean);
        assert_eq!(
            r.n_samples,
            r.n_included() + r.n_excluded_degenerate + r.n_non_convergent
        );
    }

    #[test]
    fn structurally_oriented_pathway_has_identically_zero_dss() {
        let net = assets::pattern_pathway(&[A, A, A, A], 0.5);
        let ens = small_ensemble(&net, 5);
        for phi in [-0.8, 0.0, 0.6] {
            let recs = delta_ss(&net, phi, &ens, &ModelConfig::default()).unwrap();
            assert_eq!(recs[0].delta_ss_mean, 0.0);
        }
    }

    #[test]
    fn delta_ss_bounded_by_state_range() {
        let net = assets::pattern_pathway(&[I, I, I, A], 0.5);
        let ens = small_ensemble(&net, 5);
        for phi in [-1.0, -0.5, 0.5, 1.0] {
            let recs = delta_ss(&net, phi, &ens, &ModelConfig::default()).unwrap();
            assert!(recs[0].delta_ss_mean.abs() <= 2.0);
        }
    }

    #[test]
    fn metric_determinism() {
        let net = assets::pattern_pathway(&[I, A, A, A], 0.5);
        let ens = small_ensemble(&net, 6);
        let a = delta_tau(&net, 0.4, &ens, &ModelConfig::default()).unwrap();
        let b = delta_tau(&net, 0.4, &ens, &ModelConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn slower_unoriented_form_gives_negative_delta_tau() {
        // Two stimulated single-node systems with the same steady state but
        // different timescales: alpha scales F linearly, so halving alpha
        // halves the approach speed without moving the fixed point. The
        // normalised transient of the slower (unoriented stand-in) system
        // lags, making the integral negative.
        use crate::dynamics::{integrate, StateVector};
        let slow = single_node(1.0);
        let fast = single_node(2.0);
        let cfg = ModelConfig::default();
        let (xs, ts, _) =
            dynamics::run_to_steady_state(&slow, &StateVector::zeros(1), &cfg).unwrap();
        let (xf, tf, _) =
            dynamics::run_to_steady_state(&fast, &StateVector::zeros(1), &cfg).unwrap();
        assert!((xs.0[0] - xf.0[0]).abs() < 1e-6);
        let t_end = ts.max(tf);
        let a = integrate(&slow, &StateVector::zeros(1), t_end, &cfg, 1001).unwrap();
        let b = integrate(&fast, &StateVector::zeros(1), t_end, &cfg, 1001).unwrap();
        let dt = a.times[1] - a.times[0];
        let mut acc = 0.0;
        for w in 0..a.times.len() {
            let v = a.states[w][0] / xs.0[0] - b.states[w][0] / xf.0[0];
            let weight = if w == 0 || w + 1 == a.times.len() {
                0.5
            } else {
                1.0
            };
            acc += weight * v * dt;
        }
        assert!(acc < -0.1, "expected clearly negative integral, got {acc}");
    }

    fn single_node(alpha: f64) -> Network {
        use crate::net::{EdgeClass, EdgeSource, EdgeSpec, NetworkParts, StimulusSpec};
        use std::collections::BTreeSet;
        Network::from_parts(NetworkParts {
            id: format!("single-{alpha}"),
            nodes: vec![("a".into(), "p".into(), false)],
            pathway_defs: vec![("p".into(), "a".into(), "a".into())],
            stimuli: vec![StimulusSpec {
                id: "s".into(),
                level: 0.5,
            }],
            edges: vec![EdgeSpec {
                source: EdgeSource::Stimulus("s".into()),
                target: "a".into(),
                kind: A,
                alpha,
                beta: 2.0,
                class: EdgeClass::Stimulus,
            }],
            outputs: BTreeSet::from(["a".to_string()]),
        })
        .unwrap()
    }

    #[test]
    fn phi_sweep_shares_ensemble_and_matches_point_queries() {
        let net = assets::pattern_pathway(&[I, I], 0.5);
        let ens = small_ensemble(&net, 5);
        let grid = [0.0];
        let sweep = phi_sweep(&net, &grid, &ens, &ModelConfig::default()).unwrap();
        let point = delta_tau(&net, 0.0, &ens, &ModelConfig::default()).unwrap();
        assert_eq!(sweep, point);
    }

    #[test]
    fn compound_error_rows_align_with_grid() {
        let mk = |phi: f64, v: f64| SweepRecord {
            output: "x5".into(),
            phi,
            n_samples: 1,
            n_excluded_degenerate: 0,
            n_non_convergent: 0,
            delta_ss_mean: v,
            delta_ss_std: 0.0,
            delta_tau_mean: 0.0,
            delta_tau_std: 0.0,
        };
        let s1 = vec![mk(-0.5, 0.1), mk(0.5, 0.2)];
        let s2 = vec![mk(-0.5, 0.3), mk(0.5, 0.4)];
        let multi = vec![mk(-0.5, 1.0), mk(0.5, 2.0)];
        let rows = compound_error(&[&s1, &s2], &multi).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[0].single_flip_sum - 0.4).abs() < 1e-15);
        assert_eq!(rows[1].multi_flip, 2.0);
        let bad = vec![mk(-0.4, 0.0), mk(0.5, 0.0)];
        assert!(compound_error(&[&bad], &multi).is_err());
    }
}
