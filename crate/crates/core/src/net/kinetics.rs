//! Test-model kinetics: a Michaelis-Menten style rate translated to the
//! [-1, 1] state convention, the activation/inhibition rate pairs with their
//! bias parameter, and numerical classifiers for the edge-type conditions.

use super::EdgeKind;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KineticsError {
    #[error("beta must exceed 1 (got {0}); denominator 2*beta - (1 + x) may vanish")]
    BetaTooSmall(f64),
    #[error("phi must lie in [-1, 1] (got {0})")]
    PhiOutOfRange(f64),
    #[error("grid must have at least 2 points per axis (got {0})")]
    GridTooCoarse(usize),
}

#[inline]
pub(crate) fn f_raw(x: f64, alpha: f64, beta: f64) -> f64 {
    alpha * beta * (1.0 - x) / (2.0 * beta - (1.0 + x))
}

/// F(x; alpha, beta) = alpha*beta*(1 - x) / (2*beta - (1 + x)).
///
/// Non-negative on x in [-1, 1] for beta > 1; F(1) = 0 and F(-1) = alpha.
pub fn michaelis_f(x: f64, alpha: f64, beta: f64) -> Result<f64, KineticsError> {
    if !(beta > 1.0) {
        return Err(KineticsError::BetaTooSmall(beta));
    }
    Ok(f_raw(x, alpha, beta))
}

#[inline]
pub(crate) fn rates_raw(
    x: f64,
    y: f64,
    kind: EdgeKind,
    alpha: f64,
    beta: f64,
    phi: f64,
) -> (f64, f64) {
    let up = 0.25 * (1.0 + phi);
    let um = 0.25 * (1.0 - phi);
    match kind {
        EdgeKind::Activation => (
            up * (1.0 + y) * f_raw(x, alpha, beta),
            um * (1.0 - y) * f_raw(-x, alpha, beta),
        ),
        EdgeKind::Inhibition => (
            up * (1.0 - y) * f_raw(x, alpha, beta),
            um * (1.0 + y) * f_raw(-x, alpha, beta),
        ),
    }
}

/// The (r+, r-) pair for one edge: production and decay rates of the target
/// state `x` driven by the source state `y`. Both components are non-negative
/// on the state box.
pub fn edge_rates(
    x: f64,
    y: f64,
    kind: EdgeKind,
    alpha: f64,
    beta: f64,
    phi: f64,
) -> Result<(f64, f64), KineticsError> {
    if !(beta > 1.0) {
        return Err(KineticsError::BetaTooSmall(beta));
    }
    if !(-1.0..=1.0).contains(&phi) {
        return Err(KineticsError::PhiOutOfRange(phi));
    }
    Ok(rates_raw(x, y, kind, alpha, beta, phi))
}

/// Outcome of checking the defining sign condition of an edge type on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub kind: EdgeKind,
    pub holds: bool,
    pub grid: usize,
    pub violations: usize,
    /// Most negative margin seen (positive margins satisfy the condition).
    pub worst_margin: f64,
}

const FD_STEP: f64 = 1e-5;
const SIGN_TOL: f64 = 1e-10;
const EQ_TOL: f64 = 1e-12;

fn grid_points(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
}

/// Checks the monotonicity condition that defines the declared edge kind:
/// d(r+ - r-)/dy >= 0 for activation, <= 0 for inhibition, evaluated by
/// central finite differences on a uniform grid over [-1, 1]^2.
pub fn check_edge_conditions(
    kind: EdgeKind,
    alpha: f64,
    beta: f64,
    phi: f64,
    grid: usize,
) -> Result<ConditionReport, KineticsError> {
    if grid < 2 {
        return Err(KineticsError::GridTooCoarse(grid));
    }
    if !(beta > 1.0) {
        return Err(KineticsError::BetaTooSmall(beta));
    }
    if !(-1.0..=1.0).contains(&phi) {
        return Err(KineticsError::PhiOutOfRange(phi));
    }
    let mut violations = 0usize;
    let mut worst = f64::INFINITY;
    for x in grid_points(grid) {
        for y in grid_points(grid) {
            let (pp, pm) = rates_raw(x, y + FD_STEP, kind, alpha, beta, phi);
            let (mp, mm) = rates_raw(x, y - FD_STEP, kind, alpha, beta, phi);
            let d = ((pp - mp) - (pm - mm)) / (2.0 * FD_STEP);
            let margin = match kind {
                EdgeKind::Activation => d,
                EdgeKind::Inhibition => -d,
            };
            worst = worst.min(margin);
            if margin < -SIGN_TOL {
                violations += 1;
            }
        }
    }
    Ok(ConditionReport {
        kind,
        holds: violations == 0,
        grid,
        violations,
        worst_margin: worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasClass {
    Negative,
    Unbiased,
    Positive,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryClass {
    ActivatorWeighted,
    Symmetric,
    InhibitorWeighted,
    Mixed,
}

/// Whether any strictly positive / strictly negative values occur, up to the
/// equality tolerance.
fn sign_structure(diffs: impl Iterator<Item = f64>) -> (bool, bool) {
    let mut any_pos = false;
    let mut any_neg = false;
    for d in diffs {
        if d > EQ_TOL {
            any_pos = true;
        } else if d < -EQ_TOL {
            any_neg = true;
        }
    }
    (any_pos, any_neg)
}

/// Grid-based classification of one edge model against the bias and symmetry
/// definitions: compares r+(x, y; T) with r-(-x, -y; T) for bias, and the
/// activator pair against the y-negated inhibitor pair for symmetry.
pub fn classify_edge_model(
    kind: EdgeKind,
    alpha: f64,
    beta: f64,
    phi: f64,
    grid: usize,
) -> Result<(BiasClass, SymmetryClass), KineticsError> {
    if grid < 2 {
        return Err(KineticsError::GridTooCoarse(grid));
    }
    if !(beta > 1.0) {
        return Err(KineticsError::BetaTooSmall(beta));
    }
    if !(-1.0..=1.0).contains(&phi) {
        return Err(KineticsError::PhiOutOfRange(phi));
    }

    let mut bias_diffs = Vec::with_capacity(grid * grid);
    let mut sym_diffs = Vec::with_capacity(2 * grid * grid);
    for x in grid_points(grid) {
        for y in grid_points(grid) {
            let (rp, _) = rates_raw(x, y, kind, alpha, beta, phi);
            let (_, rm_mirror) = rates_raw(-x, -y, kind, alpha, beta, phi);
            bias_diffs.push(rp - rm_mirror);

            let (ap, am) = rates_raw(x, y, EdgeKind::Activation, alpha, beta, phi);
            let (ip, im) = rates_raw(x, -y, EdgeKind::Inhibition, alpha, beta, phi);
            sym_diffs.push(ap - ip);
            sym_diffs.push(am - im);
        }
    }

    let bias = match sign_structure(bias_diffs.into_iter()) {
        (false, false) => BiasClass::Unbiased,
        (true, false) => BiasClass::Positive,
        (false, true) => BiasClass::Negative,
        (true, true) => BiasClass::Mixed,
    };
    let symmetry = match sign_structure(sym_diffs.into_iter()) {
        (false, false) => SymmetryClass::Symmetric,
        (true, false) => SymmetryClass::ActivatorWeighted,
        (false, true) => SymmetryClass::InhibitorWeighted,
        (true, true) => SymmetryClass::Mixed,
    };
    Ok((bias, symmetry))
}
