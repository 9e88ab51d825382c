//! Adaptive embedded Runge-Kutta 5(4) stepper (Dormand-Prince coefficients)
//! with fourth-order dense output, after Hairer, Norsett & Wanner.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("step limit of {max_steps} exceeded at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct StepSettings {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub safety: f64,
    pub fac_min: f64,
    pub fac_max: f64,
}

impl StepSettings {
    pub fn new(rtol: f64, atol: f64) -> Self {
        StepSettings {
            rtol,
            atol,
            max_steps: 10_000_000,
            safety: 0.9,
            fac_min: 0.2,
            fac_max: 10.0,
        }
    }
}

// Dormand-Prince 5(4) tableau. The right-hand sides here are autonomous, so
// the stage-time row is not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// Fifth-order solution weights (also the last stage: FSAL).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error weights b5 - b4hat.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output weights.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Quartic interpolant over one accepted step; valid for t in [t0, t0 + h].
#[derive(Debug, Clone)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    cont: [Vec<f64>; 5],
}

impl DenseSegment {
    pub fn t_end(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.cont[0][i]
                + theta
                    * (self.cont[1][i]
                        + theta1
                            * (self.cont[2][i]
                                + theta * (self.cont[3][i] + theta1 * self.cont[4][i])));
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.cont[0].len()];
        self.eval_into(t, &mut out);
        out
    }
}

/// Streaming stepper: owns the current (t, y, f(y)) triple and produces one
/// accepted step at a time together with its dense-output segment.
pub struct Stepper<F> {
    f: F,
    pub t: f64,
    pub y: Vec<f64>,
    /// f(t, y); kept current via the FSAL property.
    pub dy: Vec<f64>,
    h: f64,
    settings: StepSettings,
    steps_taken: usize,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
}

impl<F: FnMut(&[f64], &mut [f64])> Stepper<F> {
    pub fn new(mut f: F, y0: Vec<f64>, settings: StepSettings) -> Self {
        let n = y0.len();
        let mut dy = vec![0.0; n];
        f(&y0, &mut dy);
        let h = initial_step(&mut f, &y0, &dy, &settings);
        Stepper {
            f,
            t: 0.0,
            y: y0,
            dy,
            h,
            settings,
            steps_taken: 0,
            k: std::array::from_fn(|_| vec![0.0; n]),
            y_stage: vec![0.0; n],
        }
    }

    /// Advances one accepted step, never stepping past `t_limit`. Returns the
    /// dense segment covering [previous t, new t].
    pub fn advance(&mut self, t_limit: f64) -> Result<DenseSegment, IntegrationError> {
        let n = self.y.len();
        loop {
            self.steps_taken += 1;
            if self.steps_taken > self.settings.max_steps {
                return Err(IntegrationError::TooManySteps {
                    t: self.t,
                    max_steps: self.settings.max_steps,
                });
            }
            let remaining = t_limit - self.t;
            let hit_limit = remaining > 0.0 && self.h >= remaining;
            let h = if hit_limit { remaining } else { self.h };
            if h <= 0.0 || h < 1e-14 * self.t.abs().max(1.0) {
                return Err(IntegrationError::StepSizeUnderflow { t: self.t, h });
            }

            self.k[0].copy_from_slice(&self.dy);
            let stage = |ys: &mut [f64], y: &[f64], k: &[Vec<f64>], coeffs: &[(usize, f64)]| {
                for i in 0..y.len() {
                    let mut acc = 0.0;
                    for &(j, a) in coeffs {
                        acc += a * k[j][i];
                    }
                    ys[i] = y[i] + h * acc;
                }
            };
            stage(&mut self.y_stage, &self.y, &self.k, &[(0, A21)]);
            (self.f)(&self.y_stage, &mut self.k[1]);
            stage(&mut self.y_stage, &self.y, &self.k, &[(0, A31), (1, A32)]);
            (self.f)(&self.y_stage, &mut self.k[2]);
            stage(
                &mut self.y_stage,
                &self.y,
                &self.k,
                &[(0, A41), (1, A42), (2, A43)],
            );
            (self.f)(&self.y_stage, &mut self.k[3]);
            stage(
                &mut self.y_stage,
                &self.y,
                &self.k,
                &[(0, A51), (1, A52), (2, A53), (3, A54)],
            );
            (self.f)(&self.y_stage, &mut self.k[4]);
            stage(
                &mut self.y_stage,
                &self.y,
                &self.k,
                &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)],
            );
            (self.f)(&self.y_stage, &mut self.k[5]);
            // Seventh stage evaluates at the fifth-order solution (FSAL).
            stage(
                &mut self.y_stage,
                &self.y,
                &self.k,
                &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)],
            );
            let y_new = self.y_stage.clone();
            (self.f)(&y_new, &mut self.k[6]);

            // Scaled RMS error of the embedded fourth-order difference.
            let mut err_sq = 0.0;
            #[allow(clippy::needless_range_loop)]
            for i in 0..n {
                let e = h
                    * (E1 * self.k[0][i]
                        + E3 * self.k[2][i]
                        + E4 * self.k[3][i]
                        + E5 * self.k[4][i]
                        + E6 * self.k[5][i]
                        + E7 * self.k[6][i]);
                let scale =
                    self.settings.atol + self.settings.rtol * self.y[i].abs().max(y_new[i].abs());
                err_sq += (e / scale) * (e / scale);
            }
            let err = (err_sq / n as f64).sqrt();

            let factor = if err == 0.0 {
                self.settings.fac_max
            } else {
                (self.settings.safety * err.powf(-0.2))
                    .clamp(self.settings.fac_min, self.settings.fac_max)
            };

            if err <= 1.0 {
                let mut cont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
                for i in 0..n {
                    let ydiff = y_new[i] - self.y[i];
                    let bspl = h * self.k[0][i] - ydiff;
                    cont[0][i] = self.y[i];
                    cont[1][i] = ydiff;
                    cont[2][i] = bspl;
                    cont[3][i] = ydiff - h * self.k[6][i] - bspl;
                    cont[4][i] = h
                        * (D1 * self.k[0][i]
                            + D3 * self.k[2][i]
                            + D4 * self.k[3][i]
                            + D5 * self.k[4][i]
                            + D6 * self.k[5][i]
                            + D7 * self.k[6][i]);
                }
                let seg = DenseSegment {
                    t0: self.t,
                    h,
                    cont,
                };
                self.t = if hit_limit { t_limit } else { self.t + h };
                self.y.copy_from_slice(&y_new);
                self.dy.copy_from_slice(&self.k[6]);
                if !hit_limit {
                    self.h = h * factor;
                }
                return Ok(seg);
            }
            self.h = h * factor;
        }
    }
}

/// Hairer's starting-step heuristic (order 5).
fn initial_step<F: FnMut(&[f64], &mut [f64])>(
    f: &mut F,
    y0: &[f64],
    dy0: &[f64],
    settings: &StepSettings,
) -> f64 {
    let n = y0.len();
    if n == 0 {
        return 1e-3;
    }
    let sc = |y: f64| settings.atol + settings.rtol * y.abs();
    let d0 = (y0.iter().map(|&y| (y / sc(y)).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d1 = (y0
        .iter()
        .zip(dy0)
        .map(|(&y, &dy)| (dy / sc(y)).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1: Vec<f64> = y0.iter().zip(dy0).map(|(&y, &dy)| y + h0 * dy).collect();
    let mut dy1 = vec![0.0; n];
    f(&y1, &mut dy1);
    let d2 = (dy1
        .iter()
        .zip(dy0)
        .zip(y0)
        .map(|((&a, &b), &y)| ((a - b) / sc(y)).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt()
        / h0;
    let d_max = d1.max(d2);
    let h1 = if d_max <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d_max).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay_is_accurate() {
        let f = |y: &[f64], dy: &mut [f64]| dy[0] = -y[0];
        let mut s = Stepper::new(f, vec![1.0], StepSettings::new(1e-9, 1e-12));
        while s.t < 5.0 {
            s.advance(5.0).unwrap();
        }
        assert_relative_eq!(s.y[0], (-5.0f64).exp(), max_relative = 1e-8);
        assert_eq!(s.t, 5.0);
    }

    #[test]
    fn dense_output_matches_analytic_solution() {
        let f = |y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let mut s = Stepper::new(f, vec![1.0, 0.0], StepSettings::new(1e-10, 1e-12));
        let mut segs = Vec::new();
        while s.t < 10.0 {
            segs.push(s.advance(10.0).unwrap());
        }
        for seg in &segs {
            for k in 0..5 {
                let t = seg.t0 + seg.h * k as f64 / 4.0;
                let y = seg.eval(t);
                assert_relative_eq!(y[0], t.cos(), epsilon = 1e-7);
                assert_relative_eq!(y[1], -t.sin(), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn step_limit_is_enforced() {
        let f = |y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        let mut settings = StepSettings::new(1e-9, 1e-12);
        settings.max_steps = 3;
        let mut s = Stepper::new(f, vec![1.0], settings);
        let mut res = Ok(());
        for _ in 0..10 {
            if let Err(e) = s.advance(1e6) {
                res = Err(e);
                break;
            }
        }
        assert!(matches!(res, Err(IntegrationError::TooManySteps { .. })));
    }
}
