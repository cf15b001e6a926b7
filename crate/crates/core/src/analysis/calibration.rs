use std::f64::consts::LN_10;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{spec_err, Error, Result};

const STARTS: [f64; 4] = [-1.0, -0.3, 0.3, 1.0];
const MAX_ITER: usize = 500;
const GRAD_TOL: f64 = 1e-10;

/// One interferometer reading at two heater phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub phi1: f64,
    pub phi2: f64,
    pub value: f64,
}

fn field(loss_db: f64, phi1: f64, phi2: f64) -> (Complex64, Complex64, f64) {
    let l = 10f64.powf(-0.1 * loss_db);
    let d = Complex64::from_polar(1.0, phi1 + phi2) - Complex64::from_polar(1.0, phi1);
    let e = Complex64::from_polar(1.0, phi2) + 1.0;
    (d, e, l)
}

/// `a |L (e^{i(phi1+phi2)} - e^{i phi1}) - e^{i phi2} - 1|^2`, `L = 10^(-loss/10)`.
pub fn fringe_model(scale: f64, loss_db: f64, phi1: f64, phi2: f64) -> f64 {
    let (d, e, l) = field(loss_db, phi1, phi2);
    scale * (d * l - e).norm_sqr()
}

/// Value and gradient with respect to `(scale, loss_db)`.
fn model_grad(scale: f64, loss_db: f64, phi1: f64, phi2: f64) -> (f64, [f64; 2]) {
    let (d, e, l) = field(loss_db, phi1, phi2);
    let w2 = (d * l - e).norm_sqr();
    let dw2_dl = 2.0 * l * d.norm_sqr() - 2.0 * (d * e.conj()).re;
    let dl = -0.1 * LN_10 * l;
    (scale * w2, [w2, scale * dw2_dl * dl])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub scale: f64,
    pub loss_db: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub iterations: usize,
}

fn best_scale(data: &[Sample], loss_db: f64) -> f64 {
    let (num, den) = data.iter().fold((0.0, 0.0), |(n, d), s| {
        let g = fringe_model(1.0, loss_db, s.phi1, s.phi2);
        (n + g * s.value, d + g * g)
    });
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn cost(data: &[Sample], p: [f64; 2]) -> f64 {
    data.iter()
        .map(|s| (fringe_model(p[0], p[1], s.phi1, s.phi2) - s.value).powi(2))
        .sum()
}

struct Run {
    p: [f64; 2],
    cost: f64,
    iterations: usize,
    converged: bool,
}

fn levenberg_marquardt(data: &[Sample], mut p: [f64; 2]) -> Run {
    let mut c = cost(data, p);
    let mut lambda = 1e-3;
    for it in 1..=MAX_ITER {
        let mut jtj = Matrix2::<f64>::zeros();
        let mut jtr = Vector2::<f64>::zeros();
        let mut rr = 0.0;
        for s in data {
            let (f, g) = model_grad(p[0], p[1], s.phi1, s.phi2);
            let j = Vector2::new(g[0], g[1]);
            let r = f - s.value;
            jtj += j * j.transpose();
            jtr += j * r;
            rr += r * r;
        }
        // scale-free stationarity: cosine between residual and each Jacobian column
        let stationary = (0..2).all(|k| {
            let col = jtj[(k, k)].sqrt() * rr.sqrt();
            col == 0.0 || jtr[k].abs() <= GRAD_TOL * col
        });
        if stationary {
            return Run { p, cost: c, iterations: it, converged: true };
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj;
            for k in 0..2 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1]];
            let tc = cost(data, trial);
            if tc.is_finite() && tc <= c {
                let small = step.norm() <= 1e-14 * (1.0 + p[0].abs() + p[1].abs());
                p = trial;
                c = tc;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if small {
                    return Run { p, cost: c, iterations: it, converged: true };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: numerically stationary
            return Run { p, cost: c, iterations: it, converged: true };
        }
    }
    Run { p, cost: c, iterations: MAX_ITER, converged: false }
}

/// Least-squares fit of [`fringe_model`] from several starting losses.
pub fn fit_interferometer(data: &[Sample]) -> Result<FitResult> {
    if data.len() < 3 {
        return Err(spec_err("need at least three samples"));
    }
    if data.iter().any(|s| !(s.phi1.is_finite() && s.phi2.is_finite() && s.value.is_finite())) {
        return Err(Error::Data("non-finite sample".into()));
    }
    let runs: Vec<Run> = STARTS
        .iter()
        .map(|&l0| levenberg_marquardt(data, [best_scale(data, l0), l0]))
        .collect();
    let best = runs
        .iter()
        .filter(|r| r.converged)
        .min_by(|a, b| a.cost.total_cmp(&b.cost));
    let rms = |c: f64| (c / data.len() as f64).sqrt();
    match best {
        Some(r) => Ok(FitResult {
            scale: r.p[0],
            loss_db: r.p[1],
            residual: rms(r.cost),
            iterations: r.iterations,
        }),
        None => {
            let r = runs.iter().min_by(|a, b| a.cost.total_cmp(&b.cost)).expect("four starts");
            Err(Error::Fit {
                iterations: r.iterations,
                best_loss_db: r.p[1],
                best_scale: r.p[0],
                best_residual: rms(r.cost),
            })
        }
    }
}

/// Fitted loss of the four interferometers.
pub const INTERFEROMETER_LOSS: [f64; 4] = [-0.59, 0.08, -0.07, 0.42];
/// Waveguide crossings on each arm of the four interferometers.
pub const CROSSINGS_PATH0: [u32; 4] = [0, 1, 1, 2];
pub const CROSSINGS_PATH1: [u32; 4] = [2, 1, 1, 0];

/// Slope through the origin of loss against the crossing-count imbalance.
pub fn per_cross_loss(losses: &[f64], path0: &[u32], path1: &[u32]) -> Result<f64> {
    if losses.len() != path0.len() || losses.len() != path1.len() {
        return Err(spec_err("losses and crossing counts differ in length"));
    }
    let (num, den) = losses
        .iter()
        .zip(path0.iter().zip(path1))
        .fold((0.0, 0.0), |(n, d), (&y, (&c0, &c1))| {
            let x = f64::from(c0) - f64::from(c1);
            (n + x * y, d + x * x)
        });
    if den == 0.0 {
        return Err(spec_err("no crossing imbalance to regress against"));
    }
    Ok(num / den)
}
