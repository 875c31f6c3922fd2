//! Least-squares fit of the two-regime success curve.
//!
//! Log-spaced grid search, then cyclic coordinate descent and a bounded
//! Levenberg-Marquardt polish from each of the best grid points. Parameters
//! live in a transformed space (log scales) so step sizes are comparable
//! across coordinates.

use serde::{Deserialize, Serialize};

use super::{success_two_regime, TwoRegimeFit};
use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 5;
pub const SHAPE_BOUNDS: (f64, f64) = (1.0, 6.0);
const MULTI_STARTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub fit: TwoRegimeFit,
    /// Sum of squared residuals in probability units.
    pub sse: f64,
    pub mse: f64,
    pub points: usize,
}

const DIM: usize = 5;
type Theta = [f64; DIM];

struct Problem<'a> {
    points: &'a [(f64, f64)],
    lo: Theta,
    hi: Theta,
}

impl Problem<'_> {
    fn decode(theta: &Theta) -> TwoRegimeFit {
        TwoRegimeFit {
            pi_obs: theta[0],
            d_c_m: theta[1].exp(),
            beta: theta[2],
            d_c_obs_m: theta[3].exp(),
            beta_obs: theta[4],
        }
    }

    fn clamp(&self, theta: &mut Theta) {
        for ((t, lo), hi) in theta.iter_mut().zip(self.lo).zip(self.hi) {
            *t = t.clamp(lo, hi);
        }
    }

    fn residuals(&self, theta: &Theta, out: &mut Vec<f64>) {
        let fit = Self::decode(theta);
        out.clear();
        out.extend(
            self.points
                .iter()
                .map(|&(d, p)| success_two_regime(d, &fit) - p),
        );
    }

    fn sse(&self, theta: &Theta) -> f64 {
        let fit = Self::decode(theta);
        self.points
            .iter()
            .map(|&(d, p)| {
                let r = success_two_regime(d, &fit) - p;
                r * r
            })
            .sum()
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Best `keep` grid points by SSE, scales spanning the observed distances.
fn grid_search(prob: &Problem, span: (f64, f64), keep: usize) -> Vec<Theta> {
    let scales = log_space((span.0 / 3.0).ln(), (span.1 * 3.0).ln(), 24);
    let shapes = [1.0, 1.5, 2.0, 3.0, 4.0, 6.0];
    let fractions = [
        0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0,
    ];
    let mut all = Vec::new();
    for &ls in &scales {
        for &b in &shapes {
            for &ls_obs in scales.iter().filter(|&&x| x <= ls) {
                for &b_obs in &shapes {
                    for &pi in &fractions {
                        let mut theta = [pi, ls, b, ls_obs, b_obs];
                        prob.clamp(&mut theta);
                        all.push((prob.sse(&theta), theta));
                    }
                }
            }
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    all.into_iter().take(keep).map(|(_, t)| t).collect()
}

fn coordinate_descent(prob: &Problem, mut theta: Theta) -> Theta {
    let mut step: Theta = [0.1, 0.5, 0.5, 0.5, 0.5];
    let mut current = prob.sse(&theta);
    for _ in 0..20_000 {
        if step.iter().all(|&s| s < 1e-10) {
            break;
        }
        for i in 0..DIM {
            let mut improved = false;
            for dir in [1.0, -1.0] {
                let mut trial = theta;
                trial[i] += dir * step[i];
                prob.clamp(&mut trial);
                let e = prob.sse(&trial);
                if e < current {
                    theta = trial;
                    current = e;
                    improved = true;
                    break;
                }
            }
            step[i] *= if improved { 1.5 } else { 0.5 };
        }
    }
    theta
}

/// Solve the dense system `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: [[f64; DIM]; DIM], mut b: Theta) -> Option<Theta> {
    for col in 0..DIM {
        let piv = (col..DIM).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..DIM {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; DIM];
    for row in (0..DIM).rev() {
        let s: f64 = (row + 1..DIM).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn levenberg_marquardt(prob: &Problem, mut theta: Theta) -> Theta {
    let n = prob.points.len();
    let mut r = Vec::with_capacity(n);
    let mut rp = Vec::with_capacity(n);
    let mut rm = Vec::with_capacity(n);
    let mut jac = vec![[0.0; DIM]; n];
    let mut lambda = 1e-3;
    let mut current = prob.sse(&theta);
    for _ in 0..500 {
        prob.residuals(&theta, &mut r);
        for i in 0..DIM {
            let h = 1e-6 * (1.0 + theta[i].abs());
            let mut tp = theta;
            let mut tm = theta;
            tp[i] += h;
            tm[i] -= h;
            prob.residuals(&tp, &mut rp);
            prob.residuals(&tm, &mut rm);
            for k in 0..n {
                jac[k][i] = (rp[k] - rm[k]) / (2.0 * h);
            }
        }
        let mut jtj = [[0.0; DIM]; DIM];
        let mut jtr = [0.0; DIM];
        for k in 0..n {
            for i in 0..DIM {
                jtr[i] += jac[k][i] * r[k];
                for j in 0..DIM {
                    jtj[i][j] += jac[k][i] * jac[k][j];
                }
            }
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut a = jtj;
            for i in 0..DIM {
                a[i][i] += lambda * (jtj[i][i].max(1e-12));
            }
            let neg: Theta = jtr.map(|g| -g);
            let Some(delta) = solve(a, neg) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = theta;
            for i in 0..DIM {
                trial[i] += delta[i];
            }
            prob.clamp(&mut trial);
            let e = prob.sse(&trial);
            if e < current {
                let gain = current - e;
                theta = trial;
                current = e;
                lambda = (lambda * 0.3).max(1e-15);
                accepted = gain > 1e-30;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted || current < 1e-28 {
            break;
        }
    }
    theta
}

/// Fit the two-regime curve to `(distance_m, success)` observations.
pub fn fit_two_regime(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < MIN_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_POINTS,
            got: points.len(),
        });
    }
    for &(d, p) in points {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::domain(format!(
                "distance must be positive and finite (got {d})"
            )));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!(
                "success probability must be in [0,1] (got {p})"
            )));
        }
    }
    let dmin = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let dmax = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if (dmax - dmin) <= 1e-9 * dmax {
        return Err(Error::IllPosed("all distances are equal".into()));
    }
    let (lo_s, hi_s) = ((dmin / 10.0).ln(), (dmax * 1000.0).ln());
    let prob = Problem {
        points,
        lo: [0.0, lo_s, SHAPE_BOUNDS.0, lo_s, SHAPE_BOUNDS.0],
        hi: [1.0, hi_s, SHAPE_BOUNDS.1, hi_s, SHAPE_BOUNDS.1],
    };
    let polished = grid_search(&prob, (dmin, dmax), MULTI_STARTS)
        .into_iter()
        .map(|start| levenberg_marquardt(&prob, coordinate_descent(&prob, start)))
        .min_by(|a, b| prob.sse(a).total_cmp(&prob.sse(b)))
        .expect("grid is non-empty");
    let sse = prob.sse(&polished);
    Ok(FitResult {
        fit: Problem::decode(&polished),
        sse,
        mse: sse / points.len() as f64,
        points: points.len(),
    })
}
