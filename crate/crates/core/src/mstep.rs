//! Per-cluster maximization of the expected complete-data log-likelihood
//! over the shape parameters `(a_c, b_c)`.
//!
//! For one cluster with responsibility column γ the objective (negated, for
//! minimization) is
//!
//! ```text
//! f(a, b) = -Σ_n γ_n ln MB(x_n | a, b)
//!         = -[Σ_m (a_m - 1) T_m - (a_m + 1) U_m - (b + A) L - N_c ln Z(a, b)]
//! ```
//!
//! with `T_m = Σ γ_n ln x_nm`, `U_m = Σ γ_n ln(1 - x_nm)`,
//! `L = Σ γ_n ln(1 + Σ_k x_nk / (1 - x_nk))`, `N_c = Σ γ_n`, `A = Σ a_m`.
//! The data only enter through these statistics, so each problem is reduced
//! to them once and every objective/gradient evaluation is O(M).
//!
//! The solver works on `ln a_m, ln b` inside the box `[ln lower, ln upper]`:
//! limited-memory BFGS directions, projection onto the box, Armijo
//! backtracking. The result is only accepted if it does not increase the
//! objective relative to the start, so EM keeps its ascent property no
//! matter how far the inner solver gets.

use ndarray::{ArrayView1, ArrayView2};

use crate::distribution::{log_normalizer_raw, MBParams};
use crate::error::{Error, Result};
use crate::mixture::{MixtureModel, Responsibilities};
use crate::specfun::digamma_unchecked;

pub const DEFAULT_PARAM_LOWER: f64 = 1e-3;
pub const DEFAULT_PARAM_UPPER: f64 = 1e4;

const MAX_INNER_ITER: usize = 50;
const GRAD_TOL: f64 = 1e-6;
const HISTORY: usize = 7;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACK: usize = 40;

/// Box applied to every shape parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            lower: DEFAULT_PARAM_LOWER,
            upper: DEFAULT_PARAM_UPPER,
        }
    }
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower > 0.0 && lower < upper) {
            return Err(Error::InvalidParams(format!(
                "parameter bounds must satisfy 0 < lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }

    pub fn clamp_params(&self, p: &MBParams) -> MBParams {
        MBParams::new(
            p.a().iter().map(|&v| self.clamp(v)).collect(),
            self.clamp(p.b()),
        )
        .expect("clamped parameters are positive and finite")
    }
}

/// One cluster's M-step subproblem, reduced to weighted sufficient statistics.
#[derive(Debug, Clone)]
pub struct MStepProblem {
    weight_sum: f64,
    sum_ln_x: Vec<f64>,
    sum_ln_1mx: Vec<f64>,
    sum_ln_odds: f64,
    bounds: Bounds,
    start: MBParams,
}

impl MStepProblem {
    pub fn new(
        data: ArrayView2<'_, f64>,
        resp_column: ArrayView1<'_, f64>,
        bounds: Bounds,
        start: MBParams,
    ) -> Result<Self> {
        let (n, m) = data.dim();
        if resp_column.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: resp_column.len(),
            });
        }
        if start.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: start.dim(),
                actual: m,
            });
        }
        if resp_column.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::InvalidParams(
                "responsibilities must lie in [0, 1]".into(),
            ));
        }
        let mut weight_sum = 0.0;
        let mut sum_ln_x = vec![0.0; m];
        let mut sum_ln_1mx = vec![0.0; m];
        let mut sum_ln_odds = 0.0;
        for (row, &g) in data.rows().into_iter().zip(resp_column) {
            if g == 0.0 {
                continue;
            }
            weight_sum += g;
            let mut odds = 0.0;
            for (j, &x) in row.iter().enumerate() {
                sum_ln_x[j] += g * x.ln();
                sum_ln_1mx[j] += g * (-x).ln_1p();
                odds += x / (1.0 - x);
            }
            sum_ln_odds += g * odds.ln_1p();
        }
        if weight_sum <= 0.0 {
            return Err(Error::Empty("cluster has zero total responsibility"));
        }
        Ok(Self {
            weight_sum,
            sum_ln_x,
            sum_ln_1mx,
            sum_ln_odds,
            bounds,
            start,
        })
    }

    pub fn start(&self) -> &MBParams {
        &self.start
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// `-Σ_n γ_n ln MB(x_n | params)`; `+inf` when not finite.
    pub fn objective(&self, params: &MBParams) -> f64 {
        self.objective_raw(params.a(), params.b())
    }

    /// Gradient of [`objective`](Self::objective) with respect to `(a_1..a_M, b)`.
    pub fn gradient(&self, params: &MBParams) -> Vec<f64> {
        self.gradient_raw(params.a(), params.b())
    }

    fn objective_raw(&self, a: &[f64], b: f64) -> f64 {
        let sum_a: f64 = a.iter().sum();
        if !(b > 0.0 && a.iter().all(|&v| v > 0.0)) {
            return f64::INFINITY;
        }
        let log_z = log_normalizer_raw(a, b);
        let mut ll = -(sum_a + b) * self.sum_ln_odds - self.weight_sum * log_z;
        for (j, &am) in a.iter().enumerate() {
            ll += (am - 1.0) * self.sum_ln_x[j] - (am + 1.0) * self.sum_ln_1mx[j];
        }
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    }

    fn gradient_raw(&self, a: &[f64], b: f64) -> Vec<f64> {
        let sum_a: f64 = a.iter().sum();
        let psi_total = digamma_unchecked(b + sum_a);
        let mut grad: Vec<f64> = a
            .iter()
            .enumerate()
            .map(|(j, &am)| {
                let d_ll = self.sum_ln_x[j]
                    - self.sum_ln_1mx[j]
                    - self.sum_ln_odds
                    - self.weight_sum * (digamma_unchecked(am) - psi_total);
                -d_ll
            })
            .collect();
        grad.push(self.sum_ln_odds + self.weight_sum * (digamma_unchecked(b) - psi_total));
        grad
    }

    /// Runs the bounded quasi-Newton search from `start`.
    ///
    /// Returns the accepted parameters and whether the search diverged
    /// (in which case the start is returned unchanged).
    pub fn solve(&self) -> (MBParams, bool) {
        let start = self.bounds.clamp_params(&self.start);
        let start_obj = self.objective(&self.start);
        let m = start.dim();
        let lo = self.bounds.lower.ln();
        let hi = self.bounds.upper.ln();

        let unpack = |theta: &[f64]| -> (Vec<f64>, f64) {
            (theta[..m].iter().map(|v| v.exp()).collect(), theta[m].exp())
        };
        // f and its gradient in log-parameter space: d/dθ = p · d/dp.
        let eval = |theta: &[f64]| -> (f64, Vec<f64>) {
            let (a, b) = unpack(theta);
            let f = self.objective_raw(&a, b);
            let mut g = self.gradient_raw(&a, b);
            for (gi, pi) in g.iter_mut().zip(a.iter().chain(std::iter::once(&b))) {
                *gi *= pi;
            }
            (f, g)
        };
        let project = |theta: &mut [f64]| {
            for t in theta.iter_mut() {
                *t = t.clamp(lo, hi);
            }
        };
        let projected_grad_norm = |theta: &[f64], g: &[f64]| -> f64 {
            theta
                .iter()
                .zip(g)
                .map(|(&t, &gi)| {
                    let step = (t - gi).clamp(lo, hi) - t;
                    step * step
                })
                .sum::<f64>()
                .sqrt()
        };

        let mut theta: Vec<f64> = start
            .a()
            .iter()
            .chain(std::iter::once(&start.b()))
            .map(|v| v.ln())
            .collect();
        let (mut f, mut g) = eval(&theta);
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return (self.start.clone(), true);
        }
        let mut s_hist: Vec<Vec<f64>> = Vec::with_capacity(HISTORY);
        let mut y_hist: Vec<Vec<f64>> = Vec::with_capacity(HISTORY);

        for _ in 0..MAX_INNER_ITER {
            if projected_grad_norm(&theta, &g) < GRAD_TOL {
                break;
            }
            let line_search = |dir: &[f64]| -> Option<Step> {
                // Cap the first step so no parameter moves by more than a factor e^4.
                let max_abs = dir.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                let mut alpha = if max_abs > 4.0 { 4.0 / max_abs } else { 1.0 };
                for _ in 0..MAX_BACKTRACK {
                    let mut trial: Vec<f64> =
                        theta.iter().zip(dir).map(|(t, d)| t + alpha * d).collect();
                    project(&mut trial);
                    let step: Vec<f64> = trial.iter().zip(&theta).map(|(a, b)| a - b).collect();
                    let decrease = dot(&g, &step);
                    if decrease < 0.0 {
                        let (ft, gt) = eval(&trial);
                        if ft.is_finite() && ft <= f + ARMIJO_C1 * decrease {
                            return Some(Step {
                                theta: trial,
                                delta: step,
                                f: ft,
                                g: gt,
                            });
                        }
                    }
                    alpha *= 0.5;
                }
                None
            };
            let mut dir = two_loop_direction(&g, &s_hist, &y_hist);
            if dot(&dir, &g) >= 0.0 {
                s_hist.clear();
                y_hist.clear();
                dir = g.iter().map(|v| -v).collect();
            }
            let mut accepted = line_search(&dir);
            if accepted.is_none() && !s_hist.is_empty() {
                s_hist.clear();
                y_hist.clear();
                let steepest: Vec<f64> = g.iter().map(|v| -v).collect();
                accepted = line_search(&steepest);
            }
            let Some(Step {
                theta: trial,
                delta: step,
                f: ft,
                g: gt,
            }) = accepted
            else {
                break;
            };
            if gt.iter().any(|v| !v.is_finite()) {
                return (self.start.clone(), true);
            }
            let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
            if dot(&step, &y) > 1e-12 {
                if s_hist.len() == HISTORY {
                    s_hist.remove(0);
                    y_hist.remove(0);
                }
                s_hist.push(step);
                y_hist.push(y);
            }
            let converged = (f - ft).abs() <= 1e-15 * f.abs().max(1.0);
            theta = trial;
            f = ft;
            g = gt;
            if converged {
                break;
            }
        }

        let (a, b) = unpack(&theta);
        let Ok(candidate) = MBParams::new(
            a.iter().map(|&v| self.bounds.clamp(v)).collect(),
            self.bounds.clamp(b),
        ) else {
            return (self.start.clone(), true);
        };
        if self.objective(&candidate) <= start_obj {
            (candidate, false)
        } else {
            (self.start.clone(), false)
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L-BFGS two-loop recursion returning `-H g`.
/// An accepted line-search point in log-parameter space.
struct Step {
    theta: Vec<f64>,
    delta: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

fn two_loop_direction(g: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = vec![0.0; s_hist.len()];
    for i in (0..s_hist.len()).rev() {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        alphas[i] = rho * dot(&s_hist[i], &q);
        for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
            *qj -= alphas[i] * yj;
        }
    }
    if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
        let gamma = dot(s, y) / dot(y, y);
        for qj in q.iter_mut() {
            *qj *= gamma;
        }
    }
    for i in 0..s_hist.len() {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        let beta = rho * dot(&y_hist[i], &q);
        for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
            *qj += (alphas[i] - beta) * sj;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Result of one M-step over all clusters.
#[derive(Debug, Clone)]
pub struct MStepOutcome {
    pub components: Vec<MBParams>,
    /// Clusters whose inner solve diverged and kept their previous parameters.
    pub diverged: usize,
}

/// Updates every component's shape parameters independently.
///
/// Clusters with zero total responsibility keep their current parameters.
pub fn optimize_components(
    data: ArrayView2<'_, f64>,
    resp: &Responsibilities,
    current: &MixtureModel,
    bounds: Bounds,
) -> Result<MStepOutcome> {
    let gamma = resp.matrix();
    if gamma.nrows() != data.nrows() {
        return Err(Error::LengthMismatch {
            left: data.nrows(),
            right: gamma.nrows(),
        });
    }
    if gamma.ncols() != current.n_clusters() {
        return Err(Error::DimensionMismatch {
            expected: current.n_clusters(),
            actual: gamma.ncols(),
        });
    }
    let mut components = Vec::with_capacity(current.n_clusters());
    let mut diverged = 0;
    for (c, start) in current.components().iter().enumerate() {
        let column = gamma.column(c);
        if column.sum() <= 0.0 {
            components.push(start.clone());
            continue;
        }
        let problem = MStepProblem::new(data, column, bounds, start.clone())?;
        let (params, failed) = problem.solve();
        if failed {
            diverged += 1;
        }
        components.push(params);
    }
    Ok(MStepOutcome {
        components,
        diverged,
    })
}
