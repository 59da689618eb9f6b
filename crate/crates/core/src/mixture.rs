//! Multivariate beta mixture model: density, likelihoods, EM fitting,
//! prediction, generative sampling, and the responsibility-space KL distance.
//!
//! ```text
//! p(x | θ) = Σ_c π_c MB(x | a_c, b_c)
//! γ_nc     = π_c MB(x_n | θ_c) / Σ_k π_k MB(x_n | θ_k)        (E-step)
//! π_c      = (1/N) Σ_n γ_nc                                   (M-step, closed form)
//! a_c, b_c = argmax Σ_n γ_nc ln MB(x_n | a_c, b_c)            (M-step, numeric)
//! ```
//!
//! All density work happens in log space; responsibilities are normalized
//! with a per-row log-sum-exp.

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Uniform;

use crate::distribution::MBParams;
use crate::error::{Error, Result};
use crate::mstep::{optimize_components, Bounds, DEFAULT_PARAM_LOWER, DEFAULT_PARAM_UPPER};

/// Initial shape parameters are drawn uniformly from this range.
pub const INIT_PARAM_RANGE: (f64, f64) = (0.5, 5.0);
/// A cluster whose total responsibility falls below `EMPTY_CLUSTER_FRACTION * N`
/// is reinitialized.
pub const EMPTY_CLUSTER_FRACTION: f64 = 1e-8;
/// Responsibility floor applied to the second row of a KL distance.
pub const KL_FLOOR: f64 = 1e-12;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Mixture weights plus one [`MBParams`] per component.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    weights: Vec<f64>,
    components: Vec<MBParams>,
}

impl MixtureModel {
    pub fn new(weights: Vec<f64>, components: Vec<MBParams>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParams(
                "mixture needs at least one component".into(),
            ));
        }
        if weights.len() != components.len() {
            return Err(Error::LengthMismatch {
                left: weights.len(),
                right: components.len(),
            });
        }
        let dim = components[0].dim();
        if let Some(bad) = components.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.dim(),
            });
        }
        if weights
            .iter()
            .any(|w| !(w.is_finite() && *w > 0.0 && *w <= 1.0))
        {
            return Err(Error::InvalidParams(format!(
                "weights must lie in (0, 1], got {weights:?}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParams(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self {
            weights,
            components,
        })
    }

    pub fn n_clusters(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[MBParams] {
        &self.components
    }

    /// Same model with the components (and weights) reordered:
    /// new component `k` is old component `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n_clusters()];
        if order.len() != self.n_clusters()
            || order
                .iter()
                .any(|&i| i >= seen.len() || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::InvalidParams(format!(
                "{order:?} is not a permutation"
            )));
        }
        Self::new(
            order.iter().map(|&i| self.weights[i]).collect(),
            order.iter().map(|&i| self.components[i].clone()).collect(),
        )
    }

    /// ln Σ_c π_c MB(x | θ_c).
    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.n_clusters());
        for (w, comp) in self.weights.iter().zip(&self.components) {
            terms.push(w.ln() + comp.log_pdf(x)?);
        }
        Ok(log_sum_exp(&terms))
    }

    /// Σ_n ln p(x_n | θ).
    pub fn observed_log_likelihood(&self, data: ArrayView2<'_, f64>) -> Result<f64> {
        self.check_data(data)?;
        if data.nrows() == 0 {
            return Err(Error::Empty("no data points"));
        }
        let mut total = 0.0;
        for row in data.rows() {
            total += self.log_pdf(row.as_slice().expect("standard layout"))?;
        }
        Ok(total)
    }

    /// Σ_n [ln π_{z_n} + ln MB(x_n | θ_{z_n})] with 0-based labels `z`.
    pub fn complete_data_log_likelihood(
        &self,
        data: ArrayView2<'_, f64>,
        labels: &[usize],
    ) -> Result<f64> {
        self.check_data(data)?;
        if labels.len() != data.nrows() {
            return Err(Error::LengthMismatch {
                left: data.nrows(),
                right: labels.len(),
            });
        }
        let mut total = 0.0;
        for (row, &z) in data.rows().into_iter().zip(labels) {
            let comp = self.components.get(z).ok_or(Error::LabelOutOfRange {
                label: z,
                n_clusters: self.n_clusters(),
            })?;
            total +=
                self.weights[z].ln() + comp.log_pdf(row.as_slice().expect("standard layout"))?;
        }
        Ok(total)
    }

    /// Σ_n Σ_c γ_nc [ln π_c + ln MB(x_n | θ_c)].
    pub fn expected_log_likelihood(
        &self,
        data: ArrayView2<'_, f64>,
        resp: &Responsibilities,
    ) -> Result<f64> {
        self.check_data(data)?;
        let gamma = resp.matrix();
        if gamma.dim() != (data.nrows(), self.n_clusters()) {
            return Err(Error::InvalidParams(format!(
                "responsibilities are {:?}, expected ({}, {})",
                gamma.dim(),
                data.nrows(),
                self.n_clusters()
            )));
        }
        let log_z: Vec<f64> = self
            .components
            .iter()
            .map(MBParams::log_normalizer)
            .collect();
        let mut total = 0.0;
        for (row, g_row) in data.rows().into_iter().zip(gamma.rows()) {
            let x = row.as_slice().expect("standard layout");
            for (c, comp) in self.components.iter().enumerate() {
                if g_row[c] > 0.0 {
                    total += g_row[c]
                        * (self.weights[c].ln() + comp.log_pdf_with_normalizer(x, log_z[c]));
                }
            }
        }
        Ok(total)
    }

    /// Responsibilities of every point under the current parameters.
    pub fn e_step(&self, data: ArrayView2<'_, f64>) -> Result<Responsibilities> {
        Ok(self.e_step_detailed(data)?.resp)
    }

    /// E-step that also returns the observed log-likelihood and the number of
    /// rows where every component underflowed (those rows are set uniform).
    pub fn e_step_detailed(&self, data: ArrayView2<'_, f64>) -> Result<EStep> {
        self.check_data(data)?;
        let c = self.n_clusters();
        let log_z: Vec<f64> = self
            .components
            .iter()
            .map(MBParams::log_normalizer)
            .collect();
        let log_w: Vec<f64> = self.weights.iter().map(|w| w.ln()).collect();
        let mut gamma = Array2::zeros((data.nrows(), c));
        let mut log_likelihood = 0.0;
        let mut underflow_rows = 0;
        let mut terms = vec![0.0; c];
        for (row, mut g_row) in data.rows().into_iter().zip(gamma.rows_mut()) {
            let x = row.as_slice().expect("standard layout");
            for (k, comp) in self.components.iter().enumerate() {
                let v = log_w[k] + comp.log_pdf_with_normalizer(x, log_z[k]);
                terms[k] = if v.is_nan() { f64::NEG_INFINITY } else { v };
            }
            let lse = log_sum_exp(&terms);
            if lse.is_finite() {
                for (g, t) in g_row.iter_mut().zip(&terms) {
                    *g = (t - lse).exp();
                }
                // Re-normalize so rows sum to 1 to the last ulp or so.
                let s = g_row.sum();
                g_row.mapv_inplace(|g| g / s);
            } else {
                underflow_rows += 1;
                g_row.fill(1.0 / c as f64);
            }
            log_likelihood += lse;
        }
        Ok(EStep {
            resp: Responsibilities { gamma },
            log_likelihood,
            underflow_rows,
        })
    }

    /// Posterior cluster probabilities of arbitrary points.
    pub fn predict_proba(&self, data: ArrayView2<'_, f64>) -> Result<Responsibilities> {
        self.e_step(data)
    }

    /// Hard assignment: 0-based argmax of each responsibility row, ties to the
    /// lowest index.
    pub fn predict(&self, data: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        Ok(self.predict_proba(data)?.hard_labels())
    }

    /// Draws `count` labeled points: z ~ Categorical(π), then x ~ MB(θ_z).
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<LabeledSample>> {
        if count == 0 {
            return Err(Error::Empty("sample count must be >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..count)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut cluster = self.n_clusters() - 1;
                for (k, w) in self.weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        cluster = k;
                        break;
                    }
                }
                LabeledSample {
                    point: self.components[cluster].sample_one(&mut rng),
                    cluster,
                }
            })
            .collect();
        Ok(samples)
    }

    fn check_data(&self, data: ArrayView2<'_, f64>) -> Result<()> {
        if data.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: data.ncols(),
            });
        }
        if let Some(bad) = data.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::NonFinite(format!("coordinate {bad} outside (0, 1)")));
        }
        Ok(())
    }
}

/// A generated point and the (0-based) component it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub point: Vec<f64>,
    pub cluster: usize,
}

/// Output of [`MixtureModel::e_step_detailed`].
#[derive(Debug, Clone)]
pub struct EStep {
    pub resp: Responsibilities,
    pub log_likelihood: f64,
    pub underflow_rows: usize,
}

/// N×C row-stochastic matrix of γ_nc.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    gamma: Array2<f64>,
}

impl Responsibilities {
    /// Wraps a matrix whose rows each sum to 1 (within 1e-9) with entries in [0, 1].
    pub fn new(gamma: Array2<f64>) -> Result<Self> {
        if gamma.ncols() == 0 {
            return Err(Error::Empty("responsibilities need at least one column"));
        }
        for (i, row) in gamma.rows().into_iter().enumerate() {
            if row.iter().any(|g| !(0.0..=1.0).contains(g)) || (row.sum() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParams(format!(
                    "responsibility row {i} is not a distribution"
                )));
            }
        }
        Ok(Self { gamma })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.gamma
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.gamma
    }

    pub fn n_points(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn n_clusters(&self) -> usize {
        self.gamma.ncols()
    }

    pub fn hard_labels(&self) -> Vec<usize> {
        self.gamma
            .rows()
            .into_iter()
            .map(|row| {
                let mut best = 0;
                for (k, &g) in row.iter().enumerate() {
                    if g > row[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }

    /// KL divergence Σ_c γ_ic ln(γ_ic / γ_jc) between rows `i` and `j`.
    ///
    /// Terms with γ_ic = 0 contribute 0. Row `j` is floored at [`KL_FLOOR`]
    /// and renormalized first. Not symmetric in `i`, `j`.
    pub fn kl_distance(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.n_points();
        for index in [i, j] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, len: n });
            }
        }
        if i == j {
            return Ok(0.0);
        }
        let p = self.gamma.row(i);
        let q = self.gamma.row(j);
        let q_total: f64 = q.iter().map(|v| v.max(KL_FLOOR)).sum();
        let d: f64 = p
            .iter()
            .zip(q.iter())
            .filter(|(pc, _)| **pc > 0.0)
            .map(|(pc, qc)| pc * (pc / (qc.max(KL_FLOOR) / q_total)).ln())
            .sum();
        Ok(d.max(0.0))
    }
}

/// π_c = (1/N) Σ_n γ_nc.
pub fn update_weights(resp: &Responsibilities) -> Vec<f64> {
    let n = resp.n_points() as f64;
    let mut w: Vec<f64> = resp.gamma.sum_axis(Axis(0)).iter().map(|s| s / n).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Free-function form of [`Responsibilities::kl_distance`].
pub fn kl_distance(resp: &Responsibilities, i: usize, j: usize) -> Result<f64> {
    resp.kl_distance(i, j)
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// EM loop controls.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub n_clusters: usize,
    pub max_iter: usize,
    /// Absolute change in observed log-likelihood that counts as converged.
    pub tol: f64,
    pub n_init: usize,
    pub seed: u64,
    pub param_lower: f64,
    pub param_upper: f64,
}

impl FitConfig {
    pub fn new(n_clusters: usize) -> Self {
        Self {
            n_clusters,
            max_iter: 200,
            tol: 1e-6,
            n_init: 10,
            seed: 0,
            param_lower: DEFAULT_PARAM_LOWER,
            param_upper: DEFAULT_PARAM_UPPER,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_n_init(mut self, n_init: usize) -> Self {
        self.n_init = n_init;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn validate(&self) -> Result<Bounds> {
        if self.n_clusters == 0 || self.max_iter == 0 || self.n_init == 0 {
            return Err(Error::InvalidParams(
                "n_clusters, max_iter and n_init must all be >= 1".into(),
            ));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        Bounds::new(self.param_lower, self.param_upper)
    }

    /// Seed of restart `index`.
    pub fn run_seed(&self, index: usize) -> u64 {
        self.seed
            .wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

/// Diagnostics of the winning EM run.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Observed-data log-likelihood after each E-step (entry 0 is the initialization).
    pub log_likelihood_trace: Vec<f64>,
    /// Expected complete-data log-likelihood after each E-step.
    pub expected_log_likelihood_trace: Vec<f64>,
    pub n_iter: usize,
    pub converged: bool,
    pub best_init_index: usize,
    pub seed: u64,
    /// EM iterations (1-based) in which the empty-cluster policy fired.
    pub reinitialized_at: Vec<usize>,
    pub underflow_rows: usize,
    pub diverged_msteps: usize,
}

/// Fitted model, responsibilities of the training data under it, and diagnostics.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: MixtureModel,
    pub responsibilities: Responsibilities,
    pub report: FitReport,
}

/// Runs `n_init` seeded EM restarts and keeps the best final log-likelihood.
pub fn fit(data: ArrayView2<'_, f64>, config: &FitConfig) -> Result<FitResult> {
    let bounds = config.validate()?;
    if data.nrows() < config.n_clusters {
        return Err(Error::TooFewPoints {
            n_points: data.nrows(),
            n_clusters: config.n_clusters,
        });
    }
    if data.ncols() == 0 {
        return Err(Error::Empty("points have no coordinates"));
    }
    let data = data.as_standard_layout();
    let data = data.view();
    let mut best: Option<FitResult> = None;
    for run in 0..config.n_init {
        let mut result = fit_once(data, config, bounds, config.run_seed(run))?;
        result.report.best_init_index = run;
        let ll = *result
            .report
            .log_likelihood_trace
            .last()
            .expect("trace is never empty");
        let better = match &best {
            None => true,
            Some(b) => {
                ll > *b
                    .report
                    .log_likelihood_trace
                    .last()
                    .expect("trace is never empty")
            }
        };
        if better {
            best = Some(result);
        }
    }
    Ok(best.expect("n_init >= 1"))
}

fn random_component<R: Rng>(dim: usize, bounds: Bounds, rng: &mut R) -> MBParams {
    let dist = Uniform::new_inclusive(INIT_PARAM_RANGE.0, INIT_PARAM_RANGE.1).expect("valid range");
    let a = (0..dim).map(|_| bounds.clamp(rng.sample(dist))).collect();
    MBParams::new(a, bounds.clamp(rng.sample(dist))).expect("positive parameters")
}

fn fit_once(
    data: ArrayView2<'_, f64>,
    config: &FitConfig,
    bounds: Bounds,
    seed: u64,
) -> Result<FitResult> {
    let c = config.n_clusters;
    let n = data.nrows() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components = (0..c)
        .map(|_| random_component(data.ncols(), bounds, &mut rng))
        .collect();
    let mut model = MixtureModel::new(vec![1.0 / c as f64; c], components)?;

    let mut estep = model.e_step_detailed(data)?;
    if !estep.log_likelihood.is_finite() {
        return Err(Error::InitFailed { seed });
    }
    let mut report = FitReport {
        log_likelihood_trace: vec![estep.log_likelihood],
        expected_log_likelihood_trace: vec![model.expected_log_likelihood(data, &estep.resp)?],
        n_iter: 0,
        converged: false,
        best_init_index: 0,
        seed,
        reinitialized_at: Vec::new(),
        underflow_rows: estep.underflow_rows,
        diverged_msteps: 0,
    };

    for iter in 1..=config.max_iter {
        let mut weights = update_weights(&estep.resp);
        let mstep = optimize_components(data, &estep.resp, &model, bounds)?;
        report.diverged_msteps += mstep.diverged;
        let mut components = mstep.components;

        let column_sums = estep.resp.matrix().sum_axis(Axis(0));
        let empty: Vec<usize> = (0..c)
            .filter(|&k| column_sums[k] < EMPTY_CLUSTER_FRACTION * n)
            .collect();
        if !empty.is_empty() {
            for &k in &empty {
                components[k] = random_component(data.ncols(), bounds, &mut rng);
                weights[k] = 1.0 / (10.0 * c as f64);
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            report.reinitialized_at.push(iter);
        }

        model = MixtureModel::new(weights, components)?;
        let next = model.e_step_detailed(data)?;
        let previous = estep.log_likelihood;
        estep = next;
        report.n_iter = iter;
        report.underflow_rows += estep.underflow_rows;
        report.log_likelihood_trace.push(estep.log_likelihood);
        report
            .expected_log_likelihood_trace
            .push(model.expected_log_likelihood(data, &estep.resp)?);
        if (estep.log_likelihood - previous).abs() < config.tol {
            report.converged = true;
            break;
        }
    }

    Ok(FitResult {
        model,
        responsibilities: estep.resp,
        report,
    })
}
