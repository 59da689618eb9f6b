#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use mbmm::distribution::MBParams;
use mbmm::mixture::MixtureModel;
use mbmm::mstep::MStepProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

pub fn manifest_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

pub fn reference() -> Value {
    let text = std::fs::read_to_string(manifest_path("tests/oracles/reference.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

pub fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array().unwrap().iter().map(floats).collect()
}

pub fn mixture_from(v: &Value) -> MixtureModel {
    let components = v["components"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| MBParams::new(floats(&c["a"]), c["b"].as_f64().unwrap()).unwrap())
        .collect();
    MixtureModel::new(floats(&v["weights"]), components).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_params<R: Rng>(rng: &mut R, dim: usize, lo: f64, hi: f64) -> MBParams {
    let a = (0..dim).map(|_| rng.random_range(lo..hi)).collect();
    MBParams::new(a, rng.random_range(lo..hi)).unwrap()
}

/// Midpoint rule with `n` nodes per axis in log-odds coordinates
/// `u = k·tan(π(t − ½))`, `x = 1/(1 + e^{−u})`. Returns (x, weight) pairs
/// whose weights already include the Jacobian and the cell width.
pub fn log_odds_midpoint_nodes(n: usize, k: f64) -> Vec<(f64, f64)> {
    let h = 1.0 / n as f64;
    (0..n)
        .map(|i| {
            let theta = PI * ((i as f64 + 0.5) * h - 0.5);
            let u = k * theta.tan();
            let x = 1.0 / (1.0 + (-u).exp());
            let du = k * PI / theta.cos().powi(2);
            (x, x * (1.0 - x) * du * h)
        })
        .filter(|&(x, w)| x > 0.0 && x < 1.0 && w > 0.0)
        .collect()
}

/// ∫ pdf over (0,1)² by the log-odds midpoint rule.
pub fn integrate_2d(params: &MBParams, n: usize) -> f64 {
    let nodes = log_odds_midpoint_nodes(n, 4.0);
    let mut total = 0.0;
    for &(x, wx) in &nodes {
        for &(y, wy) in &nodes {
            total += params.log_pdf(&[x, y]).unwrap().exp() * wx * wy;
        }
    }
    total
}

/// Plain midpoint rule over (0,1)² with `n` cells per axis.
pub fn midpoint_2d(params: &MBParams, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += params
                .pdf(&[(i as f64 + 0.5) * h, (j as f64 + 0.5) * h])
                .unwrap();
        }
    }
    total * h * h
}

/// One-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Every partition of `n` elements into at most `max_blocks` blocks, as
/// restricted-growth label strings.
pub fn set_partitions(n: usize, max_blocks: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, max_blocks: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let used = prefix.iter().max().map_or(0, |m| m + 1);
        for label in 0..=used.min(max_blocks - 1) {
            prefix.push(label);
            grow(prefix, n, max_blocks, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), n, max_blocks, &mut out);
    out
}

/// ARI from the four pair-agreement counts, by enumerating all pairs.
pub fn brute_force_ari(a: &[usize], b: &[usize]) -> f64 {
    let (mut ss, mut sd, mut ds, mut dd) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => ss += 1,
                (true, false) => sd += 1,
                (false, true) => ds += 1,
                (false, false) => dd += 1,
            }
        }
    }
    let num = 2 * (ss * dd - sd * ds);
    let den = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

fn ln_factorial(k: u64) -> f64 {
    (1..=k).map(|v| (v as f64).ln()).sum()
}

/// E[MI] by enumerating every contingency table with the given margins,
/// weighted by its multivariate hypergeometric probability.
pub fn enumerated_emi(rows: &[u64], cols: &[u64]) -> f64 {
    let n: u64 = rows.iter().sum();
    let nf = n as f64;
    let log_base: f64 = rows
        .iter()
        .chain(cols)
        .map(|&v| ln_factorial(v))
        .sum::<f64>()
        - ln_factorial(n);
    let mut emi = 0.0;
    let mut cells = vec![vec![0u64; cols.len()]; rows.len()];

    #[allow(clippy::too_many_arguments)]
    fn fill(
        r: usize,
        c: usize,
        rows: &[u64],
        cols: &[u64],
        col_left: &mut Vec<u64>,
        row_left: u64,
        cells: &mut Vec<Vec<u64>>,
        visit: &mut dyn FnMut(&[Vec<u64>]),
    ) {
        if r == rows.len() {
            if col_left.iter().all(|&v| v == 0) {
                visit(cells);
            }
            return;
        }
        if c == cols.len() - 1 {
            let v = row_left;
            if v > col_left[c] {
                return;
            }
            cells[r][c] = v;
            col_left[c] -= v;
            let next_row = rows.get(r + 1).copied().unwrap_or(0);
            fill(r + 1, 0, rows, cols, col_left, next_row, cells, visit);
            col_left[c] += v;
            return;
        }
        for v in 0..=row_left.min(col_left[c]) {
            cells[r][c] = v;
            col_left[c] -= v;
            fill(r, c + 1, rows, cols, col_left, row_left - v, cells, visit);
            col_left[c] += v;
        }
    }

    let mut col_left = cols.to_vec();
    let mut visit = |t: &[Vec<u64>]| {
        let log_p = log_base - t.iter().flatten().map(|&v| ln_factorial(v)).sum::<f64>();
        let mut mi = 0.0;
        for (i, row) in t.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > 0 {
                    let v = v as f64;
                    mi += v / nf * (nf * v / (rows[i] as f64 * cols[j] as f64)).ln();
                }
            }
        }
        emi += log_p.exp() * mi;
    };
    fill(
        0,
        0,
        rows,
        cols,
        &mut col_left,
        rows[0],
        &mut cells,
        &mut visit,
    );
    emi
}

/// Pulls the `data-density` attribute values out of a heatmap SVG, in
/// document order.
pub fn svg_densities(svg: &str) -> Vec<f64> {
    svg.split("data-density=\"")
        .skip(1)
        .map(|rest| rest[..rest.find('"').unwrap()].parse().unwrap())
        .collect()
}

/// Central differences of the M-step objective with relative step 1e-6.
pub fn finite_difference(problem: &MStepProblem, at: &MBParams) -> Vec<f64> {
    let mut theta: Vec<f64> = at.a().to_vec();
    theta.push(at.b());
    (0..theta.len())
        .map(|k| {
            let h = 1e-6 * theta[k];
            let eval = |delta: f64| {
                let mut t = theta.clone();
                t[k] += delta;
                let b = t.pop().unwrap();
                problem.objective(&MBParams::new(t, b).unwrap())
            };
            (eval(h) - eval(-h)) / (2.0 * h)
        })
        .collect()
}
