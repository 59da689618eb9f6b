//! External clustering agreement: adjusted Rand index and adjusted mutual
//! information, both chance-corrected under the permutation model.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Counts of (reference class, predicted cluster) co-occurrences.
///
/// Labels are mapped to dense indices in ascending label order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// True when each row and each column has exactly one nonzero cell,
    /// i.e. the two partitions are identical up to relabeling.
    fn is_perfect_match(&self) -> bool {
        self.counts.len() == self.col_sums.len()
            && self
                .counts
                .iter()
                .all(|row| row.iter().filter(|&&v| v > 0).count() == 1)
            && (0..self.col_sums.len())
                .all(|k| self.counts.iter().filter(|row| row[k] > 0).count() == 1)
    }
}

pub fn contingency<R: Ord + Copy, P: Ord + Copy>(
    reference: &[R],
    predicted: &[P],
) -> Result<ContingencyTable> {
    if reference.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: reference.len(),
            right: predicted.len(),
        });
    }
    if reference.is_empty() {
        return Err(Error::Empty("no labels to compare"));
    }
    let ref_index = dense_index(reference);
    let pred_index = dense_index(predicted);
    let (rows, cols) = (ref_index.len(), pred_index.len());

    let mut counts = vec![vec![0u64; cols]; rows];
    for (r, p) in reference.iter().zip(predicted) {
        counts[ref_index[r]][pred_index[p]] += 1;
    }
    let row_sums = counts.iter().map(|row| row.iter().sum()).collect();
    let col_sums = (0..cols)
        .map(|k| counts.iter().map(|row| row[k]).sum())
        .collect();
    Ok(ContingencyTable {
        counts,
        row_sums,
        col_sums,
        total: reference.len() as u64,
    })
}

fn dense_index<L: Ord + Copy>(labels: &[L]) -> BTreeMap<L, usize> {
    let mut distinct: Vec<L> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    distinct
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect()
}

fn pairs(n: u64) -> i128 {
    let n = n as i128;
    n * (n - 1) / 2
}

/// Adjusted Rand index.
///
/// Computed as one integer ratio
/// `(2·P·Σ C(n_rk,2) - 2·S_a·S_b) / (P·(S_a + S_b) - 2·S_a·S_b)` with
/// `P = C(n,2)`, so identical partitions give exactly 1. When the
/// denominator vanishes (both partitions trivial) the result is 1 for
/// identical partitions and 0 otherwise.
pub fn adjusted_rand_index<R: Ord + Copy, P: Ord + Copy>(
    reference: &[R],
    predicted: &[P],
) -> Result<f64> {
    let table = contingency(reference, predicted)?;
    let index: i128 = table.counts.iter().flatten().map(|&v| pairs(v)).sum();
    let sum_a: i128 = table.row_sums.iter().map(|&v| pairs(v)).sum();
    let sum_b: i128 = table.col_sums.iter().map(|&v| pairs(v)).sum();
    let total = pairs(table.total);
    let num = 2 * total * index - 2 * sum_a * sum_b;
    let den = total * (sum_a + sum_b) - 2 * sum_a * sum_b;
    if den == 0 {
        return Ok(if table.is_perfect_match() { 1.0 } else { 0.0 });
    }
    Ok(num as f64 / den as f64)
}

/// ln(k!) for k = 0..=n.
fn log_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

fn entropy(sums: &[u64], total: u64) -> f64 {
    let n = total as f64;
    sums.iter()
        .filter(|&&v| v > 0)
        .map(|&v| {
            let p = v as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information (natural log) of a contingency table.
pub fn mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.total as f64;
    let mut mi = 0.0;
    for (r, row) in table.counts.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            if v == 0 {
                continue;
            }
            let nij = v as f64;
            let ab = table.row_sums[r] as f64 * table.col_sums[k] as f64;
            mi += nij / n * (n * nij / ab).ln();
        }
    }
    mi.max(0.0)
}

/// Expected mutual information under the hypergeometric permutation model,
/// summing over every feasible count of every cell.
pub fn expected_mutual_information(row_sums: &[u64], col_sums: &[u64], total: u64) -> f64 {
    let n = total as usize;
    let lf = log_factorials(n);
    let nf = total as f64;
    let mut emi = 0.0;
    for &a in row_sums {
        let a = a as usize;
        for &b in col_sums {
            let b = b as usize;
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            // Constant part of the hypergeometric probability.
            let base = lf[a] + lf[b] + lf[n - a] + lf[n - b] - lf[n];
            for nij in lo..=hi {
                let log_p = base - lf[nij] - lf[a - nij] - lf[b - nij] - lf[n + nij - a - b];
                let term = nij as f64 / nf * (nf * nij as f64 / (a as f64 * b as f64)).ln();
                emi += term * log_p.exp();
            }
        }
    }
    emi
}

/// Adjusted mutual information with arithmetic-mean entropy normalization:
/// `(MI - E[MI]) / (mean(H_ref, H_pred) - E[MI])`.
///
/// Identical partitions give exactly 1. A vanishing denominator gives 1 for
/// identical partitions and 0 otherwise.
pub fn adjusted_mutual_information<R: Ord + Copy, P: Ord + Copy>(
    reference: &[R],
    predicted: &[P],
) -> Result<f64> {
    let table = contingency(reference, predicted)?;
    if table.is_perfect_match() {
        return Ok(1.0);
    }
    let mi = mutual_information(&table);
    let emi = expected_mutual_information(&table.row_sums, &table.col_sums, table.total);
    let h_ref = entropy(&table.row_sums, table.total);
    let h_pred = entropy(&table.col_sums, table.total);
    let den = 0.5 * (h_ref + h_pred) - emi;
    let num = mi - emi;
    if den.abs() < 1e-15 {
        return Ok(0.0);
    }
    Ok(num / den)
}
