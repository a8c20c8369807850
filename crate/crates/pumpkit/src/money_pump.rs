//! Total money pump indices.
//!
//! The arbitrageur's optimal trading strategy is a permutation `sigma` of
//! observations: in period `t` they sell the consumer `x^t` and buy
//! `x^{sigma(t)}`, netting `p^t . (x^t - x^{sigma(t)})`. The best strategy
//! is a maximum-weight perfect assignment; the constrained variant forbids
//! rounds that lose money. Also houses the per-cycle aggregation used by
//! the comparison indices (mean/median and maximum over violating cycles).

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{expenditure_matrix, Dataset, ExpenditureMatrix};
use crate::rp_graph::Cycle;

/// A trading strategy and the money it extracts.
#[derive(Debug, Clone, Serialize)]
pub struct PumpResult {
    /// Money extracted; the identity strategy is always feasible, so the
    /// optimum is never negative.
    pub value: f64,
    /// `sigma` in 1-based form: entry `t-1` is the observation whose
    /// bundle the arbitrageur buys in period `t`.
    pub permutation: Vec<usize>,
    pub constrained: bool,
}

#[derive(Debug, Error)]
pub enum PumpError {
    #[error("brute force requires T <= {max}, dataset has T = {t}")]
    TooLarge { t: usize, max: usize },
    #[error("no feasible assignment under the given restrictions")]
    NoFeasibleAssignment,
}

/// Exact maximum of the pump value over all permutations.
///
/// Solved as a T x T assignment problem by the augmenting-path method
/// with node potentials, O(T^3).
pub fn tmp(d: &Dataset) -> PumpResult {
    let e = expenditure_matrix(d);
    let (value, sigma) =
        optimal_pump(&e, |_, _| true).expect("unrestricted assignment is always feasible");
    PumpResult {
        value,
        permutation: to_one_based(&sigma),
        constrained: false,
    }
}

/// Exact maximum over constrained permutations: round `t` may only buy a
/// bundle that is affordable at observation `t`'s prices
/// (`p^t . x^{sigma(t)} <= p^t . x^t` up to `tol`).
///
/// Identity rounds are always affordable, so an optimum always exists.
pub fn tmp_constrained(d: &Dataset, tol: f64) -> PumpResult {
    let e = expenditure_matrix(d);
    let (value, sigma) = optimal_pump(&e, |t, s| e.at(t, s) <= e.diag(t) + tol)
        .expect("identity edges keep the constrained assignment feasible");
    PumpResult {
        value,
        permutation: to_one_based(&sigma),
        constrained: true,
    }
}

/// Exhaustive maximum over all T! permutations; the independent oracle
/// for the assignment solver. Guarded to T <= 10.
pub fn tmp_bruteforce(d: &Dataset, constrained: bool, tol: f64) -> Result<PumpResult, PumpError> {
    const MAX_T: usize = 10;
    let t = d.len();
    if t > MAX_T {
        return Err(PumpError::TooLarge { t, max: MAX_T });
    }
    let e = expenditure_matrix(d);
    let mut best_value = f64::NEG_INFINITY;
    let mut best_sigma: Vec<usize> = (0..t).collect();
    let mut sigma: Vec<usize> = (0..t).collect();
    permute(&mut sigma, 0, &mut |perm| {
        if constrained && (0..t).any(|i| e.at(i, perm[i]) > e.diag(i) + tol) {
            return;
        }
        let value: f64 = (0..t).map(|i| e.diag(i) - e.at(i, perm[i])).sum();
        if value > best_value {
            best_value = value;
            best_sigma = perm.to_vec();
        }
    });
    Ok(PumpResult {
        value: best_value,
        permutation: to_one_based(&best_sigma),
        constrained,
    })
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

fn to_one_based(sigma: &[usize]) -> Vec<usize> {
    sigma.iter().map(|&s| s + 1).collect()
}

/// Maximum pump over permutations whose edges pass `allowed`, as
/// `sum_t p^t . x^t  -  min-cost assignment on the cross expenditures`.
///
/// Returns the 0-based optimal permutation. `None` only if no perfect
/// assignment exists under the mask.
pub(crate) fn optimal_pump(
    e: &ExpenditureMatrix,
    allowed: impl Fn(usize, usize) -> bool,
) -> Option<(f64, Vec<usize>)> {
    let n = e.len();
    let col_match = min_cost_assignment(&e.values, &allowed)?;
    let mut sigma = vec![usize::MAX; n];
    for (col, &row) in col_match.iter().enumerate() {
        sigma[row] = col;
    }
    let value = (0..n).map(|t| e.diag(t) - e.at(t, sigma[t])).sum();
    Some((value, sigma))
}

/// Dense minimum-cost perfect assignment by shortest augmenting paths
/// with dual potentials. Forbidden edges are excluded from the path
/// search rather than penalized, so optima are exact.
///
/// Returns `col_match`: for each column, the row assigned to it.
fn min_cost_assignment(
    cost: &[Vec<f64>],
    allowed: &impl Fn(usize, usize) -> bool,
) -> Option<Vec<usize>> {
    let n = cost.len();
    let mut row_potential = vec![0.0_f64; n];
    let mut col_potential = vec![0.0_f64; n + 1];
    // column n is the virtual root of every alternating search tree
    let mut col_match = vec![usize::MAX; n + 1];

    for row in 0..n {
        col_match[n] = row;
        let mut j0 = n;
        let mut min_to = vec![f64::INFINITY; n];
        let mut prev_col = vec![usize::MAX; n];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_match[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = usize::MAX;
            for j in 0..n {
                if used[j] {
                    continue;
                }
                if allowed(i0, j) {
                    let reduced = cost[i0][j] - row_potential[i0] - col_potential[j];
                    if reduced < min_to[j] {
                        min_to[j] = reduced;
                        prev_col[j] = j0;
                    }
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            if j1 == usize::MAX || !delta.is_finite() {
                return None;
            }
            for j in 0..=n {
                if used[j] {
                    row_potential[col_match[j]] += delta;
                    col_potential[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if col_match[j0] == usize::MAX {
                break;
            }
        }
        // augment: flip matches along the alternating path
        while j0 != n {
            let j1 = prev_col[j0];
            col_match[j0] = col_match[j1];
            j0 = j1;
        }
    }
    col_match.pop();
    Some(col_match)
}

/// Largest pump over the enumerated violating cycles; 0 when none exist.
pub fn scsd_max(cycles: &[Cycle]) -> f64 {
    cycles.iter().map(|c| c.mp_value).fold(0.0, f64::max)
}

/// Aggregation used by the per-cycle average index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageMode {
    Mean,
    Median,
}

/// Mean or median pump over the enumerated violating cycles; `None` when
/// the data has no violations (the index is undefined there and reports
/// carry a no-violations flag instead).
pub fn els_average(cycles: &[Cycle], mode: AverageMode) -> Option<f64> {
    if cycles.is_empty() {
        return None;
    }
    match mode {
        AverageMode::Mean => {
            Some(cycles.iter().map(|c| c.mp_value).sum::<f64>() / cycles.len() as f64)
        }
        AverageMode::Median => {
            let mut values: Vec<f64> = cycles.iter().map(|c| c.mp_value).collect();
            values.sort_by(|a, b| a.partial_cmp(b).expect("pump values are finite"));
            let mid = values.len() / 2;
            if values.len() % 2 == 1 {
                Some(values[mid])
            } else {
                Some((values[mid - 1] + values[mid]) / 2.0)
            }
        }
    }
}
