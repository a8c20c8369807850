//! A self-contained two-phase dense simplex and the slack-minimizing
//! linear programs whose optimal values equal the pump indices.
//!
//! The programs look for utility levels `u_t` and non-negative slacks
//! `eps_t` satisfying `u_s <= u_t + p^t . (x^s - x^t) + eps_t` while
//! minimizing the total slack; the constrained variant keeps only the
//! pairs where `x^s` was affordable at observation `t`.

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{expenditure_matrix, Dataset};

/// Reduced costs below this magnitude count as zero at optimality.
const REDUCED_COST_TOL: f64 = 1e-10;
/// Pivot entries below this magnitude are treated as zero.
const PIVOT_TOL: f64 = 1e-10;
/// A phase-1 optimum above this is reported as infeasible.
const PHASE1_TOL: f64 = 1e-7;

/// A linear program `min c . x  s.t.  A x <= b`, with each variable either
/// non-negative or free.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    /// `free[j]` lifts the lower bound of variable `j` from 0.
    pub free: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("linear program is infeasible (phase-1 residual {0})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached ({0} pivots)")]
    IterationLimit(usize),
    #[error("inconsistent program shape: {0}")]
    BadShape(String),
}

/// Solves the program by two-phase tableau simplex with Bland's
/// anti-cycling rule.
///
/// Free variables enter as differences of two non-negative columns; rows
/// are slacked into equalities; artificials patch rows whose slack cannot
/// start in the basis. Optimality means every reduced cost clears
/// `-1e-10`.
pub fn simplex_solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.objective.len();
    if lp.free.len() != n {
        return Err(LpError::BadShape(
            "free flags do not match objective".into(),
        ));
    }
    if lp.constraints.len() != lp.rhs.len() {
        return Err(LpError::BadShape("constraint rows do not match rhs".into()));
    }
    for row in &lp.constraints {
        if row.len() != n {
            return Err(LpError::BadShape("constraint row width mismatch".into()));
        }
    }

    // expand free variables into plus/minus parts
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut std_cols = 0;
    for &is_free in &lp.free {
        if is_free {
            col_of.push((std_cols, Some(std_cols + 1)));
            std_cols += 2;
        } else {
            col_of.push((std_cols, None));
            std_cols += 1;
        }
    }

    let m = lp.constraints.len();
    let total_cols = std_cols + m; // structural + slack
    let mut tableau: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut needs_artificial = Vec::with_capacity(m);
    for (i, row) in lp.constraints.iter().enumerate() {
        let flip = lp.rhs[i] < 0.0;
        let sign = if flip { -1.0 } else { 1.0 };
        let mut std_row = vec![0.0; total_cols + 1];
        for (j, &a) in row.iter().enumerate() {
            let (pos, neg) = col_of[j];
            std_row[pos] = sign * a;
            if let Some(neg) = neg {
                std_row[neg] = -sign * a;
            }
        }
        std_row[std_cols + i] = sign; // slack
        std_row[total_cols] = sign * lp.rhs[i];
        needs_artificial.push(flip);
        tableau.push(std_row);
    }

    // phase-2 cost over structural + slack columns
    let mut cost2 = vec![0.0; total_cols + 1];
    for (j, &c) in lp.objective.iter().enumerate() {
        let (pos, neg) = col_of[j];
        cost2[pos] = c;
        if let Some(neg) = neg {
            cost2[neg] = -c;
        }
    }

    // append artificial columns and build the phase-1 cost row
    let art_count = needs_artificial.iter().filter(|&&x| x).count();
    let full_cols = total_cols + art_count;
    let mut basis = Vec::with_capacity(m);
    {
        let mut next_art = total_cols;
        for (i, row) in tableau.iter_mut().enumerate() {
            let rhs = row.pop().expect("rhs present");
            row.resize(full_cols, 0.0);
            row.push(rhs);
            if needs_artificial[i] {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(std_cols + i);
            }
        }
        cost2.pop();
        cost2.resize(full_cols, 0.0);
        cost2.push(0.0);
    }

    let mut cost1 = vec![0.0; full_cols + 1];
    for j in total_cols..full_cols {
        cost1[j] = 1.0;
    }
    // price out the artificial basis from the phase-1 cost row
    for (i, &b) in basis.iter().enumerate() {
        if b >= total_cols {
            for j in 0..=full_cols {
                cost1[j] -= tableau[i][j];
            }
        }
    }

    let limit = 50 * (full_cols + m).max(1);
    let mut pivots = 0;

    // phase 1: minimize the artificial sum
    run_simplex(
        &mut tableau,
        &mut cost1,
        Some(cost2.as_mut_slice()),
        &mut basis,
        full_cols,
        limit,
        &mut pivots,
    )?;
    let phase1_value = -cost1[full_cols];
    if phase1_value > PHASE1_TOL {
        return Err(LpError::Infeasible(phase1_value));
    }

    // pivot surviving artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= total_cols {
            if let Some(col) = (0..total_cols).find(|&j| tableau[i][j].abs() > PIVOT_TOL) {
                pivot(
                    &mut tableau,
                    &mut cost1,
                    Some(cost2.as_mut_slice()),
                    &mut basis,
                    i,
                    col,
                );
                pivots += 1;
            }
        }
    }

    // phase 2 ignores artificial columns entirely
    run_simplex(
        &mut tableau,
        &mut cost2,
        None,
        &mut basis,
        total_cols,
        limit,
        &mut pivots,
    )?;

    // read the standard-form solution off the basis
    let mut std_x = vec![0.0; full_cols];
    for (i, &b) in basis.iter().enumerate() {
        std_x[b] = tableau[i][full_cols];
    }
    let mut x = vec![0.0; n];
    for (j, &(pos, neg)) in col_of.iter().enumerate() {
        x[j] = std_x[pos] - neg.map_or(0.0, |c| std_x[c]);
    }
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { value, x })
}

/// Bland-rule simplex over the first `active_cols` columns.
fn run_simplex(
    tableau: &mut [Vec<f64>],
    cost: &mut [f64],
    mut shadow_cost: Option<&mut [f64]>,
    basis: &mut [usize],
    active_cols: usize,
    limit: usize,
    pivots: &mut usize,
) -> Result<(), LpError> {
    let m = tableau.len();
    let width = cost.len() - 1;
    loop {
        let entering = (0..active_cols).find(|&j| cost[j] < -REDUCED_COST_TOL);
        let Some(col) = entering else {
            return Ok(());
        };
        // Bland's leaving rule: minimum ratio, ties by smallest basis index
        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = tableau[i][col];
            if a > PIVOT_TOL {
                let ratio = tableau[i][width] / a;
                let better = match leaving {
                    None => true,
                    Some((best_i, best_r)) => {
                        ratio < best_r - PIVOT_TOL
                            || (ratio <= best_r + PIVOT_TOL && basis[i] < basis[best_i])
                    }
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let Some((row, _)) = leaving else {
            return Err(LpError::Unbounded);
        };
        pivot(tableau, cost, shadow_cost.as_deref_mut(), basis, row, col);
        *pivots += 1;
        if *pivots > limit {
            return Err(LpError::IterationLimit(*pivots));
        }
    }
}

fn pivot(
    tableau: &mut [Vec<f64>],
    cost: &mut [f64],
    shadow_cost: Option<&mut [f64]>,
    basis: &mut [usize],
    row: usize,
    col: usize,
) {
    let width = cost.len();
    let p = tableau[row][col];
    for v in tableau[row].iter_mut() {
        *v /= p;
    }
    for i in 0..tableau.len() {
        if i != row {
            let factor = tableau[i][col];
            if factor != 0.0 {
                for j in 0..width {
                    tableau[i][j] -= factor * tableau[row][j];
                }
                tableau[i][col] = 0.0;
            }
        }
    }
    let factor = cost[col];
    if factor != 0.0 {
        for j in 0..width {
            cost[j] -= factor * tableau[row][j];
        }
        cost[col] = 0.0;
    }
    if let Some(shadow) = shadow_cost {
        let factor = shadow[col];
        if factor != 0.0 {
            for j in 0..width {
                shadow[j] -= factor * tableau[row][j];
            }
            shadow[col] = 0.0;
        }
    }
    basis[row] = col;
}

/// Optimal value and levels of the slack-minimizing program.
#[derive(Debug, Clone, Serialize)]
pub struct AfriatSolution {
    /// Total wasted net utility; equals the (constrained) pump value.
    pub epsilon_bar: f64,
    /// Utility levels; identified only up to a common shift.
    pub u: Vec<f64>,
    /// Per-observation slacks, all non-negative.
    pub eps: Vec<f64>,
    #[serde(skip)]
    pub constrained: bool,
}

/// Builds and solves the slack-minimizing program for a dataset.
///
/// Variables are `u_1..u_T` (free) and `eps_1..eps_T >= 0`; each ordered
/// pair `s != t` contributes `u_s - u_t - eps_t <= p^t . (x^s - x^t)`.
/// When `constrained`, pairs are kept only if `p^t . x^t >= p^t . x^s`
/// up to `tol` (the same band the revealed-preference relations use).
pub fn solve_afriat_lp(
    d: &Dataset,
    constrained: bool,
    tol: f64,
) -> Result<AfriatSolution, LpError> {
    let t_count = d.len();
    let e = expenditure_matrix(d);
    let num_vars = 2 * t_count;
    let mut objective = vec![0.0; num_vars];
    for eps_col in t_count..num_vars {
        objective[eps_col] = 1.0;
    }
    let mut free = vec![false; num_vars];
    for flag in free.iter_mut().take(t_count) {
        *flag = true;
    }

    let mut constraints = Vec::new();
    let mut rhs = Vec::new();
    for t in 0..t_count {
        for s in 0..t_count {
            if s == t {
                continue;
            }
            if constrained && e.diag(t) < e.at(t, s) - tol {
                continue;
            }
            let mut row = vec![0.0; num_vars];
            row[s] = 1.0;
            row[t] = -1.0;
            row[t_count + t] = -1.0;
            constraints.push(row);
            rhs.push(e.at(t, s) - e.diag(t));
        }
    }

    let lp = LinearProgram {
        objective,
        constraints,
        rhs,
        free,
    };
    let solution = simplex_solve(&lp)?;
    let u = solution.x[..t_count].to_vec();
    let eps = solution.x[t_count..].to_vec();
    Ok(AfriatSolution {
        epsilon_bar: eps.iter().sum(),
        u,
        eps,
        constrained,
    })
}

impl AfriatSolution {
    /// Copy with utility levels shifted so the smallest is zero; used when
    /// assembling reports.
    pub fn with_normalized_levels(&self) -> AfriatSolution {
        let min = self.u.iter().copied().fold(f64::INFINITY, f64::min);
        let shift = if min.is_finite() { min } else { 0.0 };
        AfriatSolution {
            epsilon_bar: self.epsilon_bar,
            u: self.u.iter().map(|v| v - shift).collect(),
            eps: self.eps.clone(),
            constrained: self.constrained,
        }
    }

    /// Worst violation of the defining inequalities; negative or tiny
    /// means feasible.
    pub fn worst_violation(&self, d: &Dataset, tol: f64) -> f64 {
        let e = expenditure_matrix(d);
        let mut worst = f64::NEG_INFINITY;
        for t in 0..d.len() {
            for s in 0..d.len() {
                if s == t {
                    continue;
                }
                if self.constrained && e.diag(t) < e.at(t, s) - tol {
                    continue;
                }
                let slack_needed = self.u[s] - self.u[t] - (e.at(t, s) - e.diag(t)) - self.eps[t];
                worst = worst.max(slack_needed);
            }
        }
        worst
    }
}
