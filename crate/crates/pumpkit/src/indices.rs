//! Aggregates every rationality measure into a single report: the pump
//! values, their LP counterparts, per-cycle comparison indices, the
//! critical cost efficiency index, and the expenditure-normalized pump.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{expenditure_matrix, Dataset, ExpenditureMatrix, DEFAULT_TOL};
use crate::lp::{solve_afriat_lp, AfriatSolution, LpError};
use crate::money_pump::{els_average, scsd_max, tmp, tmp_constrained, AverageMode, PumpResult};
use crate::rp_graph::{
    build_graph, check_cyclical_monotonicity, check_garp, enumerate_garp_violations, Cycle,
};
use crate::utility::{
    build_optimal_permutation_rationalizer, verify_quasilinear, RationalizationCertificate,
    UtilityError,
};

/// Agreement demanded between provably equal independent routes.
const CROSS_CHECK_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Utility(#[from] UtilityError),
    #[error("total expenditure is zero; the normalized pump is undefined")]
    ZeroExpenditure,
}

/// Knobs for [`full_report`].
#[derive(Debug, Clone)]
pub struct ReportConfig {
    /// Stop enumerating violating cycles past this count.
    pub cycle_cap: usize,
    /// Random bundles per observation in each certificate.
    pub samples: usize,
    pub seed: u64,
    /// Comparison tolerance on expenditures.
    pub tol: f64,
    /// Bisection width for the cost efficiency index.
    pub ccei_tol: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            cycle_cap: crate::rp_graph::DEFAULT_CYCLE_CAP,
            samples: 1000,
            seed: 0,
            tol: DEFAULT_TOL,
            ccei_tol: 1e-9,
        }
    }
}

/// Agreement between two routes to the same number.
#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub name: String,
    pub delta: f64,
    pub pass: bool,
}

/// Every index the crate computes for one dataset, with the cross-check
/// evidence that the provably-equal routes agreed.
#[derive(Debug, Clone, Serialize)]
pub struct RationalityReport {
    pub garp: bool,
    pub cm: bool,
    pub tmp: f64,
    pub tmp_c: f64,
    /// Additive cost inefficiency; equals the pump value.
    #[serde(rename = "A")]
    pub additive_inefficiency: f64,
    /// Quasilinear utility inefficiency; equals the pump value.
    #[serde(rename = "Q")]
    pub quasilinear_inefficiency: f64,
    #[serde(rename = "A_c")]
    pub additive_inefficiency_c: f64,
    #[serde(rename = "Q_c")]
    pub quasilinear_inefficiency_c: f64,
    /// LP route to the same quantities.
    pub epsilon_bar: f64,
    pub epsilon_bar_c: f64,
    pub els_mean: f64,
    pub els_median: f64,
    pub scsd_max: f64,
    pub no_violations: bool,
    pub cycles_truncated: bool,
    pub violation_count: usize,
    pub ccei_waste: f64,
    pub ccei_efficiency: f64,
    pub a_tilde: f64,
    pub total_expenditure: f64,
    pub pump: PumpResult,
    pub pump_c: PumpResult,
    pub afriat: AfriatSolution,
    pub afriat_c: AfriatSolution,
    pub cycles: Vec<Cycle>,
    pub cross_checks: Vec<CrossCheck>,
    pub certificates: Vec<RationalizationCertificate>,
}

impl RationalityReport {
    pub fn all_cross_checks_pass(&self) -> bool {
        self.cross_checks.iter().all(|c| c.pass) && self.certificates.iter().all(|c| c.pass)
    }
}

/// Runs every check and index on a dataset. Partial reports are never
/// produced: any internal failure aborts the whole computation.
pub fn full_report(d: &Dataset, cfg: &ReportConfig) -> Result<RationalityReport, IndexError> {
    let e = expenditure_matrix(d);
    let graph = build_graph(&e, cfg.tol);
    let garp = check_garp(&graph);
    let cm = check_cyclical_monotonicity(&graph);

    let pump = tmp(d);
    let pump_c = tmp_constrained(d, cfg.tol);
    let afriat = solve_afriat_lp(d, false, cfg.tol)?.with_normalized_levels();
    let afriat_c = solve_afriat_lp(d, true, cfg.tol)?.with_normalized_levels();

    let enumeration = enumerate_garp_violations(&graph, cfg.cycle_cap);
    let no_violations = enumeration.cycles.is_empty();
    let els_mean = els_average(&enumeration.cycles, AverageMode::Mean).unwrap_or(0.0);
    let els_median = els_average(&enumeration.cycles, AverageMode::Median).unwrap_or(0.0);
    let worst_single = scsd_max(&enumeration.cycles);

    let (ccei_waste, ccei_efficiency) = ccei(d, cfg.ccei_tol, cfg.tol);
    let a_tilde = a_tilde(d, pump.value)?;

    let attained = build_optimal_permutation_rationalizer(d, false, cfg.tol)?;
    let attained_c = build_optimal_permutation_rationalizer(d, true, cfg.tol)?;
    let permuted = d.permuted(&attained.pump.permutation);
    let permuted_c = d.permuted(&attained_c.pump.permutation);
    let certificates = vec![
        verify_quasilinear(
            &attained.utility,
            &permuted,
            false,
            cfg.samples,
            cfg.seed,
            cfg.tol,
        ),
        verify_quasilinear(
            &attained_c.utility,
            &permuted_c,
            true,
            cfg.samples,
            cfg.seed,
            cfg.tol,
        ),
    ];

    let mut cross_checks = Vec::new();
    let mut push_delta = |name: &str, lhs: f64, rhs: f64| {
        let delta = (lhs - rhs).abs();
        cross_checks.push(CrossCheck {
            name: name.to_string(),
            delta,
            pass: delta <= CROSS_CHECK_TOL,
        });
    };
    push_delta("tmp vs epsilon_bar", pump.value, afriat.epsilon_bar);
    push_delta("tmp_c vs epsilon_bar_c", pump_c.value, afriat_c.epsilon_bar);
    push_delta("attaining-utility gap vs tmp", attained.gap, pump.value);
    push_delta(
        "constrained attaining-utility gap vs tmp_c",
        attained_c.gap,
        pump_c.value,
    );
    cross_checks.push(CrossCheck {
        name: "cm verdict vs tmp = 0".into(),
        delta: pump.value,
        pass: cm.satisfied == (pump.value <= CROSS_CHECK_TOL),
    });
    cross_checks.push(CrossCheck {
        name: "garp verdict vs tmp_c = 0".into(),
        delta: pump_c.value,
        pass: garp.satisfied == (pump_c.value <= CROSS_CHECK_TOL),
    });

    Ok(RationalityReport {
        garp: garp.satisfied,
        cm: cm.satisfied,
        tmp: pump.value,
        tmp_c: pump_c.value,
        additive_inefficiency: pump.value,
        quasilinear_inefficiency: pump.value,
        additive_inefficiency_c: pump_c.value,
        quasilinear_inefficiency_c: pump_c.value,
        epsilon_bar: afriat.epsilon_bar,
        epsilon_bar_c: afriat_c.epsilon_bar,
        els_mean,
        els_median,
        scsd_max: worst_single,
        no_violations,
        cycles_truncated: enumeration.truncated,
        violation_count: enumeration.cycles.len(),
        ccei_waste,
        ccei_efficiency,
        a_tilde,
        total_expenditure: e.total_expenditure(),
        pump,
        pump_c,
        afriat,
        afriat_c,
        cycles: enumeration.cycles,
        cross_checks,
        certificates,
    })
}

/// Whether the budget-relaxed relations satisfy the no-strict-cycle
/// condition at relaxation level `relax`.
fn relaxed_garp_holds(e: &ExpenditureMatrix, relax: f64, tol: f64) -> bool {
    let n = e.len();
    let mut weak = vec![vec![false; n]; n];
    let mut strict = vec![vec![false; n]; n];
    for t in 0..n {
        let budget = (1.0 - relax) * e.diag(t);
        for s in 0..n {
            if s == t {
                continue;
            }
            weak[t][s] = budget >= e.at(t, s) - tol;
            strict[t][s] = budget > e.at(t, s) + tol;
        }
        weak[t][t] = true;
    }
    // transitive closure, then look for a strict edge closing a weak path
    let mut reach = weak;
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    for s in 0..n {
        for t in 0..n {
            if s != t && strict[s][t] && reach[t][s] {
                return false;
            }
        }
    }
    true
}

/// Critical cost efficiency: the smallest budget shrinkage `e*` at which
/// the relaxed relations stop violating the no-strict-cycle condition.
///
/// The pass predicate is monotone in the relaxation, so a plain bisection
/// on `[0, 1]` pins `e*` to within `tol`. Returns `(waste, efficiency)`
/// with `efficiency = 1 - waste`.
pub fn ccei(d: &Dataset, tol: f64, tol_num: f64) -> (f64, f64) {
    assert!(tol > 0.0, "bisection tolerance must be positive");
    let e = expenditure_matrix(d);
    if relaxed_garp_holds(&e, 0.0, tol_num) {
        return (0.0, 1.0);
    }
    let mut fail = 0.0;
    let mut pass = 1.0;
    while pass - fail > tol {
        let mid = 0.5 * (fail + pass);
        if relaxed_garp_holds(&e, mid, tol_num) {
            pass = mid;
        } else {
            fail = mid;
        }
    }
    (pass, 1.0 - pass)
}

/// The pump value normalized by total expenditure; a number in [0, 1]
/// comparable across datasets.
pub fn a_tilde(d: &Dataset, tmp_value: f64) -> Result<f64, IndexError> {
    let total = expenditure_matrix(d).total_expenditure();
    if total <= 0.0 {
        return Err(IndexError::ZeroExpenditure);
    }
    Ok(tmp_value / total)
}

/// Synthetic consumer maximizing `sum_l a_l sqrt(x_l) - p . x`: demand is
/// exactly `x_l = (a_l / (2 p_l))^2`, so the data satisfy cyclical
/// monotonicity up to floating-point noise.
pub fn generate_quasilinear_dataset(
    seed: u64,
    t: usize,
    l: usize,
    price_range: (f64, f64),
) -> Dataset {
    assert!(t >= 1 && l >= 1, "need at least one observation and good");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..l).map(|_| rng.gen_range(0.5..2.0)).collect();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..t)
        .map(|_| {
            let prices: Vec<f64> = (0..l)
                .map(|_| rng.gen_range(price_range.0..price_range.1))
                .collect();
            let demand: Vec<f64> = (0..l)
                .map(|g| {
                    let ratio = coeffs[g] / (2.0 * prices[g]);
                    ratio * ratio
                })
                .collect();
            (prices, demand)
        })
        .collect();
    Dataset::from_rows(&rows).expect("generated rows are valid")
}

/// Synthetic consumer spending fixed budget shares: demand is
/// `x_l = alpha_l m / p_l`, exact budget-constrained maximization, so the
/// data satisfy GARP while the unconstrained pump may be positive.
pub fn generate_cobb_douglas_dataset(
    seed: u64,
    t: usize,
    l: usize,
    income_range: (f64, f64),
    price_range: (f64, f64),
) -> Dataset {
    assert!(t >= 1 && l >= 1, "need at least one observation and good");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..l).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let shares: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..t)
        .map(|_| {
            let income = rng.gen_range(income_range.0..income_range.1);
            let prices: Vec<f64> = (0..l)
                .map(|_| rng.gen_range(price_range.0..price_range.1))
                .collect();
            let demand: Vec<f64> = (0..l).map(|g| shares[g] * income / prices[g]).collect();
            (prices, demand)
        })
        .collect();
    Dataset::from_rows(&rows).expect("generated rows are valid")
}
