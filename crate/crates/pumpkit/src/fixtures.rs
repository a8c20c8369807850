//! Small worked datasets used throughout the documentation, the test
//! suites, and the bundled fixture files.

use crate::dataset::Dataset;

/// Two goods, two observations, mirror-image purchases.
///
/// Each bundle is cheaper at the other observation's prices, so the data
/// admit a constrained money pump of 2 and violate GARP.
pub fn fig1a() -> Dataset {
    Dataset::from_rows(&[
        (vec![1.0, 2.0], vec![1.0, 2.0]),
        (vec![2.0, 1.0], vec![2.0, 1.0]),
    ])
    .expect("static fixture")
}

/// Two goods, two observations, purchases scaled up with prices.
///
/// A money pump of 2 exists, but only by losing money in the first round,
/// so GARP holds and the constrained pump is worth 0.
pub fn fig1b() -> Dataset {
    Dataset::from_rows(&[
        (vec![1.0, 1.0], vec![1.0, 1.0]),
        (vec![2.0, 2.0], vec![2.0, 2.0]),
    ])
    .expect("static fixture")
}

/// Three observations whose GARP violations are the cycles (1,2), (1,3),
/// (1,2,3), and (1,3,2) with pump values 2, 1, 2, 1.
///
/// The mean and median per-cycle pump are both 1.5 while the optimal
/// constrained trading strategy extracts 2.
pub fn example1() -> Dataset {
    let third = 5.0 / 3.0;
    Dataset::from_rows(&[
        (vec![1.0, 2.0], vec![1.0, 2.0]),
        (vec![2.0, 1.0], vec![2.0, 1.0]),
        (vec![2.0, 1.0], vec![third, third]),
    ])
    .expect("static fixture")
}

/// [`example1`] with the third bundle nudged to (5/3 - eps, 5/3 + 2 eps).
///
/// The perturbation removes two of the four violating cycles yet raises
/// the mean per-cycle pump from 1.5 to 2; the constrained pump stays 2.
pub fn example1_perturbed(eps: f64) -> Dataset {
    let third = 5.0 / 3.0;
    Dataset::from_rows(&[
        (vec![1.0, 2.0], vec![1.0, 2.0]),
        (vec![2.0, 1.0], vec![2.0, 1.0]),
        (vec![2.0, 1.0], vec![third - eps, third + 2.0 * eps]),
    ])
    .expect("static fixture")
}

/// Four goods, four observations, one unit of good t bought at
/// observation t.
///
/// The violating cycles are (1,2), (1,4), (3,4) with pump values 4, 5, 4:
/// the single worst cycle yields 5, but the optimal strategy pumps the two
/// disjoint cycles (1,2) and (3,4) for a total of 8.
pub fn example2() -> Dataset {
    Dataset::from_rows(&[
        (vec![4.0, 2.0, 8.0, 1.0], vec![1.0, 0.0, 0.0, 0.0]),
        (vec![2.0, 4.0, 8.0, 8.0], vec![0.0, 1.0, 0.0, 0.0]),
        (vec![8.0, 8.0, 4.0, 2.0], vec![0.0, 0.0, 1.0, 0.0]),
        (vec![2.0, 8.0, 2.0, 4.0], vec![0.0, 0.0, 0.0, 1.0]),
    ])
    .expect("static fixture")
}
