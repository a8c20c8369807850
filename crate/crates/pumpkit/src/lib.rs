//! Measures how far observed consumer purchase data departs from
//! utility-maximizing behavior, in money.
//!
//! Given `T` observations of prices and chosen bundles, the crate
//! computes the total money pump (the most an arbitrageur can extract by
//! reshuffling the observed purchases), its constrained variant (no
//! losing rounds), the equivalent linear-programming inefficiency values,
//! comparison indices built from individual violating cycles, the
//! critical cost efficiency index, and explicit piecewise-linear utility
//! functions certifying the theory's equivalences.
//!
//! ```
//! use pumpkit::fixtures;
//! use pumpkit::money_pump::{tmp, tmp_constrained};
//!
//! let d = fixtures::fig1b();
//! let pump = tmp(&d);
//! assert_eq!(pump.value, 2.0);          // a pump exists...
//! let constrained = tmp_constrained(&d, pumpkit::DEFAULT_TOL);
//! assert_eq!(constrained.value, 0.0);   // ...but not a per-round-safe one
//! ```

// dense T x T index math reads better with explicit indices
#![allow(clippy::needless_range_loop)]

pub mod dataset;
pub mod fixtures;
pub mod indices;
pub mod lp;
pub mod money_pump;
pub mod rp_graph;
mod shortest_path;
pub mod utility;

pub use dataset::{
    expenditure_matrix, load_dataset, write_dataset, Bundle, DataError, Dataset, ExpenditureMatrix,
    Format, Observation, PriceVector, DEFAULT_TOL,
};
pub use indices::{full_report, RationalityReport, ReportConfig};
pub use rp_graph::{
    build_graph, check_cyclical_monotonicity, check_garp, enumerate_garp_violations,
};

// The chapters of the guide in book/ run as doc-tests, so the book's
// code can never drift from the API it documents.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/money-pumps.md")]
    mod money_pumps {}
    #[doc = include_str!("../../../book/src/axioms.md")]
    mod axioms {}
    #[doc = include_str!("../../../book/src/linear-programs.md")]
    mod linear_programs {}
    #[doc = include_str!("../../../book/src/utilities.md")]
    mod utilities {}
    #[doc = include_str!("../../../book/src/indices.md")]
    mod indices {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
