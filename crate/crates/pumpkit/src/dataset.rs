//! Domain types for consumer purchase data: price vectors, bundles,
//! observations, datasets, and the cross-expenditure matrix that every
//! other module consumes.
//!
//! A dataset records `T` observations of a single consumer buying a bundle
//! of `L` goods at posted prices. Observation indices are 1-based in all
//! user-facing output; in-memory storage is 0-based.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute comparison tolerance on currency quantities.
///
/// Applied everywhere an order relation on expenditures is tested. All
/// bundled fixtures are small integers or short rationals, so any true gap
/// is far above this band.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Errors raised while ingesting or validating purchase data.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("dimension mismatch at row {row}: expected {expected} values, found {found}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-positive price at observation {observation}, good {good}: {value}")]
    NonPositivePrice {
        observation: usize,
        good: usize,
        value: f64,
    },
    #[error("negative quantity at observation {observation}, good {good}: {value}")]
    NegativeQuantity {
        observation: usize,
        good: usize,
        value: f64,
    },
    #[error("non-finite value at observation {observation}, good {good}")]
    NonFiniteValue { observation: usize, good: usize },
}

/// A consumption bundle: the quantity of each good purchased.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bundle(Vec<f64>);

impl Bundle {
    /// Validates that every quantity is finite and non-negative.
    pub fn new(quantities: Vec<f64>) -> Result<Self, DataError> {
        validate_entries(&quantities, 0, false)?;
        Ok(Bundle(quantities))
    }

    pub fn quantities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A strictly positive price vector, one price per good.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    /// Validates that every price is finite and strictly positive.
    pub fn new(prices: Vec<f64>) -> Result<Self, DataError> {
        validate_entries(&prices, 0, true)?;
        Ok(PriceVector(prices))
    }

    pub fn prices(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn validate_entries(
    values: &[f64],
    observation: usize,
    strictly_positive: bool,
) -> Result<(), DataError> {
    if values.is_empty() {
        return Err(DataError::MalformedInput(
            "a vector must have at least one good".into(),
        ));
    }
    for (good, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(DataError::NonFiniteValue {
                observation: observation + 1,
                good: good + 1,
            });
        }
        if strictly_positive && v <= 0.0 {
            return Err(DataError::NonPositivePrice {
                observation: observation + 1,
                good: good + 1,
                value: v,
            });
        }
        if !strictly_positive && v < 0.0 {
            return Err(DataError::NegativeQuantity {
                observation: observation + 1,
                good: good + 1,
                value: v,
            });
        }
    }
    Ok(())
}

/// Left-to-right inner product; the summation order is part of the contract
/// so that expenditures recomputed anywhere in the crate agree bit for bit.
pub fn dot(prices: &[f64], quantities: &[f64]) -> f64 {
    debug_assert_eq!(prices.len(), quantities.len());
    let mut acc = 0.0;
    for (p, x) in prices.iter().zip(quantities) {
        acc += p * x;
    }
    acc
}

/// One purchase: the consumer bought `bundle` when prices were `price`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    #[serde(rename = "p")]
    pub price: PriceVector,
    #[serde(rename = "x")]
    pub bundle: Bundle,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Observation {
    pub fn new(price: PriceVector, bundle: Bundle) -> Result<Self, DataError> {
        if price.len() != bundle.len() {
            return Err(DataError::DimensionMismatch {
                row: 0,
                expected: price.len(),
                found: bundle.len(),
            });
        }
        Ok(Observation {
            price,
            bundle,
            label: None,
        })
    }

    /// The amount actually spent at this observation.
    pub fn expenditure(&self) -> f64 {
        dot(self.price.prices(), self.bundle.quantities())
    }
}

/// A finite sequence of observations of one consumer over `num_goods` goods.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub observations: Vec<Observation>,
    pub num_goods: usize,
}

impl Dataset {
    /// Validates that there is at least one observation and that all
    /// observations share the same number of goods.
    pub fn new(observations: Vec<Observation>) -> Result<Self, DataError> {
        let first = observations
            .first()
            .ok_or_else(|| DataError::MalformedInput("dataset has no observations".into()))?;
        let num_goods = first.price.len();
        for (row, obs) in observations.iter().enumerate() {
            if obs.price.len() != num_goods || obs.bundle.len() != num_goods {
                return Err(DataError::DimensionMismatch {
                    row: row + 1,
                    expected: num_goods,
                    found: obs.price.len().max(obs.bundle.len()),
                });
            }
        }
        Ok(Dataset {
            observations,
            num_goods,
        })
    }

    /// Convenience constructor from raw rows of `(prices, quantities)`.
    pub fn from_rows(rows: &[(Vec<f64>, Vec<f64>)]) -> Result<Self, DataError> {
        let observations = rows
            .iter()
            .map(|(p, x)| Observation::new(PriceVector::new(p.clone())?, Bundle::new(x.clone())?))
            .collect::<Result<Vec<_>, _>>()?;
        Dataset::new(observations)
    }

    /// Number of observations T.
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Price vector of observation `t` (0-based).
    pub fn price(&self, t: usize) -> &[f64] {
        self.observations[t].price.prices()
    }

    /// Bundle of observation `t` (0-based).
    pub fn bundle(&self, t: usize) -> &[f64] {
        self.observations[t].bundle.quantities()
    }

    /// Label of observation `t` (0-based), defaulting to its 1-based index.
    pub fn label(&self, t: usize) -> String {
        self.observations[t]
            .label
            .clone()
            .unwrap_or_else(|| (t + 1).to_string())
    }

    /// The dataset `(p^t, x^{sigma(t)})` obtained by reassigning bundles
    /// according to a permutation given in 1-based form.
    pub fn permuted(&self, permutation: &[usize]) -> Dataset {
        assert_eq!(permutation.len(), self.len());
        let observations = self
            .observations
            .iter()
            .zip(permutation)
            .map(|(obs, &s)| Observation {
                price: obs.price.clone(),
                bundle: self.observations[s - 1].bundle.clone(),
                label: None,
            })
            .collect();
        Dataset {
            observations,
            num_goods: self.num_goods,
        }
    }

    /// Hex-encoded SHA-256 over the dimensions and raw bits of all prices
    /// and quantities; used to tie certificates to the data they checked.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update((self.len() as u64).to_le_bytes());
        hasher.update((self.num_goods as u64).to_le_bytes());
        for obs in &self.observations {
            for &p in obs.price.prices() {
                hasher.update(p.to_bits().to_le_bytes());
            }
            for &x in obs.bundle.quantities() {
                hasher.update(x.to_bits().to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Supported on-disk dataset formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// Columns `p_1..p_L,x_1..x_L`, header optional, L inferred as half the
    /// column count.
    Csv,
    /// `{"observations":[{"p":[...],"x":[...],"label":"..."}]}`.
    Json,
}

#[derive(Deserialize)]
struct JsonObservation {
    p: Vec<f64>,
    x: Vec<f64>,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Deserialize)]
struct JsonDataset {
    observations: Vec<JsonObservation>,
}

/// Reads a dataset from a byte stream in the declared format.
///
/// Row order defines the observation indices 1..T.
pub fn load_dataset<R: Read>(source: R, format: Format) -> Result<Dataset, DataError> {
    match format {
        Format::Csv => load_csv(source),
        Format::Json => load_json(source),
    }
}

fn load_csv<R: Read>(source: R) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut observations = Vec::new();
    let mut width = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DataError::MalformedInput(e.to_string()))?;
        let fields: Vec<&str> = record.iter().filter(|f| !f.is_empty()).collect();
        if fields.is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            // An unparsable leading row is an optional header.
            Err(_) if idx == 0 => continue,
            Err(e) => {
                return Err(DataError::MalformedInput(format!("row {}: {e}", idx + 1)));
            }
        };
        let expected = *width.get_or_insert(values.len());
        if values.len() != expected {
            return Err(DataError::DimensionMismatch {
                row: observations.len() + 1,
                expected,
                found: values.len(),
            });
        }
        if values.len() % 2 != 0 {
            return Err(DataError::MalformedInput(format!(
                "row {}: odd number of columns ({}), expected p_1..p_L,x_1..x_L",
                observations.len() + 1,
                values.len()
            )));
        }
        let num_goods = values.len() / 2;
        let row = observations.len();
        validate_entries(&values[..num_goods], row, true)?;
        validate_entries(&values[num_goods..], row, false)?;
        observations.push(Observation {
            price: PriceVector(values[..num_goods].to_vec()),
            bundle: Bundle(values[num_goods..].to_vec()),
            label: None,
        });
    }
    Dataset::new(observations)
}

fn load_json<R: Read>(source: R) -> Result<Dataset, DataError> {
    let raw: JsonDataset =
        serde_json::from_reader(source).map_err(|e| DataError::MalformedInput(e.to_string()))?;
    let mut observations = Vec::with_capacity(raw.observations.len());
    for (row, obs) in raw.observations.into_iter().enumerate() {
        if obs.p.len() != obs.x.len() {
            return Err(DataError::DimensionMismatch {
                row: row + 1,
                expected: obs.p.len(),
                found: obs.x.len(),
            });
        }
        validate_entries(&obs.p, row, true)?;
        validate_entries(&obs.x, row, false)?;
        observations.push(Observation {
            price: PriceVector(obs.p),
            bundle: Bundle(obs.x),
            label: obs.label,
        });
    }
    Dataset::new(observations)
}

/// Writes a dataset in the given format; inverse of [`load_dataset`].
pub fn write_dataset(d: &Dataset, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::new();
            for obs in &d.observations {
                let row: Vec<String> = obs
                    .price
                    .prices()
                    .iter()
                    .chain(obs.bundle.quantities())
                    .map(|v| format!("{v}"))
                    .collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Wrapper<'a> {
                observations: &'a [Observation],
            }
            serde_json::to_string_pretty(&Wrapper {
                observations: &d.observations,
            })
            .expect("dataset serialization cannot fail")
        }
    }
}

/// The T x T matrix of cross expenditures `values[t][s] = p^t . x^s`.
///
/// Every revealed-preference relation, pump value, and LP coefficient in
/// the crate is a difference of entries of this matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpenditureMatrix {
    pub values: Vec<Vec<f64>>,
}

impl ExpenditureMatrix {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `p^t . x^s`.
    pub fn at(&self, t: usize, s: usize) -> f64 {
        self.values[t][s]
    }

    /// Own expenditure `p^t . x^t`.
    pub fn diag(&self, t: usize) -> f64 {
        self.values[t][t]
    }

    /// Total amount spent across all observations.
    pub fn total_expenditure(&self) -> f64 {
        (0..self.len()).map(|t| self.diag(t)).sum()
    }
}

/// Computes the cross-expenditure matrix of a dataset.
pub fn expenditure_matrix(d: &Dataset) -> ExpenditureMatrix {
    let t_count = d.len();
    let mut values = vec![vec![0.0; t_count]; t_count];
    for t in 0..t_count {
        for s in 0..t_count {
            values[t][s] = dot(d.price(t), d.bundle(s));
        }
    }
    ExpenditureMatrix { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn fig1a() -> Dataset {
        Dataset::from_rows(&[
            (vec![1.0, 2.0], vec![1.0, 2.0]),
            (vec![2.0, 1.0], vec![2.0, 1.0]),
        ])
        .unwrap()
    }

    pub(crate) fn fig1b() -> Dataset {
        Dataset::from_rows(&[
            (vec![1.0, 1.0], vec![1.0, 1.0]),
            (vec![2.0, 2.0], vec![2.0, 2.0]),
        ])
        .unwrap()
    }

    #[test]
    fn csv_roundtrip_two_observations() {
        let csv = "1,2,1,2\n2,1,2,1\n";
        let d = load_dataset(csv.as_bytes(), Format::Csv).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.num_goods, 2);
        assert_eq!(d.price(0), &[1.0, 2.0]);
        assert_eq!(d.bundle(0), &[1.0, 2.0]);
        assert_eq!(d.price(1), &[2.0, 1.0]);
        assert_eq!(d.bundle(1), &[2.0, 1.0]);
    }

    #[test]
    fn csv_header_is_optional() {
        let csv = "p1,p2,x1,x2\n1,2,1,2\n";
        let d = load_dataset(csv.as_bytes(), Format::Csv).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.price(0), &[1.0, 2.0]);
    }

    #[test]
    fn csv_single_row_zero_bundle() {
        let d = load_dataset("1,1,0,0\n".as_bytes(), Format::Csv).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.bundle(0), &[0.0, 0.0]);
    }

    #[test]
    fn csv_rejects_zero_price() {
        let err = load_dataset("0,1,1,1\n".as_bytes(), Format::Csv).unwrap_err();
        assert!(matches!(err, DataError::NonPositivePrice { .. }));
    }

    #[test]
    fn csv_rejects_negative_quantity() {
        let err = load_dataset("1,1,-1,1\n".as_bytes(), Format::Csv).unwrap_err();
        assert!(matches!(err, DataError::NegativeQuantity { .. }));
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let err = load_dataset("1,2,1,2\n1,2,1\n".as_bytes(), Format::Csv).unwrap_err();
        assert!(matches!(err, DataError::DimensionMismatch { .. }));
    }

    #[test]
    fn csv_rejects_garbage() {
        let err = load_dataset("1,2,1,2\nfoo,bar,baz,qux\n".as_bytes(), Format::Csv).unwrap_err();
        assert!(matches!(err, DataError::MalformedInput(_)));
    }

    #[test]
    fn json_roundtrip_with_labels() {
        let json =
            r#"{"observations":[{"p":[1,2],"x":[1,2],"label":"jan"},{"p":[2,1],"x":[2,1]}]}"#;
        let d = load_dataset(json.as_bytes(), Format::Json).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.label(0), "jan");
        assert_eq!(d.label(1), "2");
    }

    #[test]
    fn json_rejects_nonfinite() {
        let json = r#"{"observations":[{"p":[1,2],"x":[1,2]}]}"#;
        assert!(load_dataset(json.as_bytes(), Format::Json).is_ok());
        let bad = r#"{"observations":[]}"#;
        assert!(matches!(
            load_dataset(bad.as_bytes(), Format::Json).unwrap_err(),
            DataError::MalformedInput(_)
        ));
    }

    #[test]
    fn expenditure_matrix_fig1a() {
        let e = expenditure_matrix(&fig1a());
        assert_eq!(e.values, vec![vec![5.0, 4.0], vec![4.0, 5.0]]);
    }

    #[test]
    fn expenditure_matrix_fig1b() {
        let e = expenditure_matrix(&fig1b());
        assert_eq!(e.values, vec![vec![2.0, 4.0], vec![4.0, 8.0]]);
    }

    #[test]
    fn expenditure_matrix_zero_bundle() {
        let d = Dataset::from_rows(&[(vec![1.0, 1.0], vec![0.0, 0.0])]).unwrap();
        let e = expenditure_matrix(&d);
        assert_eq!(e.values, vec![vec![0.0]]);
        assert_eq!(e.total_expenditure(), 0.0);
    }

    #[test]
    fn write_then_load_csv_is_identity() {
        let d = fig1a();
        let csv = write_dataset(&d, Format::Csv);
        let d2 = load_dataset(csv.as_bytes(), Format::Csv).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn write_then_load_json_is_identity() {
        let d = fig1b();
        let json = write_dataset(&d, Format::Json);
        let d2 = load_dataset(json.as_bytes(), Format::Json).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn content_hash_is_stable_and_sensitive() {
        let a = fig1a().content_hash();
        assert_eq!(a, fig1a().content_hash());
        assert_ne!(a, fig1b().content_hash());
        assert_eq!(a.len(), 64);
    }

    fn small_dataset() -> impl Strategy<Value = Dataset> {
        (1usize..5, 1usize..4).prop_flat_map(|(t, l)| {
            proptest::collection::vec(
                (
                    proptest::collection::vec(0.1f64..10.0, l..=l),
                    proptest::collection::vec(0.0f64..10.0, l..=l),
                ),
                t..=t,
            )
            .prop_map(|rows| Dataset::from_rows(&rows).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matrix_matches_independent_dot(d in small_dataset()) {
            let e = expenditure_matrix(&d);
            for t in 0..d.len() {
                for s in 0..d.len() {
                    // independent route: index-based accumulation in reverse
                    let mut expect = 0.0;
                    for l in (0..d.num_goods).rev() {
                        expect += d.price(t)[l] * d.bundle(s)[l];
                    }
                    let scale = expect.abs().max(1.0);
                    prop_assert!((e.at(t, s) - expect).abs() <= 1e-12 * scale);
                }
            }
        }

        #[test]
        fn price_scaling_scales_matrix(d in small_dataset(), lambda in 0.1f64..8.0) {
            let scaled_rows: Vec<(Vec<f64>, Vec<f64>)> = (0..d.len())
                .map(|t| {
                    (
                        d.price(t).iter().map(|p| p * lambda).collect(),
                        d.bundle(t).to_vec(),
                    )
                })
                .collect();
            let scaled = Dataset::from_rows(&scaled_rows).unwrap();
            let e = expenditure_matrix(&d);
            let es = expenditure_matrix(&scaled);
            for t in 0..d.len() {
                for s in 0..d.len() {
                    let expect = e.at(t, s) * lambda;
                    let scale = expect.abs().max(1.0);
                    prop_assert!((es.at(t, s) - expect).abs() <= 1e-12 * scale);
                }
            }
        }

        #[test]
        fn permuting_observations_permutes_matrix(d in small_dataset()) {
            let t_count = d.len();
            let rotated: Vec<(Vec<f64>, Vec<f64>)> = (0..t_count)
                .map(|t| {
                    let t2 = (t + 1) % t_count;
                    (d.price(t2).to_vec(), d.bundle(t2).to_vec())
                })
                .collect();
            let rot = Dataset::from_rows(&rotated).unwrap();
            let e = expenditure_matrix(&d);
            let er = expenditure_matrix(&rot);
            for t in 0..t_count {
                for s in 0..t_count {
                    prop_assert_eq!(er.at(t, s), e.at((t + 1) % t_count, (s + 1) % t_count));
                }
            }
        }
    }
}
