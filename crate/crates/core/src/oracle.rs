//! Brute-force verification paths: exhaustive direct-formula spectra for
//! small attribute counts, and a naive full-column-reshuffle null
//! distribution for cross-checking the margin-preserving table shuffler.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Mode;
use crate::data::{AttributeSet, Dataset, KwiiTarget};
use crate::error::{Error, Result};
use crate::info;
use crate::significance;
use crate::table::ContingencyTable;

/// Exact TCI/CACI/KWII for every subset up to order K, computed by the
/// direct formulas (no transform, no caching, no pruning).
#[derive(Debug, Clone, Default)]
pub struct OracleSpectra {
    /// TCI per attribute subset (|S| ≥ 2), non-class attributes only when
    /// a class is present.
    pub tci: BTreeMap<Vec<usize>, f64>,
    /// CACI per predictor subset (|S| ≥ 1), empty without a class.
    pub caci: BTreeMap<Vec<usize>, f64>,
    /// KWII per subset; with a class, keys are predictor subsets plus the
    /// class attribute.
    pub kwii: BTreeMap<Vec<usize>, f64>,
}

const ORACLE_ATTRIBUTE_LIMIT: usize = 12;

/// Every size-2..=K (or the given floor) subset of `pool`, in index order.
fn subsets_up_to(pool: &[usize], min: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let total = 1usize << pool.len();
    for mask in 1..total {
        let size = mask.count_ones() as usize;
        if size < min || size > max {
            continue;
        }
        out.push(
            (0..pool.len())
                .filter(|&b| mask & (1 << b) != 0)
                .map(|b| pool[b])
                .collect(),
        );
    }
    out.sort_by(|a, b| (a.len(), a.clone()).cmp(&(b.len(), b.clone())));
    out
}

/// Exhaustive exact spectra by direct formulas. `k` caps the displayed
/// combination order (class attribute included when `class` is given).
pub fn oracle_spectra(ds: &Dataset, k: usize, class: Option<usize>) -> Result<OracleSpectra> {
    if ds.attribute_count() > ORACLE_ATTRIBUTE_LIMIT {
        return Err(Error::invalid_config(format!(
            "exhaustive oracle is limited to {ORACLE_ATTRIBUTE_LIMIT} attributes, got {}",
            ds.attribute_count()
        )));
    }
    if k < 2 {
        return Err(Error::invalid_config("oracle order cap must be at least 2"));
    }
    if let Some(c) = class {
        if c >= ds.attribute_count() {
            return Err(Error::invalid_input("class index out of range"));
        }
    }
    let pool: Vec<usize> = (0..ds.attribute_count())
        .filter(|&a| Some(a) != class)
        .collect();
    let mut spectra = OracleSpectra::default();
    match class {
        None => {
            for subset in subsets_up_to(&pool, 2, k) {
                let set = AttributeSet::new(subset.clone())?;
                spectra.tci.insert(subset.clone(), info::tci(ds, &set)?);
                spectra
                    .kwii
                    .insert(subset, info::kwii(ds, &KwiiTarget::Set(set))?);
            }
        }
        Some(c) => {
            for subset in subsets_up_to(&pool, 1, k.saturating_sub(1)) {
                let set = AttributeSet::new(subset.clone())?;
                spectra.caci.insert(subset.clone(), info::caci(ds, &set, c)?);
                let with_class = set.with(c)?;
                spectra.kwii.insert(
                    with_class.indices().to_vec(),
                    info::kwii(ds, &KwiiTarget::Set(with_class))?,
                );
                if subset.len() >= 2 {
                    spectra.tci.insert(subset.clone(), info::tci(ds, &set)?);
                }
            }
        }
    }
    Ok(spectra)
}

/// Null distribution of KWII(s) under naive full-column reshuffles: the
/// shuffle attribute (same choice rule as the fast path) has its entire
/// column permuted and the metric is recomputed from raw data each round.
pub fn oracle_null(
    ds: &Dataset,
    s: &AttributeSet,
    mode: Mode,
    nperm: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let x = significance::choose_shuffle_axis(ds, s, mode)?;
    let axes = s.indices();
    let cards: Vec<u32> = axes.iter().map(|&a| ds.states(a)).collect();
    let cells: u64 = cards.iter().map(|&c| c as u64).product();
    if cells > 1_000_000 {
        return Err(Error::invalid_config(
            "naive reshuffle oracle is limited to 1e6 cells",
        ));
    }
    let mut strides = vec![1u64; axes.len()];
    for i in (0..axes.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * cards[i + 1] as u64;
    }
    let mut shuffled: Vec<u32> = ds.column(x).to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nulls = Vec::with_capacity(nperm as usize);
    for _ in 0..nperm {
        shuffled.shuffle(&mut rng);
        let mut counts = vec![0u64; cells as usize];
        for row in 0..ds.n() {
            let mut idx = 0u64;
            for (pos, &a) in axes.iter().enumerate() {
                let v = if a == x { shuffled[row] } else { ds.column(a)[row] };
                idx += v as u64 * strides[pos];
            }
            counts[idx as usize] += 1;
        }
        let table = ContingencyTable::from_counts(cards.clone(), counts)?;
        nulls.push(info::kwii_from_table(&table)?);
    }
    Ok(nulls)
}

/// Tail p-value of `observed` against a null sample: fraction of draws
/// greater than or equal to the observation.
pub fn null_pvalue(nulls: &[f64], observed: f64) -> f64 {
    if nulls.is_empty() {
        return 1.0;
    }
    nulls.iter().filter(|&&v| v >= observed).count() as f64 / nulls.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miner;
    use rand::Rng;

    fn random_dataset(seed: u64, m: usize, n: usize, max_card: u32) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let attributes: Vec<crate::data::Attribute> = (0..m)
            .map(|a| crate::data::Attribute {
                name: format!("A{a}"),
                states: rng.gen_range(2..=max_card),
            })
            .collect();
        let columns: Vec<Vec<u32>> = attributes
            .iter()
            .map(|attr| (0..n).map(|_| rng.gen_range(0..attr.states)).collect())
            .collect();
        Dataset::new(attributes, columns, None).unwrap()
    }

    #[test]
    fn oracle_tci_satisfies_the_kwii_sum_identity() {
        for seed in 0..5u64 {
            let ds = random_dataset(seed, 5, 300, 3);
            let spectra = oracle_spectra(&ds, 5, None).unwrap();
            for (subset, &t) in &spectra.tci {
                let sum: f64 = spectra
                    .kwii
                    .iter()
                    .filter(|(z, _)| z.iter().all(|a| subset.contains(a)))
                    .map(|(_, &v)| v)
                    .sum();
                assert!(
                    (t - sum).abs() < 1e-9,
                    "TCI {t} vs KWII subset sum {sum} on {subset:?}"
                );
            }
        }
    }

    #[test]
    fn oracle_caci_satisfies_the_class_kwii_sum_identity() {
        for seed in 0..5u64 {
            let mut ds = random_dataset(seed + 50, 5, 300, 3);
            let class = ds.attribute_count() - 1;
            ds = Dataset::new(
                (0..ds.attribute_count())
                    .map(|a| ds.attribute(a).clone())
                    .collect(),
                (0..ds.attribute_count())
                    .map(|a| ds.column(a).to_vec())
                    .collect(),
                Some(class),
            )
            .unwrap();
            let spectra = oracle_spectra(&ds, 5, Some(class)).unwrap();
            for (subset, &v) in &spectra.caci {
                let sum: f64 = spectra
                    .kwii
                    .iter()
                    .filter(|(z, _)| {
                        z.iter()
                            .all(|a| subset.contains(a) || *a == class)
                    })
                    .map(|(_, &val)| val)
                    .sum();
                assert!(
                    (v - sum).abs() < 1e-9,
                    "CACI {v} vs class-KWII sum {sum} on {subset:?}"
                );
            }
        }
    }

    #[test]
    fn oracle_kwii_matches_the_interaction_transform() {
        for seed in 0..3u64 {
            let ds = random_dataset(seed + 100, 6, 500, 2);
            let nu: Vec<usize> = (0..6).collect();
            let transform = miner::iim(&ds, &nu, 4).unwrap();
            let spectra = oracle_spectra(&ds, 4, None).unwrap();
            for (subset, &value) in &transform {
                let direct = spectra.kwii[subset];
                assert!(
                    (value - direct).abs() < 1e-9,
                    "transform {value} vs oracle {direct} on {subset:?}"
                );
            }
        }
    }

    #[test]
    fn oracle_rejects_oversized_inputs() {
        let ds = random_dataset(1, 13, 50, 2);
        assert!(oracle_spectra(&ds, 3, None).is_err());
    }

    #[test]
    fn naive_null_is_centered_near_zero_for_independent_data() {
        let ds = random_dataset(2, 3, 400, 2);
        let s = AttributeSet::new(vec![0, 1, 2]).unwrap();
        let nulls = oracle_null(&ds, &s, Mode::Unsupervised, 200, 7).unwrap();
        assert_eq!(nulls.len(), 200);
        let mean = nulls.iter().sum::<f64>() / nulls.len() as f64;
        assert!(mean.abs() < 0.05, "null mean = {mean}");
        // A strong synergy lands far in the right tail of its own null.
        let synergy = {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let n = 400;
            let b: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let c: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let a: Vec<u32> = b.iter().zip(&c).map(|(x, y)| x ^ y).collect();
            Dataset::new(
                vec![
                    crate::data::Attribute { name: "A".into(), states: 2 },
                    crate::data::Attribute { name: "B".into(), states: 2 },
                    crate::data::Attribute { name: "C".into(), states: 2 },
                ],
                vec![a, b, c],
                None,
            )
            .unwrap()
        };
        let observed = info::kwii(
            &synergy,
            &KwiiTarget::Set(AttributeSet::new(vec![0, 1, 2]).unwrap()),
        )
        .unwrap();
        let nulls = oracle_null(&synergy, &s, Mode::Unsupervised, 300, 11).unwrap();
        assert_eq!(null_pvalue(&nulls, observed), 0.0);
    }
}
