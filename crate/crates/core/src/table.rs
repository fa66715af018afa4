//! Contingency tables over discrete attributes and entropy from counts.
//!
//! Tables are stored either densely (`Vec<u64>` indexed by the row-major
//! linear cell index) or sparsely (`BTreeMap` from linear cell index to
//! count). The storage choice is by total cell count only; every numeric
//! result is bit-identical between the two storages because both iterate the
//! non-zero cells in ascending linear-index order and all accumulation into
//! cells is integer arithmetic.
//!
//! Entropy is computed in bits from maximum-likelihood probabilities
//! `c / N` as
//!
//! ```text
//! H = log2(N) - (1/N) * sum_over_nonzero_cells c * log2(c)
//! ```
//!
//! with the sum carried by compensated (Neumaier) summation so that results
//! are stable to the ~1e-12 bit tolerances used throughout the crate.

use std::collections::BTreeMap;

use crate::data::{AttributeSet, Dataset};
use crate::error::{Error, Result};

/// Cell-count threshold up to which tables are stored densely.
pub const DEFAULT_DENSE_LIMIT: u64 = 10_000_000;

/// Compensated (Neumaier variant of Kahan) floating-point accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    /// A fresh accumulator at zero.
    pub fn new() -> Self {
        KahanSum::default()
    }

    /// Adds one term.
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// The compensated total.
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Dense(Vec<u64>),
    Sparse(BTreeMap<u64, u64>),
}

/// A contingency table over one or more discrete axes.
///
/// Axis order is the order in which attribute indices were supplied at
/// construction; the linear cell index is row-major with the **last axis
/// fastest**.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    /// Declared cardinality of each axis.
    cards: Vec<u32>,
    /// Row-major strides (last axis has stride 1).
    strides: Vec<u64>,
    storage: Storage,
    /// Sum of all counts (number of rows tallied).
    total: u64,
    /// Dense-storage threshold carried to derived (marginal) tables.
    dense_limit: u64,
}

fn strides_for(cards: &[u32]) -> Result<(Vec<u64>, u64)> {
    let mut cells: u128 = 1;
    for &c in cards {
        cells = cells.checked_mul(c as u128).ok_or_else(|| {
            Error::TableTooLarge(format!("cell count overflows for cardinalities {cards:?}"))
        })?;
    }
    if cells > u64::MAX as u128 {
        return Err(Error::TableTooLarge(format!(
            "{cells} cells exceed addressable sparse key space"
        )));
    }
    let mut strides = vec![1u64; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * cards[i + 1] as u64;
    }
    Ok((strides, cells as u64))
}

impl ContingencyTable {
    /// Tallies the joint distribution of the attributes in `set` (axes in
    /// increasing attribute-index order).
    pub fn from_dataset(ds: &Dataset, set: &AttributeSet) -> Result<Self> {
        Self::from_dataset_with_limit(ds, set.indices(), DEFAULT_DENSE_LIMIT)
    }

    /// Tallies the joint distribution of `axes` (distinct attribute indices,
    /// any order; the table's axis order follows `axes`).
    pub fn from_dataset_axes(ds: &Dataset, axes: &[usize]) -> Result<Self> {
        Self::from_dataset_with_limit(ds, axes, DEFAULT_DENSE_LIMIT)
    }

    /// As [`ContingencyTable::from_dataset_axes`] with an explicit dense
    /// storage threshold. Tables with more than `dense_limit` cells use
    /// sparse storage. Exposed so tests can force either representation and
    /// verify bit-identical results.
    pub fn from_dataset_with_limit(
        ds: &Dataset,
        axes: &[usize],
        dense_limit: u64,
    ) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::invalid_input("table needs at least one axis"));
        }
        {
            let mut sorted = axes.to_vec();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid_input(format!("duplicate axis in {axes:?}")));
            }
        }
        for &a in axes {
            if a >= ds.attribute_count() {
                return Err(Error::invalid_input(format!("attribute index {a} out of range")));
            }
        }
        let cards: Vec<u32> = axes.iter().map(|&a| ds.states(a)).collect();
        let (strides, cells) = strides_for(&cards)?;
        let total = ds.n() as u64;
        let columns: Vec<&[u32]> = axes.iter().map(|&a| ds.column(a)).collect();
        let storage = if cells <= dense_limit {
            let mut counts = vec![0u64; cells as usize];
            for r in 0..ds.n() {
                let mut idx = 0u64;
                for (k, col) in columns.iter().enumerate() {
                    idx += col[r] as u64 * strides[k];
                }
                counts[idx as usize] += 1;
            }
            Storage::Dense(counts)
        } else {
            let mut counts = BTreeMap::new();
            for r in 0..ds.n() {
                let mut idx = 0u64;
                for (k, col) in columns.iter().enumerate() {
                    idx += col[r] as u64 * strides[k];
                }
                *counts.entry(idx).or_insert(0u64) += 1;
            }
            Storage::Sparse(counts)
        };
        Ok(ContingencyTable { cards, strides, storage, total, dense_limit })
    }

    /// Builds a table directly from dense row-major counts (axis cards given).
    pub fn from_counts(cards: Vec<u32>, counts: Vec<u64>) -> Result<Self> {
        let (strides, cells) = strides_for(&cards)?;
        if counts.len() as u64 != cells {
            return Err(Error::invalid_input(format!(
                "{} counts supplied for a table of {} cells",
                counts.len(),
                cells
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::invalid_input("table total must be positive"));
        }
        Ok(ContingencyTable {
            cards,
            strides,
            storage: Storage::Dense(counts),
            total,
            dense_limit: DEFAULT_DENSE_LIMIT,
        })
    }

    /// Number of axes.
    pub fn axis_count(&self) -> usize {
        self.cards.len()
    }

    /// Declared cardinalities per axis.
    pub fn cards(&self) -> &[u32] {
        &self.cards
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// True when the table is held in dense storage.
    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Visits every non-zero cell as `(linear_index, count)` in ascending
    /// linear-index order. Both storages guarantee this order, which makes
    /// floating-point reductions over cells storage-independent.
    pub fn for_each_nonzero(&self, mut f: impl FnMut(u64, u64)) {
        match &self.storage {
            Storage::Dense(v) => {
                for (i, &c) in v.iter().enumerate() {
                    if c > 0 {
                        f(i as u64, c);
                    }
                }
            }
            Storage::Sparse(m) => {
                for (&i, &c) in m.iter() {
                    if c > 0 {
                        f(i, c);
                    }
                }
            }
        }
    }

    /// Number of cells with a non-zero count: the *observed* joint
    /// cardinality of the axes, used for degrees of freedom.
    pub fn observed_joint_states(&self) -> u64 {
        let mut n = 0u64;
        self.for_each_nonzero(|_, _| n += 1);
        n
    }

    /// Decodes a linear cell index into per-axis state codes.
    pub fn decode(&self, linear: u64) -> Vec<u32> {
        let mut rem = linear;
        self.strides
            .iter()
            .map(|&s| {
                let v = rem / s;
                rem %= s;
                v as u32
            })
            .collect()
    }

    /// The count in one cell addressed by per-axis state codes.
    pub fn count_at(&self, codes: &[u32]) -> u64 {
        assert_eq!(codes.len(), self.cards.len());
        let idx: u64 =
            codes.iter().zip(&self.strides).map(|(&v, &s)| v as u64 * s).sum();
        match &self.storage {
            Storage::Dense(v) => v[idx as usize],
            Storage::Sparse(m) => m.get(&idx).copied().unwrap_or(0),
        }
    }

    /// Joint entropy over **all** axes, in bits.
    pub fn entropy(&self) -> f64 {
        let n = self.total as f64;
        let mut acc = KahanSum::new();
        self.for_each_nonzero(|_, c| {
            let cf = c as f64;
            acc.add(cf * cf.log2());
        });
        n.log2() - acc.total() / n
    }

    /// The marginal table over a subset of axes (positions into this table's
    /// axis list, in the order given). Counts are accumulated in integer
    /// arithmetic, so marginal entropies are also storage-independent.
    pub fn marginal(&self, axis_positions: &[usize]) -> Result<ContingencyTable> {
        if axis_positions.is_empty() {
            return Err(Error::invalid_input("marginal needs at least one axis"));
        }
        for &p in axis_positions {
            if p >= self.cards.len() {
                return Err(Error::invalid_input(format!("axis position {p} out of range")));
            }
        }
        let cards: Vec<u32> = axis_positions.iter().map(|&p| self.cards[p]).collect();
        let (strides, cells) = strides_for(&cards)?;
        let src_strides: Vec<u64> = axis_positions.iter().map(|&p| self.strides[p]).collect();
        let src_cards: Vec<u64> =
            axis_positions.iter().map(|&p| self.cards[p] as u64).collect();
        let map_index = |linear: u64| -> u64 {
            let mut out = 0u64;
            for k in 0..src_strides.len() {
                let code = (linear / src_strides[k]) % src_cards[k];
                out += code * strides[k];
            }
            out
        };
        let storage = if cells <= self.dense_limit {
            let mut counts = vec![0u64; cells as usize];
            self.for_each_nonzero(|i, c| counts[map_index(i) as usize] += c);
            Storage::Dense(counts)
        } else {
            let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
            self.for_each_nonzero(|i, c| *counts.entry(map_index(i)).or_insert(0) += c);
            Storage::Sparse(counts)
        };
        Ok(ContingencyTable {
            cards,
            strides,
            storage,
            total: self.total,
            dense_limit: self.dense_limit,
        })
    }

    /// Entropy of the marginal over the given axis positions, in bits.
    pub fn marginal_entropy(&self, axis_positions: &[usize]) -> Result<f64> {
        Ok(self.marginal(axis_positions)?.entropy())
    }

    /// Exports the table as a dense row-major count vector (small tables
    /// only; used by the permutation machinery).
    pub fn to_dense_counts(&self) -> Result<Vec<u64>> {
        let (_, cells) = strides_for(&self.cards)?;
        if cells > DEFAULT_DENSE_LIMIT {
            return Err(Error::TableTooLarge(format!(
                "{cells} cells too many for a dense export"
            )));
        }
        let mut out = vec![0u64; cells as usize];
        self.for_each_nonzero(|i, c| out[i as usize] = c);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Attribute;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn dataset(cols: Vec<(&str, u32, Vec<u32>)>) -> Dataset {
        let attributes = cols
            .iter()
            .map(|(n, s, _)| Attribute { name: (*n).into(), states: *s })
            .collect();
        let columns = cols.into_iter().map(|(_, _, c)| c).collect();
        Dataset::new(attributes, columns, None).unwrap()
    }

    #[test]
    fn tally_counts() {
        // Rows: (0,0) x3, (0,1) x1, (1,1) x2.
        let ds = dataset(vec![
            ("A", 2, vec![0, 0, 0, 0, 1, 1]),
            ("B", 2, vec![0, 0, 0, 1, 1, 1]),
        ]);
        let t = ContingencyTable::from_dataset(&ds, &AttributeSet::new(vec![0, 1]).unwrap())
            .unwrap();
        assert_eq!(t.total(), 6);
        assert_eq!(t.count_at(&[0, 0]), 3);
        assert_eq!(t.count_at(&[0, 1]), 1);
        assert_eq!(t.count_at(&[1, 0]), 0);
        assert_eq!(t.count_at(&[1, 1]), 2);
        assert_eq!(t.observed_joint_states(), 3);
    }

    #[test]
    fn entropy_of_half_quarter_quarter_is_exactly_1_5_bits() {
        // Counts (50, 25, 25): H = 0.5*1 + 0.25*2 + 0.25*2 = 1.5 bits.
        let t = ContingencyTable::from_counts(vec![3], vec![50, 25, 25]).unwrap();
        assert_eq!(t.entropy(), 1.5);
    }

    #[test]
    fn entropy_edge_cases() {
        // Uniform binary: exactly 1 bit.
        let t = ContingencyTable::from_counts(vec![2], vec![64, 64]).unwrap();
        assert_eq!(t.entropy(), 1.0);
        // Deterministic: exactly 0 bits.
        let t = ContingencyTable::from_counts(vec![2], vec![100, 0]).unwrap();
        assert_eq!(t.entropy(), 0.0);
        // Count 1 cells contribute log2(1) = 0 to the correction sum.
        let t = ContingencyTable::from_counts(vec![4], vec![1, 1, 1, 1]).unwrap();
        assert_eq!(t.entropy(), 2.0);
    }

    #[test]
    fn duplicated_attribute_pair_is_diagonal() {
        let ds = dataset(vec![
            ("A", 2, vec![0, 1, 0, 1]),
            ("B", 2, vec![0, 1, 0, 1]), // exact copy of A
        ]);
        let t = ContingencyTable::from_dataset(&ds, &AttributeSet::new(vec![0, 1]).unwrap())
            .unwrap();
        assert_eq!(t.count_at(&[0, 1]), 0);
        assert_eq!(t.count_at(&[1, 0]), 0);
        // Joint entropy equals the single-attribute entropy.
        assert_eq!(t.entropy(), t.marginal(&[0]).unwrap().entropy());
    }

    #[test]
    fn dense_and_sparse_storages_are_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = 257;
            let cards = [3u32, 4, 2, 5];
            let cols: Vec<(&str, u32, Vec<u32>)> = vec![
                ("A", cards[0], (0..n).map(|_| rng.gen_range(0..cards[0])).collect()),
                ("B", cards[1], (0..n).map(|_| rng.gen_range(0..cards[1])).collect()),
                ("C", cards[2], (0..n).map(|_| rng.gen_range(0..cards[2])).collect()),
                ("D", cards[3], (0..n).map(|_| rng.gen_range(0..cards[3])).collect()),
            ];
            let ds = dataset(cols);
            let axes = [0usize, 1, 2, 3];
            let dense =
                ContingencyTable::from_dataset_with_limit(&ds, &axes, DEFAULT_DENSE_LIMIT)
                    .unwrap();
            let sparse = ContingencyTable::from_dataset_with_limit(&ds, &axes, 1).unwrap();
            assert!(dense.is_dense());
            assert!(!sparse.is_dense());
            assert_eq!(dense.entropy().to_bits(), sparse.entropy().to_bits());
            assert_eq!(
                dense.observed_joint_states(),
                sparse.observed_joint_states()
            );
            // Marginals over every non-empty subset of axes agree bitwise.
            for mask in 1u32..16 {
                let pos: Vec<usize> = (0..4).filter(|k| mask >> k & 1 == 1).collect();
                let hd = dense.marginal_entropy(&pos).unwrap();
                let hs = sparse.marginal_entropy(&pos).unwrap();
                assert_eq!(hd.to_bits(), hs.to_bits());
            }
        }
    }

    #[test]
    fn marginal_matches_direct_tally() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 300;
        let ds = dataset(vec![
            ("A", 3, (0..n).map(|_| rng.gen_range(0..3)).collect()),
            ("B", 2, (0..n).map(|_| rng.gen_range(0..2)).collect()),
            ("C", 4, (0..n).map(|_| rng.gen_range(0..4)).collect()),
        ]);
        let full = ContingencyTable::from_dataset(&ds, &AttributeSet::new(vec![0, 1, 2]).unwrap())
            .unwrap();
        let marg = full.marginal(&[0, 2]).unwrap();
        let direct =
            ContingencyTable::from_dataset(&ds, &AttributeSet::new(vec![0, 2]).unwrap()).unwrap();
        for a in 0..3 {
            for c in 0..4 {
                assert_eq!(marg.count_at(&[a, c]), direct.count_at(&[a, c]));
            }
        }
        assert_eq!(marg.entropy().to_bits(), direct.entropy().to_bits());
    }

    #[test]
    fn decode_roundtrip() {
        let t = ContingencyTable::from_counts(vec![3, 2, 4], (1..=24).collect()).unwrap();
        for lin in 0..24u64 {
            let codes = t.decode(lin);
            assert_eq!(t.count_at(&codes), lin + 1);
        }
    }

    #[test]
    fn kahan_sum_is_more_accurate_than_naive() {
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        assert!((acc.total() - (1.0 + 1e-12)).abs() < 1e-15);
    }
}
