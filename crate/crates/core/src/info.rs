//! Exact information metrics: entropy, TCI, CACI, and KWII.
//!
//! All values are in bits and use maximum-likelihood probabilities
//! (`count / N`, no smoothing); `0 · log 0` is treated as 0. Summations over
//! entropy terms are compensated so the decomposition identities hold to
//! `1e-9` bits:
//!
//! * `TCI(S) = Σ_{Z ⊆ S, |Z| ≥ 2} KWII(Z)`
//! * `CACI(S;C) = Σ_{Z ⊆ S, |Z| ≥ 1} KWII(Z ∪ {C})`

use crate::data::{AttributeSet, Dataset, KwiiTarget};
use crate::error::{Error, Result};
use crate::table::{ContingencyTable, KahanSum};

/// An information quantity in bits. Entropy, TCI and CACI are nonnegative
/// (within numerical tolerance); KWII may take either sign.
pub type InfoValue = f64;

/// Builds the joint contingency table of the attributes in `s`.
///
/// Axes follow the set's (increasing) index order; the table is the
/// sufficient statistic for every metric below.
pub fn build_table(dataset: &Dataset, s: &AttributeSet) -> Result<ContingencyTable> {
    ContingencyTable::from_dataset(dataset, s)
}

/// Shannon entropy, in bits, of the marginal of `table` over the given axis
/// positions. An empty axis list denotes the entropy of the empty set,
/// which is 0.
pub fn entropy(table: &ContingencyTable, axes: &[usize]) -> Result<InfoValue> {
    if table.total() == 0 {
        return Err(Error::invalid_input("entropy of an empty table is undefined"));
    }
    if axes.is_empty() {
        return Ok(0.0);
    }
    if axes.len() == table.axis_count() && axes.iter().enumerate().all(|(i, &a)| i == a) {
        return Ok(table.entropy());
    }
    table.marginal_entropy(axes)
}

/// Total correlation information `TCI(S) = Σ_i H(A_i) − H(S)` in bits.
///
/// Nonnegative and monotone nondecreasing under superset extension.
/// Requires `|S| ≥ 2`.
pub fn tci(dataset: &Dataset, s: &AttributeSet) -> Result<InfoValue> {
    if s.len() < 2 {
        return Err(Error::invalid_input("TCI requires at least two attributes"));
    }
    let table = build_table(dataset, s)?;
    let mut acc = KahanSum::new();
    for pos in 0..s.len() {
        acc.add(table.marginal_entropy(&[pos])?);
    }
    acc.add(-table.entropy());
    Ok(acc.total())
}

/// Class-associated correlation information
/// `CACI(S;C) = H(S) + H(C) − H(S,C) = H(C) − H(C|S)` in bits.
///
/// Nonnegative, monotone in `S`, and satisfies the chain identity
/// `TCI(S ∪ {C}) = TCI(S) + CACI(S;C)`. `S` may be a single attribute;
/// the class must not be a member of `S`.
pub fn caci(dataset: &Dataset, s: &AttributeSet, class: usize) -> Result<InfoValue> {
    if s.contains(class) {
        return Err(Error::invalid_input("class attribute must not be a member of S"));
    }
    let joint = s.with(class)?;
    let table = build_table(dataset, &joint)?;
    let class_pos = joint.indices().iter().position(|&i| i == class).unwrap();
    let s_pos: Vec<usize> =
        (0..joint.len()).filter(|&p| p != class_pos).collect();
    let mut acc = KahanSum::new();
    acc.add(table.marginal_entropy(&s_pos)?);
    acc.add(table.marginal_entropy(&[class_pos])?);
    acc.add(-table.entropy());
    Ok(acc.total())
}

/// Sign of the `H(τ)` term in the KWII alternating sum for a sub-list of
/// size `subset_len` within a list of size `set_len`:
/// `KWII(S) = −Σ_{τ⊆S} (−1)^{|S\τ|} H(τ)`.
pub fn kwii_term_sign(set_len: usize, subset_len: usize) -> f64 {
    if (set_len - subset_len) % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

/// K-way interaction information, in bits.
///
/// `KWII(S) = −Σ_{τ⊆S} (−1)^{|S\τ|} H(τ)`, the alternating
/// inclusion-exclusion over all sub-lists of `S`. For two attributes this is
/// the mutual information (≥ 0); for three or more the sign distinguishes
/// synergy (positive) from redundancy (negative).
///
/// Repeated members are meaningful: the [`KwiiTarget::RedundancyTriple`]
/// form `(A_i; A_j; A_j)` keeps the two copies of `A_j` distinguishable, so
/// its eight sub-list terms are written out explicitly below; the value
/// reduces to `−MI(A_i; A_j)`.
pub fn kwii(dataset: &Dataset, target: &KwiiTarget) -> Result<InfoValue> {
    match target {
        KwiiTarget::Set(s) => {
            if s.len() < 2 {
                return Err(Error::invalid_input("KWII requires at least two members"));
            }
            let table = build_table(dataset, s)?;
            kwii_from_table(&table)
        }
        KwiiTarget::RedundancyTriple { first, second } => {
            if first == second {
                return Err(Error::invalid_input(
                    "redundancy triple requires two distinct attributes",
                ));
            }
            let table = ContingencyTable::from_dataset_axes(dataset, &[*first, *second])?;
            let h_i = table.marginal_entropy(&[0])?;
            let h_j = table.marginal_entropy(&[1])?;
            let h_ij = table.entropy();
            // S = (A_i; A_j; A_j'), |S| = 3 with A_j' a duplicate of A_j.
            // Sub-lists and their entropies: {} → 0, {A_i} → H(A_i),
            // {A_j} and {A_j'} → H(A_j), {A_i,A_j} and {A_i,A_j'} → H(A_i,A_j),
            // {A_j,A_j'} → H(A_j), {A_i,A_j,A_j'} → H(A_i,A_j).
            let mut acc = KahanSum::new();
            acc.add(kwii_term_sign(3, 1) * h_i);
            acc.add(kwii_term_sign(3, 1) * h_j);
            acc.add(kwii_term_sign(3, 1) * h_j);
            acc.add(kwii_term_sign(3, 2) * h_ij);
            acc.add(kwii_term_sign(3, 2) * h_ij);
            acc.add(kwii_term_sign(3, 2) * h_j);
            acc.add(kwii_term_sign(3, 3) * h_ij);
            Ok(acc.total())
        }
    }
}

/// KWII of all axes of an already-built joint table (distinct members).
pub fn kwii_from_table(table: &ContingencyTable) -> Result<InfoValue> {
    let k = table.axis_count();
    if k < 2 {
        return Err(Error::invalid_input("KWII requires at least two members"));
    }
    let mut acc = KahanSum::new();
    for mask in 1u32..(1u32 << k) {
        let axes: Vec<usize> = (0..k).filter(|&a| mask >> a & 1 == 1).collect();
        let h = if axes.len() == k {
            table.entropy()
        } else {
            table.marginal_entropy(&axes)?
        };
        acc.add(kwii_term_sign(k, axes.len()) * h);
    }
    Ok(acc.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Attribute;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn dataset(cols: Vec<(&str, u32, Vec<u32>)>) -> Dataset {
        let attributes = cols
            .iter()
            .map(|(n, s, _)| Attribute { name: (*n).into(), states: *s })
            .collect();
        let columns = cols.into_iter().map(|(_, _, c)| c).collect();
        Dataset::new(attributes, columns, None).unwrap()
    }

    fn set(ix: &[usize]) -> AttributeSet {
        AttributeSet::new(ix.to_vec()).unwrap()
    }

    /// Two exactly independent uniform binary attributes (product counts).
    fn independent_pair() -> Dataset {
        dataset(vec![
            ("A", 2, vec![0, 0, 1, 1]),
            ("B", 2, vec![0, 1, 0, 1]),
        ])
    }

    /// XOR triple: A1 = A2 ⊕ A3 with (A2, A3) uniform over all four combos.
    fn xor_triple() -> Dataset {
        dataset(vec![
            ("A1", 2, vec![0, 1, 1, 0]),
            ("A2", 2, vec![0, 0, 1, 1]),
            ("A3", 2, vec![0, 1, 0, 1]),
        ])
    }

    #[test]
    fn entropy_marginals_and_empty_axes() {
        let ds = independent_pair();
        let t = build_table(&ds, &set(&[0, 1])).unwrap();
        assert_eq!(entropy(&t, &[]).unwrap(), 0.0);
        assert_eq!(entropy(&t, &[0]).unwrap(), 1.0);
        assert_eq!(entropy(&t, &[1]).unwrap(), 1.0);
        assert_eq!(entropy(&t, &[0, 1]).unwrap(), 2.0);
    }

    #[test]
    fn tci_independent_pair_is_zero() {
        assert_eq!(tci(&independent_pair(), &set(&[0, 1])).unwrap(), 0.0);
    }

    #[test]
    fn tci_xor_triple_is_one_bit() {
        // ΣH = 3, H(joint) = 2, so TCI = 1 exactly.
        assert_eq!(tci(&xor_triple(), &set(&[0, 1, 2])).unwrap(), 1.0);
    }

    #[test]
    fn tci_duplicated_pair_is_one_bit() {
        let ds = dataset(vec![
            ("A", 2, vec![0, 1, 0, 1]),
            ("A2", 2, vec![0, 1, 0, 1]),
        ]);
        assert_eq!(tci(&ds, &set(&[0, 1])).unwrap(), 1.0);
    }

    #[test]
    fn tci_rejects_singletons() {
        assert!(tci(&independent_pair(), &set(&[0])).is_err());
    }

    #[test]
    fn caci_independent_class_is_zero() {
        // C independent of A with exact product counts.
        let ds = dataset(vec![
            ("A", 2, vec![0, 0, 1, 1]),
            ("C", 2, vec![0, 1, 0, 1]),
        ]);
        assert_eq!(caci(&ds, &set(&[0]), 1).unwrap(), 0.0);
    }

    #[test]
    fn caci_copy_class_is_one_bit() {
        let ds = dataset(vec![
            ("A", 2, vec![0, 1, 0, 1]),
            ("C", 2, vec![0, 1, 0, 1]),
        ]);
        assert_eq!(caci(&ds, &set(&[0]), 1).unwrap(), 1.0);
    }

    #[test]
    fn caci_pure_epistasis_xor_class() {
        // C = A1 ⊕ A2: the pair carries 1 bit about C, each single carries 0.
        let ds = dataset(vec![
            ("A1", 2, vec![0, 0, 1, 1]),
            ("A2", 2, vec![0, 1, 0, 1]),
            ("C", 2, vec![0, 1, 1, 0]),
        ]);
        assert_eq!(caci(&ds, &set(&[0, 1]), 2).unwrap(), 1.0);
        assert_eq!(caci(&ds, &set(&[0]), 2).unwrap(), 0.0);
        assert_eq!(caci(&ds, &set(&[1]), 2).unwrap(), 0.0);
    }

    #[test]
    fn caci_rejects_class_in_s() {
        let ds = independent_pair();
        assert!(caci(&ds, &set(&[0, 1]), 1).is_err());
    }

    #[test]
    fn kwii_independent_pair_is_zero() {
        let v = kwii(&independent_pair(), &KwiiTarget::Set(set(&[0, 1]))).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn kwii_bivariate_equals_mutual_information_and_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = 200;
            let ds = dataset(vec![
                ("A", 3, (0..n).map(|_| rng.gen_range(0..3)).collect()),
                ("B", 2, (0..n).map(|_| rng.gen_range(0..2)).collect()),
            ]);
            let v = kwii(&ds, &KwiiTarget::Set(set(&[0, 1]))).unwrap();
            let mi = caci(&ds, &set(&[0]), 1).unwrap();
            assert!((v - mi).abs() < TOL);
            assert!(v >= -TOL);
        }
    }

    #[test]
    fn kwii_xor_triple_is_plus_one_bit() {
        // Singles contribute −3, pairs +6, the full set −2: KWII = +1.
        let v = kwii(&xor_triple(), &KwiiTarget::Set(set(&[0, 1, 2]))).unwrap();
        assert!((v - 1.0).abs() < TOL);
    }

    #[test]
    fn kwii_four_way_parity_is_plus_one_bit() {
        // A1 = A2 ⊕ A3 ⊕ A4 over all 8 input combos:
        // +ΣH1 − ΣH2 + ΣH3 − H4 = 4 − 12 + 12 − 3 = +1.
        let mut cols: Vec<Vec<u32>> = vec![vec![]; 4];
        for b in 0..8u32 {
            let (x2, x3, x4) = (b & 1, (b >> 1) & 1, (b >> 2) & 1);
            cols[0].push(x2 ^ x3 ^ x4);
            cols[1].push(x2);
            cols[2].push(x3);
            cols[3].push(x4);
        }
        let ds = dataset(vec![
            ("A1", 2, cols[0].clone()),
            ("A2", 2, cols[1].clone()),
            ("A3", 2, cols[2].clone()),
            ("A4", 2, cols[3].clone()),
        ]);
        let v = kwii(&ds, &KwiiTarget::Set(set(&[0, 1, 2, 3]))).unwrap();
        assert!((v - 1.0).abs() < TOL);
    }

    #[test]
    fn kwii_redundancy_triple_of_copies_is_minus_one_bit() {
        let ds = dataset(vec![
            ("A", 2, vec![0, 1, 0, 1]),
            ("B", 2, vec![0, 1, 0, 1]),
        ]);
        let v = kwii(&ds, &KwiiTarget::RedundancyTriple { first: 0, second: 1 }).unwrap();
        assert!((v + 1.0).abs() < TOL);
    }

    #[test]
    fn kwii_redundancy_triple_equals_negated_mutual_information() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let n = 150;
            let ds = dataset(vec![
                ("A", 3, (0..n).map(|_| rng.gen_range(0..3)).collect()),
                ("B", 4, (0..n).map(|_| rng.gen_range(0..4)).collect()),
            ]);
            let v =
                kwii(&ds, &KwiiTarget::RedundancyTriple { first: 0, second: 1 }).unwrap();
            let mi = kwii(&ds, &KwiiTarget::Set(set(&[0, 1]))).unwrap();
            assert!((v + mi).abs() < TOL);
        }
    }

    fn random_dataset(rng: &mut ChaCha8Rng, attrs: usize, n: usize) -> Dataset {
        let cols: Vec<(String, u32, Vec<u32>)> = (0..attrs)
            .map(|a| {
                let card = rng.gen_range(2..=4u32);
                let col = (0..n).map(|_| rng.gen_range(0..card)).collect();
                (format!("A{a}"), card, col)
            })
            .collect();
        let attributes = cols
            .iter()
            .map(|(n, s, _)| Attribute { name: n.clone(), states: *s })
            .collect();
        let columns = cols.into_iter().map(|(_, _, c)| c).collect();
        Dataset::new(attributes, columns, None).unwrap()
    }

    #[test]
    fn tci_decomposes_into_kwii_sum_over_subsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let ds = random_dataset(&mut rng, 5, 120);
            let s = set(&[0, 1, 2, 3, 4]);
            let t = tci(&ds, &s).unwrap();
            let mut sum = KahanSum::new();
            for mask in 1u32..32 {
                if mask.count_ones() >= 2 {
                    let ix: Vec<usize> = (0..5).filter(|&a| mask >> a & 1 == 1).collect();
                    sum.add(kwii(&ds, &KwiiTarget::Set(set(&ix))).unwrap());
                }
            }
            assert!(
                (t - sum.total()).abs() < TOL,
                "TCI {} != KWII sum {}",
                t,
                sum.total()
            );
        }
    }

    #[test]
    fn caci_decomposes_into_class_kwii_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..5 {
            let ds = random_dataset(&mut rng, 4, 120);
            let class = 3usize;
            let s = set(&[0, 1, 2]);
            let v = caci(&ds, &s, class).unwrap();
            let mut sum = KahanSum::new();
            for mask in 1u32..8 {
                let mut ix: Vec<usize> = (0..3).filter(|&a| mask >> a & 1 == 1).collect();
                ix.push(class);
                sum.add(kwii(&ds, &KwiiTarget::Set(set(&ix))).unwrap());
            }
            assert!((v - sum.total()).abs() < TOL);
        }
    }

    #[test]
    fn chain_identity_tci_with_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let ds = random_dataset(&mut rng, 4, 150);
            let s = set(&[0, 1, 2]);
            let with_c = set(&[0, 1, 2, 3]);
            let lhs = tci(&ds, &with_c).unwrap();
            let rhs = tci(&ds, &s).unwrap() + caci(&ds, &s, 3).unwrap();
            assert!((lhs - rhs).abs() < TOL);
        }
    }

    #[test]
    fn monotonicity_under_extension() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..5 {
            let ds = random_dataset(&mut rng, 5, 200);
            let small = set(&[0, 1]);
            let mid = set(&[0, 1, 2]);
            let big = set(&[0, 1, 2, 3]);
            let t2 = tci(&ds, &small).unwrap();
            let t3 = tci(&ds, &mid).unwrap();
            let t4 = tci(&ds, &big).unwrap();
            assert!(t2 <= t3 + TOL && t3 <= t4 + TOL);
            let c1 = caci(&ds, &set(&[0]), 4).unwrap();
            let c2 = caci(&ds, &small, 4).unwrap();
            let c3 = caci(&ds, &mid, 4).unwrap();
            assert!(c1 <= c2 + TOL && c2 <= c3 + TOL);
        }
    }

    #[test]
    fn metrics_invariant_under_axis_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let ds = random_dataset(&mut rng, 3, 100);
        let t_fwd = ContingencyTable::from_dataset_axes(&ds, &[0, 1, 2]).unwrap();
        let t_rev = ContingencyTable::from_dataset_axes(&ds, &[2, 1, 0]).unwrap();
        assert!((t_fwd.entropy() - t_rev.entropy()).abs() < 1e-12);
        assert!(
            (kwii_from_table(&t_fwd).unwrap() - kwii_from_table(&t_rev).unwrap()).abs()
                < 1e-12
        );
        // Marginal over axis 0 of the forward table = axis 2 of the reversed.
        assert!(
            (t_fwd.marginal_entropy(&[0]).unwrap() - t_rev.marginal_entropy(&[2]).unwrap())
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn entropy_bounded_by_log_cardinality_and_relabel_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let n = 120;
        let col: Vec<u32> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let relabeled: Vec<u32> = col.iter().map(|&v| [2, 0, 1][v as usize]).collect();
        let ds = dataset(vec![("A", 3, col), ("B", 3, relabeled)]);
        let t = build_table(&ds, &set(&[0, 1])).unwrap();
        let h0 = entropy(&t, &[0]).unwrap();
        let h1 = entropy(&t, &[1]).unwrap();
        assert!(h0 >= 0.0 && h0 <= 3f64.log2() + 1e-12);
        assert!((h0 - h1).abs() < 1e-12);
    }
}
