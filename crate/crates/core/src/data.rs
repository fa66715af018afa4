//! Dataset and attribute-set types.
//!
//! A [`Dataset`] holds discrete observations column-major: every attribute is
//! a column of small integer state codes together with a declared number of
//! states. An optional class column is distinguished for supervised mining.
//!
//! An [`AttributeSet`] is a canonical (strictly increasing, non-empty) list
//! of attribute indices, the unit of enumeration in the mining lattice.

use crate::error::{Error, Result};

/// A single discrete attribute: a name and a declared number of states.
///
/// State codes in the data column must lie in `0..states`. The declared
/// cardinality may exceed the number of states actually observed; several
/// statistics (degrees of freedom in particular) use the *observed* count,
/// while the sample-size pruning rule uses the *declared* count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    /// Human-readable unique name (used in reports and spectra).
    pub name: String,
    /// Declared number of states; codes are `0..states`.
    pub states: u32,
}

/// A discrete dataset stored column-major.
#[derive(Debug, Clone)]
pub struct Dataset {
    attributes: Vec<Attribute>,
    /// `columns[a][r]` is the state code of attribute `a` in row `r`.
    columns: Vec<Vec<u32>>,
    /// Number of rows.
    n: usize,
    /// Index of the class attribute, if the dataset is labelled.
    class_index: Option<usize>,
    /// Number of distinct state codes actually present per attribute.
    observed_states: Vec<u32>,
}

impl Dataset {
    /// Builds a dataset from per-attribute columns of state codes.
    ///
    /// Validation: at least one attribute; all columns the same non-zero
    /// length; unique non-empty attribute names; every declared cardinality
    /// at least 2; every code within its declared range; `class_index` (if
    /// any) in range.
    pub fn new(
        attributes: Vec<Attribute>,
        columns: Vec<Vec<u32>>,
        class_index: Option<usize>,
    ) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::invalid_input("dataset must have at least one attribute"));
        }
        if attributes.len() != columns.len() {
            return Err(Error::invalid_input(format!(
                "{} attributes but {} columns",
                attributes.len(),
                columns.len()
            )));
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::invalid_input("dataset must have at least one row"));
        }
        let mut seen = std::collections::HashSet::new();
        for (a, attr) in attributes.iter().enumerate() {
            if attr.name.is_empty() {
                return Err(Error::invalid_input(format!("attribute {a} has an empty name")));
            }
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::invalid_input(format!(
                    "duplicate attribute name: {}",
                    attr.name
                )));
            }
            if attr.states < 2 {
                return Err(Error::invalid_input(format!(
                    "attribute {} declares {} state(s); at least 2 required",
                    attr.name, attr.states
                )));
            }
            if columns[a].len() != n {
                return Err(Error::invalid_input(format!(
                    "attribute {} has {} rows, expected {}",
                    attr.name,
                    columns[a].len(),
                    n
                )));
            }
            if let Some(&bad) = columns[a].iter().find(|&&v| v >= attr.states) {
                return Err(Error::invalid_input(format!(
                    "attribute {} contains code {} outside 0..{}",
                    attr.name, bad, attr.states
                )));
            }
        }
        if let Some(c) = class_index {
            if c >= attributes.len() {
                return Err(Error::invalid_input(format!(
                    "class index {c} out of range for {} attributes",
                    attributes.len()
                )));
            }
        }
        let observed_states = columns
            .iter()
            .zip(&attributes)
            .map(|(col, attr)| {
                let mut present = vec![false; attr.states as usize];
                for &v in col {
                    present[v as usize] = true;
                }
                present.iter().filter(|&&p| p).count() as u32
            })
            .collect();
        Ok(Dataset { attributes, columns, n, class_index, observed_states })
    }

    /// Number of rows.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of attributes (including the class attribute, if any).
    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    /// Attribute metadata by index.
    pub fn attribute(&self, index: usize) -> &Attribute {
        &self.attributes[index]
    }

    /// All attributes in order.
    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    /// The data column of one attribute.
    pub fn column(&self, index: usize) -> &[u32] {
        &self.columns[index]
    }

    /// Index of the class attribute, if the dataset is labelled.
    pub fn class_index(&self) -> Option<usize> {
        self.class_index
    }

    /// Declared cardinality of an attribute.
    pub fn states(&self, index: usize) -> u32 {
        self.attributes[index].states
    }

    /// Number of distinct state codes actually observed for an attribute.
    /// Always in `1..=states(index)`.
    pub fn observed_states(&self, index: usize) -> u32 {
        self.observed_states[index]
    }

    /// Looks up an attribute index by name.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Indices of attributes whose observed cardinality is 1 (constant
    /// columns). The miner rejects datasets containing any.
    pub fn constant_attributes(&self) -> Vec<usize> {
        (0..self.attributes.len()).filter(|&a| self.observed_states[a] <= 1).collect()
    }

    /// Returns a new dataset containing only the attributes listed in `keep`
    /// (in the given order). The class index, when retained, is remapped; if
    /// the dataset has a class attribute it must be present in `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Result<Dataset> {
        let mut attributes = Vec::with_capacity(keep.len());
        let mut columns = Vec::with_capacity(keep.len());
        for &idx in keep {
            if idx >= self.attributes.len() {
                return Err(Error::invalid_input(format!("attribute index {idx} out of range")));
            }
            attributes.push(self.attributes[idx].clone());
            columns.push(self.columns[idx].clone());
        }
        let class_index = match self.class_index {
            None => None,
            Some(c) => match keep.iter().position(|&k| k == c) {
                Some(pos) => Some(pos),
                None => {
                    return Err(Error::invalid_input(
                        "class attribute must be retained when restricting a labelled dataset",
                    ))
                }
            },
        };
        Dataset::new(attributes, columns, class_index)
    }
}

/// A canonical set of attribute indices: strictly increasing, non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttributeSet {
    indices: Vec<usize>,
}

impl AttributeSet {
    /// Builds a set from indices that must already be strictly increasing.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid_input("attribute set must be non-empty"));
        }
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid_input(format!(
                "attribute set indices must be strictly increasing, got {indices:?}"
            )));
        }
        Ok(AttributeSet { indices })
    }

    /// Builds a set from indices in any order, sorting and rejecting
    /// duplicates.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid_input(format!(
                "attribute set contains duplicate indices: {indices:?}"
            )));
        }
        AttributeSet::new(indices)
    }

    /// The single-attribute set `{index}`.
    pub fn singleton(index: usize) -> Self {
        AttributeSet { indices: vec![index] }
    }

    /// Number of attributes in the set.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// True when the set has exactly one member (sets are never empty).
    pub fn is_empty(&self) -> bool {
        false
    }

    /// The indices, strictly increasing.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Membership test.
    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// The largest index in the set.
    pub fn max_index(&self) -> usize {
        *self.indices.last().unwrap()
    }

    /// Returns `self ∪ {index}`; errors if `index` is already a member.
    pub fn with(&self, index: usize) -> Result<AttributeSet> {
        if self.contains(index) {
            return Err(Error::invalid_input(format!("index {index} already in set")));
        }
        let mut v = self.indices.clone();
        v.push(index);
        v.sort_unstable();
        Ok(AttributeSet { indices: v })
    }

    /// Returns `self \ {index}`; errors if the removal would empty the set
    /// or `index` is not a member.
    pub fn without(&self, index: usize) -> Result<AttributeSet> {
        if !self.contains(index) {
            return Err(Error::invalid_input(format!("index {index} not in set")));
        }
        if self.indices.len() == 1 {
            return Err(Error::invalid_input("cannot remove the last member of a set"));
        }
        Ok(AttributeSet {
            indices: self.indices.iter().copied().filter(|&i| i != index).collect(),
        })
    }

    /// All subsets obtained by dropping exactly one member (only defined for
    /// sets of size >= 2).
    pub fn drop_one_subsets(&self) -> Vec<AttributeSet> {
        assert!(self.indices.len() >= 2, "drop-one subsets need at least two members");
        self.indices.iter().map(|&i| self.without(i).unwrap()).collect()
    }

    /// Joins member names from a dataset with `;` (report formatting).
    pub fn display_names(&self, ds: &Dataset) -> String {
        self.indices
            .iter()
            .map(|&i| ds.attribute(i).name.as_str())
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Target of a KWII evaluation.
///
/// KWII is defined over a *list* of attributes in which repeats are
/// meaningful: members are distinguishable even when they refer to the same
/// column, so the inclusion-exclusion sum ranges over sub-lists. The general
/// constructor takes a proper set; the redundancy form `(A_i; A_j; A_j)`
/// (one attribute listed twice) is the only repeated shape the metrics use,
/// so it gets its own variant rather than a general multiset type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum KwiiTarget {
    /// KWII over a set of distinct attributes.
    Set(AttributeSet),
    /// KWII over `(A_first; A_second; A_second)`, the redundancy triple;
    /// evaluates to `-MI(A_first; A_second)`.
    RedundancyTriple {
        /// The attribute listed once.
        first: usize,
        /// The attribute listed twice.
        second: usize,
    },
}

impl KwiiTarget {
    /// Builds a redundancy triple, validating distinctness.
    pub fn redundancy_triple(first: usize, second: usize) -> Result<Self> {
        if first == second {
            return Err(Error::invalid_input(
                "redundancy triple requires two distinct attributes",
            ));
        }
        Ok(KwiiTarget::RedundancyTriple { first, second })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::new(
            vec![
                Attribute { name: "A1".into(), states: 2 },
                Attribute { name: "A2".into(), states: 3 },
                Attribute { name: "C".into(), states: 2 },
            ],
            vec![vec![0, 1, 0, 1], vec![0, 1, 2, 0], vec![0, 0, 1, 1]],
            Some(2),
        )
        .unwrap()
    }

    #[test]
    fn dataset_accessors() {
        let ds = toy();
        assert_eq!(ds.n(), 4);
        assert_eq!(ds.attribute_count(), 3);
        assert_eq!(ds.states(1), 3);
        assert_eq!(ds.observed_states(1), 3);
        assert_eq!(ds.class_index(), Some(2));
        assert_eq!(ds.index_of("A2"), Some(1));
        assert_eq!(ds.index_of("missing"), None);
        assert!(ds.constant_attributes().is_empty());
    }

    #[test]
    fn dataset_validation_errors() {
        // Code out of declared range.
        let err = Dataset::new(
            vec![Attribute { name: "A".into(), states: 2 }],
            vec![vec![0, 2]],
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("outside"));

        // Ragged columns.
        let err = Dataset::new(
            vec![
                Attribute { name: "A".into(), states: 2 },
                Attribute { name: "B".into(), states: 2 },
            ],
            vec![vec![0, 1], vec![0]],
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("rows"));

        // Duplicate names.
        let err = Dataset::new(
            vec![
                Attribute { name: "A".into(), states: 2 },
                Attribute { name: "A".into(), states: 2 },
            ],
            vec![vec![0, 1], vec![0, 1]],
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn observed_vs_declared_states() {
        let ds = Dataset::new(
            vec![Attribute { name: "A".into(), states: 5 }],
            vec![vec![0, 3, 0, 3]],
            None,
        )
        .unwrap();
        assert_eq!(ds.states(0), 5);
        assert_eq!(ds.observed_states(0), 2);
    }

    #[test]
    fn constant_column_detected() {
        let ds = Dataset::new(
            vec![
                Attribute { name: "A".into(), states: 2 },
                Attribute { name: "B".into(), states: 2 },
            ],
            vec![vec![1, 1, 1], vec![0, 1, 0]],
            None,
        )
        .unwrap();
        assert_eq!(ds.constant_attributes(), vec![0]);
    }

    #[test]
    fn restrict_remaps_class() {
        let ds = toy();
        let sub = ds.restrict(&[1, 2]).unwrap();
        assert_eq!(sub.attribute_count(), 2);
        assert_eq!(sub.attribute(0).name, "A2");
        assert_eq!(sub.class_index(), Some(1));
        // Dropping the class column of a labelled dataset is rejected.
        assert!(ds.restrict(&[0, 1]).is_err());
    }

    #[test]
    fn attribute_set_canonical_form() {
        assert!(AttributeSet::new(vec![]).is_err());
        assert!(AttributeSet::new(vec![2, 1]).is_err());
        assert!(AttributeSet::new(vec![1, 1]).is_err());
        let s = AttributeSet::from_unsorted(vec![4, 0, 2]).unwrap();
        assert_eq!(s.indices(), &[0, 2, 4]);
        assert!(s.contains(2));
        assert!(!s.contains(3));
        assert_eq!(s.max_index(), 4);
        let t = s.with(3).unwrap();
        assert_eq!(t.indices(), &[0, 2, 3, 4]);
        assert!(t.with(3).is_err());
        let u = t.without(0).unwrap();
        assert_eq!(u.indices(), &[2, 3, 4]);
        let drops = u.drop_one_subsets();
        assert_eq!(drops.len(), 3);
        assert_eq!(drops[0].indices(), &[3, 4]);
    }

    #[test]
    fn redundancy_triple_requires_distinct() {
        assert!(KwiiTarget::redundancy_triple(1, 1).is_err());
        assert!(KwiiTarget::redundancy_triple(0, 1).is_ok());
    }
}
