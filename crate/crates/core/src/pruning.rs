//! Search-space pruning: redundancy covers, the samples-per-cell gate,
//! analytic TCI/CACI bounds, and the six-way bound-case classifier.
//!
//! # Bounds
//!
//! For a candidate set `S = P ∪ {A_j}` generated from its enumeration-tree
//! parent `P`, cheap bounds on the metric decide whether the exact value
//! (one full data scan) is needed at all:
//!
//! * **Ancestor lower bound** — `TCI(S) ≥ Σ_i H(A_i) − ubH(S)`, where
//!   `ubH(S)` is a recursive upper bound on the joint entropy:
//!   `ubH(S) = ½ [ubH(S\a) + ubH(S\b) + H(a,b)]` for the maximum-entropy
//!   pair `(a,b) ⊆ S`, bottoming out at the exactly-known pair and single
//!   entropies.
//! * **Parent upper bound** — adding one attribute can add at most the new
//!   attribute's entropy or the parent's joint entropy:
//!   `TCI(S) ≤ TCI(P) + min{H(P), H(A_j)}` (upper surrogates are used when
//!   the parent's exact values are unknown).
//! * **Sibling bounds** — when a sibling `P ∪ {A_i}` has an exactly-known
//!   joint entropy, sharper two-sided bounds follow from
//!   `H(S) ≤ H(P, A_i) + H(A_j | A_t)` (any `t ∈ P`) and
//!   `H(P, A_i) ≤ H(S) + min{H(A_i|A_j), min_t H(A_i|A_t)}`.
//! * **Class-association bounds** — `CACI(S;C) ≥ max_i MI(A_i; C)` and
//!   `CACI(S;C) ≤ min{ubH(S), H(C)}`.
//!
//! The p-values of the two bounds place a node into one of six exhaustive
//! cases; only three of them require the exact metric.

use std::collections::HashMap;

use serde::Serialize;

use crate::config::Mode;
use crate::data::{Dataset, KwiiTarget};
use crate::error::{Error, Result};
use crate::gamma::PValue;
use crate::info;
use crate::table::ContingencyTable;

/// Numerical tolerance, in bits, for bound and verdict comparisons.
pub const BIT_TOL: f64 = 1e-9;

/// Redundancy covers over the attributes of a dataset.
#[derive(Debug, Clone, Serialize)]
pub struct CoverMap {
    /// `covers[i]` = indices redundant with attribute `i`, including `i`
    /// itself (class attribute excluded from all covers).
    pub covers: Vec<Vec<usize>>,
    /// Selected representatives, in increasing index order; in supervised
    /// mode the class attribute is always retained.
    pub representatives: Vec<usize>,
    /// The order in which the greedy selection picked representatives.
    pub selection_order: Vec<usize>,
}

/// Significance verdict of a combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Highly significant (p < alpha_high).
    Hsc,
    /// Moderately significant (alpha_high ≤ p < alpha_low).
    Msc,
    /// Non-significant (p ≥ alpha_low).
    Nsc,
}

/// Classifies an exact p-value against the two thresholds.
pub fn verdict_from_p(p: &PValue, alpha_high: f64, alpha_low: f64) -> Verdict {
    if p.is_below(alpha_high) {
        Verdict::Hsc
    } else if p.is_below(alpha_low) {
        Verdict::Msc
    } else {
        Verdict::Nsc
    }
}

/// Lower/upper bounds on a metric value, in bits.
#[derive(Debug, Clone, Copy)]
pub struct BoundPair {
    /// Lower bound (clamped at 0).
    pub lower: f64,
    /// Upper bound.
    pub upper: f64,
    /// True when both bounds collapsed to an exactly-known value.
    pub exact: bool,
}

impl BoundPair {
    /// Validates `lower ≤ upper` within tolerance.
    pub fn validated(self) -> Result<Self> {
        if !(self.lower.is_finite() && self.upper.is_finite()) {
            return Err(Error::invalid_input(format!("nonfinite bounds {self:?}")));
        }
        if self.lower > self.upper + BIT_TOL {
            return Err(Error::invalid_input(format!(
                "bound inversion: lower {} > upper {}",
                self.lower, self.upper
            )));
        }
        Ok(self)
    }
}

/// Action demanded by a bound-case classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundAction {
    /// The node is highly significant without exact computation.
    HandleHsc,
    /// The exact metric and p-value are required to classify.
    ComputeExact,
    /// The node is moderately or non-significant without exact computation.
    HandleMscNsc,
}

/// One of the six bound cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundCase {
    /// Case number 1..=6.
    pub case_id: u8,
    /// What the miner must do with the node.
    pub action: BoundAction,
    /// The verdict, when it is already decided by the bounds alone
    /// (cases 1, 5, 6).
    pub verdict: Option<Verdict>,
}

/// Normalized redundancy score of an attribute pair.
///
/// Unsupervised: `KWII(A_i;A_j;A_j) / min{H(A_i), H(A_j)}` — the redundancy
/// triple equals `−MI(A_i;A_j)`, so copies score −1 and independent
/// attributes 0. Supervised: `KWII(A_i;A_j;C) / H(C)`, the (negated,
/// normalized) information about the class shared by the two attributes.
/// A pair is redundant when the score is ≤ −Δ.
pub fn redundancy_score(ds: &Dataset, i: usize, j: usize, mode: Mode) -> Result<f64> {
    if i == j {
        return Err(Error::invalid_input("redundancy score needs two distinct attributes"));
    }
    match mode {
        Mode::Unsupervised => {
            let pair = ContingencyTable::from_dataset_axes(ds, &[i, j])?;
            let h_i = pair.marginal_entropy(&[0])?;
            let h_j = pair.marginal_entropy(&[1])?;
            let denom = h_i.min(h_j);
            if denom <= 0.0 {
                return Err(Error::ConstantAttributes(vec![if h_i <= 0.0 {
                    ds.attribute(i).name.clone()
                } else {
                    ds.attribute(j).name.clone()
                }]));
            }
            let triple = info::kwii(ds, &KwiiTarget::RedundancyTriple { first: i, second: j })?;
            Ok(triple / denom)
        }
        Mode::Supervised => {
            let class = ds
                .class_index()
                .ok_or_else(|| Error::invalid_config("supervised mode requires a class"))?;
            if i == class || j == class {
                return Err(Error::invalid_input(
                    "class attribute cannot enter a redundancy pair",
                ));
            }
            let h_c = ContingencyTable::from_dataset_axes(ds, &[class])?.entropy();
            if h_c <= 0.0 {
                return Err(Error::ConstantAttributes(vec![ds.attribute(class).name.clone()]));
            }
            let s = crate::data::AttributeSet::from_unsorted(vec![i, j, class])?;
            let k = info::kwii(ds, &KwiiTarget::Set(s))?;
            Ok(k / h_c)
        }
    }
}

/// Builds redundancy covers: `Cover(A_i)` contains every attribute scored
/// redundant with `A_i` (plus `A_i` itself), and representatives are chosen
/// greedily by most newly-covered attributes (ties broken by lowest index).
///
/// In supervised mode the candidate channels are combined: a pair is
/// redundant when *either* its attribute-only score or its class-context
/// score crosses `−Δ`. Replicated attributes share essentially all class
/// information yet the class-context score alone is bounded well above `−Δ`
/// whenever the class information content itself is small, so the
/// attribute-only channel is what actually detects replicas; the
/// class-context channel can only add pairs. The class attribute never
/// participates in covers and is always retained.
pub fn build_covers(ds: &Dataset, delta: f64, mode: Mode) -> Result<CoverMap> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid_config(format!("delta must lie in [0,1], got {delta}")));
    }
    let class = ds.class_index();
    let m = ds.attribute_count();
    let eligible: Vec<usize> = (0..m).filter(|&a| Some(a) != class).collect();
    let mut covers: Vec<Vec<usize>> = (0..m).map(|a| vec![a]).collect();
    if let Some(c) = class {
        covers[c].clear();
    }
    for (pos, &i) in eligible.iter().enumerate() {
        for &j in &eligible[pos + 1..] {
            let mut redundant = redundancy_score(ds, i, j, Mode::Unsupervised)? <= -delta;
            if !redundant && mode == Mode::Supervised {
                redundant = redundancy_score(ds, i, j, Mode::Supervised)? <= -delta;
            }
            if redundant {
                covers[i].push(j);
                covers[j].push(i);
            }
        }
    }
    for c in covers.iter_mut() {
        c.sort_unstable();
    }
    // Greedy max-cover over the not-yet-covered attributes.
    let mut covered = vec![false; m];
    if let Some(c) = class {
        covered[c] = true;
    }
    let mut selection_order = Vec::new();
    while covered.iter().any(|&c| !c) {
        let mut best: Option<(usize, usize)> = None; // (gain, index)
        for &a in &eligible {
            let gain = covers[a].iter().filter(|&&x| !covered[x]).count();
            let better = match best {
                None => gain > 0,
                Some((bg, bi)) => gain > bg || (gain == bg && a < bi && gain > 0),
            };
            if better {
                best = Some((gain, a));
            }
        }
        let (_, pick) = best.expect("uncovered attribute with empty cover");
        selection_order.push(pick);
        for &x in &covers[pick] {
            covered[x] = true;
        }
    }
    let mut representatives = selection_order.clone();
    if let Some(c) = class {
        representatives.push(c);
    }
    representatives.sort_unstable();
    Ok(CoverMap { covers, representatives, selection_order })
}

/// Restricts the dataset to the representatives of `covers`, returning the
/// reduced dataset and the mapping `reduced index → original index`.
pub fn select_representatives(ds: &Dataset, covers: &CoverMap) -> Result<(Dataset, Vec<usize>)> {
    let keep = covers.representatives.clone();
    let reduced = ds.restrict(&keep)?;
    Ok((reduced, keep))
}

/// The samples-per-cell rule: a node with per-attribute cardinalities `V_i`
/// (class included in supervised mode) is explored only when
/// `N / Π V_i ≥ 5`.
pub fn sample_size_ok(n: u64, state_counts: &[u32]) -> bool {
    let v: u128 = state_counts.iter().map(|&c| c as u128).product();
    n as u128 >= 5 * v
}

/// Entropy caches backing bound computation.
///
/// Singles and pairs are exact values filled in by the miner's seed levels;
/// `exact_joint` collects joint entropies of every set whose table was
/// built. `ubh` answers upper bounds on joint entropies, preferring exact
/// knowledge and otherwise recursing on the maximum-entropy pair split.
#[derive(Debug, Default)]
pub struct EntropyCaches {
    /// Exact single-attribute entropies, indexed by attribute.
    pub h_single: Vec<f64>,
    /// Exact pairwise joint entropies, keyed by `(min, max)` index.
    pub h_pair: HashMap<(usize, usize), f64>,
    /// Exact joint entropies of larger sets (sorted index keys).
    pub h_exact: HashMap<Vec<usize>, f64>,
    /// Memoized joint-entropy upper bounds (sorted index keys).
    ubh_memo: HashMap<Vec<usize>, f64>,
}

impl EntropyCaches {
    /// Creates caches with single entropies pre-sized for `m` attributes.
    pub fn new(m: usize) -> Self {
        EntropyCaches {
            h_single: vec![f64::NAN; m],
            h_pair: HashMap::new(),
            h_exact: HashMap::new(),
            ubh_memo: HashMap::new(),
        }
    }

    /// Exact pair entropy, if cached.
    pub fn pair(&self, i: usize, j: usize) -> Option<f64> {
        self.h_pair.get(&(i.min(j), i.max(j))).copied()
    }

    /// Records an exact pair entropy.
    pub fn set_pair(&mut self, i: usize, j: usize, h: f64) {
        self.h_pair.insert((i.min(j), i.max(j)), h);
    }

    /// Records the exact joint entropy of a (sorted) set of any size.
    pub fn set_exact(&mut self, attrs: &[usize], h: f64) {
        match attrs.len() {
            0 => {}
            1 => self.h_single[attrs[0]] = h,
            2 => self.set_pair(attrs[0], attrs[1], h),
            _ => {
                self.h_exact.insert(attrs.to_vec(), h);
            }
        }
    }

    /// Exact joint entropy of a sorted set, if known.
    pub fn exact(&self, attrs: &[usize]) -> Option<f64> {
        match attrs.len() {
            0 => Some(0.0),
            1 => {
                let h = self.h_single[attrs[0]];
                if h.is_nan() {
                    None
                } else {
                    Some(h)
                }
            }
            2 => self.pair(attrs[0], attrs[1]),
            _ => self.h_exact.get(attrs).copied(),
        }
    }

    /// Conditional entropy `H(A_j | A_t)` from cached pair and single
    /// entropies.
    pub fn conditional(&self, j: usize, t: usize) -> Result<f64> {
        let pair = self
            .pair(j, t)
            .ok_or_else(|| Error::invalid_input(format!("pair entropy ({j},{t}) not cached")))?;
        Ok(pair - self.h_single[t])
    }

    /// Upper bound on the joint entropy `H(S)`: the exact value when known,
    /// otherwise the recursive max-entropy-pair half-sum, memoized.
    pub fn ubh(&mut self, attrs: &[usize]) -> Result<f64> {
        if let Some(h) = self.exact(attrs) {
            return Ok(h);
        }
        if let Some(&h) = self.ubh_memo.get(attrs) {
            return Ok(h);
        }
        // Greedy split on the maximum-entropy pair inside the set.
        let mut best: Option<(f64, usize, usize)> = None;
        for (pi, &a) in attrs.iter().enumerate() {
            for &b in &attrs[pi + 1..] {
                let h = self.pair(a, b).ok_or_else(|| {
                    Error::invalid_input(format!("pair entropy ({a},{b}) not cached"))
                })?;
                if best.map_or(true, |(bh, _, _)| h > bh) {
                    best = Some((h, a, b));
                }
            }
        }
        let (h_ab, a, b) = best.expect("ubh called on a set smaller than 2");
        let minus_a: Vec<usize> = attrs.iter().copied().filter(|&x| x != a).collect();
        let minus_b: Vec<usize> = attrs.iter().copied().filter(|&x| x != b).collect();
        let value = 0.5 * (self.ubh(&minus_a)? + self.ubh(&minus_b)? + h_ab);
        self.ubh_memo.insert(attrs.to_vec(), value);
        Ok(value)
    }
}

/// What the miner knows about the enumeration-tree parent of a candidate.
#[derive(Debug, Clone, Copy)]
pub struct ParentKnowledge {
    /// Exact TCI of the parent, or an upper bound on it.
    pub tci_upper: f64,
    /// Exact joint entropy of the parent, or an upper bound on it.
    pub h_upper: f64,
}

/// Exactly-known sibling: the parent extended by `attr` instead of the
/// candidate's new attribute.
#[derive(Debug, Clone, Copy)]
pub struct SiblingKnowledge {
    /// The sibling's added attribute.
    pub attr: usize,
    /// Exact joint entropy of parent ∪ {attr}.
    pub h_joint: f64,
}

/// Two-sided TCI bounds for the candidate `parent ∪ {new_attr}`.
///
/// `parent` lists the parent's attributes (sorted); `sibling`, when
/// available, must carry an exact joint entropy. Falls back to the
/// ancestor/parent bounds alone when no sibling is cached.
pub fn tci_bounds(
    parent: &[usize],
    new_attr: usize,
    parent_info: &ParentKnowledge,
    sibling: Option<&SiblingKnowledge>,
    caches: &mut EntropyCaches,
) -> Result<BoundPair> {
    let mut child: Vec<usize> = parent.to_vec();
    child.push(new_attr);
    child.sort_unstable();
    let sum_h_child: f64 = child.iter().map(|&a| caches.h_single[a]).sum();
    let sum_h_parent: f64 = parent.iter().map(|&a| caches.h_single[a]).sum();
    let h_new = caches.h_single[new_attr];

    // Ancestor lower bound: Σ H(A_i) − ubH(S).
    let mut lower = sum_h_child - caches.ubh(&child)?;

    // Parent upper bound: TCI(P) + min{H(P), H(A_j)} (upper surrogates).
    let mut upper = parent_info.tci_upper + parent_info.h_upper.min(h_new);

    if let Some(sib) = sibling {
        // Sibling lower bound: from H(S) ≤ H(P, A_i) − H(A_i|...) —
        // concretely TCI(S) ≥ ΣH(P) + H(A_j) − H(P,A_i) − min_t H(A_j|A_t),
        // because H(P,A_j) ≤ H(P) + H(A_j|A_t) ≤ H(P,A_i) + H(A_j|A_t).
        let mut min_cond_new = f64::INFINITY;
        for &t in parent {
            min_cond_new = min_cond_new.min(caches.conditional(new_attr, t)?);
        }
        let sib_lower = sum_h_parent + h_new - sib.h_joint - min_cond_new;
        lower = lower.max(sib_lower);

        // Sibling upper bound: H(P,A_i) ≤ H(S) + Λ with
        // Λ = min{H(A_i|A_j), min_t H(A_i|A_t)}, since conditioning the
        // sibling attribute on any member of S bounds how much smaller
        // H(S) can be than H(P,A_i). Hence
        // TCI(S) ≤ ΣH(P) + H(A_j) − H(P,A_i) + Λ.
        let mut lambda = caches.conditional(sib.attr, new_attr)?;
        for &t in parent {
            lambda = lambda.min(caches.conditional(sib.attr, t)?);
        }
        let sib_upper = sum_h_parent + h_new - sib.h_joint + lambda;
        upper = upper.min(sib_upper);
    }

    BoundPair { lower: lower.max(0.0), upper: upper.max(0.0), exact: false }.validated()
}

/// Two-sided CACI bounds for predictor set `s` against the class.
///
/// Lower: the best single-predictor mutual information with the class.
/// Upper: the class entropy, tightened by the joint-entropy upper bound on
/// the predictors (mutual information can exceed neither).
pub fn caci_bounds(s: &[usize], class: usize, caches: &mut EntropyCaches) -> Result<BoundPair> {
    let h_c = caches.h_single[class];
    let mut lower = 0.0f64;
    for &a in s {
        let pair = caches
            .pair(a, class)
            .ok_or_else(|| Error::invalid_input(format!("pair entropy ({a},class) not cached")))?;
        let mi = caches.h_single[a] + h_c - pair;
        lower = lower.max(mi);
    }
    let upper = caches.ubh(s)?.min(h_c);
    BoundPair { lower: lower.max(0.0), upper, exact: false }.validated()
}

/// True when a CACI upper bound has saturated at the class entropy, meaning
/// the bound can never separate this subtree from the trivial ceiling; the
/// supervised miner prunes such subtrees in the non-significant case.
pub fn saturated_at_class_entropy(upper: f64, h_class: f64) -> bool {
    (upper - h_class).abs() <= BIT_TOL
}

/// Places a node into one of the six bound cases given the p-values of its
/// upper and lower metric bounds.
///
/// The metric's tail probability is decreasing in the metric, so
/// `p(U) ≤ p(L)` always; the two thresholds then cut the plane into:
///
/// 1. `p(L) < α_High` — already highly significant;
/// 2. `p(U) < α_High ≤ p(L) < α_Low` — compute exactly;
/// 3. `p(U) < α_High, α_Low ≤ p(L)` — compute exactly;
/// 4. `α_High ≤ p(U) < α_Low ≤ p(L)` — compute exactly;
/// 5. `α_Low ≤ p(U)` — non-significant;
/// 6. `α_High ≤ p(U) ≤ p(L) < α_Low` — moderately significant.
///
/// Bound-derived p-values must bracket the exact metric's p-value for the
/// case verdicts (1, 5, 6) to be sound; the caller guarantees that by
/// pairing the lower metric bound with an upper-bounding df and vice versa.
pub fn classify_case(
    p_upper: &PValue,
    p_lower: &PValue,
    alpha_high: f64,
    alpha_low: f64,
) -> Result<BoundCase> {
    if !(alpha_high > 0.0 && alpha_high < alpha_low && alpha_low < 1.0) {
        return Err(Error::invalid_config("required: 0 < alpha_high < alpha_low < 1"));
    }
    if p_upper.log_p > p_lower.log_p + 1e-9 {
        return Err(Error::invalid_input(format!(
            "bound p-value inversion: p(U) = {} > p(L) = {}",
            p_upper.p, p_lower.p
        )));
    }
    let u_below_high = p_upper.is_below(alpha_high);
    let u_below_low = p_upper.is_below(alpha_low);
    let l_below_high = p_lower.is_below(alpha_high);
    let l_below_low = p_lower.is_below(alpha_low);
    let case = if l_below_high {
        BoundCase { case_id: 1, action: BoundAction::HandleHsc, verdict: Some(Verdict::Hsc) }
    } else if u_below_high && l_below_low {
        BoundCase { case_id: 2, action: BoundAction::ComputeExact, verdict: None }
    } else if u_below_high {
        BoundCase { case_id: 3, action: BoundAction::ComputeExact, verdict: None }
    } else if u_below_low && !l_below_low {
        BoundCase { case_id: 4, action: BoundAction::ComputeExact, verdict: None }
    } else if !u_below_low {
        BoundCase { case_id: 5, action: BoundAction::HandleMscNsc, verdict: Some(Verdict::Nsc) }
    } else {
        BoundCase { case_id: 6, action: BoundAction::HandleMscNsc, verdict: Some(Verdict::Msc) }
    };
    Ok(case)
}
