//! Breadth-first mining of significant combinations (COI/SCOI) over the
//! set-enumeration lattice, the subset-difference interaction transform,
//! and the end-to-end pipeline producing TCI/CACI and KWII spectra.
//!
//! The search enumerates attribute sets level by level; children extend a
//! node only with strictly larger attribute indices, so every set is
//! generated exactly once. Each candidate passes the samples-per-cell gate,
//! is classified — by entropy bounds when enabled, by its exact metric
//! otherwise — into highly / moderately / non-significant, and is then
//! dispatched: MSC subtrees are pruned, NSC nodes stay in the frontier, and
//! HSC nodes enter Θ when they qualify as a COI (every (k−1)-subset
//! non-significant) or SCOI (exactly one highly significant (k−1)-subset
//! with a significant metric increment), being pruned otherwise.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{MiningConfig, Mode};
use crate::data::{AttributeSet, Dataset};
use crate::error::{Error, Result};
use crate::gamma::PValue;
use crate::pruning::{
    self, BoundAction, CoverMap, EntropyCaches, ParentKnowledge, SiblingKnowledge, Verdict,
};
use crate::significance::{self, ScreenOutcome};
use crate::table::ContingencyTable;

/// Kind of a mined combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CombinationKind {
    /// Combination of interest: every (k−1)-subset is non-significant.
    Coi,
    /// Special combination of interest: exactly one (k−1)-subset is highly
    /// significant and the metric increment over it is itself significant.
    Scoi,
}

impl CombinationKind {
    /// Spectrum verdict label; supervised combinations carry the
    /// class-associated suffix.
    pub fn label(self, mode: Mode) -> &'static str {
        match (self, mode) {
            (CombinationKind::Coi, Mode::Unsupervised) => "COI",
            (CombinationKind::Scoi, Mode::Unsupervised) => "SCOI",
            (CombinationKind::Coi, Mode::Supervised) => "COI_CA",
            (CombinationKind::Scoi, Mode::Supervised) => "SCOI_CA",
        }
    }
}

/// Metric increment backing a SCOI verdict.
#[derive(Debug, Clone, Copy)]
pub struct DeltaRecord {
    /// Increment over the highly significant subset, in bits.
    pub value: f64,
    /// Gamma-tail p-value of the increment.
    pub pvalue: PValue,
}

/// A member of Θ: a combination mined as COI or SCOI.
#[derive(Debug, Clone)]
pub struct MinedCombination {
    /// The full combination; in supervised mode the class attribute is
    /// included.
    pub attrs: AttributeSet,
    /// COI or SCOI.
    pub kind: CombinationKind,
    /// TCI (unsupervised) or CACI (supervised), in bits.
    pub metric: f64,
    /// Gamma-tail p-value of the metric.
    pub pvalue: PValue,
    /// Increment record for SCOI combinations.
    pub delta: Option<DeltaRecord>,
}

/// Which metric a spectrum entry reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MetricKind {
    Tci,
    Caci,
    Kwii,
}

impl MetricKind {
    /// Column label used in spectra files.
    pub fn label(self) -> &'static str {
        match self {
            MetricKind::Tci => "TCI",
            MetricKind::Caci => "CACI",
            MetricKind::Kwii => "KWII",
        }
    }
}

/// One row of an output spectrum.
#[derive(Debug, Clone)]
pub struct SpectrumEntry {
    /// Attribute indices (into the reduced dataset), sorted.
    pub indices: Vec<usize>,
    /// Semicolon-joined attribute names.
    pub combination: String,
    /// Number of attributes in the combination.
    pub order: usize,
    /// Reported metric.
    pub metric: MetricKind,
    /// Metric value in bits.
    pub value_bits: f64,
    /// Gamma p-value for TCI/CACI entries, permutation p-value for KWII
    /// entries.
    pub pvalue: f64,
    /// COI/SCOI (with `_CA` suffix in supervised mode) for Θ entries;
    /// `SIGNIFICANT` for retained KWII entries.
    pub verdict: String,
}

/// Search-space accounting; `nodes_expanded = nodes_stored + nodes_pruned`
/// always holds.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct PruneCounters {
    /// Candidate nodes generated, including seed levels.
    pub nodes_expanded: u64,
    /// Nodes kept (frontier members and Θ entries).
    pub nodes_stored: u64,
    /// Nodes discarded for any reason.
    pub nodes_pruned: u64,
    /// Discarded by the samples-per-cell gate.
    pub pruned_sample: u64,
    /// Moderately significant nodes (subtree pruned).
    pub pruned_msc: u64,
    /// Highly significant nodes failing both the COI and SCOI conditions.
    pub pruned_hsc_redundant: u64,
    /// Supervised non-significant nodes whose upper bound saturated at the
    /// class entropy (subtree pruned).
    pub pruned_saturated: u64,
    /// Exact metric evaluations (full contingency tables), including
    /// on-demand subset checks.
    pub exact_evaluations: u64,
    /// Nodes classified through bounds.
    pub bound_evaluations: u64,
    /// Nodes whose verdict required no exact evaluation.
    pub bound_only_verdicts: u64,
}

/// Exact evaluation of a combination's metric.
#[derive(Debug, Clone, Copy)]
struct ExactMetric {
    /// TCI or CACI in bits.
    metric: f64,
    /// Gamma-tail p-value.
    pvalue: PValue,
    /// Joint entropy of the (predictor) attributes, in bits.
    h_joint: f64,
    /// Observed joint cardinality of the predictor attributes.
    pred_joint_card: u64,
}

/// Verdict record for one combination, exact when available.
#[derive(Debug, Clone, Copy)]
struct LedgerRecord {
    verdict: Verdict,
    exact: Option<ExactMetric>,
}

/// Verdict map over canonical predictor index vectors. Verdicts settle at
/// classification time and never change; subset queries for sets the search
/// never classified trigger an on-demand exact evaluation, memoized here.
#[derive(Debug, Default)]
struct StatusLedger {
    records: HashMap<Vec<usize>, LedgerRecord>,
}

/// A frontier node of the breadth-first search. `attrs` holds predictor
/// indices only; supervised combinations implicitly include the class.
#[derive(Debug, Clone)]
struct SearchNode {
    attrs: Vec<usize>,
    /// Exact metric when known, otherwise an upper bound on it.
    metric_upper: f64,
    /// Exact joint (predictor) entropy when known, otherwise an upper
    /// bound.
    h_upper: f64,
    /// Lower bound on the observed joint cardinality of `attrs` (exact for
    /// exactly evaluated nodes).
    support_lo: u64,
}

/// Result of a search run: Θ plus accounting.
#[derive(Debug)]
pub struct MiningOutcome {
    /// Mined combinations in discovery order.
    pub theta: Vec<MinedCombination>,
    /// Search accounting.
    pub counters: PruneCounters,
    /// Mode the search ran in.
    pub mode: Mode,
    /// The order cap that was in effect.
    pub max_order: usize,
}

struct Engine<'a> {
    ds: &'a Dataset,
    mode: Mode,
    class: Option<usize>,
    alpha_high: f64,
    alpha_low: f64,
    max_order: usize,
    use_bounds: bool,
    n: u64,
    h_class: f64,
    class_card: u64,
    caches: EntropyCaches,
    ledger: StatusLedger,
    counters: PruneCounters,
    theta: Vec<MinedCombination>,
    /// Per-parent sibling with the smallest exactly-known joint entropy.
    sibling_best: HashMap<Vec<usize>, SiblingKnowledge>,
}

impl<'a> Engine<'a> {
    fn new(ds: &'a Dataset, config: &MiningConfig, mode: Mode) -> Result<Self> {
        config.validate()?;
        let constant = ds.constant_attributes();
        if !constant.is_empty() {
            return Err(Error::ConstantAttributes(
                constant.iter().map(|&a| ds.attribute(a).name.clone()).collect(),
            ));
        }
        let class = match mode {
            Mode::Supervised => Some(ds.class_index().ok_or_else(|| {
                Error::invalid_config("supervised mining requires a class attribute")
            })?),
            Mode::Unsupervised => None,
        };
        let pred_count = ds.attribute_count() - class.map_or(0, |_| 1);
        let min_preds = if mode == Mode::Supervised { 1 } else { 2 };
        if pred_count < min_preds {
            return Err(Error::invalid_input(format!(
                "mining needs at least {min_preds} non-class attributes, got {pred_count}"
            )));
        }
        let mut caches = EntropyCaches::new(ds.attribute_count());
        for a in 0..ds.attribute_count() {
            caches.h_single[a] = ContingencyTable::from_dataset_axes(ds, &[a])?.entropy();
        }
        let (h_class, class_card) = match class {
            Some(c) => (caches.h_single[c], ds.observed_states(c) as u64),
            None => (0.0, 0),
        };
        Ok(Engine {
            ds,
            mode,
            class,
            alpha_high: config.alpha_high,
            alpha_low: config.alpha_low,
            max_order: effective_max_order(ds, config, mode),
            use_bounds: config.use_bounds,
            n: ds.n() as u64,
            h_class,
            class_card,
            caches,
            ledger: StatusLedger::default(),
            counters: PruneCounters::default(),
            theta: Vec::new(),
            sibling_best: HashMap::new(),
        })
    }

    /// Displayed order of a predictor set (class counted in supervised
    /// mode).
    fn order_of(&self, pred_len: usize) -> usize {
        pred_len + usize::from(self.mode == Mode::Supervised)
    }

    fn predictors(&self) -> Vec<usize> {
        (0..self.ds.attribute_count()).filter(|&a| Some(a) != self.class).collect()
    }

    /// Declared cardinalities of a candidate, class included in supervised
    /// mode, for the samples-per-cell gate.
    fn gate_cards(&self, preds: &[usize]) -> Vec<u32> {
        let mut cards: Vec<u32> = preds.iter().map(|&a| self.ds.states(a)).collect();
        if let Some(c) = self.class {
            cards.push(self.ds.states(c));
        }
        cards
    }

    /// Full exact evaluation of a predictor set: metric, gamma p-value, and
    /// cache updates.
    fn exact_eval(&mut self, preds: &[usize]) -> Result<ExactMetric> {
        self.counters.exact_evaluations += 1;
        match self.mode {
            Mode::Unsupervised => {
                let table = ContingencyTable::from_dataset_axes(self.ds, preds)?;
                let h_joint = table.entropy();
                let sum_singles: f64 = preds.iter().map(|&a| self.caches.h_single[a]).sum();
                let metric = sum_singles - h_joint;
                let cards: Vec<u32> =
                    preds.iter().map(|&a| self.ds.observed_states(a)).collect();
                let pvalue = significance::pvalue_tci(metric, self.n, &cards)?;
                self.caches.set_exact(preds, h_joint);
                Ok(ExactMetric {
                    metric,
                    pvalue,
                    h_joint,
                    pred_joint_card: table.observed_joint_states(),
                })
            }
            Mode::Supervised => {
                let class = self.class.expect("supervised engine has a class");
                let mut axes: Vec<usize> = preds.to_vec();
                axes.push(class);
                axes.sort_unstable();
                let table = ContingencyTable::from_dataset_axes(self.ds, &axes)?;
                let pred_positions: Vec<usize> =
                    (0..axes.len()).filter(|&p| axes[p] != class).collect();
                let pred_marginal = table.marginal(&pred_positions)?;
                let h_pred = pred_marginal.entropy();
                let pred_joint_card = pred_marginal.observed_joint_states();
                let h_joint = table.entropy();
                let metric = h_pred + self.h_class - h_joint;
                let pvalue = significance::pvalue_caci(
                    metric,
                    self.n,
                    pred_joint_card,
                    self.class_card,
                )?;
                self.caches.set_exact(&axes, h_joint);
                self.caches.set_exact(preds, h_pred);
                Ok(ExactMetric { metric, pvalue, h_joint: h_pred, pred_joint_card })
            }
        }
    }

    /// Verdict of a predictor set, answering from the ledger when the
    /// search already classified it and computing the exact metric on
    /// demand otherwise.
    fn subset_verdict(&mut self, preds: &[usize]) -> Result<Verdict> {
        if let Some(rec) = self.ledger.records.get(preds) {
            return Ok(rec.verdict);
        }
        let ex = self.exact_eval(preds)?;
        let verdict = pruning::verdict_from_p(&ex.pvalue, self.alpha_high, self.alpha_low);
        self.ledger
            .records
            .insert(preds.to_vec(), LedgerRecord { verdict, exact: Some(ex) });
        Ok(verdict)
    }

    /// Exact record of a set known to be highly significant (every HSC
    /// verdict is backed by an exact evaluation).
    fn exact_record(&mut self, preds: &[usize]) -> Result<ExactMetric> {
        if let Some(rec) = self.ledger.records.get(preds) {
            if let Some(ex) = rec.exact {
                return Ok(ex);
            }
        }
        let ex = self.exact_eval(preds)?;
        let verdict = pruning::verdict_from_p(&ex.pvalue, self.alpha_high, self.alpha_low);
        self.ledger
            .records
            .insert(preds.to_vec(), LedgerRecord { verdict, exact: Some(ex) });
        Ok(ex)
    }

    fn record(&mut self, preds: &[usize], verdict: Verdict, exact: Option<ExactMetric>) {
        self.ledger.records.insert(preds.to_vec(), LedgerRecord { verdict, exact });
    }

    /// The combination as displayed: predictors plus the class attribute in
    /// supervised mode.
    fn display_set(&self, preds: &[usize]) -> Result<AttributeSet> {
        let mut full = preds.to_vec();
        if let Some(c) = self.class {
            full.push(c);
        }
        AttributeSet::from_unsorted(full)
    }

    /// Scans the (k−1)-subsets of a highly significant node: the HSC
    /// subsets, plus whether every non-HSC subset is NSC. The COI/SCOI
    /// conditions depend only on this pattern, so it can rule a node out of
    /// Θ before the node's exact metric is ever computed.
    fn subset_triage(&mut self, preds: &[usize]) -> Result<(Vec<Vec<usize>>, bool)> {
        let mut hsc_subsets: Vec<Vec<usize>> = Vec::new();
        let mut all_others_nsc = true;
        for drop in 0..preds.len() {
            let sub: Vec<usize> = preds
                .iter()
                .enumerate()
                .filter(|&(pos, _)| pos != drop)
                .map(|(_, &a)| a)
                .collect();
            match self.subset_verdict(&sub)? {
                Verdict::Hsc => hsc_subsets.push(sub),
                Verdict::Msc => all_others_nsc = false,
                Verdict::Nsc => {}
            }
        }
        Ok((hsc_subsets, all_others_nsc))
    }

    /// Dispatches a highly significant node: stores it in Θ as COI/SCOI
    /// when the subset conditions hold (returning the frontier node), or
    /// prunes the subtree.
    fn handle_hsc(&mut self, preds: &[usize], ex: ExactMetric) -> Result<Option<SearchNode>> {
        self.record(preds, Verdict::Hsc, Some(ex));
        let kind = if preds.len() == 1 || (self.mode == Mode::Unsupervised && preds.len() == 2) {
            // Seed-level combinations have no subsets carrying the metric;
            // every highly significant seed is a COI.
            Some((CombinationKind::Coi, None))
        } else {
            let (hsc_subsets, all_others_nsc) = self.subset_triage(preds)?;
            match (hsc_subsets.len(), all_others_nsc) {
                (0, true) => Some((CombinationKind::Coi, None)),
                (1, true) => {
                    let x = &hsc_subsets[0];
                    let x_rec = self.exact_record(x)?;
                    let added = *preds
                        .iter()
                        .find(|a| !x.contains(a))
                        .expect("(k−1)-subset differs in one attribute");
                    let delta = ex.metric - x_rec.metric;
                    let ak_card = self.ds.observed_states(added) as u64;
                    let p_delta = match self.mode {
                        Mode::Unsupervised => significance::pvalue_delta_tci(
                            delta,
                            self.n,
                            x_rec.pred_joint_card,
                            ak_card,
                        )?,
                        Mode::Supervised => significance::pvalue_delta_caci(
                            delta,
                            self.n,
                            x_rec.pred_joint_card,
                            ak_card,
                            self.class_card,
                        )?,
                    };
                    if p_delta.is_below(self.alpha_high) {
                        Some((
                            CombinationKind::Scoi,
                            Some(DeltaRecord { value: delta, pvalue: p_delta }),
                        ))
                    } else {
                        None
                    }
                }
                _ => None,
            }
        };
        match kind {
            Some((kind, delta)) => {
                self.theta.push(MinedCombination {
                    attrs: self.display_set(preds)?,
                    kind,
                    metric: ex.metric,
                    pvalue: ex.pvalue,
                    delta,
                });
                self.counters.nodes_stored += 1;
                Ok(Some(SearchNode {
                    attrs: preds.to_vec(),
                    metric_upper: ex.metric,
                    h_upper: ex.h_joint,
                    support_lo: ex.pred_joint_card,
                }))
            }
            None => {
                self.counters.nodes_pruned += 1;
                self.counters.pruned_hsc_redundant += 1;
                Ok(None)
            }
        }
    }

    /// Seed levels. Unsupervised: every attribute pair, evaluated exactly.
    /// Supervised: every single predictor against the class (eligible for
    /// Θ), then every predictor pair against the class — the pair seeds are
    /// generated unconditionally, matching the search's seed definition.
    fn seed(&mut self) -> Result<Vec<SearchNode>> {
        let preds = self.predictors();
        let mut frontier = Vec::new();
        if self.mode == Mode::Supervised {
            for &i in &preds {
                self.counters.nodes_expanded += 1;
                if !pruning::sample_size_ok(self.n, &self.gate_cards(&[i])) {
                    self.counters.nodes_pruned += 1;
                    self.counters.pruned_sample += 1;
                    continue;
                }
                let ex = self.exact_eval(&[i])?;
                let verdict =
                    pruning::verdict_from_p(&ex.pvalue, self.alpha_high, self.alpha_low);
                match verdict {
                    Verdict::Hsc => {
                        // Single-predictor combinations are seed nodes but
                        // not frontier parents; pair seeds below cover
                        // every two-predictor child.
                        self.handle_hsc(&[i], ex)?;
                    }
                    Verdict::Msc => {
                        self.record(&[i], verdict, Some(ex));
                        self.counters.nodes_pruned += 1;
                        self.counters.pruned_msc += 1;
                    }
                    Verdict::Nsc => {
                        self.record(&[i], verdict, Some(ex));
                        self.counters.nodes_stored += 1;
                    }
                }
            }
        }
        if self.max_order < self.order_of(2) {
            return Ok(frontier);
        }
        for (pos, &i) in preds.iter().enumerate() {
            for &j in &preds[pos + 1..] {
                self.counters.nodes_expanded += 1;
                let pair = [i, j];
                if !pruning::sample_size_ok(self.n, &self.gate_cards(&pair)) {
                    self.counters.nodes_pruned += 1;
                    self.counters.pruned_sample += 1;
                    continue;
                }
                let ex = self.exact_eval(&pair)?;
                let verdict =
                    pruning::verdict_from_p(&ex.pvalue, self.alpha_high, self.alpha_low);
                match verdict {
                    Verdict::Hsc => {
                        if let Some(node) = self.handle_hsc(&pair, ex)? {
                            frontier.push(node);
                        }
                    }
                    Verdict::Msc => {
                        self.record(&pair, verdict, Some(ex));
                        self.counters.nodes_pruned += 1;
                        self.counters.pruned_msc += 1;
                    }
                    Verdict::Nsc => {
                        self.record(&pair, verdict, Some(ex));
                        self.counters.nodes_stored += 1;
                        frontier.push(SearchNode {
                            attrs: pair.to_vec(),
                            metric_upper: ex.metric,
                            h_upper: ex.h_joint,
                            support_lo: ex.pred_joint_card,
                        });
                    }
                }
            }
        }
        Ok(frontier)
    }

    /// Registers an exactly evaluated child as a sibling candidate for its
    /// parent, keeping the smallest joint entropy (the tightest bound
    /// donor).
    fn register_sibling(&mut self, parent: &[usize], added: usize, h_joint: f64) {
        if self.mode != Mode::Unsupervised {
            return;
        }
        match self.sibling_best.get(parent) {
            Some(best) if best.h_joint <= h_joint => {}
            _ => {
                self.sibling_best
                    .insert(parent.to_vec(), SiblingKnowledge { attr: added, h_joint });
            }
        }
    }

    /// Bound-based classification p-values for a candidate, paired so the
    /// verdict cases stay sound: the lower metric bound gets the larger
    /// plausible degrees of freedom, the upper bound the smaller.
    fn bound_pvalues(
        &mut self,
        parent: &SearchNode,
        child: &[usize],
        added: usize,
    ) -> Result<(pruning::BoundPair, PValue, PValue)> {
        self.counters.bound_evaluations += 1;
        match self.mode {
            Mode::Unsupervised => {
                let parent_info = ParentKnowledge {
                    tci_upper: parent.metric_upper,
                    h_upper: parent.h_upper,
                };
                let sibling = self.sibling_best.get(&parent.attrs).copied();
                let bounds = pruning::tci_bounds(
                    &parent.attrs,
                    added,
                    &parent_info,
                    sibling.as_ref(),
                    &mut self.caches,
                )?;
                let cards: Vec<u32> =
                    child.iter().map(|&a| self.ds.observed_states(a)).collect();
                let p_lower = significance::pvalue_tci(bounds.lower, self.n, &cards)?;
                let p_upper = significance::pvalue_tci(bounds.upper, self.n, &cards)?;
                Ok((bounds, p_upper, p_lower))
            }
            Mode::Supervised => {
                let class = self.class.expect("supervised engine has a class");
                let bounds = pruning::caci_bounds(child, class, &mut self.caches)?;
                let card_product = child
                    .iter()
                    .map(|&a| self.ds.observed_states(a) as u128)
                    .product::<u128>()
                    .min(self.n as u128) as u64;
                let support_hi = card_product.max(2);
                let support_lo = parent
                    .support_lo
                    .max(self.ds.observed_states(added) as u64)
                    .max(2);
                let p_lower =
                    significance::pvalue_caci(bounds.lower, self.n, support_hi, self.class_card)?;
                let p_upper =
                    significance::pvalue_caci(bounds.upper, self.n, support_lo, self.class_card)?;
                Ok((bounds, p_upper, p_lower))
            }
        }
    }

    fn run(&mut self) -> Result<()> {
        let mut frontier = self.seed()?;
        let mut pred_len = 2;
        while !frontier.is_empty() && self.order_of(pred_len + 1) <= self.max_order {
            let mut next: Vec<SearchNode> = Vec::new();
            let parents = std::mem::take(&mut frontier);
            for parent in &parents {
                let last = *parent.attrs.last().expect("frontier nodes are nonempty");
                for j in last + 1..self.ds.attribute_count() {
                    if Some(j) == self.class {
                        continue;
                    }
                    let mut child = parent.attrs.clone();
                    child.push(j);
                    self.counters.nodes_expanded += 1;
                    if !pruning::sample_size_ok(self.n, &self.gate_cards(&child)) {
                        self.counters.nodes_pruned += 1;
                        self.counters.pruned_sample += 1;
                        continue;
                    }
                    if let Some(node) = self.classify_child(parent, child, j)? {
                        next.push(node);
                    }
                }
            }
            frontier = next;
            pred_len += 1;
        }
        Ok(())
    }

    /// Classifies one generated child and returns the frontier node when it
    /// survives.
    fn classify_child(
        &mut self,
        parent: &SearchNode,
        child: Vec<usize>,
        added: usize,
    ) -> Result<Option<SearchNode>> {
        if self.use_bounds {
            let (bounds, p_upper, p_lower) = self.bound_pvalues(parent, &child, added)?;
            let case =
                pruning::classify_case(&p_upper, &p_lower, self.alpha_high, self.alpha_low)?;
            match case.action {
                BoundAction::HandleHsc => {
                    self.counters.bound_only_verdicts += 1;
                    // The node is highly significant on the bound
                    // certificate alone. Only COI/SCOI candidates need the
                    // exact metric (a Θ entry carries it, and the SCOI test
                    // needs the increment over the one HSC subset); when
                    // the subset pattern already fails both conditions the
                    // subtree is pruned without touching the full table.
                    let (hsc_subsets, all_others_nsc) = self.subset_triage(&child)?;
                    if hsc_subsets.len() >= 2 || !all_others_nsc {
                        self.record(&child, Verdict::Hsc, None);
                        self.counters.nodes_pruned += 1;
                        self.counters.pruned_hsc_redundant += 1;
                        return Ok(None);
                    }
                    let ex = self.exact_eval(&child)?;
                    debug_assert!(
                        ex.pvalue.is_below(self.alpha_high),
                        "bound-certified HSC must verify exactly"
                    );
                    self.register_sibling(&parent.attrs, added, ex.h_joint);
                    self.handle_hsc(&child, ex)
                }
                BoundAction::ComputeExact => {
                    let ex = self.exact_eval(&child)?;
                    self.register_sibling(&parent.attrs, added, ex.h_joint);
                    let verdict =
                        pruning::verdict_from_p(&ex.pvalue, self.alpha_high, self.alpha_low);
                    self.dispatch_exact(child, ex, verdict)
                }
                BoundAction::HandleMscNsc => {
                    self.counters.bound_only_verdicts += 1;
                    let verdict = case.verdict.expect("cases 5 and 6 carry a verdict");
                    self.record(&child, verdict, None);
                    match verdict {
                        Verdict::Msc => {
                            self.counters.nodes_pruned += 1;
                            self.counters.pruned_msc += 1;
                            Ok(None)
                        }
                        Verdict::Nsc => {
                            if self.mode == Mode::Supervised
                                && case.case_id == 5
                                && pruning::saturated_at_class_entropy(bounds.upper, self.h_class)
                            {
                                // The bound can never leave the class-entropy
                                // ceiling, so no descendant can become
                                // significant either.
                                self.counters.nodes_pruned += 1;
                                self.counters.pruned_saturated += 1;
                                return Ok(None);
                            }
                            self.counters.nodes_stored += 1;
                            let h_upper = self.caches.ubh(&child)?;
                            Ok(Some(SearchNode {
                                attrs: child,
                                metric_upper: bounds.upper,
                                h_upper,
                                support_lo: parent
                                    .support_lo
                                    .max(self.ds.observed_states(added) as u64),
                            }))
                        }
                        Verdict::Hsc => unreachable!("HandleMscNsc never carries HSC"),
                    }
                }
            }
        } else {
            let ex = self.exact_eval(&child)?;
            self.register_sibling(&parent.attrs, added, ex.h_joint);
            let verdict = pruning::verdict_from_p(&ex.pvalue, self.alpha_high, self.alpha_low);
            self.dispatch_exact(child, ex, verdict)
        }
    }

    fn dispatch_exact(
        &mut self,
        child: Vec<usize>,
        ex: ExactMetric,
        verdict: Verdict,
    ) -> Result<Option<SearchNode>> {
        match verdict {
            Verdict::Hsc => self.handle_hsc(&child, ex),
            Verdict::Msc => {
                self.record(&child, verdict, Some(ex));
                self.counters.nodes_pruned += 1;
                self.counters.pruned_msc += 1;
                Ok(None)
            }
            Verdict::Nsc => {
                self.record(&child, verdict, Some(ex));
                self.counters.nodes_stored += 1;
                Ok(Some(SearchNode {
                    support_lo: ex.pred_joint_card,
                    metric_upper: ex.metric,
                    h_upper: ex.h_joint,
                    attrs: child,
                }))
            }
        }
    }
}

/// Largest combination order to explore: the configured cap, or the largest
/// order some combination could pass the samples-per-cell rule with (using
/// the smallest declared cardinalities), capped at 6. Orders count the
/// class attribute in supervised mode.
fn effective_max_order(ds: &Dataset, config: &MiningConfig, mode: Mode) -> usize {
    let class = ds.class_index().filter(|_| mode == Mode::Supervised);
    let mut pred_cards: Vec<u64> = (0..ds.attribute_count())
        .filter(|&a| Some(a) != class)
        .map(|a| ds.states(a) as u64)
        .collect();
    pred_cards.sort_unstable();
    let hard_cap = pred_cards.len() + usize::from(class.is_some());
    if let Some(k) = config.max_order {
        return k.min(hard_cap).max(2);
    }
    let n = ds.n() as u128;
    let mut best = 2;
    for k in 2..=hard_cap.min(6) {
        let pred_slots = k - usize::from(class.is_some());
        if pred_slots > pred_cards.len() {
            break;
        }
        let mut v: u128 = class.map_or(1, |c| ds.states(c) as u128);
        for &card in &pred_cards[..pred_slots] {
            v *= card as u128;
        }
        if 5 * v <= n {
            best = k;
        } else {
            break;
        }
    }
    best
}

/// Mines Θ (COI/SCOI sets) from an already-reduced dataset, unsupervised.
pub fn cim(ds: &Dataset, config: &MiningConfig) -> Result<MiningOutcome> {
    let mut engine = Engine::new(ds, config, Mode::Unsupervised)?;
    engine.run()?;
    Ok(MiningOutcome {
        theta: std::mem::take(&mut engine.theta),
        counters: engine.counters,
        mode: Mode::Unsupervised,
        max_order: engine.max_order,
    })
}

/// Mines Θ (COI/SCOI sets against the class) from an already-reduced
/// dataset, supervised.
pub fn cim_ca(ds: &Dataset, config: &MiningConfig) -> Result<MiningOutcome> {
    let mut engine = Engine::new(ds, config, Mode::Supervised)?;
    engine.run()?;
    Ok(MiningOutcome {
        theta: std::mem::take(&mut engine.theta),
        counters: engine.counters,
        mode: Mode::Supervised,
        max_order: engine.max_order,
    })
}

/// The interaction transform: KWII for every subset of `nu` of size 2..=K
/// via the in-place subset-difference recurrence over joint entropies.
///
/// An array indexed by subsets of `nu` starts as joint entropies; one pass
/// per attribute subtracts each subset's value from its one-larger
/// supersets, leaving the negated interaction information, which is negated
/// on output. Subsets smaller than 2 are dropped from the result.
pub fn iim(ds: &Dataset, nu: &[usize], k: usize) -> Result<BTreeMap<Vec<usize>, f64>> {
    if k < 2 {
        return Err(Error::invalid_config("interaction transform needs K ≥ 2"));
    }
    let set = AttributeSet::new(nu.to_vec())
        .map_err(|_| Error::invalid_input("nu must be sorted, distinct, nonempty"))?;
    if set.max_index() >= ds.attribute_count() {
        return Err(Error::invalid_input("nu contains an out-of-range attribute"));
    }
    let len = nu.len();
    if len < 2 {
        return Err(Error::invalid_input("nu needs at least two attributes"));
    }
    if len > 20 {
        return Err(Error::invalid_config(format!(
            "interaction transform over {len} attributes is too large (limit 20)"
        )));
    }
    let k = k.min(len);
    // The samples-per-cell rule must admit the largest K-subset.
    let mut cards: Vec<u64> = nu.iter().map(|&a| ds.states(a) as u64).collect();
    cards.sort_unstable_by(|a, b| b.cmp(a));
    let v_max: u128 = cards[..k].iter().map(|&c| c as u128).product();
    if (ds.n() as u128) < 5 * v_max {
        return Err(Error::invalid_config(format!(
            "order {k} violates the samples-per-cell rule (N = {}, V = {v_max})",
            ds.n()
        )));
    }
    let full = 1u64 << len;
    let mut lambda = vec![0.0f64; full as usize];
    for mask in 1..full {
        let size = mask.count_ones() as usize;
        if size > k {
            continue;
        }
        let subset: Vec<usize> = (0..len).filter(|&b| mask & (1 << b) != 0).map(|b| nu[b]).collect();
        lambda[mask as usize] = ContingencyTable::from_dataset_axes(ds, &subset)?.entropy();
    }
    for bit in 0..len {
        for mask in 0..full {
            if mask & (1 << bit) != 0 {
                continue;
            }
            let size = mask.count_ones() as usize;
            if size == 0 || size >= k {
                continue;
            }
            lambda[(mask | (1 << bit)) as usize] -= lambda[mask as usize];
        }
    }
    let mut out = BTreeMap::new();
    for mask in 1..full {
        let size = mask.count_ones() as usize;
        if !(2..=k).contains(&size) {
            continue;
        }
        let subset: Vec<usize> =
            (0..len).filter(|&b| mask & (1 << b) != 0).map(|b| nu[b]).collect();
        out.insert(subset, -lambda[mask as usize]);
    }
    Ok(out)
}

/// Wall-clock stage breakdown of a mining run, in milliseconds.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StageTimings {
    pub reduce_ms: u128,
    pub search_ms: u128,
    pub transform_ms: u128,
    pub permutation_ms: u128,
}

/// Everything a mining run produces.
#[derive(Debug)]
pub struct MineOutput {
    /// TCI/CACI spectrum: one entry per Θ member.
    pub theta_spectrum: Vec<SpectrumEntry>,
    /// KWII spectrum: permutation-significant interaction entries.
    pub kwii_spectrum: Vec<SpectrumEntry>,
    /// Θ itself (indices into the reduced dataset).
    pub theta: Vec<MinedCombination>,
    /// Redundancy covers, when reduction ran.
    pub covers: Option<CoverMap>,
    /// Original indices of the attributes kept after reduction.
    pub kept: Vec<usize>,
    /// The reduced dataset the search ran on.
    pub reduced: Dataset,
    /// Search accounting.
    pub counters: PruneCounters,
    /// Attributes present in Θ (reduced indices).
    pub nu: Vec<usize>,
    /// Interaction-transform order actually used (0 when Θ was empty).
    pub k_iim: usize,
    /// Why the interaction stage was skipped, when it was.
    pub kwii_skipped: Option<String>,
    /// The search order cap in effect.
    pub max_order: usize,
    /// Stage timings.
    pub timings: StageTimings,
}

impl MineOutput {
    /// Both spectra as one list, Θ entries first.
    pub fn entries(&self) -> Vec<SpectrumEntry> {
        let mut all = self.theta_spectrum.clone();
        all.extend(self.kwii_spectrum.iter().cloned());
        all
    }
}

/// SplitMix-style mixing of the run seed with a combination index, giving
/// each permutation test an independent deterministic stream.
fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn names_of(ds: &Dataset, indices: &[usize]) -> String {
    indices
        .iter()
        .map(|&a| ds.attribute(a).name.as_str())
        .collect::<Vec<_>>()
        .join(";")
}

/// End-to-end mining: redundancy reduction, breadth-first search,
/// interaction transform, and the permutation filter, producing both
/// spectra deterministically (by order, then attribute sequence) for any
/// worker count.
pub fn mine(ds: &Dataset, config: &MiningConfig) -> Result<MineOutput> {
    config.validate()?;
    let constant = ds.constant_attributes();
    if !constant.is_empty() {
        return Err(Error::ConstantAttributes(
            constant.iter().map(|&a| ds.attribute(a).name.clone()).collect(),
        ));
    }
    if config.mode == Mode::Supervised && ds.class_index().is_none() {
        return Err(Error::invalid_config("supervised mining requires a class attribute"));
    }

    let t0 = Instant::now();
    let (reduced, kept, covers) = if config.use_redundancy {
        let covers = pruning::build_covers(ds, config.delta, config.mode)?;
        let (reduced, kept) = pruning::select_representatives(ds, &covers)?;
        (reduced, kept, Some(covers))
    } else {
        (ds.clone(), (0..ds.attribute_count()).collect(), None)
    };
    let reduce_ms = t0.elapsed().as_millis();

    let t1 = Instant::now();
    let outcome = match config.mode {
        Mode::Unsupervised => cim(&reduced, config)?,
        Mode::Supervised => cim_ca(&reduced, config)?,
    };
    let search_ms = t1.elapsed().as_millis();

    let mut theta = outcome.theta;
    theta.sort_by(|a, b| {
        (a.attrs.len(), a.attrs.indices()).cmp(&(b.attrs.len(), b.attrs.indices()))
    });
    let metric_kind = match config.mode {
        Mode::Unsupervised => MetricKind::Tci,
        Mode::Supervised => MetricKind::Caci,
    };
    let theta_spectrum: Vec<SpectrumEntry> = theta
        .iter()
        .map(|mc| SpectrumEntry {
            indices: mc.attrs.indices().to_vec(),
            combination: names_of(&reduced, mc.attrs.indices()),
            order: mc.attrs.len(),
            metric: metric_kind,
            value_bits: mc.metric,
            pvalue: mc.pvalue.p,
            verdict: mc.kind.label(config.mode).to_string(),
        })
        .collect();

    // ν = attributes present in Θ; the transform order starts from the
    // search cap and shrinks until its worst K-subset obeys the
    // samples-per-cell rule.
    let mut nu: Vec<usize> = theta
        .iter()
        .flat_map(|mc| mc.attrs.indices().iter().copied())
        .collect();
    nu.sort_unstable();
    nu.dedup();

    let t2 = Instant::now();
    let mut k_iim = 0;
    let mut kwii_skipped = None;
    let mut kwii_values: Vec<(Vec<usize>, f64)> = Vec::new();
    if nu.len() < 2 {
        if !theta.is_empty() {
            kwii_skipped = Some("fewer than two attributes appear in Θ".to_string());
        }
    } else if nu.len() > 20 {
        kwii_skipped = Some(format!(
            "Θ spans {} attributes; the interaction transform is limited to 20",
            nu.len()
        ));
    } else {
        let mut cards: Vec<u128> = nu.iter().map(|&a| reduced.states(a) as u128).collect();
        cards.sort_unstable_by(|a, b| b.cmp(a));
        let n = reduced.n() as u128;
        let mut k = outcome.max_order.min(nu.len()).max(2);
        while k > 2 && cards[..k].iter().product::<u128>() * 5 > n {
            k -= 1;
        }
        if cards[..k].iter().product::<u128>() * 5 <= n {
            k_iim = k;
            let transform = iim(&reduced, &nu, k)?;
            kwii_values = transform
                .into_iter()
                .filter(|(attrs, _)| match config.mode {
                    Mode::Supervised => {
                        let class = reduced.class_index().expect("supervised keeps the class");
                        attrs.contains(&class)
                    }
                    Mode::Unsupervised => true,
                })
                .collect();
            kwii_values.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
        } else {
            kwii_skipped = Some(format!(
                "even order 2 over Θ's attributes violates the samples-per-cell rule (N = {})",
                reduced.n()
            ));
        }
    }
    let transform_ms = t2.elapsed().as_millis();

    // Permutation filter, parallel over combinations with per-combination
    // seeds: results are independent of worker count and execution order.
    let t3 = Instant::now();
    let screen = |(idx, (attrs, value)): (usize, &(Vec<usize>, f64))| -> Result<Option<SpectrumEntry>> {
        let set = AttributeSet::new(attrs.clone())?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, idx as u64));
        let outcome = significance::permutation_screen(
            &reduced,
            &set,
            config.mode,
            config.nperm,
            config.kwii_alpha,
            config.perm_plus_one,
            &mut rng,
        )?;
        Ok(match outcome {
            ScreenOutcome::Retained(report) => Some(SpectrumEntry {
                indices: attrs.clone(),
                combination: names_of(&reduced, attrs),
                order: attrs.len(),
                metric: MetricKind::Kwii,
                value_bits: *value,
                pvalue: report.p,
                verdict: "SIGNIFICANT".to_string(),
            }),
            ScreenOutcome::Rejected { .. } => None,
        })
    };
    let screened: Vec<Option<SpectrumEntry>> = if config.workers == 1 {
        kwii_values
            .iter()
            .enumerate()
            .map(screen)
            .collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::invalid_config(format!("worker pool: {e}")))?;
        pool.install(|| {
            kwii_values
                .par_iter()
                .enumerate()
                .map(screen)
                .collect::<Result<_>>()
        })?
    };
    let kwii_spectrum: Vec<SpectrumEntry> = screened.into_iter().flatten().collect();
    let permutation_ms = t3.elapsed().as_millis();

    Ok(MineOutput {
        theta_spectrum,
        kwii_spectrum,
        theta,
        covers,
        kept,
        reduced,
        counters: outcome.counters,
        nu,
        k_iim,
        kwii_skipped,
        max_order: outcome.max_order,
        timings: StageTimings { reduce_ms, search_ms, transform_ms, permutation_ms },
    })
}
