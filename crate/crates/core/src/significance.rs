//! Significance tests: gamma-tail p-values for TCI/CACI/ΔTCI/ΔCACI and the
//! margin-preserving permutation test for KWII.
//!
//! For sample size `N`, `2 N ln2` times any of the correlation metrics is
//! asymptotically chi-square under the null, i.e. the metric itself follows
//! a gamma distribution with scale `1/(N ln 2)` and shape `df/2`:
//!
//! * TCI over cardinalities `R_1..R_k`: `df = ΠR_i − ΣR_i + k − 1`, the
//!   mutual-independence chi-square degrees of freedom (reduces to
//!   `R_1 R_2 − R_1 − R_2 + 1` at `k = 2`);
//! * CACI of a set with joint cardinality `R_1` against a class with `R_2`
//!   states: `df = R_1 R_2 − R_1 − R_2 + 1`;
//! * ΔCACI from adding attribute `A_k` to predictors with joint cardinality
//!   `|A⃗|`: shape `|A⃗|·(|A_k|−1)(|C|−1)/2`;
//! * ΔTCI is the two-variable TCI of the joint predecessor variable and the
//!   new attribute.
//!
//! Cardinalities passed to these tests should be the *observed* distinct
//! state counts (capped by the declared counts): unobserved states
//! contribute no chi-square cells.
//!
//! KWII has no usable analytic null, so it is tested by permutation: the
//! contingency table is flattened to two axes (a designated member `X` as
//! columns, the joint of all other members as rows) and redrawn from the
//! uniform fixed-margins distribution; the p-value is the fraction of
//! redraws whose KWII reaches the observed value.

use rand::Rng;

use crate::config::Mode;
use crate::data::{AttributeSet, Dataset};
use crate::error::{Error, Result};
use crate::gamma::{gamma_sf, ln_gamma, GammaParams, PValue};
use crate::info::kwii_term_sign;
use crate::table::{ContingencyTable, KahanSum};

/// Outcome of a permutation test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationReport {
    /// KWII of the observed table, in bits.
    pub observed_kwii: f64,
    /// Number of permutations performed.
    pub nperm: u64,
    /// Number of permutations whose KWII was ≥ the observed value.
    pub count_ge: u64,
    /// Permutation p-value (`count_ge / nperm`, or the plus-one variant if
    /// requested).
    pub p: f64,
}

/// Degrees of freedom of the TCI independence test over per-attribute
/// cardinalities `R_1..R_k`: `ΠR_i − ΣR_i + k − 1`.
pub fn df_tci(state_counts: &[u32]) -> Result<u64> {
    if state_counts.len() < 2 {
        return Err(Error::invalid_input("TCI needs at least two attributes"));
    }
    let mut product: u64 = 1;
    let mut sum: u64 = 0;
    for &r in state_counts {
        if r < 2 {
            return Err(Error::invalid_input(format!(
                "cardinality {r} < 2 in {state_counts:?}"
            )));
        }
        product = product.checked_mul(r as u64).ok_or_else(|| {
            Error::invalid_input(format!("cardinality product overflow in {state_counts:?}"))
        })?;
        sum += r as u64;
    }
    Ok(product - sum + state_counts.len() as u64 - 1)
}

/// Degrees of freedom of the two-variable independence test:
/// `R_1 R_2 − R_1 − R_2 + 1 = (R_1 − 1)(R_2 − 1)`.
pub fn df_two_way(r1: u64, r2: u64) -> Result<u64> {
    if r1 < 2 || r2 < 2 {
        return Err(Error::invalid_input(format!(
            "two-way df needs cardinalities ≥ 2, got {r1} and {r2}"
        )));
    }
    Ok((r1 - 1) * (r2 - 1))
}

/// Gamma-tail p-value of a TCI value `t` (bits) over `n` samples with the
/// given per-attribute observed cardinalities.
pub fn pvalue_tci(t: f64, n: u64, state_counts: &[u32]) -> Result<PValue> {
    let df = df_tci(state_counts)?;
    gamma_sf(t.max(0.0), &GammaParams::from_df(df, n)?)
}

/// Gamma-tail p-value of a CACI value `t` (bits) over `n` samples, where
/// `joint_states` is the observed joint cardinality of the predictor set
/// and `class_states` the observed class cardinality.
pub fn pvalue_caci(t: f64, n: u64, joint_states: u64, class_states: u64) -> Result<PValue> {
    let df = df_two_way(joint_states, class_states)?;
    gamma_sf(t.max(0.0), &GammaParams::from_df(df, n)?)
}

/// Gamma-tail p-value of a ΔCACI increment (bits) when attribute `A_k`
/// joins a predictor vector with observed joint cardinality
/// `joint_parent_states`: shape `|A⃗|·(|A_k|−1)(|C|−1)/2`.
pub fn pvalue_delta_caci(
    delta: f64,
    n: u64,
    joint_parent_states: u64,
    ak_states: u64,
    class_states: u64,
) -> Result<PValue> {
    if joint_parent_states < 1 {
        return Err(Error::invalid_input("joint parent cardinality must be ≥ 1"));
    }
    if ak_states < 2 || class_states < 2 {
        return Err(Error::invalid_input(format!(
            "ΔCACI needs cardinalities ≥ 2, got A_k = {ak_states}, C = {class_states}"
        )));
    }
    let df = joint_parent_states * (ak_states - 1) * (class_states - 1);
    gamma_sf(delta.max(0.0), &GammaParams::from_df(df, n)?)
}

/// Gamma-tail p-value of a ΔTCI increment (bits): the increment is the
/// two-variable TCI between the joint predecessor variable (observed joint
/// cardinality `joint_x_states`) and the new attribute.
pub fn pvalue_delta_tci(delta: f64, n: u64, joint_x_states: u64, ak_states: u64) -> Result<PValue> {
    let df = df_two_way(joint_x_states, ak_states)?;
    gamma_sf(delta.max(0.0), &GammaParams::from_df(df, n)?)
}

/// A two-axis contingency table in dense row-major layout, the working
/// representation for margin-preserving shuffles.
#[derive(Debug, Clone)]
pub struct TwoAxisTable {
    /// Number of row states (joint states of the non-column members).
    pub rows: usize,
    /// Number of column states.
    pub cols: usize,
    /// Dense counts, row-major (`counts[r * cols + c]`).
    pub counts: Vec<u64>,
    /// Row sums.
    pub row_sums: Vec<u64>,
    /// Column sums.
    pub col_sums: Vec<u64>,
}

impl TwoAxisTable {
    /// Builds from dense counts.
    pub fn new(rows: usize, cols: usize, counts: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 || counts.len() != rows * cols {
            return Err(Error::invalid_input("two-axis table shape mismatch"));
        }
        let mut row_sums = vec![0u64; rows];
        let mut col_sums = vec![0u64; cols];
        for r in 0..rows {
            for c in 0..cols {
                row_sums[r] += counts[r * cols + c];
                col_sums[c] += counts[r * cols + c];
            }
        }
        Ok(TwoAxisTable { rows, cols, counts, row_sums, col_sums })
    }

    /// Builds from a two-axis [`ContingencyTable`] (axis 0 = rows).
    pub fn from_table(table: &ContingencyTable) -> Result<Self> {
        if table.axis_count() != 2 {
            return Err(Error::invalid_input(format!(
                "expected a 2-axis table, got {} axes",
                table.axis_count()
            )));
        }
        let rows = table.cards()[0] as usize;
        let cols = table.cards()[1] as usize;
        Self::new(rows, cols, table.to_dense_counts()?)
    }

    /// Total count.
    pub fn total(&self) -> u64 {
        self.row_sums.iter().sum()
    }
}

/// Natural log of the binomial coefficient `C(n, k)` for `k ≤ n`.
fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Exact hypergeometric draw: the number of successes among `draws` items
/// taken without replacement from a population of `pop` items containing
/// `succ` successes.
///
/// Inverse transform over the support ordered outward from the mode,
/// advancing with the pmf ratio recurrence: exact in distribution (within
/// f64 rounding of the pmf terms) at an expected cost of `O(sd)` recurrence
/// steps per draw. Approximate rejection samplers are not good enough here:
/// the permutation null is built from millions of these draws and a
/// relative bias of even a fraction of a percent per cell shows up as a
/// systematic p-value error.
fn hypergeometric_draw<R: Rng>(pop: u64, succ: u64, draws: u64, rng: &mut R) -> u64 {
    debug_assert!(succ <= pop && draws <= pop);
    let lo = (draws + succ).saturating_sub(pop);
    let hi = draws.min(succ);
    if lo == hi {
        return lo;
    }
    let fail = pop - succ;
    let mode = ((draws + 1) as u128 * (succ + 1) as u128 / (pop + 2) as u128) as u64;
    let mode = mode.clamp(lo, hi);
    let pmf_mode =
        (ln_choose(succ, mode) + ln_choose(fail, draws - mode) - ln_choose(pop, draws)).exp();
    let mut u = rng.gen::<f64>() - pmf_mode;
    if u <= 0.0 {
        return mode;
    }
    // Two frontiers walk away from the mode; each step consumes the larger
    // remaining side first (the visit order only partitions the uniform
    // variate, it does not change the law).
    let (mut up_k, mut up_p) = (mode, pmf_mode);
    let (mut down_k, mut down_p) = (mode, pmf_mode);
    loop {
        let can_up = up_k < hi;
        let can_down = down_k > lo;
        if can_up && (!can_down || up_p >= down_p) {
            up_p *= (succ - up_k) as f64 * (draws - up_k) as f64
                / ((up_k + 1) as f64 * (fail + up_k + 1 - draws) as f64);
            up_k += 1;
            u -= up_p;
            if u <= 0.0 {
                return up_k;
            }
        } else if can_down {
            down_p *= down_k as f64 * (fail + down_k - draws) as f64
                / ((succ - down_k + 1) as f64 * (draws - down_k + 1) as f64);
            down_k -= 1;
            u -= down_p;
            if u <= 0.0 {
                return down_k;
            }
        } else {
            // The support is exhausted with ~1e-15 of unconsumed mass from
            // accumulated rounding; attribute it to the mode.
            return mode;
        }
    }
}

/// Draws a table from the uniform fixed-margins distribution into `out`,
/// returning the number of per-cell sampling steps performed (the
/// linear-cost counter: `(rows − 1) · (cols − 1)` cells are sampled, the
/// rest are forced by the margins).
///
/// The draw is sequential conditional sampling: filling rows in order, each
/// free cell is multivariate-hypergeometric given the counts still
/// unassigned, which yields exactly the independence-conditional
/// distribution over tables with the observed margins.
pub fn shuffle_into<R: Rng>(src: &TwoAxisTable, out: &mut Vec<u64>, rng: &mut R) -> Result<u64> {
    let (rows, cols) = (src.rows, src.cols);
    out.clear();
    out.resize(rows * cols, 0);
    let mut col_rem = src.col_sums.clone();
    let mut total_rem: u64 = src.total();
    let mut ops: u64 = 0;
    for r in 0..rows {
        let mut row_rem = src.row_sums[r];
        if r == rows - 1 {
            // Margins force the final row.
            for c in 0..cols {
                out[r * cols + c] = col_rem[c];
            }
            break;
        }
        let mut pop = total_rem;
        for c in 0..cols {
            if c == cols - 1 {
                // Margin forces the final cell of the row.
                out[r * cols + c] = row_rem;
                col_rem[c] -= row_rem;
                break;
            }
            ops += 1;
            let successes = col_rem[c];
            let draw = if row_rem == 0 || successes == 0 {
                0
            } else if row_rem == pop {
                successes
            } else if successes == pop {
                row_rem
            } else {
                hypergeometric_draw(pop, successes, row_rem, rng)
            };
            out[r * cols + c] = draw;
            col_rem[c] -= draw;
            row_rem -= draw;
            pop -= successes;
        }
        total_rem -= src.row_sums[r];
    }
    Ok(ops)
}

/// Draws one margin-preserving shuffle of a two-axis [`ContingencyTable`].
pub fn shuffle_table<R: Rng>(table: &ContingencyTable, rng: &mut R) -> Result<ContingencyTable> {
    let src = TwoAxisTable::from_table(table)?;
    let mut out = Vec::new();
    shuffle_into(&src, &mut out, rng)?;
    ContingencyTable::from_counts(table.cards().to_vec(), out)
}

/// Chooses the member of `s` used as the shuffled (column) axis:
/// the class attribute in supervised mode; otherwise the member with the
/// fewest declared states, ties broken by the highest attribute index.
pub fn choose_shuffle_axis(ds: &Dataset, s: &AttributeSet, mode: Mode) -> Result<usize> {
    match mode {
        Mode::Supervised => {
            let class = ds
                .class_index()
                .ok_or_else(|| Error::invalid_config("supervised mode requires a class"))?;
            if !s.contains(class) {
                return Err(Error::invalid_config(
                    "supervised permutation target must contain the class attribute",
                ));
            }
            Ok(class)
        }
        Mode::Unsupervised => {
            let mut best = s.indices()[0];
            for &i in s.indices() {
                let (ci, cb) = (ds.states(i), ds.states(best));
                if ci < cb || (ci == cb && i > best) {
                    best = i;
                }
            }
            Ok(best)
        }
    }
}

/// Internal engine for KWII permutation tests over one attribute set.
///
/// Built once per combination (one data scan); each permutation then costs
/// `O(cells · 2^k)` table-only work. Subset entropies for sub-masks that do
/// not involve the shuffled axis are fixed by the preserved margins and are
/// computed once.
struct KwiiPermuter {
    two_axis: TwoAxisTable,
    k: usize,
    /// For each mask over set members (bit `m` = member `m` in the set's
    /// sorted order), a per-cell map from two-axis cell index to the
    /// marginal bucket index, plus the bucket count. Masks not containing
    /// the shuffled member are `None` (their entropy is margin-fixed).
    mask_maps: Vec<Option<(Vec<u32>, usize)>>,
    /// Pre-summed entropy contributions of all masks whose entropy is
    /// invariant under shuffling (signed by the KWII coefficient).
    fixed_term: f64,
    /// Scratch buffers per shuffling-dependent mask.
    buckets: Vec<Vec<u64>>,
}

impl KwiiPermuter {
    fn new(ds: &Dataset, s: &AttributeSet, shuffle_axis: usize) -> Result<Self> {
        let k = s.len();
        let members = s.indices();
        let x_pos = members.iter().position(|&i| i == shuffle_axis).unwrap();
        // Axis order: all non-X members (sorted), then X as the fast axis,
        // so the dense layout is exactly row-major (rows, cols).
        let mut axes: Vec<usize> = members.iter().copied().filter(|&i| i != shuffle_axis).collect();
        axes.push(shuffle_axis);
        let full = ContingencyTable::from_dataset_axes(ds, &axes)?;
        let cols = ds.states(shuffle_axis) as usize;
        let cells_u64: u64 = axes.iter().map(|&a| ds.states(a) as u64).product();
        if cells_u64 > 4_000_000 {
            return Err(Error::TableTooLarge(format!(
                "{cells_u64} cells is too large for the permutation engine"
            )));
        }
        let cells = cells_u64 as usize;
        let rows = cells / cols;
        let two_axis = TwoAxisTable::new(rows, cols, full.to_dense_counts()?)?;

        // Per-member codes for every cell, in the *member* (sorted-set)
        // order so mask bits are stable regardless of which member is X.
        let member_cards: Vec<usize> = members.iter().map(|&i| ds.states(i) as usize).collect();
        let mut member_pos_in_axes = vec![0usize; k];
        for (m, &attr) in members.iter().enumerate() {
            member_pos_in_axes[m] = axes.iter().position(|&a| a == attr).unwrap();
        }
        let mut axis_strides = vec![1u64; k];
        for i in (0..k - 1).rev() {
            axis_strides[i] = axis_strides[i + 1] * ds.states(axes[i + 1]) as u64;
        }

        let nmasks = 1usize << k;
        let mut mask_maps: Vec<Option<(Vec<u32>, usize)>> = Vec::with_capacity(nmasks);
        mask_maps.push(None); // empty mask
        let mut fixed = KahanSum::new();
        let n_total = two_axis.total();
        for mask in 1..nmasks {
            let depends_on_x = mask >> x_pos & 1 == 1;
            // Bucket index layout: mixed radix over the mask's members.
            let mut stride = 1usize;
            let mut strides = vec![0usize; k];
            for m in (0..k).rev() {
                if mask >> m & 1 == 1 {
                    strides[m] = stride;
                    stride *= member_cards[m];
                }
            }
            let bucket_count = stride;
            let map: Vec<u32> = (0..cells)
                .map(|cell| {
                    let mut idx = 0usize;
                    for m in 0..k {
                        if mask >> m & 1 == 1 {
                            let code = (cell as u64 / axis_strides[member_pos_in_axes[m]])
                                % ds.states(members[m]) as u64;
                            idx += code as usize * strides[m];
                        }
                    }
                    idx as u32
                })
                .collect();
            if depends_on_x {
                mask_maps.push(Some((map, bucket_count)));
            } else {
                // Entropy fixed by the preserved row margins: fold it into
                // the constant term once.
                let mut buckets = vec![0u64; bucket_count];
                for (cell, &cnt) in two_axis.counts.iter().enumerate() {
                    buckets[map[cell] as usize] += cnt;
                }
                let h = entropy_of_counts(&buckets, n_total);
                fixed.add(kwii_term_sign(k, mask.count_ones() as usize) * h);
                mask_maps.push(None);
            }
        }
        let buckets = mask_maps
            .iter()
            .map(|m| vec![0u64; m.as_ref().map_or(0, |(_, n)| *n)])
            .collect();
        Ok(KwiiPermuter { two_axis, k, mask_maps, fixed_term: fixed.total(), buckets })
    }

    /// KWII of an arbitrary cell vector laid out like the two-axis table.
    fn kwii_of(&mut self, counts: &[u64]) -> f64 {
        let n_total = self.two_axis.total();
        let mut acc = KahanSum::new();
        acc.add(self.fixed_term);
        for mask in 1..(1usize << self.k) {
            if let Some((map, _)) = &self.mask_maps[mask] {
                let buckets = &mut self.buckets[mask];
                buckets.iter_mut().for_each(|b| *b = 0);
                for (cell, &cnt) in counts.iter().enumerate() {
                    if cnt > 0 {
                        buckets[map[cell] as usize] += cnt;
                    }
                }
                let h = entropy_of_counts(buckets, n_total);
                acc.add(kwii_term_sign(self.k, mask.count_ones() as usize) * h);
            }
        }
        acc.total()
    }
}

/// Entropy in bits of a raw bucket-count slice with total `n`.
fn entropy_of_counts(buckets: &[u64], n: u64) -> f64 {
    let nf = n as f64;
    let mut acc = KahanSum::new();
    for &c in buckets {
        if c > 1 {
            let cf = c as f64;
            acc.add(cf * cf.log2());
        }
    }
    nf.log2() - acc.total() / nf
}

/// Result of an early-stopping permutation screen.
pub enum ScreenOutcome {
    /// The combination is retained: the full run completed with
    /// `p < threshold`.
    Retained(PermutationReport),
    /// The exceedance count passed the point where `p < threshold` became
    /// impossible; the run stopped early.
    Rejected {
        /// Permutations performed before stopping.
        performed: u64,
        /// Exceedances observed before stopping.
        count_ge: u64,
    },
}

/// Full-run permutation p-value for the KWII of `s` (the designated member
/// chosen by [`choose_shuffle_axis`] is shuffled against the joint of the
/// rest). Deterministic in the RNG state.
pub fn permutation_pvalue<R: Rng>(
    ds: &Dataset,
    s: &AttributeSet,
    mode: Mode,
    nperm: u64,
    rng: &mut R,
) -> Result<PermutationReport> {
    permutation_pvalue_with(ds, s, mode, nperm, false, rng)
}

/// As [`permutation_pvalue`] with an explicit p-value rule: `plus_one`
/// reports `(count+1)/(nperm+1)` instead of the plain fraction.
pub fn permutation_pvalue_with<R: Rng>(
    ds: &Dataset,
    s: &AttributeSet,
    mode: Mode,
    nperm: u64,
    plus_one: bool,
    rng: &mut R,
) -> Result<PermutationReport> {
    if nperm < 1 {
        return Err(Error::invalid_config("nperm must be at least 1"));
    }
    if s.len() < 2 {
        return Err(Error::invalid_input("permutation test needs at least two members"));
    }
    let axis = choose_shuffle_axis(ds, s, mode)?;
    let mut permuter = KwiiPermuter::new(ds, s, axis)?;
    let observed_counts = permuter.two_axis.counts.clone();
    let observed = permuter.kwii_of(&observed_counts);
    let src = permuter.two_axis.clone();
    let mut scratch: Vec<u64> = Vec::new();
    let mut count_ge: u64 = 0;
    for _ in 0..nperm {
        shuffle_into(&src, &mut scratch, rng)?;
        if permuter.kwii_of(&scratch) >= observed {
            count_ge += 1;
        }
    }
    let p = if plus_one {
        (count_ge + 1) as f64 / (nperm + 1) as f64
    } else {
        count_ge as f64 / nperm as f64
    };
    Ok(PermutationReport { observed_kwii: observed, nperm, count_ge, p })
}

/// Early-stopping screen used by the miner's KWII filter: identical to the
/// full run while the combination can still pass `p < threshold`, but stops
/// as soon as the exceedance count rules it out. Retained combinations have
/// completed all `nperm` shuffles, so their reported p-values match the
/// full-run values exactly.
pub fn permutation_screen<R: Rng>(
    ds: &Dataset,
    s: &AttributeSet,
    mode: Mode,
    nperm: u64,
    threshold: f64,
    plus_one: bool,
    rng: &mut R,
) -> Result<ScreenOutcome> {
    if nperm < 1 {
        return Err(Error::invalid_config("nperm must be at least 1"));
    }
    let axis = choose_shuffle_axis(ds, s, mode)?;
    let mut permuter = KwiiPermuter::new(ds, s, axis)?;
    let observed_counts = permuter.two_axis.counts.clone();
    let observed = permuter.kwii_of(&observed_counts);
    let src = permuter.two_axis.clone();
    // Retention requires p < threshold. Under the plain rule that is
    // count_ge < threshold·nperm, so stop once count_ge reaches
    // ceil(threshold·nperm); adjust for the plus-one rule.
    let limit = if plus_one {
        (threshold * (nperm + 1) as f64).ceil() as u64
    } else {
        (threshold * nperm as f64).ceil() as u64
    };
    let mut scratch: Vec<u64> = Vec::new();
    let mut count_ge: u64 = 0;
    for i in 0..nperm {
        shuffle_into(&src, &mut scratch, rng)?;
        if permuter.kwii_of(&scratch) >= observed {
            count_ge += 1;
            let effective = if plus_one { count_ge + 1 } else { count_ge };
            if effective >= limit && limit > 0 {
                return Ok(ScreenOutcome::Rejected { performed: i + 1, count_ge });
            }
        }
    }
    let p = if plus_one {
        (count_ge + 1) as f64 / (nperm + 1) as f64
    } else {
        count_ge as f64 / nperm as f64
    };
    if p < threshold {
        Ok(ScreenOutcome::Retained(PermutationReport { observed_kwii: observed, nperm, count_ge, p }))
    } else {
        Ok(ScreenOutcome::Rejected { performed: nperm, count_ge })
    }
}
