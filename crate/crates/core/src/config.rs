//! Mining configuration shared by the library and the CLI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mining mode: unsupervised (TCI over attribute sets) or supervised (CACI
/// between attribute sets and a designated class attribute).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Unsupervised,
    Supervised,
}

/// Full configuration of a mining run.
///
/// Orders are total set sizes: in supervised mode the class attribute counts
/// toward `max_order`, so `max_order = 3` explores up to two predictor
/// attributes plus the class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiningConfig {
    /// Unsupervised (TCI) or supervised (CACI) mining.
    pub mode: Mode,
    /// Highly-significant threshold; combinations below it are HSC.
    pub alpha_high: f64,
    /// Non-significant threshold; combinations at or above it are NSC.
    pub alpha_low: f64,
    /// Redundancy threshold Δ: attributes with normalized redundancy score
    /// ≤ −Δ are covered by one representative.
    pub delta: f64,
    /// Maximum combination order K. `None` selects the largest order that
    /// passes the samples-per-cell rule, capped at 6.
    pub max_order: Option<usize>,
    /// Number of table shuffles per KWII permutation test.
    pub nperm: u64,
    /// Permutation significance level for retaining KWII spectrum entries.
    pub kwii_alpha: f64,
    /// Seed for all stochastic stages (permutation shuffles).
    pub seed: u64,
    /// Worker threads for the permutation stage; 0 means all available.
    /// Results are identical for any worker count.
    pub workers: usize,
    /// Name of the class column (supervised mode).
    pub class_column: Option<String>,
    /// Enable entropy-bound pruning of the search lattice.
    pub use_bounds: bool,
    /// Enable redundancy-cover reduction of the attribute list.
    pub use_redundancy: bool,
    /// Report permutation p-values as `(count+1)/(nperm+1)` instead of the
    /// plain fraction `count/nperm`.
    pub perm_plus_one: bool,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            mode: Mode::Unsupervised,
            alpha_high: 1e-8,
            alpha_low: 1e-2,
            delta: 0.75,
            max_order: None,
            nperm: 10_000,
            kwii_alpha: 1e-4,
            seed: 0,
            workers: 0,
            class_column: None,
            use_bounds: true,
            use_redundancy: true,
            perm_plus_one: false,
        }
    }
}

impl MiningConfig {
    /// Validates threshold ordering and ranges.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_high > 0.0 && self.alpha_high < self.alpha_low && self.alpha_low < 1.0) {
            return Err(Error::invalid_config(format!(
                "required: 0 < alpha_high < alpha_low < 1, got {} and {}",
                self.alpha_high, self.alpha_low
            )));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::invalid_config(format!(
                "delta must lie in [0, 1], got {}",
                self.delta
            )));
        }
        if self.nperm < 1 {
            return Err(Error::invalid_config("nperm must be at least 1"));
        }
        if !(self.kwii_alpha > 0.0 && self.kwii_alpha < 1.0) {
            return Err(Error::invalid_config(format!(
                "kwii_alpha must lie in (0, 1), got {}",
                self.kwii_alpha
            )));
        }
        if let Some(k) = self.max_order {
            if k < 2 {
                return Err(Error::invalid_config("max_order must be at least 2"));
            }
        }
        // Supervised runs need a class attribute, but it may be designated
        // either by `class_column` or directly on the Dataset; the miner
        // checks at run time.
        Ok(())
    }
}
