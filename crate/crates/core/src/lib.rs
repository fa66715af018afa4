//! Mining statistically significant multivariate associations from discrete
//! tabular data.
//!
//! The crate computes three interaction-information metrics over sets of
//! discrete attributes:
//!
//! * **TCI** — total correlation information, `TCI(S) = sum_i H(A_i) - H(S)`,
//!   the total redundancy among the attributes of `S`;
//! * **CACI** — class-associated correlation information,
//!   `CACI(S; C) = H(S) + H(C) - H(S, C)`, the mutual information between a
//!   set of predictor attributes and a class attribute;
//! * **KWII** — K-way interaction information, the alternating inclusion-
//!   exclusion sum of joint entropies, which isolates the information gained
//!   only when *all* members of a set are considered jointly.
//!
//! Significance of TCI/CACI values is assessed analytically: for discrete
//! data with maximum-likelihood probability estimates, `2 N ln 2` times either
//! metric is asymptotically chi-square distributed under independence, which
//! is expressed here as a gamma distribution with scale `1 / (N ln 2)`.
//! KWII values are filtered by a margin-preserving permutation test.
//!
//! The miner ([`miner::mine`]) enumerates attribute sets breadth-first,
//! pruning by redundancy covers, by a minimum samples-per-cell rule, and by
//! analytic entropy bounds on the metrics, and reports spectra of
//! significant combinations together with the interacting-variable KWII
//! spectrum.
//!
//! [`synth`] generates the synthetic benchmark datasets used by the
//! acceptance tests, and [`oracle`] provides slow, direct-definition
//! reference implementations used to validate the fast paths.

pub mod config;
pub mod data;
pub mod error;
pub mod gamma;
pub mod info;
pub mod miner;
pub mod oracle;
pub mod pruning;
pub mod significance;
pub mod synth;
pub mod table;

pub use config::{MiningConfig, Mode};
pub use data::{AttributeSet, Dataset};
pub use error::{Error, Result};
pub use table::ContingencyTable;
