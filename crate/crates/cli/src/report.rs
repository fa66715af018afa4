//! Output writers: spectra CSVs and the JSON run report.
//!
//! Spectra rows are fully formatted here — six decimal places for bit
//! values, scientific notation with six significant digits for p-values —
//! so identical runs produce byte-identical files.

use std::collections::BTreeMap;
use std::path::Path;

use assocmine::miner::{MineOutput, SpectrumEntry};
use assocmine::pruning::CoverMap;
use assocmine::{Dataset, MiningConfig, Mode};
use serde::Serialize;

use crate::error::CliError;

/// Column header shared by both spectra files.
pub const SPECTRUM_HEADER: [&str; 6] =
    ["combination", "order", "metric", "value_bits", "pvalue", "verdict"];

/// Formats one spectrum entry as CSV fields.
fn spectrum_record(entry: &SpectrumEntry) -> [String; 6] {
    [
        entry.combination.clone(),
        entry.order.to_string(),
        entry.metric.label().to_string(),
        format!("{:.6}", entry.value_bits),
        format!("{:.5e}", entry.pvalue),
        entry.verdict.clone(),
    ]
}

/// Writes a spectrum CSV (header always present, entries in given order).
pub fn write_spectrum(path: &Path, entries: &[SpectrumEntry]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    writer
        .write_record(SPECTRUM_HEADER)
        .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    for entry in entries {
        writer
            .write_record(spectrum_record(entry))
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    }
    writer.flush().map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// File name of the Θ spectrum for a mode.
pub fn theta_spectrum_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Unsupervised => "tci_spectrum.csv",
        Mode::Supervised => "caci_spectrum.csv",
    }
}

/// Redundancy covers rendered with attribute names.
#[derive(Debug, Serialize)]
pub struct CoverReport {
    /// Retained representatives, in increasing column order.
    pub representatives: Vec<String>,
    /// Greedy selection order of the representatives.
    pub selection_order: Vec<String>,
    /// For each representative, the attributes its cover removed.
    pub covered: BTreeMap<String, Vec<String>>,
}

impl CoverReport {
    /// Renders a cover map against the original (pre-reduction) dataset.
    pub fn new(ds: &Dataset, covers: &CoverMap) -> Self {
        let name = |a: usize| ds.attribute(a).name.clone();
        let covered = covers
            .representatives
            .iter()
            .map(|&r| {
                (name(r), covers.covers[r].iter().filter(|&&a| a != r).map(|&a| name(a)).collect())
            })
            .collect();
        CoverReport {
            representatives: covers.representatives.iter().map(|&r| name(r)).collect(),
            selection_order: covers.selection_order.iter().map(|&r| name(r)).collect(),
            covered,
        }
    }
}

/// Paths of the emitted spectra, relative to the output directory.
#[derive(Debug, Serialize)]
pub struct SpectraPaths {
    pub theta: String,
    pub kwii: String,
}

/// Machine-readable run report; `counters.nodes_expanded` always equals
/// `counters.nodes_stored + counters.nodes_pruned`.
#[derive(Debug, Serialize)]
pub struct RunReport<'a> {
    /// Echo of the effective mining configuration.
    pub config: &'a MiningConfig,
    /// Input file as given on the command line.
    pub input: String,
    /// Rows ingested (after any missing-row elimination).
    pub rows: usize,
    /// Attribute count before redundancy reduction.
    pub attributes_total: usize,
    /// Attribute names surviving redundancy reduction.
    pub attributes_kept: Vec<String>,
    /// Redundancy covers, when the reduction stage ran.
    pub covers: Option<CoverReport>,
    /// Search accounting.
    pub counters: &'a assocmine::miner::PruneCounters,
    /// Mined Θ combinations (rows of the Θ spectrum).
    pub theta_combinations: usize,
    /// Permutation-retained KWII entries (rows of the KWII spectrum).
    pub kwii_entries: usize,
    /// Attribute names appearing in Θ (the interaction-transform scope).
    pub nu: Vec<String>,
    /// Interaction-transform order actually used (0 when Θ was empty).
    pub k_interaction: usize,
    /// Why the interaction stage was skipped, when it was.
    pub kwii_skipped: Option<&'a String>,
    /// Search order cap in effect.
    pub max_order: usize,
    /// Wall-clock stage breakdown in milliseconds (the one report section
    /// that varies between otherwise identical runs).
    pub timings: &'a assocmine::miner::StageTimings,
    /// Spectra file names within the output directory.
    pub spectra: SpectraPaths,
}

impl<'a> RunReport<'a> {
    /// Assembles the report for one completed mining run. `original` is the
    /// pre-reduction dataset; covers index into it.
    pub fn new(
        config: &'a MiningConfig,
        input: &Path,
        original: &Dataset,
        output: &'a MineOutput,
    ) -> Self {
        let kept =
            output.kept.iter().map(|&a| original.attribute(a).name.clone()).collect();
        let nu = output
            .nu
            .iter()
            .map(|&a| output.reduced.attribute(a).name.clone())
            .collect();
        RunReport {
            config,
            input: input.display().to_string(),
            rows: original.n(),
            attributes_total: original.attribute_count(),
            attributes_kept: kept,
            covers: output.covers.as_ref().map(|c| CoverReport::new(original, c)),
            counters: &output.counters,
            theta_combinations: output.theta_spectrum.len(),
            kwii_entries: output.kwii_spectrum.len(),
            nu,
            k_interaction: output.k_iim,
            kwii_skipped: output.kwii_skipped.as_ref(),
            max_order: output.max_order,
            timings: &output.timings,
            spectra: SpectraPaths {
                theta: theta_spectrum_name(config.mode).to_string(),
                kwii: "kwii_spectrum.csv".to_string(),
            },
        }
    }

    /// Writes the report as pretty-printed JSON.
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::runtime(format!("report serialization: {e}")))?;
        std::fs::write(path, json + "\n")
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}
