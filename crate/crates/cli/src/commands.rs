//! Subcommand definitions and orchestration.

use std::path::PathBuf;
use std::time::Instant;

use assocmine::config::{MiningConfig, Mode};
use assocmine::{miner, pruning, synth, Dataset};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::CliError;
use crate::ingest::{ingest_csv, write_dataset_csv, IngestOptions};
use crate::report::{theta_spectrum_name, write_spectrum, RunReport};

/// Environment variable overriding the seed (and nothing else).
pub const SEED_ENV: &str = "ASSOCMINE_SEED";

/// Mine statistically significant correlation and interaction information
/// from discrete tabular data.
#[derive(Debug, Parser)]
#[command(name = "assocmine", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine TCI/CACI and KWII spectra from a CSV dataset.
    Mine(MineArgs),
    /// Generate a synthetic benchmark dataset plus its ground-truth manifest.
    Gen(GenArgs),
    /// Time the search under each pruning strategy (none / redundancy /
    /// bounds / both) on one dataset.
    Bench(BenchArgs),
}

/// Mining mode flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// TCI over attribute sets.
    Unsupervised,
    /// CACI between attribute sets and a class attribute.
    Supervised,
}

impl From<ModeArg> for Mode {
    fn from(arg: ModeArg) -> Mode {
        match arg {
            ModeArg::Unsupervised => Mode::Unsupervised,
            ModeArg::Supervised => Mode::Supervised,
        }
    }
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// Input CSV: header row of attribute names, integer state codes.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory (created if absent).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Mining mode.
    #[arg(long, value_enum, default_value_t = ModeArg::Unsupervised)]
    pub mode: ModeArg,
    /// Class column name (required in supervised mode).
    #[arg(long)]
    pub class: Option<String>,
    /// Highly-significant threshold α_High.
    #[arg(long, default_value_t = 1e-8)]
    pub alpha_high: f64,
    /// Non-significant threshold α_Low.
    #[arg(long, default_value_t = 1e-2)]
    pub alpha_low: f64,
    /// Redundancy threshold Δ for attribute covers.
    #[arg(long, default_value_t = 0.75)]
    pub delta: f64,
    /// Maximum combination order K (class included); defaults to the
    /// largest order passing the samples-per-cell rule.
    #[arg(long)]
    pub max_order: Option<usize>,
    /// Shuffles per KWII permutation test.
    #[arg(long, default_value_t = 10_000)]
    pub nperm: u64,
    /// Permutation significance level for retaining KWII entries.
    #[arg(long, default_value_t = 1e-4)]
    pub kwii_alpha: f64,
    /// Seed for the permutation stage (ASSOCMINE_SEED overrides).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the permutation stage (0 = all cores; results are
    /// identical for any worker count).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Cell token marking a missing value.
    #[arg(long, default_value = "?")]
    pub missing: String,
    /// Drop rows containing missing cells instead of imputing them.
    #[arg(long)]
    pub drop_missing: bool,
    /// Disable entropy-bound pruning of the search lattice.
    #[arg(long)]
    pub no_bounds: bool,
    /// Disable redundancy-cover reduction of the attribute list.
    #[arg(long)]
    pub no_redundancy: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Experiment: xor, unsup_exp2, sup_exp1, redundant, or bench.
    #[arg(long)]
    pub experiment: String,
    /// Rule-violation probability (xor experiment only).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Generator seed (ASSOCMINE_SEED overrides).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (created if absent).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Input CSV: header row of attribute names, integer state codes.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for bench.json (created if absent).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Mining mode.
    #[arg(long, value_enum, default_value_t = ModeArg::Unsupervised)]
    pub mode: ModeArg,
    /// Class column name (required in supervised mode).
    #[arg(long)]
    pub class: Option<String>,
    /// Maximum combination order K; defaults to the samples-per-cell rule.
    #[arg(long)]
    pub max_order: Option<usize>,
    /// Cell token marking a missing value.
    #[arg(long, default_value = "?")]
    pub missing: String,
    /// Drop rows containing missing cells instead of imputing them.
    #[arg(long)]
    pub drop_missing: bool,
}

/// Parses the seed-override environment value, when present.
fn parse_seed_override(value: Option<&str>) -> Result<Option<u64>, CliError> {
    match value {
        None => Ok(None),
        Some(raw) => raw.trim().parse::<u64>().map(Some).map_err(|_| {
            CliError::config(format!(
                "{SEED_ENV} must be a nonnegative integer, got '{raw}'"
            ))
        }),
    }
}

fn seed_from_env() -> Result<Option<u64>, CliError> {
    let value = std::env::var(SEED_ENV).ok();
    parse_seed_override(value.as_deref())
}

/// Rejects mode/class flag combinations that cannot be meant.
fn check_mode_class(mode: Mode, class: Option<&String>) -> Result<(), CliError> {
    match (mode, class) {
        (Mode::Supervised, None) => {
            Err(CliError::config("supervised mode requires --class"))
        }
        (Mode::Unsupervised, Some(_)) => {
            Err(CliError::config("--class only applies to --mode supervised"))
        }
        _ => Ok(()),
    }
}

/// Builds the effective mining configuration from flags plus the optional
/// seed override.
fn mining_config_from(args: &MineArgs, seed_override: Option<u64>) -> Result<MiningConfig, CliError> {
    let config = MiningConfig {
        mode: args.mode.into(),
        alpha_high: args.alpha_high,
        alpha_low: args.alpha_low,
        delta: args.delta,
        max_order: args.max_order,
        nperm: args.nperm,
        kwii_alpha: args.kwii_alpha,
        seed: seed_override.unwrap_or(args.seed),
        workers: args.workers,
        class_column: args.class.clone(),
        use_bounds: !args.no_bounds,
        use_redundancy: !args.no_redundancy,
        perm_plus_one: false,
    };
    config.validate()?;
    check_mode_class(config.mode, config.class_column.as_ref())?;
    Ok(config)
}

pub fn run_mine(args: &MineArgs) -> Result<(), CliError> {
    let config = mining_config_from(args, seed_from_env()?)?;
    let options = IngestOptions {
        class: args.class.clone(),
        missing_token: args.missing.clone(),
        drop_missing: args.drop_missing,
    };
    let dataset = ingest_csv(&args.input, &options)?;
    let output = miner::mine(&dataset, &config)?;

    std::fs::create_dir_all(&args.out)?;
    let theta_path = args.out.join(theta_spectrum_name(config.mode));
    let kwii_path = args.out.join("kwii_spectrum.csv");
    write_spectrum(&theta_path, &output.theta_spectrum)?;
    write_spectrum(&kwii_path, &output.kwii_spectrum)?;
    let report = RunReport::new(&config, &args.input, &dataset, &output);
    let report_path = args.out.join("report.json");
    report.write(&report_path)?;

    println!(
        "{}: {} rows, {} attributes ({} kept after redundancy reduction)",
        args.input.display(),
        dataset.n(),
        dataset.attribute_count(),
        output.kept.len()
    );
    println!(
        "theta: {} combinations -> {}",
        output.theta_spectrum.len(),
        theta_path.display()
    );
    match &output.kwii_skipped {
        Some(reason) => println!("kwii: skipped ({reason})"),
        None => println!(
            "kwii: {} entries at order {} -> {}",
            output.kwii_spectrum.len(),
            output.k_iim,
            kwii_path.display()
        ),
    }
    println!("report: {}", report_path.display());
    Ok(())
}

pub fn run_gen(args: &GenArgs) -> Result<(), CliError> {
    let seed = seed_from_env()?.unwrap_or(args.seed);
    let generated = synth::generate(&args.experiment, args.noise, seed)?;
    std::fs::create_dir_all(&args.out)?;
    let data_path = args.out.join("data.csv");
    let manifest_path = args.out.join("manifest.json");
    write_dataset_csv(&generated.dataset, &data_path)?;
    let json = serde_json::to_string_pretty(&generated.manifest)
        .map_err(|e| CliError::runtime(format!("manifest serialization: {e}")))?;
    std::fs::write(&manifest_path, json + "\n")?;
    println!(
        "{}: {} rows, {} attributes -> {}",
        args.experiment,
        generated.dataset.n(),
        generated.dataset.attribute_count(),
        data_path.display()
    );
    println!("manifest: {}", manifest_path.display());
    Ok(())
}

/// One pruning-strategy leg of a bench run.
#[derive(Debug, Serialize)]
struct BenchLeg {
    /// Strategy name: none, redundancy, bounds, or both.
    leg: String,
    use_redundancy: bool,
    use_bounds: bool,
    reduce_ms: u128,
    search_ms: u128,
    total_ms: u128,
    /// Attribute count the search actually ran on.
    attributes_searched: usize,
    theta_combinations: usize,
    counters: assocmine::miner::PruneCounters,
}

#[derive(Debug, Serialize)]
struct BenchReport<'a> {
    input: String,
    mode: Mode,
    class: Option<&'a String>,
    max_order: Option<usize>,
    rows: usize,
    attributes: usize,
    legs: Vec<BenchLeg>,
}

/// Runs reduce+search under one strategy combination.
fn bench_leg(
    name: &str,
    dataset: &Dataset,
    config: &MiningConfig,
    use_redundancy: bool,
    use_bounds: bool,
) -> Result<BenchLeg, CliError> {
    let leg_config = MiningConfig { use_bounds, use_redundancy, ..config.clone() };
    let t0 = Instant::now();
    let searched: Dataset;
    let input: &Dataset = if use_redundancy {
        let covers = pruning::build_covers(dataset, leg_config.delta, leg_config.mode)?;
        searched = pruning::select_representatives(dataset, &covers)?.0;
        &searched
    } else {
        dataset
    };
    let reduce_ms = t0.elapsed().as_millis();
    let t1 = Instant::now();
    let outcome = match leg_config.mode {
        Mode::Unsupervised => miner::cim(input, &leg_config)?,
        Mode::Supervised => miner::cim_ca(input, &leg_config)?,
    };
    let search_ms = t1.elapsed().as_millis();
    Ok(BenchLeg {
        leg: name.to_string(),
        use_redundancy,
        use_bounds,
        reduce_ms,
        search_ms,
        total_ms: reduce_ms + search_ms,
        attributes_searched: input.attribute_count(),
        theta_combinations: outcome.theta.len(),
        counters: outcome.counters,
    })
}

pub fn run_bench(args: &BenchArgs) -> Result<(), CliError> {
    let mode: Mode = args.mode.into();
    check_mode_class(mode, args.class.as_ref())?;
    let config = MiningConfig {
        mode,
        max_order: args.max_order,
        class_column: args.class.clone(),
        ..Default::default()
    };
    config.validate()?;
    let options = IngestOptions {
        class: args.class.clone(),
        missing_token: args.missing.clone(),
        drop_missing: args.drop_missing,
    };
    let dataset = ingest_csv(&args.input, &options)?;

    let mut legs = Vec::new();
    for (name, use_redundancy, use_bounds) in [
        ("none", false, false),
        ("redundancy", true, false),
        ("bounds", false, true),
        ("both", true, true),
    ] {
        legs.push(bench_leg(name, &dataset, &config, use_redundancy, use_bounds)?);
    }

    println!(
        "{:<12} {:>10} {:>10} {:>10} {:>7} {:>7} {:>12}",
        "leg", "reduce_ms", "search_ms", "total_ms", "attrs", "theta", "exact_evals"
    );
    for leg in &legs {
        println!(
            "{:<12} {:>10} {:>10} {:>10} {:>7} {:>7} {:>12}",
            leg.leg,
            leg.reduce_ms,
            leg.search_ms,
            leg.total_ms,
            leg.attributes_searched,
            leg.theta_combinations,
            leg.counters.exact_evaluations
        );
    }

    std::fs::create_dir_all(&args.out)?;
    let report = BenchReport {
        input: args.input.display().to_string(),
        mode,
        class: args.class.as_ref(),
        max_order: args.max_order,
        rows: dataset.n(),
        attributes: dataset.attribute_count(),
        legs,
    };
    let path = args.out.join("bench.json");
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::runtime(format!("bench serialization: {e}")))?;
    std::fs::write(&path, json + "\n")?;
    println!("bench report: {}", path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mine_args(extra: &[&str]) -> MineArgs {
        let mut argv = vec!["assocmine", "mine", "--input", "data.csv"];
        argv.extend_from_slice(extra);
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Mine(args) => args,
            other => panic!("expected mine, got {other:?}"),
        }
    }

    #[test]
    fn defaults_match_the_documented_configuration() {
        let config = mining_config_from(&mine_args(&[]), None).unwrap();
        assert_eq!(config.alpha_high, 1e-8);
        assert_eq!(config.alpha_low, 1e-2);
        assert_eq!(config.delta, 0.75);
        assert_eq!(config.max_order, None);
        assert_eq!(config.nperm, 10_000);
        assert_eq!(config.kwii_alpha, 1e-4);
        assert_eq!(config.seed, 0);
        assert_eq!(config.workers, 0);
        assert_eq!(config.mode, Mode::Unsupervised);
        assert!(config.use_bounds && config.use_redundancy);
    }

    #[test]
    fn seed_override_wins_over_the_flag() {
        let args = mine_args(&["--seed", "7"]);
        assert_eq!(mining_config_from(&args, None).unwrap().seed, 7);
        assert_eq!(mining_config_from(&args, Some(99)).unwrap().seed, 99);
        assert!(parse_seed_override(Some("12")).unwrap() == Some(12));
        assert!(parse_seed_override(None).unwrap().is_none());
        assert!(matches!(
            parse_seed_override(Some("not-a-seed")),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn misordered_thresholds_are_config_errors() {
        let args = mine_args(&["--alpha-high", "0.5", "--alpha-low", "0.01"]);
        assert!(matches!(mining_config_from(&args, None), Err(CliError::Config(_))));
    }

    #[test]
    fn supervised_mode_requires_a_class_and_vice_versa() {
        let args = mine_args(&["--mode", "supervised"]);
        assert!(matches!(mining_config_from(&args, None), Err(CliError::Config(_))));
        let args = mine_args(&["--class", "C"]);
        assert!(matches!(mining_config_from(&args, None), Err(CliError::Config(_))));
        let args = mine_args(&["--mode", "supervised", "--class", "C"]);
        let config = mining_config_from(&args, None).unwrap();
        assert_eq!(config.mode, Mode::Supervised);
        assert_eq!(config.class_column.as_deref(), Some("C"));
    }

    #[test]
    fn bound_and_redundancy_toggles_invert_the_flags() {
        let args = mine_args(&["--no-bounds", "--no-redundancy"]);
        let config = mining_config_from(&args, None).unwrap();
        assert!(!config.use_bounds);
        assert!(!config.use_redundancy);
    }
}
