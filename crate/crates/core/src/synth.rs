//! Seeded synthetic-data generators with machine-checkable ground truth.
//!
//! Planted joint distributions are realized by exact-count apportionment
//! (largest-remainder rounding of cell probabilities), so the planted
//! association strength is deterministic given the model; only noise
//! columns, XOR flips, and replica errors consume the seeded RNG.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Attribute, Dataset};
use crate::error::{Error, Result};

/// Generator parameterization, echoed into the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Experiment identifier (`xor`, `unsup_exp2`, `sup_exp1`, `redundant`,
    /// `bench`).
    pub experiment: String,
    /// Declared cardinality of every attribute, in column order.
    pub cardinalities: Vec<u32>,
    /// Sample count per class block (one entry when there is no class).
    pub samples_per_class: Vec<usize>,
    /// Flip / mixing probability of the planted rule, when applicable.
    pub noise: f64,
    /// Replica error rate, when applicable.
    pub replication_error: f64,
    /// RNG seed.
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.noise) || !(0.0..=1.0).contains(&self.replication_error) {
            return Err(Error::invalid_config("probabilities must lie in [0, 1]"));
        }
        if self.samples_per_class.iter().any(|&n| n == 0) {
            return Err(Error::invalid_config("sample counts must be positive"));
        }
        if self.cardinalities.iter().any(|&c| c < 2) {
            return Err(Error::invalid_config("cardinalities must be at least 2"));
        }
        Ok(())
    }
}

/// Ground-truth sidecar emitted with every generated dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: SyntheticSpec,
    /// Attribute names in column order.
    pub attributes: Vec<String>,
    /// Class attribute name, when the dataset has one.
    pub class: Option<String>,
    /// Planted combinations by attribute name (class included where it
    /// applies), each sorted by column index.
    pub planted: Vec<Vec<String>>,
    /// (original, replica) attribute-name pairs.
    pub replica_pairs: Vec<(String, String)>,
}

/// A generated dataset plus its ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub dataset: Dataset,
    pub manifest: Manifest,
}

/// Largest-remainder apportionment of `n` samples over cell probabilities:
/// floors first, then one extra per largest fractional part (ties to the
/// lowest cell index). Deterministic, sums to `n` exactly.
fn apportion(probs: &[f64], n: u64) -> Vec<u64> {
    debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let mut counts: Vec<u64> = Vec::with_capacity(probs.len());
    let mut fractions: Vec<(usize, f64)> = Vec::with_capacity(probs.len());
    let mut assigned = 0u64;
    for (idx, &p) in probs.iter().enumerate() {
        let target = p * n as f64;
        let floor = target.floor() as u64;
        counts.push(floor);
        assigned += floor;
        fractions.push((idx, target - floor as f64));
    }
    fractions.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for &(idx, _) in fractions.iter().take((n - assigned) as usize) {
        counts[idx] += 1;
    }
    counts
}

/// Decodes a row-major cell index over `vars` attributes of equal
/// cardinality `card` (first attribute slowest).
fn decode_cell(mut idx: usize, vars: usize, card: usize) -> Vec<u32> {
    let mut values = vec![0u32; vars];
    for v in (0..vars).rev() {
        values[v] = (idx % card) as u32;
        idx /= card;
    }
    values
}

/// Appends exact-count realizations of a cell distribution to the given
/// columns (one column per planted attribute).
fn emit_block(columns: &mut [Vec<u32>], probs: &[f64], n: u64, card: usize) {
    let vars = columns.len();
    debug_assert_eq!(probs.len(), card.pow(vars as u32));
    for (cell, &count) in apportion(probs, n).iter().enumerate() {
        let values = decode_cell(cell, vars, card);
        for _ in 0..count {
            for (col, &v) in columns.iter_mut().zip(values.iter()) {
                col.push(v);
            }
        }
    }
}

fn uniform_column(rng: &mut ChaCha8Rng, n: usize, card: u32) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(0..card)).collect()
}

/// Copies a column, redrawing each value uniformly over the *other* states
/// with probability `err` — a mismatch rate of exactly `err` in
/// expectation.
fn replicate_column(rng: &mut ChaCha8Rng, src: &[u32], card: u32, err: f64) -> Vec<u32> {
    src.iter()
        .map(|&v| {
            if rng.gen_bool(err) {
                (v + rng.gen_range(1..card)) % card
            } else {
                v
            }
        })
        .collect()
}

fn names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

fn build(
    spec: SyntheticSpec,
    attr_names: Vec<String>,
    columns: Vec<Vec<u32>>,
    class: Option<usize>,
    planted: Vec<Vec<&str>>,
    replica_pairs: Vec<(&str, &str)>,
) -> Result<GeneratedData> {
    spec.validate()?;
    let attributes: Vec<Attribute> = attr_names
        .iter()
        .zip(&spec.cardinalities)
        .map(|(name, &states)| Attribute { name: name.clone(), states })
        .collect();
    let dataset = Dataset::new(attributes, columns, class)?;
    let manifest = Manifest {
        class: class.map(|c| attr_names[c].clone()),
        planted: planted
            .into_iter()
            .map(|set| set.into_iter().map(str::to_string).collect())
            .collect(),
        replica_pairs: replica_pairs
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
        attributes: attr_names,
        spec,
    };
    Ok(GeneratedData { dataset, manifest })
}

/// 15 binary attributes, 200 samples: A1 = A2⊕A3, A6 = A7⊕A8⊕A9,
/// A11 = A12⊕A13⊕A14, each target then flipped with probability `p`;
/// every other attribute iid uniform.
pub fn gen_xor_unsupervised(p: f64, seed: u64) -> Result<GeneratedData> {
    if !(0.0..=0.5).contains(&p) {
        return Err(Error::invalid_config(format!(
            "flip probability must lie in [0, 0.5], got {p}"
        )));
    }
    let n = 200;
    let m = 15;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets: [(usize, Vec<usize>); 3] =
        [(0, vec![1, 2]), (5, vec![6, 7, 8]), (10, vec![11, 12, 13])];
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(m);
    for a in 0..m {
        if targets.iter().any(|(t, _)| *t == a) {
            columns.push(Vec::new());
        } else {
            columns.push(uniform_column(&mut rng, n, 2));
        }
    }
    for (target, sources) in &targets {
        let col: Vec<u32> = (0..n)
            .map(|row| {
                let rule = sources.iter().fold(0u32, |acc, &s| acc ^ columns[s][row]);
                if rng.gen_bool(p) {
                    1 - rule
                } else {
                    rule
                }
            })
            .collect();
        columns[*target] = col;
    }
    build(
        SyntheticSpec {
            experiment: "xor".into(),
            cardinalities: vec![2; m],
            samples_per_class: vec![n],
            noise: p,
            replication_error: 0.0,
            seed,
        },
        names("A", m),
        columns,
        None,
        vec![
            vec!["A1", "A2", "A3"],
            vec!["A6", "A7", "A8", "A9"],
            vec!["A11", "A12", "A13", "A14"],
        ],
        vec![],
    )
}

/// Closed-form 2×2 joint with margins P(x=1)=`p`, P(y=1)=`q` and odds
/// ratio `rho`; returned as [p11, p10, p01, p00].
fn two_by_two(p: f64, q: f64, rho: f64) -> [f64; 4] {
    let p11 = if (rho - 1.0).abs() < 1e-12 {
        p * q
    } else {
        let s = 1.0 + (p + q) * (rho - 1.0);
        (s - (s * s - 4.0 * rho * (rho - 1.0) * p * q).sqrt()) / (2.0 * (rho - 1.0))
    };
    debug_assert!(p11 >= (p + q - 1.0).max(0.0) - 1e-12 && p11 <= p.min(q) + 1e-12);
    [p11, p - p11, q - p11, 1.0 - p - q + p11]
}

/// Mixes a latent binary-variable distribution into ternary observables:
/// latent 0 splits evenly over states {0,1}, latent 1 maps to state 2. The
/// latent value stays recoverable, so all information quantities carry
/// over unchanged.
fn expand_ternary(latent: &[f64], vars: usize) -> Vec<f64> {
    let w = [[0.5, 0.5, 0.0], [0.0, 0.0, 1.0]];
    let cells = 3usize.pow(vars as u32);
    let mut out = vec![0.0; cells];
    for (mask, &prob) in latent.iter().enumerate() {
        if prob == 0.0 {
            continue;
        }
        for (cell, slot) in out.iter_mut().enumerate() {
            let values = decode_cell(cell, vars, 3);
            let mut weight = prob;
            for (v, &val) in values.iter().enumerate() {
                let bit = (mask >> v) & 1;
                weight *= w[bit][val as usize];
            }
            *slot += weight;
        }
    }
    out
}

/// 2×2×2 distribution with log-linear tilts — `alpha` on the (x1,x2) and
/// (x2,x3) pairs, `beta` on (x1,x3), `eta` on the three-way term —
/// margin-fitted by iterative proportional scaling. `margins[i]` is the
/// target P(x_{i+1} = 1).
fn tilted_three_way(
    alpha: f64,
    beta: f64,
    eta: f64,
    margins: [f64; 3],
    iters: usize,
) -> [f64; 8] {
    let mut t = [0.0f64; 8];
    for (mask, slot) in t.iter_mut().enumerate() {
        let s: Vec<f64> = (0..3).map(|v| 2.0 * ((mask >> v) & 1) as f64 - 1.0).collect();
        *slot = (alpha * (s[0] * s[1] + s[1] * s[2])
            + beta * s[0] * s[2]
            + eta * s[0] * s[1] * s[2])
            .exp();
    }
    let total: f64 = t.iter().sum();
    t.iter_mut().for_each(|v| *v /= total);
    for it in 0..iters {
        let axis = it % 3;
        let m1: f64 = t
            .iter()
            .enumerate()
            .filter(|(mask, _)| (mask >> axis) & 1 == 1)
            .map(|(_, &v)| v)
            .sum();
        let (scale1, scale0) = (margins[axis] / m1, (1.0 - margins[axis]) / (1.0 - m1));
        for (mask, slot) in t.iter_mut().enumerate() {
            *slot *= if (mask >> axis) & 1 == 1 { scale1 } else { scale0 };
        }
    }
    t
}

/// Which epistasis experiment `gen_epistasis` builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpistasisMode {
    /// Unsupervised: 15 ternary SNPs plus a binary trait A16, 100 samples
    /// per trait value. (A1,A2) follow a diagonal mixture in one trait
    /// class and a shifted diagonal in the other, so the pair is strongly
    /// associated, the triple with the trait more so, and every
    /// single-attribute/trait association vanishes.
    UnsupExp2,
    /// Supervised: 15 ternary SNPs plus a binary class C, 300 samples per
    /// class. A1 carries a marginal effect (latent rate 0.62 vs 0.30); A2
    /// is marginally balanced but interacts through a class-flipped odds
    /// ratio of 7.
    SupExp1,
}

/// Case/control epistasis fixtures with exact-count planted cells.
pub fn gen_epistasis(mode: EpistasisMode, seed: u64) -> Result<GeneratedData> {
    match mode {
        EpistasisMode::UnsupExp2 => gen_unsup_exp2(seed),
        EpistasisMode::SupExp1 => gen_sup_exp1(seed),
    }
}

fn gen_unsup_exp2(seed: u64) -> Result<GeneratedData> {
    let per_class = 100usize;
    let n = 2 * per_class;
    let m = 16;
    let epsilon = 0.2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Trait block 0 (shifted diagonal), then block 1 (diagonal).
    let cell_prob = |shift: usize| -> Vec<f64> {
        (0..9)
            .map(|cell| {
                let (g1, g2) = (cell / 3, cell % 3);
                let on_diag = g2 == (g1 + shift) % 3;
                (1.0 - epsilon) / 3.0 * f64::from(on_diag as u8) + epsilon / 9.0
            })
            .collect()
    };
    let mut causal = vec![Vec::with_capacity(n), Vec::with_capacity(n)];
    emit_block(&mut causal, &cell_prob(1), per_class as u64, 3);
    emit_block(&mut causal, &cell_prob(0), per_class as u64, 3);
    let mut causal = causal.into_iter();
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(m);
    columns.push(causal.next().unwrap());
    columns.push(causal.next().unwrap());
    for _ in 2..15 {
        columns.push(uniform_column(&mut rng, n, 3));
    }
    let mut trait_col = vec![0u32; per_class];
    trait_col.extend(vec![1u32; per_class]);
    columns.push(trait_col);
    let mut cards = vec![3u32; 15];
    cards.push(2);
    build(
        SyntheticSpec {
            experiment: "unsup_exp2".into(),
            cardinalities: cards,
            samples_per_class: vec![per_class, per_class],
            noise: epsilon,
            replication_error: 0.0,
            seed,
        },
        names("A", m),
        columns,
        None,
        vec![vec!["A1", "A2"], vec!["A1", "A2", "A16"]],
        vec![],
    )
}

fn gen_sup_exp1(seed: u64) -> Result<GeneratedData> {
    let per_class = 300usize;
    let n = 2 * per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Latent binary pair per class: margins and a class-flipped odds
    // ratio, then ternary expansion.
    let ctrl = expand_ternary(&two_by_two_latent(0.30, 1.0 / 3.0, 1.0 / 7.0), 2);
    let case = expand_ternary(&two_by_two_latent(0.62, 1.0 / 3.0, 7.0), 2);
    let mut causal = vec![Vec::with_capacity(n), Vec::with_capacity(n)];
    emit_block(&mut causal, &ctrl, per_class as u64, 3);
    emit_block(&mut causal, &case, per_class as u64, 3);
    let mut causal = causal.into_iter();
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(16);
    columns.push(causal.next().unwrap());
    columns.push(causal.next().unwrap());
    for _ in 2..15 {
        columns.push(uniform_column(&mut rng, n, 3));
    }
    let mut class_col = vec![0u32; per_class];
    class_col.extend(vec![1u32; per_class]);
    columns.push(class_col);
    let mut cards = vec![3u32; 15];
    cards.push(2);
    let mut attr_names = names("A", 15);
    attr_names.push("C".into());
    build(
        SyntheticSpec {
            experiment: "sup_exp1".into(),
            cardinalities: cards,
            samples_per_class: vec![per_class, per_class],
            noise: 0.0,
            replication_error: 0.0,
            seed,
        },
        attr_names,
        columns,
        Some(15),
        vec![vec!["A1", "C"], vec!["A1", "A2", "C"]],
        vec![],
    )
}

/// Latent 2×2 cells indexed by bit mask (bit 0 = x1, bit 1 = x2).
fn two_by_two_latent(p1: f64, p2: f64, rho: f64) -> [f64; 4] {
    let [p11, p10, p01, p00] = two_by_two(p1, p2, rho);
    // mask 0 = (x1=0, x2=0), mask 1 = (x1=1, x2=0), mask 2 = (x1=0, x2=1),
    // mask 3 = (x1=1, x2=1).
    [p00, p10, p01, p11]
}

/// Supervised redundancy fixture: a three-locus pure-epistasis class
/// association over {A1,A2,A3,C} (800 samples per class), replicas of
/// A1→A6, A2→A7, A3→A8 at 5% error, and iid uniform fillers.
pub fn gen_redundant_supervised(seed: u64) -> Result<GeneratedData> {
    let per_class = 800usize;
    let n = 2 * per_class;
    let err = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Class-flipped pair and three-way tilts over (x1,x2,x3); x1 and x3
    // carry marginal effects, x2 stays balanced. The tilt signs are chosen
    // so that pooling the two classes leaves every planted class KWII
    // positive: KWII(A1;A2;C) ≈ 0.072, KWII(A1;A3;C) ≈ 0.150,
    // KWII(A2;A3;C) ≈ 0.072, and KWII(A1;A2;A3;C) ≈ 0.247 bits.
    let ctrl = expand_ternary(
        &tilted_three_way(-0.3, -0.4, 1.0, [0.30, 1.0 / 3.0, 0.30], 400),
        3,
    );
    let case = expand_ternary(
        &tilted_three_way(0.3, 0.4, -1.0, [0.60, 1.0 / 3.0, 0.60], 400),
        3,
    );
    let mut causal = vec![
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    emit_block(&mut causal, &ctrl, per_class as u64, 3);
    emit_block(&mut causal, &case, per_class as u64, 3);
    let mut causal = causal.into_iter();
    let a1 = causal.next().unwrap();
    let a2 = causal.next().unwrap();
    let a3 = causal.next().unwrap();
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(16);
    columns.push(a1);
    columns.push(a2);
    columns.push(a3);
    for _ in 3..5 {
        columns.push(uniform_column(&mut rng, n, 3));
    }
    for src in 0..3 {
        let replica = replicate_column(&mut rng, &columns[src], 3, err);
        columns.push(replica);
    }
    for _ in 8..15 {
        columns.push(uniform_column(&mut rng, n, 3));
    }
    let mut class_col = vec![0u32; per_class];
    class_col.extend(vec![1u32; per_class]);
    columns.push(class_col);
    let mut cards = vec![3u32; 15];
    cards.push(2);
    let mut attr_names = names("A", 15);
    attr_names.push("C".into());
    build(
        SyntheticSpec {
            experiment: "redundant".into(),
            cardinalities: cards,
            samples_per_class: vec![per_class, per_class],
            noise: 0.0,
            replication_error: err,
            seed,
        },
        attr_names,
        columns,
        Some(15),
        vec![
            vec!["A1", "C"],
            vec!["A3", "C"],
            vec!["A1", "A2", "C"],
            vec!["A2", "A3", "C"],
        ],
        vec![("A1", "A6"), ("A2", "A7"), ("A3", "A8")],
    )
}

/// Pruning-benchmark fixture: 30 binary attributes over 1,200 samples in
/// six blocks, each one root plus four replicas at 1.5% error. The roots
/// are all noisy copies of one shared latent bit (block-specific flip rates
/// 10%–20%), so every attribute pair in the fixture is strongly dependent:
/// around 0.8 bits of pairwise information inside a block and roughly
/// 0.1–0.2 bits across blocks, both decisive at the default thresholds.
/// Subtree verdicts are therefore decided high in the lattice — bound
/// certificates make exact evaluations above the pair level unnecessary,
/// and redundancy covers collapse each block to its root — which is
/// exactly the regime the pruning strategies are built for.
pub fn gen_bench(seed: u64) -> Result<GeneratedData> {
    let n = 1200usize;
    let m = 30;
    let err = 0.015;
    let root_flips = [0.10, 0.12, 0.14, 0.16, 0.18, 0.20];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let latent = uniform_column(&mut rng, n, 2);
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(m);
    let mut replica_pairs: Vec<(String, String)> = Vec::new();
    for (block, &flip) in root_flips.iter().enumerate() {
        let base = block * 5;
        let root: Vec<u32> = latent
            .iter()
            .map(|&g| if rng.gen_bool(flip) { g ^ 1 } else { g })
            .collect();
        columns.push(root);
        for copy in 1..5 {
            let replica = replicate_column(&mut rng, &columns[base], 2, err);
            columns.push(replica);
            replica_pairs.push((format!("A{}", base + 1), format!("A{}", base + copy + 1)));
        }
    }
    let attr_names = names("A", m);
    let spec = SyntheticSpec {
        experiment: "bench".into(),
        cardinalities: vec![2; m],
        samples_per_class: vec![n],
        noise: 0.0,
        replication_error: err,
        seed,
    };
    spec.validate()?;
    let attributes: Vec<Attribute> = attr_names
        .iter()
        .zip(&spec.cardinalities)
        .map(|(name, &states)| Attribute { name: name.clone(), states })
        .collect();
    let dataset = Dataset::new(attributes, columns, None)?;
    let manifest = Manifest {
        spec,
        attributes: attr_names,
        class: None,
        planted: vec![],
        replica_pairs,
    };
    Ok(GeneratedData { dataset, manifest })
}

/// Name-dispatched generation for the CLI; `p` applies to `xor` only.
pub fn generate(experiment: &str, p: Option<f64>, seed: u64) -> Result<GeneratedData> {
    match experiment {
        "xor" => gen_xor_unsupervised(p.unwrap_or(0.1), seed),
        "unsup_exp2" => {
            reject_p(experiment, p)?;
            gen_epistasis(EpistasisMode::UnsupExp2, seed)
        }
        "sup_exp1" => {
            reject_p(experiment, p)?;
            gen_epistasis(EpistasisMode::SupExp1, seed)
        }
        "redundant" => {
            reject_p(experiment, p)?;
            gen_redundant_supervised(seed)
        }
        "bench" => {
            reject_p(experiment, p)?;
            gen_bench(seed)
        }
        other => Err(Error::invalid_config(format!(
            "unknown experiment '{other}' (expected xor, unsup_exp2, sup_exp1, redundant, bench)"
        ))),
    }
}

fn reject_p(experiment: &str, p: Option<f64>) -> Result<()> {
    if p.is_some() {
        return Err(Error::invalid_config(format!(
            "--p only applies to the xor experiment, not {experiment}"
        )));
    }
    Ok(())
}
