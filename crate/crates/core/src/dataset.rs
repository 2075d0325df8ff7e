//! Dataset assembly, persistence, and deterministic train/cal/test splits.
//!
//! A dataset pairs feature vectors with measured distribution targets:
//! 4 columns for a single-basis (Z) dataset, 12 for a triple-basis (Z, X, Y)
//! dataset with the blocks concatenated in that fixed order.
//!
//! # On-disk format (version 1)
//!
//! Two files per dataset, `<prefix>.csv` and `<prefix>.manifest.json`.
//! The CSV header is `id,seed,<feature columns>,y_0,..,y_{d-1}`; numbers are
//! written in shortest round-trip decimal form so a load reproduces every
//! value bit for bit. The manifest records the full generation config plus a
//! 64-bit FNV-1a checksum of the CSV bytes; loading verifies the checksum,
//! the header, and the per-basis simplex invariant, and fails closed.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::features::{dedup, extract, FeatureError, FeatureMode, FeatureVector};
use crate::qsim::{measure, random_circuit, CircuitConfig, GateKind, MeasBasis, QsimError};
use crate::rng;

pub const FORMAT_VERSION: u32 = 1;

/// Tolerance for the per-basis "probabilities sum to 1" check on load.
const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("split requires at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("split fractions ({0}, {1}, {2}) must be positive and sum to 1")]
    InvalidFractions(f64, f64, f64),
    #[error("unknown sample id {0}")]
    UnknownId(u64),
    #[error("format: {0}")]
    Format(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_err(msg: impl Into<String>) -> DatasetError {
    DatasetError::Format(msg.into())
}

/// Generation parameters; all of them are recorded in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateConfig {
    pub num_samples: usize,
    pub min_depth: u32,
    pub max_depth: u32,
    pub shots: u32,
    pub bases: Vec<MeasBasis>,
    pub feature_mode: FeatureMode,
    pub two_qubit_prob: f64,
    pub gate_set: Vec<GateKind>,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            num_samples: 5000,
            min_depth: 1,
            max_depth: 8,
            shots: 1024,
            bases: vec![MeasBasis::Z],
            feature_mode: FeatureMode::Full,
            two_qubit_prob: 0.5,
            gate_set: GateKind::ALL.to_vec(),
        }
    }
}

/// One circuit's features and measured target distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub seed: u64,
    pub features: FeatureVector,
    pub target: Vec<f64>,
}

/// Everything needed to regenerate or validate the stored samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub num_qubits: u32,
    pub bases: Vec<MeasBasis>,
    pub shots: u32,
    pub gate_set: Vec<GateKind>,
    pub feature_mode: FeatureMode,
    pub feature_schema: Vec<String>,
    pub min_depth: u32,
    pub max_depth: u32,
    pub two_qubit_prob: f64,
    pub num_samples_requested: usize,
    pub num_samples: usize,
    pub global_seed: u64,
    pub generated_at: String,
    pub checksum_fnv1a64: String,
}

/// Manifest fields that identify a dataset's content, without the wall-clock
/// timestamp. Embedded in report files so that reruns with identical seeds
/// produce identical report bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEcho {
    pub format_version: u32,
    pub num_qubits: u32,
    pub bases: Vec<MeasBasis>,
    pub shots: u32,
    pub gate_set: Vec<GateKind>,
    pub feature_mode: FeatureMode,
    pub feature_schema: Vec<String>,
    pub min_depth: u32,
    pub max_depth: u32,
    pub two_qubit_prob: f64,
    pub num_samples_requested: usize,
    pub num_samples: usize,
    pub global_seed: u64,
    pub checksum_fnv1a64: String,
}

impl Manifest {
    pub fn echo(&self) -> ManifestEcho {
        ManifestEcho {
            format_version: self.format_version,
            num_qubits: self.num_qubits,
            bases: self.bases.clone(),
            shots: self.shots,
            gate_set: self.gate_set.clone(),
            feature_mode: self.feature_mode,
            feature_schema: self.feature_schema.clone(),
            min_depth: self.min_depth,
            max_depth: self.max_depth,
            two_qubit_prob: self.two_qubit_prob,
            num_samples_requested: self.num_samples_requested,
            num_samples: self.num_samples,
            global_seed: self.global_seed,
            checksum_fnv1a64: self.checksum_fnv1a64.clone(),
        }
    }

    /// Reconstructs the generation config recorded in this manifest.
    pub fn generate_config(&self) -> GenerateConfig {
        GenerateConfig {
            num_samples: self.num_samples_requested,
            min_depth: self.min_depth,
            max_depth: self.max_depth,
            shots: self.shots,
            bases: self.bases.clone(),
            feature_mode: self.feature_mode,
            two_qubit_prob: self.two_qubit_prob,
            gate_set: self.gate_set.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub manifest: Manifest,
}

/// Disjoint id lists covering the whole dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitIndices {
    pub train: Vec<u64>,
    pub cal: Vec<u64>,
    pub test: Vec<u64>,
    pub seed: u64,
    pub fractions: (f64, f64, f64),
}

/// 64-bit FNV-1a over a byte stream.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Normalizes a basis list to the canonical block order and rejects
/// combinations other than `[Z]` and `[Z, X, Y]`.
fn canonical_bases(bases: &[MeasBasis]) -> Result<Vec<MeasBasis>, DatasetError> {
    let set: HashSet<MeasBasis> = bases.iter().copied().collect();
    let mut ordered: Vec<MeasBasis> = [MeasBasis::Z, MeasBasis::X, MeasBasis::Y]
        .into_iter()
        .filter(|b| set.contains(b))
        .collect();
    if ordered.len() != set.len() {
        ordered.clear(); // unreachable with the MeasBasis type; kept for clarity
    }
    match ordered.as_slice() {
        [MeasBasis::Z] => Ok(ordered),
        [MeasBasis::Z, MeasBasis::X, MeasBasis::Y] => Ok(ordered),
        _ => Err(DatasetError::Config(format!(
            "bases must be Z (single-basis) or Z,X,Y (multi-basis), got {bases:?}"
        ))),
    }
}

/// Generates a dataset as a deterministic function of `(config, seed)`.
///
/// Sample `i` draws its circuit from the stream seeded with
/// `derive_seed(seed, i)` and measures each basis with the sub-seed
/// `derive_seed(sample_seed, basis.index())`, so a triple-basis dataset
/// shares its circuits and Z block with the single-basis dataset of the same
/// seed. Samples with previously seen feature tuples are dropped (first
/// occurrence kept) before the manifest is stamped.
pub fn generate(config: &GenerateConfig, seed: u64) -> Result<Dataset, DatasetError> {
    if config.num_samples == 0 {
        return Err(DatasetError::Config("num_samples must be at least 1".into()));
    }
    let bases = canonical_bases(&config.bases)?;
    let circuit_config = CircuitConfig {
        min_depth: config.min_depth,
        max_depth: config.max_depth,
        gate_set: config.gate_set.clone(),
        two_qubit_prob: config.two_qubit_prob,
    };
    circuit_config.validate()?;

    let samples: Result<Vec<Sample>, DatasetError> = (0..config.num_samples)
        .into_par_iter()
        .map(|i| {
            let sample_seed = rng::derive_seed(seed, i as u64);
            let circuit = random_circuit(&circuit_config, sample_seed)?;
            let features = extract(&circuit, config.feature_mode);
            let mut target = Vec::with_capacity(4 * bases.len());
            for basis in &bases {
                let meas_seed = rng::derive_seed(sample_seed, basis.index());
                target.extend_from_slice(&measure(&circuit, *basis, config.shots, meas_seed).p);
            }
            Ok(Sample { id: i as u64, seed: sample_seed, features, target })
        })
        .collect();

    let pairs = samples?.into_iter().map(|s| (s.features.clone(), s)).collect();
    let samples: Vec<Sample> = dedup(pairs)?.into_iter().map(|(_, s)| s).collect();

    let feature_schema = config.feature_mode.schema();
    let csv = render_csv(&samples, &feature_schema, 4 * bases.len());
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        num_qubits: 2,
        bases,
        shots: config.shots,
        gate_set: config.gate_set.clone(),
        feature_mode: config.feature_mode,
        feature_schema,
        min_depth: config.min_depth,
        max_depth: config.max_depth,
        two_qubit_prob: config.two_qubit_prob,
        num_samples_requested: config.num_samples,
        num_samples: samples.len(),
        global_seed: seed,
        generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        checksum_fnv1a64: format!("{:016x}", fnv1a64(csv.as_bytes())),
    };
    Ok(Dataset { samples, manifest })
}

impl Dataset {
    /// Target dimension: 4 per measured basis.
    pub fn dim(&self) -> usize {
        4 * self.manifest.bases.len()
    }

    /// The canonical CSV rendering whose FNV-1a hash is the manifest checksum.
    pub fn csv_string(&self) -> String {
        render_csv(&self.samples, &self.manifest.feature_schema, self.dim())
    }

    /// Extracts feature and target matrices for the given sample ids.
    pub fn rows_for(&self, ids: &[u64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), DatasetError> {
        let by_id: HashMap<u64, &Sample> = self.samples.iter().map(|s| (s.id, s)).collect();
        let mut x = Vec::with_capacity(ids.len());
        let mut y = Vec::with_capacity(ids.len());
        for id in ids {
            let sample = by_id.get(id).ok_or(DatasetError::UnknownId(*id))?;
            x.push(sample.features.values().to_vec());
            y.push(sample.target.clone());
        }
        Ok((x, y))
    }
}

/// `⌊f·n⌋` with a nudge that undoes binary representation error in `f * n`
/// (0.7 * 20 evaluates to 13.999999999999998).
fn floor_frac(f: f64, n: usize) -> usize {
    (f * n as f64 + 1e-9).floor() as usize
}

/// Splits sample ids into train/cal/test by a seeded uniform shuffle.
///
/// The shuffled id list is cut at `⌊f_train·N⌋` and `⌊f_train·N⌋ + ⌊f_cal·N⌋`;
/// remainder rows go to test.
pub fn split(
    dataset: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<SplitIndices, DatasetError> {
    let (f_train, f_cal, f_test) = fractions;
    let positive = f_train > 0.0 && f_cal > 0.0 && f_test > 0.0;
    if !positive || (f_train + f_cal + f_test - 1.0).abs() > 1e-9 {
        return Err(DatasetError::InvalidFractions(f_train, f_cal, f_test));
    }
    let n = dataset.samples.len();
    if n < 3 {
        return Err(DatasetError::TooFewSamples(n));
    }
    let mut ids: Vec<u64> = dataset.samples.iter().map(|s| s.id).collect();
    ids.shuffle(&mut rng::stream(seed));
    let n_train = floor_frac(f_train, n);
    let n_cal = floor_frac(f_cal, n);
    Ok(SplitIndices {
        train: ids[..n_train].to_vec(),
        cal: ids[n_train..n_train + n_cal].to_vec(),
        test: ids[n_train + n_cal..].to_vec(),
        seed,
        fractions,
    })
}

fn render_csv(samples: &[Sample], schema: &[String], d: usize) -> String {
    let mut out = String::new();
    out.push_str("id,seed");
    for name in schema {
        out.push(',');
        out.push_str(name);
    }
    for j in 0..d {
        out.push_str(&format!(",y_{j}"));
    }
    out.push('\n');
    for s in samples {
        out.push_str(&format!("{},{}", s.id, s.seed));
        for v in s.features.values() {
            out.push_str(&format!(",{v}"));
        }
        for v in &s.target {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// File paths for a dataset prefix: `<prefix>.csv` and `<prefix>.manifest.json`.
pub fn dataset_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let mut csv = prefix.as_os_str().to_os_string();
    csv.push(".csv");
    let mut manifest = prefix.as_os_str().to_os_string();
    manifest.push(".manifest.json");
    (PathBuf::from(csv), PathBuf::from(manifest))
}

/// Writes `<prefix>.csv` and `<prefix>.manifest.json`, creating parent
/// directories as needed.
pub fn save(dataset: &Dataset, prefix: &Path) -> Result<(), DatasetError> {
    let (csv_path, manifest_path) = dataset_paths(prefix);
    if let Some(parent) = csv_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let csv = dataset.csv_string();
    let checksum = format!("{:016x}", fnv1a64(csv.as_bytes()));
    if checksum != dataset.manifest.checksum_fnv1a64 {
        return Err(format_err(format!(
            "manifest checksum {} does not match samples ({checksum})",
            dataset.manifest.checksum_fnv1a64
        )));
    }
    fs::write(&csv_path, csv)?;
    let mut manifest_json = serde_json::to_string_pretty(&dataset.manifest)?;
    manifest_json.push('\n');
    fs::write(&manifest_path, manifest_json)?;
    Ok(())
}

/// Loads and validates a dataset written by [`save`]. Any inconsistency
/// (version, checksum, header, row shape, simplex violation) fails the whole
/// load; there is no partial result.
pub fn load(prefix: &Path) -> Result<Dataset, DatasetError> {
    let (csv_path, manifest_path) = dataset_paths(prefix);
    let manifest_json = fs::read_to_string(&manifest_path)?;
    let manifest: Manifest = serde_json::from_str(&manifest_json)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(format_err(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    if manifest.num_qubits != 2 {
        return Err(format_err(format!("expected 2 qubits, manifest says {}", manifest.num_qubits)));
    }
    canonical_bases(&manifest.bases)
        .map_err(|_| format_err(format!("manifest bases {:?} are not Z or Z,X,Y", manifest.bases)))?;
    if manifest.feature_schema != manifest.feature_mode.schema() {
        return Err(format_err("manifest feature_schema does not match feature_mode"));
    }

    let csv = fs::read_to_string(&csv_path)?;
    let checksum = format!("{:016x}", fnv1a64(csv.as_bytes()));
    if checksum != manifest.checksum_fnv1a64 {
        return Err(format_err(format!(
            "checksum mismatch: manifest {} vs data {checksum}",
            manifest.checksum_fnv1a64
        )));
    }

    let d = 4 * manifest.bases.len();
    let samples = parse_csv(&csv, &manifest.feature_schema, manifest.feature_mode, d)?;
    if samples.len() != manifest.num_samples {
        return Err(format_err(format!(
            "manifest records {} samples, data file has {}",
            manifest.num_samples,
            samples.len()
        )));
    }
    Ok(Dataset { samples, manifest })
}

fn parse_csv(
    csv: &str,
    schema: &[String],
    mode: FeatureMode,
    d: usize,
) -> Result<Vec<Sample>, DatasetError> {
    let mut lines = csv.lines();
    let header = lines.next().ok_or_else(|| format_err("empty data file"))?;
    let mut expected = String::from("id,seed");
    for name in schema {
        expected.push(',');
        expected.push_str(name);
    }
    for j in 0..d {
        expected.push_str(&format!(",y_{j}"));
    }
    if header != expected {
        return Err(format_err(format!("header mismatch: got `{header}`, expected `{expected}`")));
    }

    let m = schema.len();
    let mut samples = Vec::new();
    let mut prev_id: Option<u64> = None;
    for (row_idx, line) in lines.enumerate() {
        let row = row_idx + 2; // 1-based, after the header
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + m + d {
            return Err(format_err(format!(
                "row {row}: expected {} fields, got {}",
                2 + m + d,
                fields.len()
            )));
        }
        let id: u64 = fields[0]
            .parse()
            .map_err(|_| format_err(format!("row {row}: bad id `{}`", fields[0])))?;
        if let Some(prev) = prev_id {
            if id <= prev {
                return Err(format_err(format!("row {row}: ids not strictly increasing")));
            }
        }
        prev_id = Some(id);
        let seed: u64 = fields[1]
            .parse()
            .map_err(|_| format_err(format!("row {row}: bad seed `{}`", fields[1])))?;

        let mut values = Vec::with_capacity(m);
        for (k, field) in fields[2..2 + m].iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| format_err(format!("row {row}: bad feature `{field}`")))?;
            if !(v >= 0.0) || v.fract() != 0.0 {
                return Err(format_err(format!(
                    "row {row}: feature {} = {v} is not a nonnegative integer",
                    schema[k]
                )));
            }
            values.push(v);
        }

        let mut target = Vec::with_capacity(d);
        for field in &fields[2 + m..] {
            let v: f64 = field
                .parse()
                .map_err(|_| format_err(format!("row {row}: bad target `{field}`")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(format_err(format!("row {row}: target {v} outside [0, 1]")));
            }
            target.push(v);
        }
        for block in target.chunks(4) {
            let sum: f64 = block.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(format_err(format!("row {row}: basis block sums to {sum}, not 1")));
            }
        }

        samples.push(Sample { id, seed, features: FeatureVector::new(mode, values), target });
    }
    Ok(samples)
}
