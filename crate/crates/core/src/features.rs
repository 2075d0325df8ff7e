//! Classical feature extraction from circuits and feature-keyed deduplication.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

use crate::qsim::{Circuit, GateKind};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("samples mix different feature schemas")]
    MixedSchemas,
}

/// Which columns a feature vector carries.
///
/// `Minimal` is `(depth, total_ops)`; `Full` extends it with one occurrence
/// count per gate kind, in [`GateKind::ALL`] order, for 13 columns total.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Minimal,
    Full,
}

impl FeatureMode {
    /// Column names, in order. This is the published schema: it is written to
    /// dataset manifests and used as CSV headers.
    pub fn schema(self) -> Vec<String> {
        let mut names = vec!["depth".to_string(), "total_ops".to_string()];
        if self == FeatureMode::Full {
            names.extend(GateKind::ALL.iter().map(|k| format!("count_{}", k.name().to_lowercase())));
        }
        names
    }

    pub fn len(self) -> usize {
        match self {
            FeatureMode::Minimal => 2,
            FeatureMode::Full => 2 + GateKind::ALL.len(),
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

/// Nonnegative integer-valued features stored as reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    mode: FeatureMode,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(mode: FeatureMode, values: Vec<f64>) -> FeatureVector {
        assert_eq!(values.len(), mode.len(), "feature vector length must match its schema");
        FeatureVector { mode, values }
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Identity key for deduplication: the exact bit patterns of the values.
    fn key(&self) -> Vec<u64> {
        self.values.iter().map(|v| v.to_bits()).collect()
    }
}

/// Extracts the feature vector of a circuit.
pub fn extract(circuit: &Circuit, mode: FeatureMode) -> FeatureVector {
    let mut values = vec![circuit.depth() as f64, circuit.gates().len() as f64];
    if mode == FeatureMode::Full {
        let mut counts = [0u32; GateKind::ALL.len()];
        for gate in circuit.gates() {
            let slot = GateKind::ALL.iter().position(|k| *k == gate.kind()).expect("known kind");
            counts[slot] += 1;
        }
        values.extend(counts.iter().map(|c| *c as f64));
    }
    FeatureVector { mode, values }
}

/// Drops samples whose feature tuple was already seen, keeping the first
/// occurrence and preserving order. Keyed on features only: equal features
/// with different targets still collapse to the first-seen pair.
pub fn dedup<T>(samples: Vec<(FeatureVector, T)>) -> Result<Vec<(FeatureVector, T)>, FeatureError> {
    let mode = match samples.first() {
        Some((f, _)) => f.mode(),
        None => return Ok(samples),
    };
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(samples.len());
    let mut kept = Vec::with_capacity(samples.len());
    for (features, target) in samples {
        if features.mode() != mode {
            return Err(FeatureError::MixedSchemas);
        }
        if seen.insert(features.key()) {
            kept.push((features, target));
        }
    }
    Ok(kept)
}
