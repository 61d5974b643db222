//! The multi-label sentence classifier: 9 one-vs-all binary linear models
//! over 1/2/3-gram binary tf-idf features, with a k-fold evaluation harness
//! and a versioned on-disk format.

pub mod train;
pub mod vectorizer;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledSentence, PermissionClass};
use crate::error::{Error, Result};

pub use train::{balance, modified_huber_dloss, modified_huber_loss, train_binary, BinaryClassModel};
pub use vectorizer::{fit_vectorizer, ngrams, tokenize, SparseVec, VectorizerModel};

/// Default RNG seed; every random choice in training flows from it.
pub const DEFAULT_SEED: u64 = 20200715;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub min_df: usize,
    /// L2 regularization strength.
    pub alpha: f64,
    pub epochs: usize,
    /// Balanced-set size window.
    pub min_total: usize,
    pub max_total: usize,
    pub rng_seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            ngram_min: 1,
            ngram_max: 3,
            min_df: 2,
            alpha: 1e-5,
            epochs: 20,
            min_total: 2000,
            max_total: 8000,
            rng_seed: DEFAULT_SEED,
        }
    }
}

/// The trained vectorizer plus one binary model per class (including None).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierEnsemble {
    pub vectorizer: VectorizerModel,
    pub models: Vec<BinaryClassModel>,
}

impl ClassifierEnsemble {
    pub fn model_for(&self, class: PermissionClass) -> Option<&BinaryClassModel> {
        self.models.iter().find(|m| m.target == class)
    }

    /// Multi-label prediction: every model whose decision value is > 0
    /// contributes its class. The empty set is a legal outcome.
    pub fn predict(&self, sentence: &str) -> BTreeSet<PermissionClass> {
        let x = self.vectorizer.vectorize(sentence);
        self.models
            .iter()
            .filter(|m| m.decision(&x) > 0.0)
            .map(|m| m.target)
            .collect()
    }
}

/// Trains the full 9-model ensemble on the whole corpus.
pub fn train_ensemble(
    corpus: &[LabeledSentence],
    config: &TrainingConfig,
) -> Result<ClassifierEnsemble> {
    let vectorizer = fit_vectorizer(corpus, config.ngram_min, config.ngram_max, config.min_df)?;
    let vectors: Vec<SparseVec> = corpus
        .iter()
        .map(|s| vectorizer.vectorize(&s.text))
        .collect();
    let mut models = Vec::with_capacity(PermissionClass::ALL.len());
    for (k, class) in PermissionClass::ALL.iter().enumerate() {
        // independent deterministic stream per class
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed.wrapping_add(k as u64));
        let set = balance(corpus, *class, config, &mut rng)?;
        let data: Vec<(SparseVec, f64)> = set
            .into_iter()
            .map(|(i, y)| (vectors[i].clone(), y))
            .collect();
        models.push(train_binary(
            &data,
            *class,
            vectorizer.vocabulary_size(),
            config,
            &mut rng,
        )?);
    }
    Ok(ClassifierEnsemble { vectorizer, models })
}

/// Per-class metrics averaged over cross-validation folds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class_f1: BTreeMap<String, f64>,
    pub per_class_accuracy: BTreeMap<String, f64>,
    pub fold_count: usize,
}

/// Stratified k-fold cross-validation. Folds are stratified by full label
/// set; every fold must contain at least one positive per class on both the
/// training and test side.
pub fn cross_validate(
    corpus: &[LabeledSentence],
    config: &TrainingConfig,
    k: usize,
) -> Result<EvalReport> {
    if k < 2 {
        return Err(Error::Contract("cross-validation needs k >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ 0x6b666f6c64);

    // assign fold ids round-robin within each label-set stratum
    let mut strata: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, sent) in corpus.iter().enumerate() {
        let key: Vec<&str> = sent.labels.iter().map(|c| c.label()).collect();
        strata.entry(key.join("+")).or_default().push(i);
    }
    let mut fold_of = vec![0usize; corpus.len()];
    for members in strata.values() {
        let mut members = members.clone();
        members.shuffle(&mut rng);
        for (j, idx) in members.into_iter().enumerate() {
            fold_of[idx] = j % k;
        }
    }

    for class in PermissionClass::ALL {
        for fold in 0..k {
            let test_pos = corpus
                .iter()
                .enumerate()
                .any(|(i, s)| fold_of[i] == fold && s.labels.contains(&class));
            let train_pos = corpus
                .iter()
                .enumerate()
                .any(|(i, s)| fold_of[i] != fold && s.labels.contains(&class));
            if !test_pos || !train_pos {
                return Err(Error::FoldWithoutPositives {
                    class: class.label().to_string(),
                });
            }
        }
    }

    let mut f1_sums: BTreeMap<String, f64> = BTreeMap::new();
    let mut acc_sums: BTreeMap<String, f64> = BTreeMap::new();
    for fold in 0..k {
        let train: Vec<LabeledSentence> = corpus
            .iter()
            .enumerate()
            .filter(|(i, _)| fold_of[*i] != fold)
            .map(|(_, s)| s.clone())
            .collect();
        let test: Vec<&LabeledSentence> = corpus
            .iter()
            .enumerate()
            .filter(|(i, _)| fold_of[*i] == fold)
            .map(|(_, s)| s)
            .collect();
        let fold_config = TrainingConfig {
            rng_seed: config.rng_seed.wrapping_add(1000 + fold as u64),
            ..config.clone()
        };
        let ensemble = train_ensemble(&train, &fold_config)?;
        let predictions: Vec<BTreeSet<PermissionClass>> =
            test.iter().map(|s| ensemble.predict(&s.text)).collect();
        for class in PermissionClass::ALL {
            let mut tp = 0.0;
            let mut fp = 0.0;
            let mut fneg = 0.0;
            let mut correct = 0.0;
            for (sent, pred) in test.iter().zip(&predictions) {
                let actual = sent.labels.contains(&class);
                let predicted = pred.contains(&class);
                match (actual, predicted) {
                    (true, true) => tp += 1.0,
                    (false, true) => fp += 1.0,
                    (true, false) => fneg += 1.0,
                    (false, false) => {}
                }
                if actual == predicted {
                    correct += 1.0;
                }
            }
            let f1 = if 2.0 * tp + fp + fneg == 0.0 {
                1.0
            } else {
                2.0 * tp / (2.0 * tp + fp + fneg)
            };
            *f1_sums.entry(class.label().to_string()).or_insert(0.0) += f1;
            *acc_sums.entry(class.label().to_string()).or_insert(0.0) +=
                correct / test.len() as f64;
        }
    }

    Ok(EvalReport {
        per_class_f1: f1_sums.into_iter().map(|(c, v)| (c, v / k as f64)).collect(),
        per_class_accuracy: acc_sums
            .into_iter()
            .map(|(c, v)| (c, v / k as f64))
            .collect(),
        fold_count: k,
    })
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    ensemble: ClassifierEnsemble,
}

/// Writes the ensemble to a versioned JSON container. Serialization is
/// deterministic and round-trips weights bit-exactly.
pub fn save_ensemble(ensemble: &ClassifierEnsemble, path: &Path) -> Result<()> {
    let file = ModelFile {
        version: MODEL_FORMAT_VERSION,
        ensemble: ensemble.clone(),
    };
    let json = serde_json::to_string(&file).map_err(|e| Error::CorruptModel(e.to_string()))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_ensemble(path: &Path) -> Result<ClassifierEnsemble> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    // check the version before insisting on the full schema
    let probe: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::CorruptModel(e.to_string()))?;
    let found = probe
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::CorruptModel("missing version header".into()))? as u32;
    if found != MODEL_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            expected: MODEL_FORMAT_VERSION,
            found,
        });
    }
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| Error::CorruptModel(e.to_string()))?;
    let mut ensemble = file.ensemble;
    ensemble.vectorizer.rebuild_index();
    if ensemble.models.len() != PermissionClass::ALL.len() {
        return Err(Error::CorruptModel(format!(
            "expected {} models, found {}",
            PermissionClass::ALL.len(),
            ensemble.models.len()
        )));
    }
    Ok(ensemble)
}

/// Gradient of the per-sample objective checked against central finite
/// differences; used by tests and exposed for the verification harness.
pub fn numeric_dloss(y: f64, f: f64, h: f64) -> f64 {
    (modified_huber_loss(y, f + h) - modified_huber_loss(y, f - h)) / (2.0 * h)
}
