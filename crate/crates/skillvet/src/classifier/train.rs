//! Class balancing and SGD training of a single one-vs-all binary model
//! with modified-huber loss.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::vectorizer::SparseVec;
use crate::classifier::TrainingConfig;
use crate::corpus::{LabeledSentence, PermissionClass};
use crate::error::{Error, Result};

/// Modified-huber loss: max(0, 1 - yf)^2 for yf >= -1, else -4yf.
pub fn modified_huber_loss(y: f64, f: f64) -> f64 {
    let m = y * f;
    if m >= -1.0 {
        let slack = (1.0 - m).max(0.0);
        slack * slack
    } else {
        -4.0 * m
    }
}

/// Derivative of the modified-huber loss with respect to the decision value f.
pub fn modified_huber_dloss(y: f64, f: f64) -> f64 {
    let m = y * f;
    if m >= 1.0 {
        0.0
    } else if m >= -1.0 {
        -2.0 * (1.0 - m) * y
    } else {
        -4.0 * y
    }
}

/// One trained one-vs-all binary model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinaryClassModel {
    pub target: PermissionClass,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl BinaryClassModel {
    pub fn decision(&self, x: &SparseVec) -> f64 {
        let mut f = self.bias;
        for &(i, v) in x {
            f += self.weights[i] * v;
        }
        f
    }
}

/// A balanced training set for one target class: indices into the source
/// corpus plus the ±1 label.
pub type BalancedSet = Vec<(usize, f64)>;

fn stratum_key(labels: &std::collections::BTreeSet<PermissionClass>) -> String {
    let mut parts: Vec<&str> = labels.iter().map(|c| c.label()).collect();
    parts.sort_unstable();
    parts.join("+")
}

/// Deterministic proportional subsample of `groups` down to `target` items,
/// keeping at least one item per non-empty group (largest remainder method).
fn stratified_take(
    groups: &BTreeMap<String, Vec<usize>>,
    target: usize,
    rng: &mut impl Rng,
) -> Vec<usize> {
    let total: usize = groups.values().map(|v| v.len()).sum();
    if target >= total {
        return groups.values().flatten().copied().collect();
    }
    let mut allocation: Vec<(String, usize, f64)> = Vec::new();
    let mut assigned = 0usize;
    for (key, members) in groups {
        let exact = target as f64 * members.len() as f64 / total as f64;
        let mut base = exact.floor() as usize;
        if base == 0 && !members.is_empty() && target >= groups.len() {
            base = 1; // every stratum stays represented
        }
        base = base.min(members.len());
        assigned += base;
        allocation.push((key.clone(), base, exact - exact.floor()));
    }
    // distribute the remainder by largest fractional part (ties by key)
    allocation.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));
    let mut remainder = target.saturating_sub(assigned);
    for entry in allocation.iter_mut() {
        if remainder == 0 {
            break;
        }
        let room = groups[&entry.0].len() - entry.1;
        let extra = room.min(remainder);
        entry.1 += extra;
        remainder -= extra;
    }
    let mut out = Vec::with_capacity(target);
    allocation.sort_by(|a, b| a.0.cmp(&b.0));
    for (key, take, _) in allocation {
        let mut members = groups[&key].clone();
        members.shuffle(rng);
        out.extend(members.into_iter().take(take));
    }
    out.sort_unstable();
    out
}

/// Duplicates `items` cyclically up to `target` entries.
fn oversample(items: &[usize], target: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(target);
    let mut i = 0;
    while out.len() < target {
        out.push(items[i % items.len()]);
        i += 1;
    }
    out
}

/// Builds the balanced ±1 training set for `target`: positives are sentences
/// labeled with the class, negatives everything else stratified by their own
/// label set. The negative:positive ratio ends in [1, 2] and the total size
/// in [min_total, max_total] when the source permits.
pub fn balance(
    corpus: &[LabeledSentence],
    target: PermissionClass,
    config: &TrainingConfig,
    rng: &mut impl Rng,
) -> Result<BalancedSet> {
    let mut positives: Vec<usize> = Vec::new();
    let mut neg_strata: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, sent) in corpus.iter().enumerate() {
        if sent.labels.contains(&target) {
            positives.push(i);
        } else {
            neg_strata
                .entry(stratum_key(&sent.labels))
                .or_default()
                .push(i);
        }
    }
    if positives.is_empty() {
        return Err(Error::NoPositives {
            class: target.label().to_string(),
        });
    }
    let n_neg_avail: usize = neg_strata.values().map(|v| v.len()).sum();
    if n_neg_avail == 0 {
        return Err(Error::SingleClass);
    }

    // step 1: bring the negative:positive ratio into [1, 2]
    let mut pos = positives.clone();
    let mut neg = if n_neg_avail > 2 * pos.len() {
        stratified_take(&neg_strata, 2 * pos.len(), rng)
    } else {
        neg_strata.values().flatten().copied().collect()
    };
    if neg.len() < pos.len() {
        neg = oversample(&neg, pos.len());
    }

    // step 2: move the total into [min_total, max_total], preserving the ratio
    let total = pos.len() + neg.len();
    if total < config.min_total {
        let pos_t = (pos.len() * config.min_total + total - 1) / total;
        let neg_t = (config.min_total.saturating_sub(pos_t)).clamp(pos_t, 2 * pos_t);
        pos = oversample(&pos, pos_t);
        neg = oversample(&neg, neg_t);
    } else if total > config.max_total {
        let pos_t = ((pos.len() * config.max_total) / total).max(1);
        let neg_t = config.max_total - pos_t;
        pos.shuffle(rng);
        pos.truncate(pos_t);
        let selected: std::collections::HashSet<usize> = neg.iter().copied().collect();
        let mut kept_strata: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (key, members) in &neg_strata {
            let kept: Vec<usize> =
                members.iter().filter(|i| selected.contains(i)).copied().collect();
            if !kept.is_empty() {
                kept_strata.insert(key.clone(), kept);
            }
        }
        neg = stratified_take(&kept_strata, neg_t, rng);
    }

    let mut out: BalancedSet = pos.into_iter().map(|i| (i, 1.0)).collect();
    out.extend(neg.into_iter().map(|i| (i, -1.0)));
    out.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(b.1.partial_cmp(&a.1).unwrap()));
    Ok(out)
}

/// Trains a linear model by SGD on modified-huber loss with L2 penalty
/// alpha * ||w||^2 and learning rate eta_t = 1 / (alpha * (t + t0)),
/// t0 = 1/alpha so eta_0 = 1.
pub fn train_binary(
    data: &[(SparseVec, f64)],
    target: PermissionClass,
    dim: usize,
    config: &TrainingConfig,
    rng: &mut impl Rng,
) -> Result<BinaryClassModel> {
    let has_pos = data.iter().any(|(_, y)| *y > 0.0);
    let has_neg = data.iter().any(|(_, y)| *y < 0.0);
    if !has_pos || !has_neg {
        return Err(Error::SingleClass);
    }

    let alpha = config.alpha;
    let t0 = 1.0 / alpha;
    // w is stored as scale * raw to make the L2 shrink O(1) per step
    let mut raw = vec![0.0f64; dim];
    let mut scale = 1.0f64;
    let mut bias = 0.0f64;
    let mut t = 0.0f64;
    let mut order: Vec<usize> = (0..data.len()).collect();

    for _epoch in 0..config.epochs {
        order.shuffle(rng);
        for &idx in &order {
            let (x, y) = &data[idx];
            let eta = 1.0 / (alpha * (t + t0));
            t += 1.0;

            let mut f = bias;
            for &(i, v) in x {
                f += scale * raw[i] * v;
            }
            // L2 shrink (bias unregularized)
            scale *= 1.0 - 2.0 * eta * alpha;
            if scale < 1e-9 {
                for w in raw.iter_mut() {
                    *w *= scale;
                }
                scale = 1.0;
            }
            let g = modified_huber_dloss(*y, f);
            if g != 0.0 {
                for &(i, v) in x {
                    raw[i] -= eta * g * v / scale;
                }
                bias -= eta * g;
            }
        }
    }

    let weights = raw.into_iter().map(|w| w * scale).collect();
    Ok(BinaryClassModel {
        target,
        weights,
        bias,
    })
}
