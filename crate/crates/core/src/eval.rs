//! Ranking metrics for scored streams: AUC-ROC, contamination thresholding,
//! and per-anomaly-type accuracy.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ground-truth tag for a point. `None` marks a normal point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnomalyType {
    None,
    Point,
    Contextual,
    Collective,
}

impl AnomalyType {
    /// True for every tag except `None`.
    pub fn is_anomalous(self) -> bool {
        self != AnomalyType::None
    }
}

impl FromStr for AnomalyType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AnomalyType::None),
            "point" => Ok(AnomalyType::Point),
            "contextual" => Ok(AnomalyType::Contextual),
            "collective" => Ok(AnomalyType::Collective),
            other => Err(Error::UnknownTypeTag(other.to_string())),
        }
    }
}

impl fmt::Display for AnomalyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AnomalyType::None => "none",
            AnomalyType::Point => "point",
            AnomalyType::Contextual => "contextual",
            AnomalyType::Collective => "collective",
        };
        f.write_str(s)
    }
}

/// Area under the ROC curve via the rank-sum identity.
///
/// Scores are ranked ascending with mid-ranks for ties, so a tie between an
/// anomalous and a normal point contributes exactly half a concordant pair:
///
/// ```text
/// auc = (sum of anomaly ranks - (n_a^2 + n_a) / 2) / (n_a * n_n)
/// ```
///
/// Errors when the labels contain only one class.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let n = scores.len();
    let n_anom = labels.iter().filter(|&&l| l).count();
    let n_norm = n - n_anom;
    if n_anom == 0 || n_norm == 0 {
        return Err(Error::AucUndefined);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Mid-rank of the tie group occupying 1-based positions i+1..=j+1.
        let rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }

    let rank_sum: f64 = labels
        .iter()
        .zip(&ranks)
        .filter(|(&l, _)| l)
        .map(|(_, &r)| r)
        .sum();
    let n_a = n_anom as f64;
    Ok((rank_sum - (n_a * n_a + n_a) / 2.0) / (n_a * n_norm as f64))
}

/// Flags exactly `ceil(contamination * scores.len())` points, picking the
/// highest scores first and breaking score ties toward the earlier index.
pub fn threshold_labels(scores: &[f64], contamination: f64) -> Result<Vec<bool>> {
    if !(contamination > 0.0 && contamination < 1.0) {
        return Err(Error::InvalidContamination(contamination));
    }
    let n = scores.len();
    let count = (contamination * n as f64).ceil() as usize;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut flags = vec![false; n];
    for &idx in &order[..count] {
        flags[idx] = true;
    }
    Ok(flags)
}

/// Accuracy per ground-truth type: for anomalous types the fraction of points
/// the detector flagged, for `None` the fraction it left unflagged. Types with
/// no points in the ground truth simply do not appear in the map.
pub fn per_type_accuracy(
    types: &[AnomalyType],
    predictions: &[bool],
) -> Result<BTreeMap<AnomalyType, f64>> {
    if types.len() != predictions.len() {
        return Err(Error::LengthMismatch {
            what: "predictions",
            expected: types.len(),
            got: predictions.len(),
        });
    }
    let mut hits: BTreeMap<AnomalyType, (usize, usize)> = BTreeMap::new();
    for (&ty, &pred) in types.iter().zip(predictions) {
        let correct = if ty.is_anomalous() { pred } else { !pred };
        let entry = hits.entry(ty).or_insert((0, 0));
        entry.1 += 1;
        if correct {
            entry.0 += 1;
        }
    }
    Ok(hits
        .into_iter()
        .map(|(ty, (correct, total))| (ty, correct as f64 / total as f64))
        .collect())
}

/// Summary of one benchmark invocation: AUC across repetitions plus optional
/// per-type accuracies, with enough configuration echoed to rerun it.
#[derive(Clone, Debug)]
pub struct MetricsReport {
    pub dataset: String,
    pub config: String,
    pub seed: u64,
    pub aucs: Vec<f64>,
    pub per_type: Option<BTreeMap<AnomalyType, f64>>,
    pub scored_points: usize,
}

impl MetricsReport {
    pub fn auc_mean(&self) -> f64 {
        if self.aucs.is_empty() {
            return f64::NAN;
        }
        self.aucs.iter().sum::<f64>() / self.aucs.len() as f64
    }

    pub fn auc_std(&self) -> f64 {
        if self.aucs.len() < 2 {
            return 0.0;
        }
        let mean = self.auc_mean();
        let var = self
            .aucs
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / (self.aucs.len() - 1) as f64;
        var.sqrt()
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# cubeforest metrics v1")?;
        writeln!(f, "dataset={}", self.dataset)?;
        writeln!(f, "config={}", self.config)?;
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "reps={}", self.aucs.len())?;
        writeln!(f, "scored_points={}", self.scored_points)?;
        writeln!(f, "auc_mean={:.6}", self.auc_mean())?;
        writeln!(f, "auc_std={:.6}", self.auc_std())?;
        for (i, auc) in self.aucs.iter().enumerate() {
            writeln!(f, "auc_rep_{i}={auc:.6}")?;
        }
        if let Some(per_type) = &self.per_type {
            for (ty, acc) in per_type {
                writeln!(f, "accuracy_{ty}={acc:.6}")?;
            }
        }
        Ok(())
    }
}
