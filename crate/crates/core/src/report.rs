//! Confusion counts and the accuracy / sensitivity / specificity table.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("frame {0} has a prediction but no ground truth")]
    MissingTruth(usize),
    #[error("frame {0} has ground truth but no prediction")]
    MissingPrediction(usize),
    #[error("frame {0} appears twice")]
    DuplicateFrame(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    /// Counts `(predicted, actual)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = Self::default();
        for (p, t) in pairs {
            match (p, t) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// `(TP + TN) / total`.
    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// `TP / (TP + FN)`; NaN without positive frames.
    pub fn sensitivity(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `TN / (TN + FP)`; NaN without negative frames.
    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

/// Pairs predictions with ground truth by frame index; both sides must cover
/// exactly the same frames.
pub fn match_by_index(
    predictions: &[(usize, bool)],
    truth: &[(usize, bool)],
) -> Result<Confusion, ReportError> {
    let mut t = BTreeMap::new();
    for &(i, v) in truth {
        if t.insert(i, v).is_some() {
            return Err(ReportError::DuplicateFrame(i));
        }
    }
    let mut seen = BTreeMap::new();
    let mut pairs = Vec::with_capacity(predictions.len());
    for &(i, p) in predictions {
        if seen.insert(i, ()).is_some() {
            return Err(ReportError::DuplicateFrame(i));
        }
        let actual = *t.get(&i).ok_or(ReportError::MissingTruth(i))?;
        pairs.push((p, actual));
    }
    if let Some(&i) = t.keys().find(|i| !seen.contains_key(i)) {
        return Err(ReportError::MissingPrediction(i));
    }
    Ok(Confusion::from_pairs(pairs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodMetrics {
    pub method: String,
    pub confusion: Confusion,
}

/// CSV table `method,tp,tn,fp,fn,accuracy,sensitivity,specificity`.
pub fn metrics_csv(rows: &[MethodMetrics]) -> String {
    let mut out = String::from("method,tp,tn,fp,fn,accuracy,sensitivity,specificity\n");
    for r in rows {
        let c = &r.confusion;
        out.push_str(&format!(
            "{},{},{},{},{},{:.4},{:.4},{:.4}\n",
            r.method,
            c.tp,
            c.tn,
            c.fp,
            c.fn_,
            c.accuracy(),
            c.sensitivity(),
            c.specificity()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_all_positive_predictors() {
        let truth = [true, false, true, false];
        let perfect = Confusion::from_pairs(truth.iter().map(|&t| (t, t)));
        assert_eq!((perfect.accuracy(), perfect.sensitivity(), perfect.specificity()), (1.0, 1.0, 1.0));
        let yes = Confusion::from_pairs(truth.iter().map(|&t| (true, t)));
        assert_eq!((yes.sensitivity(), yes.specificity()), (1.0, 0.0));
    }

    #[test]
    fn indices_must_match() {
        let p = [(0, true), (1, false)];
        assert_eq!(match_by_index(&p, &[(0, true)]), Err(ReportError::MissingTruth(1)));
        assert_eq!(match_by_index(&p[..1], &[(0, true), (1, true)]), Err(ReportError::MissingPrediction(1)));
        let c = match_by_index(&p, &[(1, false), (0, true)]).unwrap();
        assert_eq!(c.accuracy(), 1.0);
    }
}
