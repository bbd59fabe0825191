//! Confusion matrices and the accuracy / sensitivity / specificity report.
//!
//! Statistics are computed exactly as rationals and converted to `f64` only
//! for reporting. Sensitivity and specificity are macro averages of the
//! one-vs-rest per-class rates; a class whose denominator is zero is left
//! out of the corresponding mean.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, CLASS_NAMES, NUM_CLASSES};

pub type Rational = Ratio<i128>;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::ShapeMismatch("confusion matrix must be square".into()));
        }
        Ok(ConfusionMatrix {
            k,
            counts: rows.concat(),
        })
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k + predicted]
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        for c in [truth, predicted] {
            if c >= self.k {
                return Err(Error::ClassOutOfRange(c));
            }
        }
        self.counts[truth * self.k + predicted] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|c| self.get(c, c)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.k).map(<[u64]>::to_vec).collect()
    }

    fn row_sum(&self, c: usize) -> u64 {
        (0..self.k).map(|j| self.get(c, j)).sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        (0..self.k).map(|i| self.get(i, c)).sum()
    }

    /// One-vs-rest `(sensitivity, specificity)` for class `c`, `None` where
    /// the denominator is zero.
    pub fn class_rates(&self, c: usize) -> (Option<Rational>, Option<Rational>) {
        let total = self.total() as i128;
        let tp = self.get(c, c) as i128;
        let fn_ = self.row_sum(c) as i128 - tp;
        let fp = self.col_sum(c) as i128 - tp;
        let tn = total - tp - fn_ - fp;
        let sens = (tp + fn_ > 0).then(|| Rational::new(tp, tp + fn_));
        let spec = (tn + fp > 0).then(|| Rational::new(tn, tn + fp));
        (sens, spec)
    }
}

/// Confusion matrix over [`NUM_CLASSES`] classes from `(true, predicted)` pairs.
pub fn confusion_from_pairs(pairs: &[(usize, usize)]) -> Result<ConfusionMatrix> {
    confusion_with_classes(pairs, NUM_CLASSES)
}

pub fn confusion_with_classes(pairs: &[(usize, usize)], k: usize) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(k);
    for &(t, p) in pairs {
        cm.record(t, p)?;
    }
    Ok(cm)
}

pub fn accuracy_exact(cm: &ConfusionMatrix) -> Result<Rational> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(Rational::new(cm.trace() as i128, total as i128))
}

fn mean(values: impl Iterator<Item = Rational>) -> Rational {
    let (sum, n) = values.fold((Rational::from_integer(0), 0i128), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        Rational::from_integer(0)
    } else {
        sum / Rational::from_integer(n)
    }
}

pub fn macro_sens_spec_exact(cm: &ConfusionMatrix) -> Result<(Rational, Rational)> {
    if cm.total() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let rates: Vec<_> = (0..cm.classes()).map(|c| cm.class_rates(c)).collect();
    Ok((
        mean(rates.iter().filter_map(|r| r.0)),
        mean(rates.iter().filter_map(|r| r.1)),
    ))
}

pub fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn accuracy_of(cm: &ConfusionMatrix) -> Result<f64> {
    accuracy_exact(cm).map(to_f64)
}

pub fn macro_sens_spec(cm: &ConfusionMatrix) -> Result<(f64, f64)> {
    macro_sens_spec_exact(cm).map(|(a, b)| (to_f64(a), to_f64(b)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class_id: usize,
    pub class_name: String,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub support: u64,
}

/// Evaluation report written by `nbad eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub sensitivity_macro: f64,
    pub specificity_macro: f64,
    pub confusion: Vec<Vec<u64>>,
    pub per_class: Vec<ClassReport>,
    pub n_samples: u64,
    /// How the single sensitivity/specificity figures were aggregated.
    pub aggregation: String,
}

impl EvalReport {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Result<EvalReport> {
        let (sens, spec) = macro_sens_spec(cm)?;
        let per_class = (0..cm.classes())
            .map(|c| {
                let (s, p) = cm.class_rates(c);
                ClassReport {
                    class_id: c,
                    class_name: CLASS_NAMES.get(c).copied().unwrap_or("?").to_string(),
                    sensitivity: s.map(to_f64),
                    specificity: p.map(to_f64),
                    support: cm.row_sum(c),
                }
            })
            .collect();
        Ok(EvalReport {
            accuracy: accuracy_of(cm)?,
            sensitivity_macro: sens,
            specificity_macro: spec,
            confusion: cm.rows(),
            per_class,
            n_samples: cm.total(),
            aggregation: "macro one-vs-rest".into(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> ConfusionMatrix {
        ConfusionMatrix::from_rows(&[vec![2, 0, 0], vec![1, 1, 0], vec![0, 0, 1]]).unwrap()
    }

    #[test]
    fn empty_pairs_give_zero_matrix() {
        let cm = confusion_from_pairs(&[]).unwrap();
        assert_eq!(cm.total(), 0);
        assert!(matches!(accuracy_of(&cm), Err(Error::EmptyMatrix)));
        assert!(matches!(macro_sens_spec(&cm), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn identity_pairs() {
        let cm = confusion_from_pairs(&[(0, 0), (1, 1)]).unwrap();
        assert_eq!(cm.get(0, 0), 1);
        assert_eq!(cm.get(1, 1), 1);
        assert_eq!(accuracy_of(&cm).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range_pair() {
        assert!(matches!(
            confusion_from_pairs(&[(0, 5)]),
            Err(Error::ClassOutOfRange(5))
        ));
    }

    #[test]
    fn worked_three_class_example() {
        let cm = worked();
        assert_eq!(accuracy_exact(&cm).unwrap(), Rational::new(4, 5));
        let (sens, spec) = macro_sens_spec_exact(&cm).unwrap();
        assert_eq!(sens, Rational::new(5, 6));
        assert_eq!(spec, Rational::new(8, 9));
        let (s, p) = macro_sens_spec(&cm).unwrap();
        assert!((s - 0.8333333333333334).abs() < 1e-15);
        assert!((p - 0.8888888888888888).abs() < 1e-15);
    }

    #[test]
    fn diagonal_and_zero_diagonal() {
        let diag = ConfusionMatrix::from_rows(&[vec![3, 0], vec![0, 4]]).unwrap();
        assert_eq!(accuracy_of(&diag).unwrap(), 1.0);
        assert_eq!(macro_sens_spec(&diag).unwrap(), (1.0, 1.0));
        let off = ConfusionMatrix::from_rows(&[vec![0, 3], vec![4, 0]]).unwrap();
        assert_eq!(accuracy_of(&off).unwrap(), 0.0);
    }

    #[test]
    fn single_predicted_class_specificity() {
        // everything predicted as class 0
        let pairs = [(0, 0), (0, 0), (1, 0), (2, 0), (2, 0)];
        let cm = confusion_with_classes(&pairs, 3).unwrap();
        let (_, spec0) = cm.class_rates(0);
        // TN = 0, FP = 3 other-class samples
        assert_eq!(spec0, Some(Rational::new(0, 3)));
        let (_, spec1) = cm.class_rates(1);
        assert_eq!(spec1, Some(Rational::new(4, 4)));
    }

    #[test]
    fn zero_support_class_excluded() {
        let cm = ConfusionMatrix::from_rows(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 0]]).unwrap();
        let (s, _) = cm.class_rates(2);
        assert_eq!(s, None);
        assert_eq!(macro_sens_spec_exact(&cm).unwrap().0, Rational::from_integer(1));
    }

    #[test]
    fn report_fields() {
        let cm = confusion_from_pairs(&[(0, 0), (1, 1), (2, 1), (3, 3), (4, 4)]).unwrap();
        let r = EvalReport::from_confusion(&cm).unwrap();
        assert_eq!(r.confusion.len(), 5);
        assert!(r.confusion.iter().all(|row| row.len() == 5));
        assert_eq!(r.n_samples, 5);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in [
            "accuracy",
            "sensitivity_macro",
            "specificity_macro",
            "confusion",
            "per_class",
            "n_samples",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
