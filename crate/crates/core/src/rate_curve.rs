//! Accuracy as a fraction of decisions made.
//!
//! Results are ranked by confidence; each prefix of the ranking yields one
//! curve point (fraction of pairs decided, accuracy among them).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Confidence of the last decision included in this prefix.
    pub threshold: f64,
    /// Fraction of all results decided at this threshold.
    pub decision_fraction: f64,
    /// Fraction correct among the decided prefix.
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionRateCurve {
    pub points: Vec<CurvePoint>,
}

impl DecisionRateCurve {
    /// Accuracy when every decision is taken.
    pub fn overall_accuracy(&self) -> f64 {
        self.points.last().map(|p| p.accuracy).unwrap_or(0.0)
    }
}

/// Rank by confidence, descending; ties keep input order. Prefix `k` maps
/// to the point `(k/total, correct_in_prefix/k)`.
pub fn decision_rate_curve(results: &[(bool, f64)]) -> Result<DecisionRateCurve> {
    if results.is_empty() {
        return Err(Error::InvalidArgument("decision-rate curve needs at least one result".into()));
    }
    let mut ranked: Vec<(bool, f64)> = results.to_vec();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let total = ranked.len() as f64;
    let mut correct = 0usize;
    let points = ranked
        .iter()
        .enumerate()
        .map(|(i, &(ok, conf))| {
            if ok {
                correct += 1;
            }
            CurvePoint {
                threshold: conf,
                decision_fraction: (i + 1) as f64 / total,
                accuracy: correct as f64 / (i + 1) as f64,
            }
        })
        .collect();
    Ok(DecisionRateCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_correct_is_flat_at_one() {
        let results = vec![(true, 0.9), (true, 0.5), (true, 0.1)];
        let curve = decision_rate_curve(&results).unwrap();
        assert!(curve.points.iter().all(|p| p.accuracy == 1.0));
    }

    #[test]
    fn two_point_hand_case() {
        let curve = decision_rate_curve(&[(true, 0.9), (false, 0.1)]).unwrap();
        assert_eq!(curve.points.len(), 2);
        assert_eq!((curve.points[0].decision_fraction, curve.points[0].accuracy), (0.5, 1.0));
        assert_eq!((curve.points[1].decision_fraction, curve.points[1].accuracy), (1.0, 0.5));
    }

    #[test]
    fn equal_confidences_keep_input_order() {
        let results = vec![(false, 0.5), (true, 0.5), (true, 0.5), (true, 0.5)];
        let curve = decision_rate_curve(&results).unwrap();
        let acc: Vec<f64> = curve.points.iter().map(|p| p.accuracy).collect();
        assert_eq!(acc, vec![0.0, 0.5, 2.0 / 3.0, 0.75]);
        assert_eq!(curve.overall_accuracy(), 0.75);
    }

    #[test]
    fn final_point_is_overall_accuracy_exactly() {
        let results: Vec<(bool, f64)> =
            (0..37).map(|i| (i % 3 != 0, (i as f64 * 0.37).sin().abs())).collect();
        let curve = decision_rate_curve(&results).unwrap();
        let direct = results.iter().filter(|r| r.0).count() as f64 / results.len() as f64;
        assert_eq!(curve.overall_accuracy(), direct);
        assert_eq!(curve.points.last().unwrap().decision_fraction, 1.0);
    }

    #[test]
    fn fractions_are_nondecreasing_and_bounded() {
        let results: Vec<(bool, f64)> =
            (0..25).map(|i| (i % 2 == 0, ((i * 7) % 25) as f64 / 25.0)).collect();
        let curve = decision_rate_curve(&results).unwrap();
        for w in curve.points.windows(2) {
            assert!(w[1].decision_fraction > w[0].decision_fraction);
            assert!(w[1].threshold <= w[0].threshold);
        }
        for p in &curve.points {
            assert!((0.0..=1.0).contains(&p.decision_fraction));
            assert!((0.0..=1.0).contains(&p.accuracy));
        }
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(decision_rate_curve(&[]), Err(Error::InvalidArgument(_))));
    }
}
