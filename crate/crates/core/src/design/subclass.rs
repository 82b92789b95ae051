use serde::{Deserialize, Serialize};

use super::quantile::{quantile_sorted, sorted_copy};
use crate::error::{Error, Result};
use crate::scalar::{is_finite, lit, Real};

/// Minimum number of units per arm in every subclass.
pub const MIN_PER_ARM: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Real"))]
pub struct SubclassAssignment<T: Real> {
    pub k_final: usize,
    /// 1-based subclass of each unit.
    pub labels: Vec<usize>,
    /// `k_final - 1` cut points on the score scale.
    pub boundaries: Vec<T>,
}

impl<T: Real> SubclassAssignment<T> {
    /// `(treated, control)` counts per subclass.
    pub fn arm_counts(&self, treatment: &[u8]) -> Vec<(usize, usize)> {
        arm_counts(&self.labels, treatment, self.k_final)
    }
}

fn arm_counts(labels: &[usize], treatment: &[u8], k: usize) -> Vec<(usize, usize)> {
    let mut counts = vec![(0, 0); k];
    for (&l, &w) in labels.iter().zip(treatment) {
        if w == 1 {
            counts[l - 1].0 += 1;
        } else {
            counts[l - 1].1 += 1;
        }
    }
    counts
}

/// Cut points at the `j / k` quantiles of `scores`.
pub fn quantile_boundaries<T: Real>(sorted: &[T], k: usize) -> Vec<T> {
    (1..k)
        .map(|j| quantile_sorted(sorted, lit::<T>(j as f64 / k as f64)))
        .collect()
}

/// Subclass label: one plus the number of boundaries strictly below `score`.
pub fn label_for<T: Real>(boundaries: &[T], score: T) -> usize {
    1 + boundaries.iter().filter(|&&b| b < score).count()
}

/// Equal-probability subclasses on the propensity score.
///
/// Starts at `k_init` bins and removes one at a time until every bin holds at
/// least three treated and three control units.
pub fn subclassify<T: Real>(
    scores: &[T],
    treatment: &[u8],
    k_init: usize,
) -> Result<SubclassAssignment<T>> {
    if k_init == 0 {
        return Err(Error::InvalidConfig("k_init must be at least 1".into()));
    }
    if scores.len() != treatment.len() {
        return Err(Error::InvalidInput(format!(
            "{} scores for {} treatment indicators",
            scores.len(),
            treatment.len()
        )));
    }
    if scores.iter().any(|&s| !is_finite(s)) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    if treatment.iter().any(|&w| w > 1) {
        return Err(Error::InvalidInput("treatment must be binary".into()));
    }
    let treated = treatment.iter().filter(|&&w| w == 1).count();
    let control = treatment.len() - treated;
    if treated < MIN_PER_ARM || control < MIN_PER_ARM {
        return Err(Error::InfeasibleDesign(format!(
            "need at least {MIN_PER_ARM} units per arm, have {treated} treated and {control} control"
        )));
    }
    let sorted = sorted_copy(scores);
    for k in (1..=k_init).rev() {
        let boundaries = quantile_boundaries(&sorted, k);
        let labels: Vec<usize> = scores.iter().map(|&s| label_for(&boundaries, s)).collect();
        let ok = arm_counts(&labels, treatment, k)
            .iter()
            .all(|&(t, c)| t >= MIN_PER_ARM && c >= MIN_PER_ARM);
        if ok {
            if k < k_init {
                log::info!("subclasses reduced from {k_init} to {k}");
            }
            return Ok(SubclassAssignment {
                k_final: k,
                labels,
                boundaries,
            });
        }
    }
    unreachable!("a single subclass is feasible once each arm has three units")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interleaved_scores_keep_six() {
        let scores: Vec<f64> = (0..2016).map(|i| (i as f64 + 0.5) / 2016.0).collect();
        let w: Vec<u8> = (0..2016).map(|i| (i % 2) as u8).collect();
        let s = subclassify(&scores, &w, 6).unwrap();
        assert_eq!(s.k_final, 6);
        for (t, c) in s.arm_counts(&w) {
            assert_eq!(t + c, 336);
        }
    }

    #[test]
    fn extreme_treated_forces_decrement() {
        let scores: Vec<f64> = (0..606).map(|i| i as f64 / 606.0).collect();
        let w: Vec<u8> = (0..606).map(|i| u8::from(i >= 600)).collect();
        let s = subclassify(&scores, &w, 6).unwrap();
        assert!(s.k_final <= 2);
        assert!(s.arm_counts(&w).iter().all(|&(t, c)| t >= 3 && c >= 3));
    }

    #[test]
    fn single_class_and_infeasible() {
        let scores = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let s = subclassify(&scores, &[1, 0, 1, 0, 1, 0], 1).unwrap();
        assert_eq!(s.labels, vec![1; 6]);
        assert!(s.boundaries.is_empty());
        assert!(matches!(
            subclassify(&scores, &[1, 1, 0, 0, 0, 0], 3),
            Err(Error::InfeasibleDesign(_))
        ));
    }
}
