use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outcome::CellProbabilities;
use crate::scalar::{is_finite, lit, to_f64, Real};

/// Joint law of `(G(1), G(0))`; `p[k][l] = Pr(G(1) = k + 1, G(0) = l + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointOrdinalDistribution<T> {
    pub p: [[T; 4]; 4],
}

impl<T: Real> JointOrdinalDistribution<T> {
    pub fn zeros() -> Self {
        JointOrdinalDistribution {
            p: [[T::zero(); 4]; 4],
        }
    }

    /// Checks non-negativity and unit total (tolerance `1e-12`, relaxed for
    /// `f32`).
    pub fn new(p: [[T; 4]; 4]) -> Result<Self> {
        let j = JointOrdinalDistribution { p };
        let tol = if std::mem::size_of::<T>() < 8 {
            1e-5
        } else {
            1e-12
        };
        if p.iter().flatten().any(|&x| !is_finite(x) || x < T::zero()) {
            return Err(Error::InvalidInput(
                "joint probabilities must be finite and non-negative".into(),
            ));
        }
        if (to_f64(j.total()) - 1.0).abs() > tol {
            return Err(Error::InvalidInput(format!(
                "joint probabilities sum to {:?}",
                j.total()
            )));
        }
        Ok(j)
    }

    /// Independent coupling of two marginal cell vectors.
    pub fn product(c1: &CellProbabilities<T>, c0: &CellProbabilities<T>) -> Self {
        let mut p = [[T::zero(); 4]; 4];
        for k in 0..4 {
            for l in 0..4 {
                p[k][l] = c1[k] * c0[l];
            }
        }
        JointOrdinalDistribution { p }
    }

    /// Empirical distribution of `(G(1), G(0))` pairs with levels `1..=4`.
    pub fn from_pairs<I: IntoIterator<Item = (u8, u8)>>(pairs: I) -> Result<Self> {
        let mut counts = [[0usize; 4]; 4];
        let mut n = 0usize;
        for (g1, g0) in pairs {
            if !(1..=4).contains(&g1) || !(1..=4).contains(&g0) {
                return Err(Error::InvalidInput(format!(
                    "ordinal levels must be 1..=4, got ({g1}, {g0})"
                )));
            }
            counts[usize::from(g1 - 1)][usize::from(g0 - 1)] += 1;
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidInput("no units to tabulate".into()));
        }
        let nn = lit::<T>(n as f64);
        let mut p = [[T::zero(); 4]; 4];
        for k in 0..4 {
            for l in 0..4 {
                p[k][l] = lit::<T>(counts[k][l] as f64) / nn;
            }
        }
        Ok(JointOrdinalDistribution { p })
    }

    pub fn add_scaled(&mut self, other: &Self, weight: T) {
        for k in 0..4 {
            for l in 0..4 {
                self.p[k][l] += weight * other.p[k][l];
            }
        }
    }

    pub fn total(&self) -> T {
        self.p.iter().flatten().fold(T::zero(), |s, &x| s + x)
    }

    /// `Pr(G(1) = k)` for `k` in `0..4` (0-based).
    pub fn marginal_active(&self) -> [T; 4] {
        let mut m = [T::zero(); 4];
        for k in 0..4 {
            for l in 0..4 {
                m[k] += self.p[k][l];
            }
        }
        m
    }

    /// `Pr(G(0) = l)` for `l` in `0..4` (0-based).
    pub fn marginal_control(&self) -> [T; 4] {
        let mut m = [T::zero(); 4];
        for k in 0..4 {
            for l in 0..4 {
                m[l] += self.p[k][l];
            }
        }
        m
    }
}
