use crate::error::{Error, Result};
use crate::scalar::Real;

/// Probabilities of the four ordinal levels of one potential outcome:
/// no event, adverse event only, death only, both.
pub type CellProbabilities<T> = [T; 4];

/// Ordinal level for an (adverse event, death) pair.
#[inline]
pub fn compose_ordinal(a: u8, d: u8) -> u8 {
    debug_assert!(a <= 1 && d <= 1);
    1 + a + 2 * d
}

/// Cell probabilities from `P(A)`, `P(D | A = 0)` and `P(D | A = 1)`.
pub fn ordinal_cell_probs<T: Real>(p_a: T, p_d0: T, p_d1: T) -> Result<CellProbabilities<T>> {
    for (name, p) in [("P(A)", p_a), ("P(D|A=0)", p_d0), ("P(D|A=1)", p_d1)] {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::InvalidInput(format!(
                "{name} must lie in [0, 1], got {p:?}"
            )));
        }
    }
    Ok(cells_unchecked(p_a, p_d0, p_d1))
}

#[inline]
pub(crate) fn cells_unchecked<T: Real>(p_a: T, p_d0: T, p_d1: T) -> CellProbabilities<T> {
    let one = T::one();
    [
        (one - p_a) * (one - p_d0),
        p_a * (one - p_d1),
        (one - p_a) * p_d0,
        p_a * p_d1,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn levels() {
        assert_eq!(compose_ordinal(0, 0), 1);
        assert_eq!(compose_ordinal(1, 0), 2);
        assert_eq!(compose_ordinal(0, 1), 3);
        assert_eq!(compose_ordinal(1, 1), 4);
    }

    #[test]
    fn hand_values() {
        assert_eq!(
            ordinal_cell_probs(0.0, 0.0, 0.7).unwrap(),
            [1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(ordinal_cell_probs(0.5, 0.5, 0.5).unwrap(), [0.25; 4]);
        let c = ordinal_cell_probs(0.2, 0.3, 0.6).unwrap();
        for (x, y) in c.iter().zip([0.56f64, 0.08, 0.24, 0.12]) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(ordinal_cell_probs(1.2, 0.0, 0.0).is_err());
        assert!(ordinal_cell_probs(0.2, f64::NAN, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn sums_and_marginals(pa in 0.0f64..=1.0, p0 in 0.0f64..=1.0, p1 in 0.0f64..=1.0) {
            let c = ordinal_cell_probs(pa, p0, p1).unwrap();
            prop_assert!((c.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!((c[1] + c[3] - pa).abs() <= 1e-12);
            prop_assert!((c[2] + c[3] - (pa * p1 + (1.0 - pa) * p0)).abs() <= 1e-12);
        }
    }
}
