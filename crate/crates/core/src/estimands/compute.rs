use serde::{Deserialize, Serialize};

use super::joint::JointOrdinalDistribution;
use super::set::{EstimandSet, SURVIVOR_MASS_FLOOR};
use crate::cohort::Cohort;
use crate::error::{Error, Result};
use crate::imputation::{CompletedDataset, ParameterDraw, ParameterSampler};
use crate::outcome::{adverse_predictor, death_predictor, CellProbabilities, OutcomeDesign};
use crate::scalar::{lit, Real};

/// Units over which effects are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    #[default]
    All,
    Treated,
}

impl Population {
    pub fn includes(self, w: u8) -> bool {
        match self {
            Population::All => true,
            Population::Treated => w == 1,
        }
    }
}

/// Estimands of one completed dataset.
pub fn finite_sample_estimands(
    ds: &CompletedDataset,
    population: Population,
) -> Result<EstimandSet<f64>> {
    let pairs: Vec<(u8, u8)> = (0..ds.len())
        .filter(|&i| population.includes(ds.w[i]))
        .map(|i| ds.ordinal_pair(i))
        .collect();
    if pairs.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "population {population:?} has no units"
        )));
    }
    Ok(EstimandSet::from_joint(
        &JointOrdinalDistribution::from_pairs(pairs)?,
    ))
}

/// Average over units of the product coupling of per-unit cell vectors.
pub fn joint_from_cells<T: Real>(
    cells1: &[CellProbabilities<T>],
    cells0: &[CellProbabilities<T>],
) -> Result<JointOrdinalDistribution<T>> {
    if cells1.len() != cells0.len() || cells1.is_empty() {
        return Err(Error::InvalidInput(
            "need the same non-zero number of units under both arms".into(),
        ));
    }
    let mut j = JointOrdinalDistribution::zeros();
    let w = T::one() / lit::<T>(cells1.len() as f64);
    for (c1, c0) in cells1.iter().zip(cells0) {
        j.add_scaled(&JointOrdinalDistribution::product(c1, c0), w);
    }
    Ok(j)
}

/// Survivor effect as a ratio of averages over units.
///
/// `q_w = c_w[0] + c_w[1]` is the survival probability under arm `w`; the
/// numerator averages `Pr(A(w) = 1, survive under both)`.
pub fn sace_from_cells<T: Real>(
    cells1: &[CellProbabilities<T>],
    cells0: &[CellProbabilities<T>],
) -> Option<T> {
    let (mut num1, mut num0, mut den) = (T::zero(), T::zero(), T::zero());
    for (c1, c0) in cells1.iter().zip(cells0) {
        let (q1, q0) = (c1[0] + c1[1], c0[0] + c0[1]);
        num1 += c1[1] * q0;
        num0 += c0[1] * q1;
        den += q1 * q0;
    }
    if cells1.is_empty() {
        return None;
    }
    let n = lit::<T>(cells1.len() as f64);
    let den = den / n;
    (den >= lit(SURVIVOR_MASS_FLOOR)).then(|| (num1 / n - num0 / n) / den)
}

/// Per-unit cell probabilities under both arms for one parameter draw,
/// restricted to the population. Returns `(cells1, cells0)`.
pub fn unit_cells(
    draw: &ParameterDraw,
    sampler: &ParameterSampler,
    design: &OutcomeDesign,
    cohort: &Cohort,
    population: Population,
) -> Result<(Vec<CellProbabilities<f64>>, Vec<CellProbabilities<f64>>)> {
    let units: Vec<usize> = (0..cohort.len())
        .filter(|&i| population.includes(cohort.w[i]))
        .collect();
    if units.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "population {population:?} has no units"
        )));
    }
    let mut out: [Vec<CellProbabilities<f64>>; 2] = [
        Vec::with_capacity(units.len()),
        Vec::with_capacity(units.len()),
    ];
    for arm in [0u8, 1] {
        let (la, ld) = sampler.links(arm);
        let ca = draw.adverse[usize::from(arm)].as_slice();
        let cd = draw.death[usize::from(arm)].as_slice();
        for &i in &units {
            let row = design.row(i);
            let pa = la.inverse_unchecked(adverse_predictor(ca, row));
            let pd0 = ld.inverse_unchecked(death_predictor(cd, row, 0));
            let pd1 = ld.inverse_unchecked(death_predictor(cd, row, 1));
            out[usize::from(arm)].push(crate::outcome::cells_unchecked(pa, pd0, pd1));
        }
    }
    let [c0, c1] = out;
    Ok((c1, c0))
}

/// Super-population estimands of one parameter draw.
pub fn superpop_estimands(
    draw: &ParameterDraw,
    sampler: &ParameterSampler,
    design: &OutcomeDesign,
    cohort: &Cohort,
    population: Population,
) -> Result<EstimandSet<f64>> {
    let (c1, c0) = unit_cells(draw, sampler, design, cohort, population)?;
    Ok(EstimandSet::from_joint(&joint_from_cells(&c1, &c0)?))
}

/// Super-population survivor effect of one parameter draw.
pub fn sace_superpop(
    draw: &ParameterDraw,
    sampler: &ParameterSampler,
    design: &OutcomeDesign,
    cohort: &Cohort,
    population: Population,
) -> Result<Option<f64>> {
    let (c1, c0) = unit_cells(draw, sampler, design, cohort, population)?;
    Ok(sace_from_cells(&c1, &c0))
}
