use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::streams::{stream_rng, Purpose};
use crate::cohort::Cohort;
use crate::error::{Error, Result};
use crate::glm::{LinkFunction, PosteriorSampler};
use crate::outcome::{
    adverse_predictor, compose_ordinal, death_predictor, ArmOutcomeFits, OutcomeDesign,
};

/// One draw of the four outcome-model coefficient vectors, indexed by arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterDraw {
    pub adverse: [DVector<f64>; 2],
    pub death: [DVector<f64>; 2],
}

/// Laplace-approximation samplers for the four outcome models.
#[derive(Debug, Clone)]
pub struct ParameterSampler {
    adverse: [PosteriorSampler<f64>; 2],
    death: [PosteriorSampler<f64>; 2],
    links: [(LinkFunction<f64>, LinkFunction<f64>); 2],
}

impl ParameterSampler {
    pub fn new(fits: &[ArmOutcomeFits<f64>; 2]) -> Result<Self> {
        for (arm, f) in fits.iter().enumerate() {
            if usize::from(f.arm) != arm {
                return Err(Error::InvalidInput(format!(
                    "fit for arm {} passed in slot {arm}",
                    f.arm
                )));
            }
        }
        let s = |f: &crate::glm::ModelFit<f64>| PosteriorSampler::new_unchecked(f);
        Ok(ParameterSampler {
            adverse: [s(&fits[0].adverse_fit)?, s(&fits[1].adverse_fit)?],
            death: [s(&fits[0].death_fit)?, s(&fits[1].death_fit)?],
            links: [
                (fits[0].adverse_fit.link, fits[0].death_fit.link),
                (fits[1].adverse_fit.link, fits[1].death_fit.link),
            ],
        })
    }

    /// Draw `m`, each model from its own stream.
    pub fn draw(&self, seed: u64, m: usize) -> ParameterDraw {
        let d =
            |sampler: &PosteriorSampler<f64>, p: Purpose| sampler.draw(&mut stream_rng(seed, m, p));
        ParameterDraw {
            adverse: [
                d(&self.adverse[0], Purpose::adverse_draw(0)),
                d(&self.adverse[1], Purpose::adverse_draw(1)),
            ],
            death: [
                d(&self.death[0], Purpose::death_draw(0)),
                d(&self.death[1], Purpose::death_draw(1)),
            ],
        }
    }

    /// `(adverse, death)` links of an arm.
    pub fn links(&self, arm: u8) -> (LinkFunction<f64>, LinkFunction<f64>) {
        self.links[usize::from(arm)]
    }
}

pub fn draw_parameters(
    fits: &[ArmOutcomeFits<f64>; 2],
    seed: u64,
    m: usize,
) -> Result<ParameterDraw> {
    Ok(ParameterSampler::new(fits)?.draw(seed, m))
}

/// Fully observed potential-outcome table of one imputation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompletedDataset {
    pub m: usize,
    /// Observed arm of each unit.
    pub w: Vec<u8>,
    pub a0: Vec<u8>,
    pub a1: Vec<u8>,
    pub d0: Vec<u8>,
    pub d1: Vec<u8>,
}

impl CompletedDataset {
    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// `(G_i(1), G_i(0))` for unit `i`.
    pub fn ordinal_pair(&self, i: usize) -> (u8, u8) {
        (
            compose_ordinal(self.a1[i], self.d1[i]),
            compose_ordinal(self.a0[i], self.d0[i]),
        )
    }
}

/// Unobserved confounder entering the imputation-time predictors as
/// `delta_a * z` and `delta_d * z`.
#[derive(Debug, Clone, Copy)]
pub struct ConfounderShift<'a> {
    pub z: &'a [f64],
    pub delta_a: f64,
    pub delta_d: f64,
}

/// Impute the missing outcomes of imputation `m` from a parameter draw.
///
/// Units observed under arm `w` get `A(1-w)` drawn first and `D(1-w)` given
/// it; observed values are copied.
pub fn impute_with(
    draw: &ParameterDraw,
    sampler: &ParameterSampler,
    design: &OutcomeDesign,
    cohort: &Cohort,
    seed: u64,
    m: usize,
    shift: Option<ConfounderShift<'_>>,
) -> CompletedDataset {
    let n = cohort.len();
    let mut out = CompletedDataset {
        m,
        w: cohort.w.clone(),
        a0: vec![0; n],
        a1: vec![0; n],
        d0: vec![0; n],
        d1: vec![0; n],
    };
    for arm in [0u8, 1] {
        let (link_a, link_d) = sampler.links(arm);
        let coef_a = draw.adverse[usize::from(arm)].as_slice();
        let coef_d = draw.death[usize::from(arm)].as_slice();
        let mut rng = stream_rng(seed, m, Purpose::impute(arm));
        let (a_out, d_out) = if arm == 0 {
            (&mut out.a0, &mut out.d0)
        } else {
            (&mut out.a1, &mut out.d1)
        };
        for i in 0..n {
            if cohort.w[i] == arm {
                a_out[i] = cohort.a[i];
                d_out[i] = cohort.d[i];
                continue;
            }
            let row = design.row(i);
            let (sa, sd) = match shift {
                Some(s) => (s.delta_a * s.z[i], s.delta_d * s.z[i]),
                None => (0.0, 0.0),
            };
            let pa = link_a.inverse_unchecked(adverse_predictor(coef_a, row) + sa);
            let a = u8::from(rng.random::<f64>() < pa);
            let pd = link_d.inverse_unchecked(death_predictor(coef_d, row, a) + sd);
            let d = u8::from(rng.random::<f64>() < pd);
            a_out[i] = a;
            d_out[i] = d;
        }
    }
    out
}

/// Draw parameters and impute once.
pub fn impute_once(
    fits: &[ArmOutcomeFits<f64>; 2],
    design: &OutcomeDesign,
    cohort: &Cohort,
    seed: u64,
    m: usize,
) -> Result<(ParameterDraw, CompletedDataset)> {
    check_dims(fits, design, cohort)?;
    let sampler = ParameterSampler::new(fits)?;
    let draw = sampler.draw(seed, m);
    let ds = impute_with(&draw, &sampler, design, cohort, seed, m, None);
    Ok((draw, ds))
}

fn check_dims(
    fits: &[ArmOutcomeFits<f64>; 2],
    design: &OutcomeDesign,
    cohort: &Cohort,
) -> Result<()> {
    if design.matrix.nrows() != cohort.len() {
        return Err(Error::InvalidInput(format!(
            "design has {} rows for {} units",
            design.matrix.nrows(),
            cohort.len()
        )));
    }
    for f in fits {
        if f.design_dim() != design.ncols() || f.death_fit.dim() != design.ncols() + 2 {
            return Err(Error::InvalidInput(
                "outcome fits do not match the design".into(),
            ));
        }
    }
    Ok(())
}

/// `M` parameter draws and completed datasets.
#[derive(Debug, Clone, Serialize)]
pub struct ImputationRun {
    pub imputations: usize,
    pub seed: u64,
    pub draws: Vec<ParameterDraw>,
    pub datasets: Vec<CompletedDataset>,
}

pub fn run_imputations(
    fits: &[ArmOutcomeFits<f64>; 2],
    design: &OutcomeDesign,
    cohort: &Cohort,
    imputations: usize,
    seed: u64,
) -> Result<ImputationRun> {
    if imputations < 2 {
        return Err(Error::InvalidConfig(format!(
            "at least 2 imputations are needed, got {imputations}"
        )));
    }
    check_dims(fits, design, cohort)?;
    let sampler = ParameterSampler::new(fits)?;
    let (draws, datasets): (Vec<_>, Vec<_>) = (0..imputations)
        .into_par_iter()
        .map(|m| {
            let draw = sampler.draw(seed, m);
            let ds = impute_with(&draw, &sampler, design, cohort, seed, m, None);
            (draw, ds)
        })
        .unzip();
    Ok(ImputationRun {
        imputations,
        seed,
        draws,
        datasets,
    })
}
