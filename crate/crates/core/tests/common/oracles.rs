//! Independent reference implementations used to check the library.

use nalgebra::DMatrix;
use ordinal_impute::glm::fit_map;
use ordinal_impute::{EstimandSet, JointOrdinalDistribution, LinkFunction, PriorSpec, SplineBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Estimands of a joint `p[k][l] = Pr(G(1) = k + 1, G(0) = l + 1)` computed
/// by walking every `(g1, g0)` pair and decoding it into adverse event and
/// death indicators.
#[derive(Debug, Clone)]
pub struct PairEnumeration {
    pub itt_adverse: f64,
    pub itt_death: f64,
    pub itt_composite: f64,
    pub sace: Option<f64>,
    pub p_k: [[f64; 4]; 2],
    /// Cumulative differences at levels 1..=4; the last is zero by
    /// construction.
    pub delta: [f64; 4],
    pub tau10: f64,
    pub kappa10: f64,
    pub tau01: f64,
    pub kappa01: f64,
    pub u10: f64,
    pub u01: f64,
    pub pi: [[[Option<f64>; 4]; 4]; 2],
}

fn decode(g: usize) -> (f64, f64) {
    let a = (g - 1) % 2;
    let d = (g - 1) / 2;
    (a as f64, d as f64)
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn pair_enumeration(p: &[[f64; 4]; 4]) -> PairEnumeration {
    let mut out = PairEnumeration {
        itt_adverse: 0.0,
        itt_death: 0.0,
        itt_composite: 0.0,
        sace: None,
        p_k: [[0.0; 4]; 2],
        delta: [0.0; 4],
        tau10: 0.0,
        kappa10: 0.0,
        tau01: 0.0,
        kappa01: 0.0,
        u10: 0.0,
        u01: 0.0,
        pi: [[[None; 4]; 4]; 2],
    };
    let (mut surv, mut surv_diff) = (0.0, 0.0);
    for g1 in 1..=4usize {
        for g0 in 1..=4usize {
            let w = p[g1 - 1][g0 - 1];
            let (a1, d1) = decode(g1);
            let (a0, d0) = decode(g0);
            out.itt_adverse += w * (a1 - a0);
            out.itt_death += w * (d1 - d0);
            out.itt_composite += w * (ind(a1 + d1 > 0.0) - ind(a0 + d0 > 0.0));
            if d1 == 0.0 && d0 == 0.0 {
                surv += w;
                surv_diff += w * (a1 - a0);
            }
            out.p_k[1][g1 - 1] += w;
            out.p_k[0][g0 - 1] += w;
            for j in 1..=4usize {
                out.delta[j - 1] += w * (ind(g1 <= j) - ind(g0 <= j));
            }
            out.tau10 += w * ind(g1 >= g0);
            out.kappa10 += w * ind(g1 > g0);
            out.tau01 += w * ind(g0 >= g1);
            out.kappa01 += w * ind(g0 > g1);
            out.u10 += w * (ind(g1 > g0) + 0.5 * ind(g1 == g0));
            out.u01 += w * (ind(g0 > g1) + 0.5 * ind(g1 == g0));
        }
    }
    if surv >= 1e-12 {
        out.sace = Some(surv_diff / surv);
    }
    for k in 0..4 {
        let row: f64 = (0..4).map(|l| p[k][l]).sum();
        let col: f64 = (0..4).map(|l| p[l][k]).sum();
        for l in 0..4 {
            if row > 0.0 {
                out.pi[1][k][l] = Some(p[k][l] / row);
            }
            if col > 0.0 {
                out.pi[0][k][l] = Some(p[l][k] / col);
            }
        }
    }
    out
}

/// Random joint with exponential cell weights; about one cell in five is
/// zeroed so undefined conditionals also get exercised.
pub fn random_joint<R: Rng>(rng: &mut R) -> [[f64; 4]; 4] {
    loop {
        let mut p = [[0.0; 4]; 4];
        for cell in p.iter_mut().flatten() {
            if rng.random::<f64>() >= 0.2 {
                *cell = -(1.0 - rng.random::<f64>()).ln();
            }
        }
        let total: f64 = p.iter().flatten().sum();
        if total > 0.0 {
            p.iter_mut().flatten().for_each(|c| *c /= total);
            return p;
        }
    }
}

/// Natural cubic spline in truncated-power form over the sorted knots
/// `xi_1 < .. < xi_K` (boundaries included): `1, x` and
/// `d_k(x) - d_{K-1}(x)` for `k = 1..K-2`, where
/// `d_k(x) = ((x - xi_k)^3_+ - (x - xi_K)^3_+) / (xi_K - xi_k)`.
pub fn truncated_power_natural(knots: &[f64], x: f64) -> Vec<f64> {
    let k = knots.len();
    let cube = |t: f64| t.max(0.0).powi(3);
    let last = knots[k - 1];
    let d = |j: usize| (cube(x - knots[j]) - cube(x - last)) / (last - knots[j]);
    let mut out = vec![1.0, x];
    for j in 0..k - 2 {
        out.push(d(j) - d(k - 2));
    }
    out
}

/// Least-squares map from the columns of `from` onto `to`, evaluated on the
/// rows of `from_new`.
pub fn project(from: &DMatrix<f64>, to: &DMatrix<f64>, from_new: &DMatrix<f64>) -> DMatrix<f64> {
    let coef = from.clone().svd(true, true).solve(to, 1e-13).unwrap();
    from_new * coef
}

/// Logistic log-likelihood plus Cauchy log-densities (up to constants);
/// `scales = None` means flat priors.
pub fn logistic_log_posterior(
    x: &DMatrix<f64>,
    y: &[u8],
    theta: &[f64],
    scales: Option<&[f64]>,
) -> f64 {
    let mut v = 0.0;
    for i in 0..x.nrows() {
        let eta = theta[0]
            + (0..x.ncols())
                .map(|j| theta[j + 1] * x[(i, j)])
                .sum::<f64>();
        let log1pexp = eta.max(0.0) + (-eta.abs()).exp().ln_1p();
        v += f64::from(y[i]) * eta - log1pexp;
    }
    if let Some(s) = scales {
        for (b, s) in theta.iter().zip(s) {
            v -= (1.0 + (b / s).powi(2)).ln();
        }
    }
    v
}

/// Maximize `f` over a box by repeated grid search, zooming around the best
/// grid point each round.
pub fn grid_maximize(
    f: impl Fn(&[f64]) -> f64,
    dim: usize,
    half_width: f64,
    rounds: usize,
) -> Vec<f64> {
    const POINTS: usize = 15;
    let mut center = vec![0.0; dim];
    let mut hw = half_width;
    let mut theta = vec![0.0; dim];
    for _ in 0..rounds {
        let step = 2.0 * hw / (POINTS - 1) as f64;
        let mut best = (f64::NEG_INFINITY, center.clone());
        for idx in 0..POINTS.pow(dim as u32) {
            let mut r = idx;
            for (j, t) in theta.iter_mut().enumerate() {
                *t = center[j] - hw + step * (r % POINTS) as f64;
                r /= POINTS;
            }
            let v = f(&theta);
            if v > best.0 {
                best = (v, theta.clone());
            }
        }
        center = best.1;
        hw = 3.0 * step;
    }
    center
}

fn option_gap(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    }
}

/// Largest discrepancy between the estimand module and pair enumeration
/// over `count` random joints.
pub fn estimand_oracle_gap(count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let p = random_joint(&mut rng);
        let set = EstimandSet::from_joint(&JointOrdinalDistribution::new(p).unwrap());
        let o = pair_enumeration(&p);
        let mut gaps = vec![
            (set.itt_adverse - o.itt_adverse).abs(),
            (set.itt_death - o.itt_death).abs(),
            (set.itt_composite - o.itt_composite).abs(),
            option_gap(set.sace, o.sace),
            (set.tau10 - o.tau10).abs(),
            (set.kappa10 - o.kappa10).abs(),
            (set.tau01 - o.tau01).abs(),
            (set.kappa01 - o.kappa01).abs(),
            (set.u10 - o.u10).abs(),
            (set.u01() - o.u01).abs(),
            o.delta[3].abs(),
        ];
        for j in 0..3 {
            gaps.push((set.delta[j] - o.delta[j]).abs());
        }
        for w in 0..2 {
            for k in 0..4 {
                gaps.push((set.p_k[w][k] - o.p_k[w][k]).abs());
                for l in 0..4 {
                    gaps.push(option_gap(set.pi[w][k][l], o.pi[w][k][l]));
                }
            }
        }
        worst = gaps.into_iter().fold(worst, f64::max);
    }
    worst
}

/// Largest discrepancy between the library spline basis and the
/// truncated-power form at `points` fresh points per knot set, after mapping
/// each basis (plus a constant) onto the other on reference points. Points
/// cover the knot range and half its width on each side.
pub fn spline_oracle_gap(knot_sets: usize, points: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..knot_sets {
        let lo = rng.random_range(-4.0..-1.0);
        let hi = rng.random_range(1.0..4.0);
        let count = rng.random_range(1..=6usize);
        let mut internal: Vec<f64> = (0..count).map(|_| rng.random_range(lo..hi)).collect();
        internal.sort_by(f64::total_cmp);
        internal.dedup_by(|a, b| (*a - *b).abs() < 0.05);
        let basis = SplineBasis::from_knots(&internal, (lo, hi)).unwrap();
        let mut all = vec![lo];
        all.extend(&internal);
        all.push(hi);

        let width = hi - lo;
        let reference: Vec<f64> = (0..200)
            .map(|i| lo - 0.5 * width + 2.0 * width * i as f64 / 199.0)
            .collect();
        let fresh: Vec<f64> = (0..points)
            .map(|_| rng.random_range(lo - 0.5 * width..hi + 0.5 * width))
            .collect();
        let ours = |xs: &[f64]| {
            let mut m = DMatrix::from_element(xs.len(), basis.basis_dim() + 1, 1.0);
            for (i, &x) in xs.iter().enumerate() {
                for (j, v) in basis.evaluate(x).into_iter().enumerate() {
                    m[(i, j + 1)] = v;
                }
            }
            m
        };
        let theirs = |xs: &[f64]| {
            let rows: Vec<Vec<f64>> = xs
                .iter()
                .map(|&x| truncated_power_natural(&all, x))
                .collect();
            DMatrix::from_fn(xs.len(), rows[0].len(), |i, j| rows[i][j])
        };
        let (a_ref, b_ref, a_new, b_new) = (
            ours(&reference),
            theirs(&reference),
            ours(&fresh),
            theirs(&fresh),
        );
        assert_eq!(a_ref.ncols(), b_ref.ncols());
        let forward = (project(&a_ref, &b_ref, &a_new) - &b_new).amax();
        let backward = (project(&b_ref, &a_ref, &b_new) - &a_new).amax();
        worst = worst.max(forward).max(backward);
    }
    worst
}

/// Random logistic dataset with `n` rows and `slopes` standard-normal
/// covariates.
pub fn logistic_dataset<R: Rng>(rng: &mut R, n: usize, slopes: usize) -> (DMatrix<f64>, Vec<u8>) {
    let x = DMatrix::from_fn(n, slopes, |_, _| rng.sample::<f64, _>(StandardNormal));
    let beta: Vec<f64> = (0..=slopes).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y = (0..n)
        .map(|i| {
            let eta = beta[0] + (0..slopes).map(|j| beta[j + 1] * x[(i, j)]).sum::<f64>();
            u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp()))
        })
        .collect();
    (x, y)
}

/// Largest per-coefficient gap between `fit_map` and grid search over
/// `datasets` random problems (n <= 200, at most 3 coefficients), under flat
/// and Cauchy priors.
pub fn map_oracle_gap(datasets: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for t in 0..datasets {
        let n = rng.random_range(60..=200);
        let slopes = t % 3;
        let (x, y) = logistic_dataset(&mut rng, n, slopes);
        for cauchy in [false, true] {
            let spec = if cauchy {
                PriorSpec::cauchy()
            } else {
                PriorSpec::flat()
            };
            let priors = spec.expand(slopes);
            let fit = fit_map(&x, &y, &priors, LinkFunction::Logit).unwrap();
            let mut scales = vec![10.0];
            scales.extend(std::iter::repeat_n(2.5, slopes));
            let scales = cauchy.then_some(scales.as_slice());
            let best = grid_maximize(
                |th| logistic_log_posterior(&x, &y, th, scales),
                slopes + 1,
                8.0,
                18,
            );
            for (b, g) in fit.coefficients.iter().zip(&best) {
                worst = worst.max((b - g).abs());
            }
        }
    }
    worst
}
