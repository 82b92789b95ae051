use serde::{Deserialize, Serialize};

use super::joint::JointOrdinalDistribution;
use crate::scalar::{lit, Real};

/// Survivor mass below which the survivor effect is reported as undefined.
pub const SURVIVOR_MASS_FLOOR: f64 = 1e-12;

/// Every estimand derived from one joint ordinal distribution.
///
/// Arm-indexed arrays use index 1 for the active arm and 0 for control.
/// Ordinal levels are 0-based in arrays (index 0 is level 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimandSet<T> {
    pub itt_adverse: T,
    pub itt_death: T,
    pub itt_composite: T,
    /// Undefined when no unit survives under both arms.
    pub sace: Option<T>,
    /// `p_k[w][k] = Pr(G(w) = k + 1)`.
    pub p_k: [[T; 4]; 2],
    /// `delta[j] = Pr(G(1) <= j + 1) - Pr(G(0) <= j + 1)`; the fourth is 0.
    pub delta: [T; 3],
    pub tau10: T,
    pub kappa10: T,
    pub tau01: T,
    pub kappa01: T,
    pub u10: T,
    pub kappa_diff: T,
    /// `kappa10 / kappa01`; undefined when `kappa01 = 0`.
    pub kappa_ratio: Option<T>,
    /// `pi[w][k][l] = Pr(G(1 - w) = l + 1 | G(w) = k + 1)`; rows with zero
    /// mass are undefined.
    pub pi: [[[Option<T>; 4]; 4]; 2],
}

impl<T: Real> EstimandSet<T> {
    pub fn from_joint(j: &JointOrdinalDistribution<T>) -> Self {
        let p = &j.p;
        let m1 = j.marginal_active();
        let m0 = j.marginal_control();
        let half = lit::<T>(0.5);

        // A(w) = 1 at levels 2 and 4, D(w) = 1 at levels 3 and 4.
        let itt_adverse = (m1[1] + m1[3]) - (m0[1] + m0[3]);
        let itt_death = (m1[2] + m1[3]) - (m0[2] + m0[3]);
        let itt_composite = (m0[0]) - (m1[0]);

        // Always survivors: G(1) and G(0) both in {1, 2}.
        let survivors = p[0][0] + p[0][1] + p[1][0] + p[1][1];
        let sace = (survivors >= lit(SURVIVOR_MASS_FLOOR)).then(|| (p[1][0] - p[0][1]) / survivors);

        let mut delta = [T::zero(); 3];
        let (mut c1, mut c0) = (T::zero(), T::zero());
        for jx in 0..3 {
            c1 += m1[jx];
            c0 += m0[jx];
            delta[jx] = c1 - c0;
        }

        let (mut kappa10, mut kappa01, mut ties) = (T::zero(), T::zero(), T::zero());
        for k in 0..4 {
            for l in 0..4 {
                if k > l {
                    kappa10 += p[k][l];
                } else if k < l {
                    kappa01 += p[k][l];
                } else {
                    ties += p[k][l];
                }
            }
        }
        let tau10 = kappa10 + ties;
        let tau01 = kappa01 + ties;

        let mut pi = [[[None; 4]; 4]; 2];
        for k in 0..4 {
            if m1[k] > T::zero() {
                for l in 0..4 {
                    pi[1][k][l] = Some(p[k][l] / m1[k]);
                }
            }
            if m0[k] > T::zero() {
                for l in 0..4 {
                    pi[0][k][l] = Some(p[l][k] / m0[k]);
                }
            }
        }

        EstimandSet {
            itt_adverse,
            itt_death,
            itt_composite,
            sace,
            p_k: [m0, m1],
            delta,
            tau10,
            kappa10,
            tau01,
            kappa01,
            u10: (kappa10 + tau10) * half,
            kappa_diff: kappa10 - kappa01,
            kappa_ratio: (kappa01 > T::zero()).then(|| kappa10 / kappa01),
            pi,
        }
    }

    /// `U01 = 1 - U10`.
    pub fn u01(&self) -> T {
        (self.kappa01 + self.tau01) * lit::<T>(0.5)
    }

    pub fn get(&self, e: Estimand) -> Option<T> {
        Some(match e {
            Estimand::IttAdverse => self.itt_adverse,
            Estimand::IttDeath => self.itt_death,
            Estimand::IttComposite => self.itt_composite,
            Estimand::Sace => return self.sace,
            Estimand::LevelProb { arm, level } => {
                self.p_k[usize::from(arm)][usize::from(level - 1)]
            }
            Estimand::LevelDiff { level } => {
                let k = usize::from(level - 1);
                self.p_k[1][k] - self.p_k[0][k]
            }
            Estimand::Delta { level } => self.delta[usize::from(level - 1)],
            Estimand::Tau10 => self.tau10,
            Estimand::Kappa10 => self.kappa10,
            Estimand::Tau01 => self.tau01,
            Estimand::Kappa01 => self.kappa01,
            Estimand::U10 => self.u10,
            Estimand::KappaDiff => self.kappa_diff,
            Estimand::KappaRatio => return self.kappa_ratio,
            Estimand::Pi { arm, k, l } => {
                return self.pi[usize::from(arm)][usize::from(k - 1)][usize::from(l - 1)]
            }
        })
    }
}

/// A scalar estimand. Levels are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimand {
    IttAdverse,
    IttDeath,
    IttComposite,
    Sace,
    LevelProb { arm: u8, level: u8 },
    LevelDiff { level: u8 },
    Delta { level: u8 },
    Tau10,
    Kappa10,
    Tau01,
    Kappa01,
    U10,
    KappaDiff,
    KappaRatio,
    Pi { arm: u8, k: u8, l: u8 },
}

impl Estimand {
    /// The effect summaries reported in the simulation studies.
    pub const HEADLINE: [Estimand; 10] = [
        Estimand::IttAdverse,
        Estimand::IttDeath,
        Estimand::IttComposite,
        Estimand::Sace,
        Estimand::LevelDiff { level: 1 },
        Estimand::LevelDiff { level: 2 },
        Estimand::LevelDiff { level: 3 },
        Estimand::LevelDiff { level: 4 },
        Estimand::KappaDiff,
        Estimand::KappaRatio,
    ];

    /// Every scalar estimand, in report order.
    pub fn all() -> Vec<Estimand> {
        let mut v = vec![
            Estimand::IttAdverse,
            Estimand::IttDeath,
            Estimand::IttComposite,
            Estimand::Sace,
        ];
        for arm in [1, 0] {
            for level in 1..=4 {
                v.push(Estimand::LevelProb { arm, level });
            }
        }
        v.extend((1..=4).map(|level| Estimand::LevelDiff { level }));
        v.extend((1..=3).map(|level| Estimand::Delta { level }));
        v.extend([
            Estimand::Tau10,
            Estimand::Kappa10,
            Estimand::Tau01,
            Estimand::Kappa01,
            Estimand::U10,
            Estimand::KappaDiff,
            Estimand::KappaRatio,
        ]);
        for arm in [1, 0] {
            for k in 1..=4 {
                for l in 1..=4 {
                    v.push(Estimand::Pi { arm, k, l });
                }
            }
        }
        v
    }

    pub fn name(&self) -> String {
        match *self {
            Estimand::IttAdverse => "itt_adverse".into(),
            Estimand::IttDeath => "itt_death".into(),
            Estimand::IttComposite => "itt_composite".into(),
            Estimand::Sace => "sace".into(),
            Estimand::LevelProb { arm, level } => format!("p{level}_w{arm}"),
            Estimand::LevelDiff { level } => format!("p{level}_diff"),
            Estimand::Delta { level } => format!("delta_{level}"),
            Estimand::Tau10 => "tau10".into(),
            Estimand::Kappa10 => "kappa10".into(),
            Estimand::Tau01 => "tau01".into(),
            Estimand::Kappa01 => "kappa01".into(),
            Estimand::U10 => "u10".into(),
            Estimand::KappaDiff => "kappa_diff".into(),
            Estimand::KappaRatio => "kappa_ratio".into(),
            Estimand::Pi { arm, k, l } => format!("pi_w{arm}_{k}{l}"),
        }
    }

    pub fn from_name(name: &str) -> Option<Estimand> {
        Estimand::all().into_iter().find(|e| e.name() == name)
    }

    /// Estimands defined by one binary outcome per arm, for which a
    /// doubly robust comparator exists.
    pub fn is_marginal(&self) -> bool {
        matches!(
            self,
            Estimand::IttAdverse
                | Estimand::IttDeath
                | Estimand::IttComposite
                | Estimand::LevelDiff { .. }
                | Estimand::Delta { .. }
        )
    }
}

impl std::fmt::Display for Estimand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl Serialize for Estimand {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Estimand {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Estimand::from_name(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown estimand `{s}`")))
    }
}
