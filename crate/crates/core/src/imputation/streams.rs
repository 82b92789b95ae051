//! Counter-based random streams.
//!
//! Every random quantity of imputation `m` comes from a ChaCha8 generator
//! seeded with the master seed and positioned on stream `m * 64 + purpose`,
//! so results do not depend on evaluation order or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    AdverseDraw0 = 0,
    DeathDraw0 = 1,
    AdverseDraw1 = 2,
    DeathDraw1 = 3,
    Impute0 = 4,
    Impute1 = 5,
    Confounder = 6,
    Check0 = 7,
    Check1 = 8,
}

impl Purpose {
    pub fn adverse_draw(arm: u8) -> Self {
        if arm == 0 {
            Purpose::AdverseDraw0
        } else {
            Purpose::AdverseDraw1
        }
    }

    pub fn death_draw(arm: u8) -> Self {
        if arm == 0 {
            Purpose::DeathDraw0
        } else {
            Purpose::DeathDraw1
        }
    }

    pub fn impute(arm: u8) -> Self {
        if arm == 0 {
            Purpose::Impute0
        } else {
            Purpose::Impute1
        }
    }

    pub fn check(arm: u8) -> Self {
        if arm == 0 {
            Purpose::Check0
        } else {
            Purpose::Check1
        }
    }
}

pub fn stream_rng(seed: u64, m: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(m as u64 * 64 + purpose as u64);
    rng
}

/// Derive an independent master seed for child task `index` (splitmix64).
pub fn child_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
