#![allow(dead_code)]

use proptest::prelude::*;
use rand::Rng;

use scatter1d::{Delta, PhysicsParams, PotentialSpec, Segment};

pub fn unit() -> PhysicsParams {
    PhysicsParams::default()
}

/// Contiguous segments from `c` with the given `(length, height)` pieces and spikes placed at
/// fractions of the support.
pub fn assemble(c: f64, pieces: &[(f64, f64)], v0: f64, spikes: &[(f64, f64)]) -> PotentialSpec {
    let mut segments = Vec::with_capacity(pieces.len());
    let mut x = c;
    for &(len, height) in pieces {
        segments.push(Segment { start: x, end: x + len, height });
        x += len;
    }
    let d = x;
    let deltas = spikes.iter().map(|&(f, strength)| Delta { position: c + f * (d - c), strength }).collect();
    PotentialSpec { c, d, v0, segments, deltas }
}

/// Up to four flat pieces and two spikes on a support of length at most 3.
pub fn arb_potential() -> impl Strategy<Value = PotentialSpec> {
    (
        -1.5f64..0.0,
        prop::collection::vec((0.1f64..0.75, -3.0f64..3.0), 1..=4),
        0.0f64..2.0,
        prop::collection::vec((0.0f64..1.0, -2.0f64..2.0), 0..=2),
    )
        .prop_map(|(c, pieces, v0, spikes)| assemble(c, &pieces, v0, &spikes))
}

/// Attractive pieces only, so that bound states are likely.
pub fn arb_well() -> impl Strategy<Value = PotentialSpec> {
    (
        prop::collection::vec((0.2f64..1.0, -2.0f64..0.0), 1..=3),
        0.0f64..1.5,
        prop::collection::vec((0.0f64..1.0, -1.5f64..0.0), 0..=2),
    )
        .prop_map(|(pieces, v0, spikes)| assemble(0.0, &pieces, v0, &spikes))
}

/// Same family as [`arb_potential`] from a seeded generator.
pub fn random_potential(rng: &mut impl Rng) -> PotentialSpec {
    let c = rng.gen_range(-1.5..0.0);
    let pieces: Vec<(f64, f64)> =
        (0..rng.gen_range(1..=4)).map(|_| (rng.gen_range(0.1..0.75), rng.gen_range(-3.0..3.0))).collect();
    let v0 = rng.gen_range(0.0..2.0);
    let spikes: Vec<(f64, f64)> =
        (0..rng.gen_range(0..=2)).map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(-2.0..2.0))).collect();
    assemble(c, &pieces, v0, &spikes)
}
