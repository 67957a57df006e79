//! Cut-off potentials: zero on the left, a constant level on the right and a compactly
//! supported profile of flat segments and delta spikes in between.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A flat piece of the interior profile, serialized as `[start, end, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64, f64)", into = "(f64, f64, f64)")]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub height: f64,
}

impl From<(f64, f64, f64)> for Segment {
    fn from((start, end, height): (f64, f64, f64)) -> Self {
        Self { start, end, height }
    }
}

impl From<Segment> for (f64, f64, f64) {
    fn from(s: Segment) -> Self {
        (s.start, s.end, s.height)
    }
}

/// A Dirac spike `strength * delta(x - position)`, serialized as `[position, strength]`.
/// Negative strength is attractive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Delta {
    pub position: f64,
    pub strength: f64,
}

impl From<(f64, f64)> for Delta {
    fn from((position, strength): (f64, f64)) -> Self {
        Self { position, strength }
    }
}

impl From<Delta> for (f64, f64) {
    fn from(d: Delta) -> Self {
        (d.position, d.strength)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub c: f64,
    pub d: f64,
    pub v0: f64,
    #[serde(default)]
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub deltas: Vec<Delta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsParams {
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self { m: 1.0, hbar: 1.0 }
    }
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::InvalidParams(format!("mass must be positive, got {}", self.m)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidParams(format!("hbar must be positive, got {}", self.hbar)));
        }
        Ok(())
    }

    /// Planck's constant `h = 2 pi hbar`.
    pub fn h(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.hbar
    }

    pub fn energy(&self, p: f64) -> f64 {
        p * p / (2.0 * self.m)
    }
}

/// One element of the interior profile, ordered from `c` to `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Flat { start: f64, end: f64, height: f64 },
    Spike { position: f64, strength: f64 },
}

impl PotentialSpec {
    /// Free motion: no interior profile and equal levels.
    pub fn free() -> Self {
        Self { c: 0.0, d: 0.0, v0: 0.0, segments: vec![], deltas: vec![] }
    }

    /// Whether the potential vanishes everywhere.
    pub fn is_free(&self) -> bool {
        self.v0 == 0.0 && self.deltas.iter().all(|d| d.strength == 0.0) && self.segments.iter().all(|s| s.height == 0.0)
    }

    /// Sharp step of height `v0` at the origin.
    pub fn step(v0: f64) -> Self {
        Self { c: 0.0, d: 0.0, v0, segments: vec![], deltas: vec![] }
    }

    /// A single spike at the origin on top of a step of height `v0`.
    pub fn delta_step(strength: f64, v0: f64) -> Self {
        Self {
            c: 0.0,
            d: 0.0,
            v0,
            segments: vec![],
            deltas: vec![Delta { position: 0.0, strength }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPotential(msg));
        if !(self.c.is_finite() && self.d.is_finite() && self.v0.is_finite()) {
            return bad("c, d and v0 must be finite".into());
        }
        if self.d < self.c {
            return bad(format!("d = {} lies left of c = {}", self.d, self.c));
        }
        if self.v0 < 0.0 {
            return bad(format!("v0 must be non-negative, got {}", self.v0));
        }
        let scale = 1.0 + self.c.abs().max(self.d.abs());
        let tol = 1e-12 * scale;
        if self.segments.is_empty() {
            if self.d > self.c {
                return bad("segments must cover [c, d] when d > c".into());
            }
        } else {
            let first = self.segments[0];
            let last = self.segments[self.segments.len() - 1];
            if (first.start - self.c).abs() > tol || (last.end - self.d).abs() > tol {
                return bad(format!(
                    "segments span [{}, {}] but the support is [{}, {}]",
                    first.start, last.end, self.c, self.d
                ));
            }
            for (i, s) in self.segments.iter().enumerate() {
                if !(s.start.is_finite() && s.end.is_finite() && s.height.is_finite()) {
                    return bad(format!("segment {i} has non-finite entries"));
                }
                if s.end <= s.start {
                    return bad(format!("segment {i} is empty or reversed: [{}, {}]", s.start, s.end));
                }
            }
            for (i, w) in self.segments.windows(2).enumerate() {
                if (w[0].end - w[1].start).abs() > tol {
                    return bad(format!(
                        "segments {i} and {} are not contiguous ({} vs {})",
                        i + 1,
                        w[0].end,
                        w[1].start
                    ));
                }
            }
        }
        for (i, d) in self.deltas.iter().enumerate() {
            if !(d.position.is_finite() && d.strength.is_finite()) {
                return bad(format!("delta {i} has non-finite entries"));
            }
            if d.position < self.c - tol || d.position > self.d + tol {
                return bad(format!(
                    "delta {i} at {} lies outside [{}, {}]",
                    d.position, self.c, self.d
                ));
            }
        }
        Ok(())
    }

    /// Pointwise value of the potential away from delta spikes.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if self.deltas.iter().any(|d| d.position == x) {
            return Err(Error::DeltaQuery { x });
        }
        Ok(self.level_at(x))
    }

    /// Piecewise-constant level ignoring spikes; segment boundaries take the right-hand value.
    fn level_at(&self, x: f64) -> f64 {
        if x < self.c {
            return 0.0;
        }
        if x > self.d {
            return self.v0;
        }
        self.segments
            .iter()
            .find(|s| x >= s.start && x < s.end)
            .or(self.segments.last())
            .map(|s| s.height)
            .unwrap_or(0.0)
    }

    /// Left and right limits of the level at `x` (equal away from discontinuities).
    pub fn level_limits(&self, x: f64) -> (f64, f64) {
        let eps = 1e-12 * (1.0 + x.abs());
        (self.level_at(x - eps), self.level_at(x + eps))
    }

    /// Supremum of the finite levels: segment heights, `v0` and zero.
    pub fn max_level(&self) -> f64 {
        self.segments.iter().map(|s| s.height).fold(self.v0.max(0.0), f64::max)
    }

    /// `p_M = sqrt(2 m V_M)`.
    pub fn barrier_momentum(&self, params: &PhysicsParams) -> f64 {
        (2.0 * params.m * self.max_level()).sqrt()
    }

    /// `p_0 = sqrt(2 m V_0)`.
    pub fn threshold_momentum(&self, params: &PhysicsParams) -> f64 {
        (2.0 * params.m * self.v0).sqrt()
    }

    /// Upper bound on the decay constant of any bound state, from well depth and spike strengths.
    pub fn binding_momentum_bound(&self, params: &PhysicsParams) -> f64 {
        let depth = self.segments.iter().map(|s| -s.height).fold(0.0, f64::max);
        let spikes: f64 = self.deltas.iter().map(|d| (-d.strength).max(0.0)).sum();
        (2.0 * params.m * depth).sqrt() + params.m * spikes / params.hbar
    }

    /// Interior profile ordered from `c` to `d`; spikes inside a segment split it.
    pub fn pieces(&self) -> Vec<Piece> {
        let mut deltas = self.deltas.clone();
        deltas.sort_by(|a, b| a.position.total_cmp(&b.position));
        let mut out = Vec::with_capacity(self.segments.len() + 2 * deltas.len());
        let mut di = 0;
        for s in &self.segments {
            let mut cursor = s.start;
            while di < deltas.len() && deltas[di].position < s.end {
                let d = deltas[di];
                if d.position > cursor {
                    out.push(Piece::Flat { start: cursor, end: d.position, height: s.height });
                    cursor = d.position;
                }
                out.push(Piece::Spike { position: d.position, strength: d.strength });
                di += 1;
            }
            out.push(Piece::Flat { start: cursor, end: s.end, height: s.height });
        }
        for d in &deltas[di..] {
            out.push(Piece::Spike { position: d.position, strength: d.strength });
        }
        out
    }

    /// Mirror image `x -> -x`; only inside the family when both levels vanish.
    pub fn mirrored(&self) -> Result<Self> {
        if self.v0 != 0.0 {
            return Err(Error::InvalidPotential(
                "mirror image of a potential with v0 > 0 is not a cut-off potential".into(),
            ));
        }
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment { start: -s.end, end: -s.start, height: s.height })
            .collect();
        let deltas = self
            .deltas
            .iter()
            .map(|d| Delta { position: -d.position, strength: d.strength })
            .collect();
        Ok(Self { c: -self.d, d: -self.c, v0: 0.0, segments, deltas })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_segment() -> PotentialSpec {
        PotentialSpec {
            c: 0.0,
            d: 1.0,
            v0: 0.2,
            segments: vec![Segment { start: 0.0, end: 1.0, height: 0.3 }],
            deltas: vec![],
        }
    }

    #[test]
    fn step_levels() {
        let step = PotentialSpec::step(1.0);
        assert_eq!(step.evaluate(-1.0).unwrap(), 0.0);
        assert_eq!(step.evaluate(1.0).unwrap(), 1.0);
    }

    #[test]
    fn free_is_zero_everywhere() {
        let free = PotentialSpec::free();
        for x in [-3.0, -1e-9, 1e-9, 7.5] {
            assert_eq!(free.evaluate(x).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_segment_levels() {
        let v = one_segment();
        v.validate().unwrap();
        assert_eq!(v.evaluate(0.5).unwrap(), 0.3);
        assert_eq!(v.evaluate(2.0).unwrap(), 0.2);
        assert_eq!(v.evaluate(-2.0).unwrap(), 0.0);
    }

    #[test]
    fn delta_position_query_is_an_error() {
        let v = PotentialSpec::delta_step(-0.125, 0.0);
        assert!(matches!(v.evaluate(0.0), Err(Error::DeltaQuery { .. })));
    }

    #[test]
    fn barrier_momentum_examples() {
        let p = PhysicsParams::default();
        assert!((PotentialSpec::step(1.0).barrier_momentum(&p) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(PotentialSpec::free().barrier_momentum(&p), 0.0);
        let v = PotentialSpec {
            c: 0.0,
            d: 1.0,
            v0: 1.0,
            segments: vec![Segment { start: 0.0, end: 1.0, height: 2.0 }],
            deltas: vec![],
        };
        assert!((v.barrier_momentum(&p) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_gaps_and_stray_deltas() {
        let mut v = one_segment();
        v.segments = vec![
            Segment { start: 0.0, end: 0.4, height: 1.0 },
            Segment { start: 0.5, end: 1.0, height: 1.0 },
        ];
        assert!(v.validate().is_err());
        let mut v = one_segment();
        v.deltas.push(Delta { position: 1.5, strength: 1.0 });
        assert!(v.validate().is_err());
        let mut v = one_segment();
        v.v0 = -1.0;
        assert!(v.validate().is_err());
        let mut v = one_segment();
        v.segments.clear();
        assert!(v.validate().is_err());
    }

    #[test]
    fn pieces_split_segments_at_spikes() {
        let v = PotentialSpec {
            c: 0.0,
            d: 2.0,
            v0: 0.0,
            segments: vec![
                Segment { start: 0.0, end: 1.0, height: 0.5 },
                Segment { start: 1.0, end: 2.0, height: -0.5 },
            ],
            deltas: vec![Delta { position: 0.5, strength: 1.0 }, Delta { position: 1.0, strength: 2.0 }],
        };
        v.validate().unwrap();
        let pieces = v.pieces();
        assert_eq!(
            pieces,
            vec![
                Piece::Flat { start: 0.0, end: 0.5, height: 0.5 },
                Piece::Spike { position: 0.5, strength: 1.0 },
                Piece::Flat { start: 0.5, end: 1.0, height: 0.5 },
                Piece::Spike { position: 1.0, strength: 2.0 },
                Piece::Flat { start: 1.0, end: 2.0, height: -0.5 },
            ]
        );
    }

    #[test]
    fn json_shape() {
        let json = r#"{"c":0,"d":1,"v0":0.2,"segments":[[0,1,0.3]],"deltas":[[0.5,-0.125]]}"#;
        let v: PotentialSpec = serde_json::from_str(json).unwrap();
        assert_eq!(v.segments[0], Segment { start: 0.0, end: 1.0, height: 0.3 });
        assert_eq!(v.deltas[0], Delta { position: 0.5, strength: -0.125 });
        let back = serde_json::to_string(&v).unwrap();
        assert!(back.contains("[[0.0,1.0,0.3]]"));
        assert!(serde_json::from_str::<PotentialSpec>(r#"{"c":0,"d":0,"v0":0,"extra":1}"#).is_err());
    }

    proptest::proptest! {
        #[test]
        fn piecewise_constant_within_segments(t1 in 0.0f64..1.0, t2 in 0.0f64..1.0, h in -3.0f64..3.0) {
            let v = PotentialSpec {
                c: -1.0, d: 1.0, v0: 0.5,
                segments: vec![
                    Segment { start: -1.0, end: 0.0, height: h },
                    Segment { start: 0.0, end: 1.0, height: 1.0 },
                ],
                deltas: vec![],
            };
            proptest::prop_assert_eq!(v.evaluate(-1.0 + t1 * 0.999).unwrap(), v.evaluate(-1.0 + t2 * 0.999).unwrap());
            let p = PhysicsParams::default();
            proptest::prop_assert!(v.threshold_momentum(&p) <= v.barrier_momentum(&p));
        }
    }
}
