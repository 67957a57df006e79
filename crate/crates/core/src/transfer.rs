//! Exact propagation of `(psi, psi')` through the interior profile.
//!
//! Each flat piece of height `h` and length `L` maps the state at its left edge to the
//! state at its right edge through
//!
//! ```text
//! [ cos(kL)        sin(kL)/k ]      k^2 = (p^2 - 2 m h) / hbar^2
//! [ -k sin(kL)     cos(kL)   ]
//! ```
//!
//! which is an entire function of `k^2`, so no branch choice is needed inside the support.
//! A spike of strength `s` adds `2 m s psi / hbar^2` to `psi'`. Matrices are anchored at the
//! piece edges, so evanescent pieces only grow by their own length.

use crate::numeric::{cos_sqrt, sinc_sqrt, C64, I};
use crate::potential::{Piece, PhysicsParams, PotentialSpec};

/// `(psi, psi')` at a point.
pub type State = [C64; 2];

#[derive(Debug, Clone)]
pub(crate) struct Medium {
    pieces: Vec<Piece>,
    c: f64,
    d: f64,
    m: f64,
    hbar: f64,
}

impl Medium {
    pub fn new(spec: &PotentialSpec, params: &PhysicsParams) -> Self {
        Self {
            pieces: spec.pieces(),
            c: spec.c,
            d: spec.d,
            m: params.m,
            hbar: params.hbar,
        }
    }

    fn kappa2(&self, p: C64, height: f64) -> C64 {
        (p * p - 2.0 * self.m * height) / (self.hbar * self.hbar)
    }

    fn flat(&self, p: C64, height: f64, len: f64, s: State) -> State {
        let k2 = self.kappa2(p, height);
        let z = k2 * (len * len);
        let cs = cos_sqrt(z);
        let sn = sinc_sqrt(z) * len;
        [cs * s[0] + sn * s[1], -k2 * sn * s[0] + cs * s[1]]
    }

    fn spike_jump(&self, strength: f64) -> f64 {
        2.0 * self.m * strength / (self.hbar * self.hbar)
    }

    /// Propagates a state from just left of `c` to just right of `d`.
    pub fn forward(&self, p: C64, mut s: State) -> State {
        for piece in &self.pieces {
            s = match *piece {
                Piece::Flat { start, end, height } => self.flat(p, height, end - start, s),
                Piece::Spike { strength, .. } => [s[0], s[1] + self.spike_jump(strength) * s[0]],
            };
        }
        s
    }

    /// Propagates a state from just right of `d` back to just left of `c`.
    pub fn backward(&self, p: C64, mut s: State) -> State {
        for piece in self.pieces.iter().rev() {
            s = match *piece {
                Piece::Flat { start, end, height } => self.flat(p, height, start - end, s),
                Piece::Spike { strength, .. } => [s[0], s[1] - self.spike_jump(strength) * s[0]],
            };
        }
        s
    }

    /// Solution anchored by its state just right of `d`, evaluable everywhere.
    pub fn profile_from_right(&self, p: C64, q: C64, right: State) -> Profile {
        let mut flats = Vec::new();
        let mut s = right;
        for piece in self.pieces.iter().rev() {
            match *piece {
                Piece::Flat { start, end, height } => {
                    s = self.flat(p, height, start - end, s);
                    flats.push(FlatKnot { start, end, height, state: s });
                }
                Piece::Spike { strength, .. } => {
                    s = [s[0], s[1] - self.spike_jump(strength) * s[0]];
                }
            }
        }
        flats.reverse();
        self.assemble(p, q, s, right, flats)
    }

    /// Solution anchored by its state just left of `c`, evaluable everywhere.
    pub fn profile_from_left(&self, p: C64, q: C64, left: State) -> Profile {
        let mut flats = Vec::new();
        let mut s = left;
        for piece in &self.pieces {
            match *piece {
                Piece::Flat { start, end, height } => {
                    flats.push(FlatKnot { start, end, height, state: s });
                    s = self.flat(p, height, end - start, s);
                }
                Piece::Spike { strength, .. } => {
                    s = [s[0], s[1] + self.spike_jump(strength) * s[0]];
                }
            }
        }
        self.assemble(p, q, left, s, flats)
    }

    fn assemble(&self, p: C64, q: C64, left: State, right: State, flats: Vec<FlatKnot>) -> Profile {
        Profile {
            medium: self.clone(),
            p,
            left: Exterior::from_state(p / self.hbar, self.c, left),
            right: Exterior::from_state(q / self.hbar, self.d, right),
            flats,
            c_state: left,
        }
    }
}

#[derive(Debug, Clone)]
struct FlatKnot {
    start: f64,
    end: f64,
    height: f64,
    state: State,
}

/// Solution outside the support as plane/evanescent waves anchored at the boundary.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Exterior {
    Waves { k: C64, plus: C64, minus: C64, anchor: f64 },
    Linear { value: C64, slope: C64, anchor: f64 },
}

impl Exterior {
    fn from_state(k: C64, anchor: f64, s: State) -> Self {
        if k.norm() == 0.0 {
            Exterior::Linear { value: s[0], slope: s[1], anchor }
        } else {
            let ratio = s[1] / (I * k);
            Exterior::Waves { k, plus: 0.5 * (s[0] + ratio), minus: 0.5 * (s[0] - ratio), anchor }
        }
    }

    fn value(&self, x: f64) -> C64 {
        match *self {
            Exterior::Waves { k, plus, minus, anchor } => {
                let dx = x - anchor;
                let e = (I * k * dx).exp();
                let mut v = C64::new(0.0, 0.0);
                if plus != C64::new(0.0, 0.0) {
                    v += plus * e;
                }
                if minus != C64::new(0.0, 0.0) {
                    v += minus * (-I * k * dx).exp();
                }
                v
            }
            Exterior::Linear { value, slope, anchor } => value + slope * (x - anchor),
        }
    }
}

/// A stationary solution at fixed `p`, evaluable at any `x`.
#[derive(Debug, Clone)]
pub struct Profile {
    medium: Medium,
    p: C64,
    pub(crate) left: Exterior,
    pub(crate) right: Exterior,
    flats: Vec<FlatKnot>,
    c_state: State,
}

impl Profile {
    pub fn value(&self, x: f64) -> C64 {
        let m = &self.medium;
        if x < m.c {
            return self.left.value(x);
        }
        if x > m.d {
            return self.right.value(x);
        }
        match self.flats.iter().find(|f| x >= f.start && x <= f.end) {
            Some(f) => m.flat(self.p, f.height, x - f.start, f.state)[0],
            None => self.c_state[0],
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.medium.c, self.medium.d)
    }

    /// Interior breakpoints (flat-piece edges) from `c` to `d`.
    pub fn knots(&self) -> Vec<f64> {
        let mut k = vec![self.medium.c];
        for f in &self.flats {
            k.push(f.end);
        }
        k.dedup();
        k
    }
}
