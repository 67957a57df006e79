//! Initial states and their momentum representation on the complex plane.
//!
//! The only family needed is the ground state of an infinite well on `[a, b]`, optionally
//! boosted by `e^{i p_b x / hbar}`:
//!
//! ```text
//! psi(x, 0) = sqrt(2/L) sin(k_w (x - a)) e^{i p_b x / hbar},   L = b - a,  k_w = pi / L
//! ```
//!
//! Its transform `h^{-1/2} \int_a^b e^{-ipx/hbar} psi(x,0) dx` is entire in `p`. With
//! `s = (p - p_b)/hbar` and `y = x - a`,
//!
//! ```text
//! \int_0^L sin(k_w y) e^{-isy} dy = k_w (1 + e^{-isL}) / (k_w^2 - s^2)
//! ```
//!
//! which has removable singularities at `s = ±k_w`. Writing `s = ±k_w + δ` gives the exact
//! rearrangements
//!
//! ```text
//! s near +k_w:  -i k_w L exprel(-iδL) / (2k_w + δ)
//! s near -k_w:  +i k_w L exprel(-iδL) / (2k_w - δ)
//! ```
//!
//! with `exprel(z) = (e^z - 1)/z`, used whenever `|δ| L < 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{exprel, C64, I};
use crate::potential::PhysicsParams;
use crate::quadrature::{composite, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketKind {
    #[default]
    BoxSine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub boost: f64,
    #[serde(default)]
    pub kind: PacketKind,
}

impl PacketSpec {
    pub fn box_sine(a: f64, b: f64, boost: f64) -> Self {
        Self { a, b, boost, kind: PacketKind::BoxSine }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.boost.is_finite()) {
            return Err(Error::InvalidPacket("a, b and boost must be finite".into()));
        }
        if self.b <= self.a {
            return Err(Error::InvalidPacket(format!("need a < b, got a = {}, b = {}", self.a, self.b)));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    fn well_wavenumber(&self) -> f64 {
        std::f64::consts::PI / self.width()
    }

    /// `psi(x, 0)`.
    pub fn position_amplitude(&self, params: &PhysicsParams, x: f64) -> C64 {
        if x < self.a || x > self.b {
            return C64::new(0.0, 0.0);
        }
        let amp = (2.0 / self.width()).sqrt() * ((x - self.a) * self.well_wavenumber()).sin();
        amp * (I * self.boost * x / params.hbar).exp()
    }

    /// `psi~(p)` for complex `p`.
    pub fn momentum_amplitude(&self, params: &PhysicsParams, p: C64) -> C64 {
        let len = self.width();
        let k = self.well_wavenumber();
        let s = (p - self.boost) / params.hbar;
        let near_plus = s - k;
        let near_minus = s + k;
        let integral = if near_plus.norm() <= near_minus.norm() && near_plus.norm() * len < 1.0 {
            -I * k * len * exprel(-I * near_plus * len) / (2.0 * k + near_plus)
        } else if near_minus.norm() * len < 1.0 {
            I * k * len * exprel(-I * near_minus * len) / (2.0 * k - near_minus)
        } else {
            k * (1.0 + (-I * s * len).exp()) / (k * k - s * s)
        };
        let prefactor = (2.0 / len).sqrt() / params.h().sqrt();
        prefactor * (-I * s * self.a).exp() * integral
    }

    /// Upper bound on `|psi~(p)|` for real `p` with `|p - boost| / hbar > k_w`.
    pub fn momentum_envelope(&self, params: &PhysicsParams, p: f64) -> f64 {
        let k = self.well_wavenumber();
        let s = (p - self.boost).abs() / params.hbar;
        let prefactor = (2.0 / self.width()).sqrt() / params.h().sqrt();
        if s <= 1.5 * k {
            return prefactor * self.width();
        }
        prefactor * 2.0 * k / (s * s - k * k)
    }

    /// `\int_{-P}^{P} |psi~(p)|^2 dp`.
    pub fn momentum_mass_within(&self, params: &PhysicsParams, bound: f64) -> f64 {
        let rule = GaussLegendre::new(20);
        let panels = ((2.0 * bound * self.b.abs().max(self.a.abs()).max(1.0)).ceil() as usize).max(16);
        composite(&rule, &[-bound, bound], panels, |p| self.momentum_amplitude(params, C64::new(p, 0.0)).norm_sqr())
    }

    /// Smallest momentum `P` with at most `tail` probability outside `[-P, P]`.
    pub fn momentum_extent(&self, params: &PhysicsParams, tail: f64) -> f64 {
        let mut hi = self.boost.abs() + 4.0 * self.well_wavenumber() * params.hbar;
        while 1.0 - self.momentum_mass_within(params, hi) > tail {
            hi *= 1.5;
            if hi > 1e5 {
                break;
            }
        }
        let mut lo = 0.0;
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if 1.0 - self.momentum_mass_within(params, mid) > tail {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}
