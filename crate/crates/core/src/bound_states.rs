//! Bound states as zeros of `1/T^l` on the positive imaginary momentum axis.
//!
//! At `p = iγ` the Jost solution `f_1` (pure `e^{iqx}` right of the support) is real, and
//! `1/T^l` is real up to a positive factor, so roots are bracketed by a sign scan and refined
//! by bisection. At a root `f_2 = C f_1`, the state is `φ = f_1 / N` with `N^2 = ∫ f_1^2`, and
//! the residue of `T^l` is `iħ/(C N^2)`. The residue is also taken from a finite-difference
//! derivative of `1/T^l`; the two must agree.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitudes::{branch_q, jost_left_with, BranchSheet};
use crate::error::{Error, Result};
use crate::numeric::{C64, I};
use crate::potential::{PhysicsParams, PotentialSpec};
use crate::quadrature::{adaptive, composite, GaussLegendre};
use crate::transfer::{Medium, Profile};
use crate::wavepacket::PacketSpec;

/// Roots below this decay constant are reported but flagged.
pub const UNRELIABLE_GAMMA: f64 = 1e-4;

/// Largest tolerated `|Im C| / |C|` before a root is declared spurious.
pub const MAX_IMAG_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundStateSearch {
    /// Upper end of the scan; `None` picks a bound from the potential.
    pub gamma_max: Option<f64>,
    pub scan_points: usize,
    /// Lower end of the scan.
    pub floor: f64,
    /// Bisection stops once the bracket is narrower than this.
    pub tolerance: f64,
}

impl Default for BoundStateSearch {
    fn default() -> Self {
        Self { gamma_max: None, scan_points: 400, floor: 1e-6, tolerance: 1e-12 }
    }
}

/// `4 max(p_M, 1, γ_bind)`, where `γ_bind` bounds the decay constant from well depth and spikes.
pub fn default_gamma_max(spec: &PotentialSpec, params: &PhysicsParams) -> f64 {
    4.0 * spec
        .barrier_momentum(params)
        .max(1.0)
        .max(spec.binding_momentum_bound(params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapSide {
    /// Packet left of the support.
    Lower,
    /// Packet right of the support.
    Upper,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundState {
    pub gamma: f64,
    pub energy: f64,
    pub qj: C64,
    pub n_squared: f64,
    pub c_ratio: f64,
    /// `iħ/(C N^2)`.
    pub residue_tl: C64,
    /// Inverse of the numerical derivative of `1/T^l`.
    pub residue_tl_derivative: C64,
    pub unreliable: bool,
    #[serde(skip)]
    profile: Profile,
    #[serde(skip)]
    f1_c: f64,
    #[serde(skip)]
    f1_d: f64,
    #[serde(skip)]
    hbar: f64,
}

impl BoundState {
    pub fn pole(&self) -> C64 {
        C64::new(0.0, self.gamma)
    }

    pub fn kappa(&self) -> f64 {
        self.qj.im
    }

    pub fn residue_relative_difference(&self) -> f64 {
        (self.residue_tl - self.residue_tl_derivative).norm() / self.residue_tl.norm()
    }

    /// `f_1(iγ, x)` with exact exponential tails outside the support.
    pub fn jost(&self, x: f64) -> f64 {
        let (c, d) = self.profile.support();
        if x < c {
            self.f1_c * (self.gamma * (x - c) / self.hbar).exp()
        } else if x > d {
            self.f1_d * (-self.kappa() * (x - d) / self.hbar).exp()
        } else {
            self.profile.value(x).re
        }
    }

    /// `φ_j(x)`.
    pub fn wavefunction(&self, x: f64) -> f64 {
        self.jost(x) / self.n_squared.sqrt()
    }

    /// Integration window outside which `φ_j^2` is below `e^{-80}` of its edge value.
    pub fn window(&self) -> (f64, f64) {
        let (c, d) = self.profile.support();
        (c - 40.0 * self.hbar / self.gamma, d + 40.0 * self.hbar / self.kappa())
    }

    fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.window();
        let mut pts = vec![lo];
        pts.extend(self.profile.knots());
        pts.push(self.profile.support().1);
        pts.push(hi);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        pts
    }

    /// `∫ φ_j f dx` over the window, adaptively between knots.
    pub fn integrate_against<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let pts = self.breakpoints();
        pts.windows(2).map(|w| adaptive(w[0], w[1], 1e-15, |x| self.wavefunction(x) * f(x))).sum()
    }

    /// `⟨E_j|ψ(0)⟩` from the closed-form momentum amplitude.
    pub fn overlap(&self, packet: &PacketSpec, params: &PhysicsParams, side: OverlapSide) -> Result<C64> {
        let (c, d) = self.profile.support();
        let n = self.n_squared.sqrt();
        let sqrt_h = params.h().sqrt();
        match side {
            OverlapSide::Lower => {
                if packet.b > c {
                    return Err(Error::Precondition(format!(
                        "packet [{}, {}] must lie left of c = {c}",
                        packet.a, packet.b
                    )));
                }
                Ok(sqrt_h * packet.momentum_amplitude(params, self.pole()) / (self.c_ratio * n))
            }
            OverlapSide::Upper => {
                if packet.a < d {
                    return Err(Error::Precondition(format!(
                        "packet [{}, {}] must lie right of d = {d}",
                        packet.a, packet.b
                    )));
                }
                Ok(sqrt_h * packet.momentum_amplitude(params, -self.qj) / n)
            }
        }
    }

    /// `∫ φ_j(x) ψ(x, 0) dx` by direct quadrature.
    pub fn overlap_by_quadrature(&self, packet: &PacketSpec, params: &PhysicsParams) -> C64 {
        let rule = GaussLegendre::new(30);
        let mut pts = vec![packet.a];
        let (c, d) = self.profile.support();
        for k in [c, d] {
            if k > packet.a && k < packet.b {
                pts.push(k);
            }
        }
        pts.push(packet.b);
        pts.sort_by(f64::total_cmp);
        let re = composite(&rule, &pts, 32, |x| self.wavefunction(x) * packet.position_amplitude(params, x).re);
        let im = composite(&rule, &pts, 32, |x| self.wavefunction(x) * packet.position_amplitude(params, x).im);
        C64::new(re, im)
    }
}

/// `∫ φ_i φ_j dx`.
pub fn inner_product(a: &BoundState, b: &BoundState) -> f64 {
    a.integrate_against(|x| b.wavefunction(x))
}

/// Sign-faithful, bounded version of `1/T^l(iγ)`.
fn scan_value(medium: &Medium, params: &PhysicsParams, p0: f64, gamma: f64) -> f64 {
    let kappa = (gamma * gamma + p0 * p0).sqrt() / params.hbar;
    let s = medium.backward(C64::new(0.0, gamma), [C64::new(1.0, 0.0), C64::new(-kappa, 0.0)]);
    let g = gamma / params.hbar;
    let (f, df) = (s[0].re, s[1].re);
    let scale = g * f.abs() + df.abs();
    if scale == 0.0 {
        return 0.0;
    }
    (g * f - df) / scale
}

fn scan(medium: &Medium, params: &PhysicsParams, p0: f64, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let step = (hi - lo) / (n - 1) as f64;
    let values: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let g = if i + 1 == n { hi } else { lo + step * i as f64 };
            (g, scan_value(medium, params, p0, g))
        })
        .collect();
    let mut brackets = Vec::new();
    for w in values.windows(2) {
        let ((g0, v0), (g1, v1)) = (w[0], w[1]);
        if v0 == 0.0 {
            brackets.push((g0, g0));
        } else if v0 * v1 < 0.0 {
            brackets.push((g0, g1));
        }
    }
    if let Some(&(g, v)) = values.last() {
        if v == 0.0 {
            brackets.push((g, g));
        }
    }
    brackets
}

fn bisect(medium: &Medium, params: &PhysicsParams, p0: f64, (mut lo, mut hi): (f64, f64), tol: f64) -> f64 {
    let mut flo = scan_value(medium, params, p0, lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = scan_value(medium, params, p0, mid);
        if fm == 0.0 {
            return mid;
        }
        if fm * flo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

/// All bound states with `γ` in `(floor, gamma_max]`, sorted by increasing `γ`.
pub fn find_bound_states(
    spec: &PotentialSpec,
    params: &PhysicsParams,
    search: &BoundStateSearch,
) -> Result<Vec<BoundState>> {
    spec.validate()?;
    params.validate()?;
    let gamma_max = search.gamma_max.unwrap_or_else(|| default_gamma_max(spec, params));
    if !(gamma_max > search.floor) {
        return Err(Error::InvalidParams(format!("gamma_max = {gamma_max} must exceed {}", search.floor)));
    }
    let n = search.scan_points.max(8);
    let medium = Medium::new(spec, params);
    let p0 = spec.threshold_momentum(params);
    let coarse = scan(&medium, params, p0, search.floor, gamma_max, n);
    let fine = scan(&medium, params, p0, search.floor, gamma_max, 2 * n - 1);
    if coarse.len() != fine.len() {
        return Err(Error::ScanTooCoarse { coarse: coarse.len(), fine: fine.len() });
    }
    let roots: Vec<f64> = coarse.iter().map(|&b| bisect(&medium, params, p0, b, search.tolerance)).collect();
    roots.par_iter().map(|&g| normalize_and_residue(spec, params, g)).collect()
}

/// Bound states tied to the potential they were computed for.
#[derive(Debug, Clone, Serialize)]
pub struct BoundSpectrum {
    pub states: Vec<BoundState>,
    pub search: BoundStateSearch,
    #[serde(skip)]
    spec: PotentialSpec,
    #[serde(skip)]
    params: PhysicsParams,
}

impl BoundSpectrum {
    /// Whether this spectrum was computed for exactly this potential and these units.
    pub fn matches(&self, spec: &PotentialSpec, params: &PhysicsParams) -> bool {
        self.spec == *spec && self.params == *params
    }

    pub fn require_for(&self, spec: &PotentialSpec, params: &PhysicsParams) -> Result<&[BoundState]> {
        if !self.matches(spec, params) {
            return Err(Error::Precondition(
                "bound states were computed for a different potential; recompute them first".into(),
            ));
        }
        Ok(&self.states)
    }
}

/// Runs [`find_bound_states`] and keeps the inputs for later consistency checks.
pub fn bound_spectrum(spec: &PotentialSpec, params: &PhysicsParams, search: &BoundStateSearch) -> Result<BoundSpectrum> {
    let states = find_bound_states(spec, params, search)?;
    Ok(BoundSpectrum { states, search: *search, spec: spec.clone(), params: *params })
}

/// `f_1(p, x)` at each `x`: `e^{iqx}` right of the support, continued leftwards exactly.
pub fn jost_f1(spec: &PotentialSpec, params: &PhysicsParams, p: C64, xs: &[f64]) -> Vec<C64> {
    let medium = Medium::new(spec, params);
    let q = branch_q(p, spec.threshold_momentum(params), BranchSheet::AboveCut);
    let e = (I * q * spec.d / params.hbar).exp();
    let profile = medium.profile_from_right(p, q, [e, I * q / params.hbar * e]);
    xs.iter().map(|&x| profile.value(x)).collect()
}

/// Builds the normalized state and both residues at a converged root `γ`.
pub fn normalize_and_residue(spec: &PotentialSpec, params: &PhysicsParams, gamma: f64) -> Result<BoundState> {
    let hbar = params.hbar;
    let medium = Medium::new(spec, params);
    let p0 = spec.threshold_momentum(params);
    let p = C64::new(0.0, gamma);
    let q = branch_q(p, p0, BranchSheet::AboveCut);
    let kappa = q.im;

    let e_d = (-kappa * spec.d / hbar).exp();
    let f1 = medium.profile_from_right(p, q, [C64::new(e_d, 0.0), C64::new(-kappa / hbar * e_d, 0.0)]);
    let e_c = (gamma * spec.c / hbar).exp();
    let f2 = medium.profile_from_left(p, q, [C64::new(e_c, 0.0), C64::new(gamma / hbar * e_c, 0.0)]);

    let probe = [spec.c, 0.5 * (spec.c + spec.d), spec.d]
        .into_iter()
        .max_by(|a, b| f1.value(*a).norm().total_cmp(&f1.value(*b).norm()))
        .unwrap_or(spec.c);
    let c_complex = f2.value(probe) / f1.value(probe);
    let rel_imag = c_complex.im.abs() / c_complex.norm();
    if !(rel_imag < MAX_IMAG_RATIO) || !c_complex.is_finite() {
        return Err(Error::SpuriousRoot { gamma, rel_imag });
    }

    let mut state = BoundState {
        gamma,
        energy: -gamma * gamma / (2.0 * params.m),
        qj: q,
        n_squared: 1.0,
        c_ratio: c_complex.re,
        residue_tl: C64::new(0.0, 0.0),
        residue_tl_derivative: C64::new(0.0, 0.0),
        unreliable: gamma < UNRELIABLE_GAMMA,
        f1_c: f1.value(spec.c).re,
        f1_d: e_d,
        profile: f1,
        hbar,
    };
    let pts = state.breakpoints();
    state.n_squared = pts
        .windows(2)
        .map(|w| adaptive(w[0], w[1], 1e-16, |x| state.jost(x).powi(2)))
        .sum();
    state.residue_tl = I * hbar / (state.c_ratio * state.n_squared);
    state.residue_tl_derivative = 1.0 / inverse_tl_derivative(&medium, spec, params, p0, gamma);

    if state.unreliable {
        warn!("bound state at gamma = {gamma:.3e} is close to threshold; treat as unreliable");
    }
    let rel = state.residue_relative_difference();
    if rel > 1e-6 {
        warn!("bound state at gamma = {gamma}: residue estimates differ by {rel:.3e} (relative)");
    }
    Ok(state)
}

/// `d(1/T^l)/dp` at `iγ` by central differences along the imaginary axis, one Richardson step.
fn inverse_tl_derivative(medium: &Medium, spec: &PotentialSpec, params: &PhysicsParams, p0: f64, gamma: f64) -> C64 {
    let g = |p: C64| jost_left_with(medium, spec, params, p, branch_q(p, p0, BranchSheet::AboveCut)).0;
    let h = 1e-6f64.min(0.25 * gamma);
    let central = |h: f64| {
        let up = C64::new(0.0, gamma + h);
        let down = C64::new(0.0, gamma - h);
        (g(up) - g(down)) / (2.0 * I * h)
    };
    (4.0 * central(0.5 * h) - central(h)) / 3.0
}
