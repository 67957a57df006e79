//! Transmission and reflection amplitudes for left and right incidence.
//!
//! Left incidence at momentum `p`:
//!
//! ```text
//! x < c:  e^{ipx} + R^l e^{-ipx}        x > d:  T^l e^{iqx}
//! ```
//!
//! Right incidence:
//!
//! ```text
//! x < c:  T^r e^{-ipx}                  x > d:  e^{-iqx} + R^r e^{iqx}
//! ```
//!
//! with `q = sqrt(p^2 - p0^2)` on the branch selected by [`BranchSheet`]. Both are valid for
//! complex `p`. `1/T^l` and `R^l/T^l` come from the Jost solution that is a pure `e^{iqx}`
//! right of the support, so they stay finite at bound-state poles; the right-incidence pair is
//! solved directly from the matching conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{C64, I};
use crate::potential::{PhysicsParams, PotentialSpec};
use crate::transfer::Medium;

/// Side of the cut joining `-p0` and `p0` from which real momenta are approached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSheet {
    /// `q = +i sqrt(p0^2 - p^2)` on `|p| < p0`.
    #[default]
    #[serde(alias = "above")]
    AboveCut,
    /// `q = -i sqrt(p0^2 - p^2)` on `|p| < p0`.
    #[serde(alias = "below")]
    BelowCut,
}

/// `q(p) = sqrt(p^2 - p0^2)` with `sign(Re q) = sign(p)` for real `|p| > p0`.
pub fn branch_q(p: C64, p0: f64, sheet: BranchSheet) -> C64 {
    if p0 == 0.0 {
        return p;
    }
    if p.im == 0.0 {
        let x = p.re;
        let ax = x.abs();
        if ax > p0 {
            C64::new(x.signum() * ((ax - p0) * (ax + p0)).sqrt(), 0.0)
        } else if ax < p0 {
            let mag = ((p0 - ax) * (p0 + ax)).sqrt();
            match sheet {
                BranchSheet::AboveCut => C64::new(0.0, mag),
                BranchSheet::BelowCut => C64::new(0.0, -mag),
            }
        } else {
            C64::new(0.0, 0.0)
        }
    } else {
        (p - p0).sqrt() * (p + p0).sqrt()
    }
}

/// Amplitudes at one momentum. Bare values; flux normalization factors are applied by callers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeSet {
    pub p: C64,
    pub q: C64,
    pub tl: C64,
    pub rl: C64,
    pub tr: C64,
    pub rr: C64,
}

/// `(1/T^l, R^l/T^l)`: the left-side coefficients of the Jost solution `f_1`.
pub fn jost_left_coefficients(
    spec: &PotentialSpec,
    params: &PhysicsParams,
    p: C64,
    sheet: BranchSheet,
) -> Result<(C64, C64)> {
    if p.norm() == 0.0 {
        return Err(Error::Degenerate { p: fmt_c(p), reason: "zero momentum" });
    }
    let medium = Medium::new(spec, params);
    let q = branch_q(p, spec.threshold_momentum(params), sheet);
    Ok(jost_left_with(&medium, spec, params, p, q))
}

pub(crate) fn jost_left_with(medium: &Medium, spec: &PotentialSpec, params: &PhysicsParams, p: C64, q: C64) -> (C64, C64) {
    let kr = q / params.hbar;
    let e = (I * kr * spec.d).exp();
    let at_c = medium.backward(p, [e, I * kr * e]);
    let k = p / params.hbar;
    let ratio = at_c[1] / (I * k);
    let a = 0.5 * (at_c[0] + ratio) * (-I * k * spec.c).exp();
    let b = 0.5 * (at_c[0] - ratio) * (I * k * spec.c).exp();
    (a, b)
}

/// Amplitudes at arbitrary (complex) momentum by exact transfer matrices.
pub fn transfer_amplitudes(
    spec: &PotentialSpec,
    params: &PhysicsParams,
    p: C64,
    sheet: BranchSheet,
) -> Result<AmplitudeSet> {
    let medium = Medium::new(spec, params);
    transfer_amplitudes_with(&medium, spec, params, p, sheet)
}

pub(crate) fn transfer_amplitudes_with(
    medium: &Medium,
    spec: &PotentialSpec,
    params: &PhysicsParams,
    p: C64,
    sheet: BranchSheet,
) -> Result<AmplitudeSet> {
    if p.norm() == 0.0 {
        return Err(Error::Degenerate { p: fmt_c(p), reason: "zero momentum" });
    }
    let q = branch_q(p, spec.threshold_momentum(params), sheet);
    amplitudes_with_q(medium, spec, params, p, q)
}

/// As [`transfer_amplitudes`], with `q` supplied by the caller (e.g. computed without cancellation).
pub(crate) fn amplitudes_with_q(
    medium: &Medium,
    spec: &PotentialSpec,
    params: &PhysicsParams,
    p: C64,
    q: C64,
) -> Result<AmplitudeSet> {
    if p.norm() == 0.0 {
        return Err(Error::Degenerate { p: fmt_c(p), reason: "zero momentum" });
    }
    let (inv_tl, rl_over_tl) = jost_left_with(medium, spec, params, p, q);
    if inv_tl.norm() == 0.0 || !inv_tl.is_finite() {
        return Err(Error::Degenerate { p: fmt_c(p), reason: "1/T^l vanishes (bound-state pole)" });
    }
    let tl = 1.0 / inv_tl;
    let rl = rl_over_tl * tl;

    // right incidence: T^r M(e^{-ipx}) - R^r e^{iqx} = e^{-iqx} at d
    let k = p / params.hbar;
    let kr = q / params.hbar;
    let em = (-I * k * spec.c).exp();
    let u = medium.forward(p, [em, -I * k * em]);
    let ep = (I * kr * spec.d).exp();
    let emr = (-I * kr * spec.d).exp();
    let v = [ep, I * kr * ep];
    let w = [emr, -I * kr * emr];
    let det = v[0] * u[1] - u[0] * v[1];
    if det.norm() == 0.0 || !det.is_finite() {
        return Err(Error::Degenerate { p: fmt_c(p), reason: "right-incidence matching matrix is singular" });
    }
    let tr = (v[0] * w[1] - w[0] * v[1]) / det;
    let rr = (u[0] * w[1] - u[1] * w[0]) / det;
    if !(tl.is_finite() && rl.is_finite() && tr.is_finite() && rr.is_finite()) {
        return Err(Error::Degenerate { p: fmt_c(p), reason: "non-finite amplitudes" });
    }
    Ok(AmplitudeSet { p, q, tl, rl, tr, rr })
}

/// Closed-form amplitudes of the sharp step of height `v0` at the origin.
pub fn step_amplitudes_closed_form(
    v0: f64,
    params: &PhysicsParams,
    p: C64,
    sheet: BranchSheet,
) -> Result<AmplitudeSet> {
    let p0 = (2.0 * params.m * v0).sqrt();
    let q = branch_q(p, p0, sheet);
    let s = p + q;
    if s.norm() == 0.0 {
        return Err(Error::Pole { p: fmt_c(p) });
    }
    Ok(AmplitudeSet {
        p,
        q,
        tl: 2.0 * p / s,
        rl: (p - q) / s,
        tr: 2.0 * q / s,
        rr: (q - p) / s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Propagating,
    Evanescent,
}

/// Absolute residuals of the amplitude identities applicable at a real momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    pub p: f64,
    pub regime: Regime,
    /// `(p/q)|T^r|^2 + |R^r|^2 = 1`
    pub uni1: Option<f64>,
    /// `|R^l|^2 + (q/p)|T^l|^2 = 1`
    pub uni2: Option<f64>,
    /// `(p/q) T^r conj(R^l) + R^r conj(T^l) = 0`
    pub uni3: Option<f64>,
    /// `|R^l| = 1`
    pub uni4: Option<f64>,
    /// `T^l(-p) = T^l(p) conj(R^l(p))` for `0 < p < p0`
    pub evan: Option<f64>,
    /// conjugation under `p -> -p` for all four amplitudes
    pub pm: f64,
    /// `T^r p = T^l q`
    pub tlr: f64,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        [self.uni1, self.uni2, self.uni3, self.uni4, self.evan, Some(self.pm), Some(self.tlr)]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

/// Residuals from amplitude sets at `p` and `-p` (real `p`).
pub fn check_identities(at_p: &AmplitudeSet, at_minus_p: &AmplitudeSet, p0: f64) -> IdentityReport {
    let p = at_p.p.re;
    let pm = [
        (at_minus_p.tl - at_p.tl.conj()).norm(),
        (at_minus_p.rl - at_p.rl.conj()).norm(),
        (at_minus_p.tr - at_p.tr.conj()).norm(),
        (at_minus_p.rr - at_p.rr.conj()).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let tlr_one = |a: &AmplitudeSet| (a.tr * a.p - a.tl * a.q).norm();
    let tlr = tlr_one(at_p).max(tlr_one(at_minus_p));

    if p.abs() > p0 {
        let uni1 = |a: &AmplitudeSet| ((a.p / a.q).re * a.tr.norm_sqr() + a.rr.norm_sqr() - 1.0).abs();
        let uni2 = |a: &AmplitudeSet| (a.rl.norm_sqr() + (a.q / a.p).re * a.tl.norm_sqr() - 1.0).abs();
        let uni3 = |a: &AmplitudeSet| ((a.p / a.q) * a.tr * a.rl.conj() + a.rr * a.tl.conj()).norm();
        IdentityReport {
            p,
            regime: Regime::Propagating,
            uni1: Some(uni1(at_p).max(uni1(at_minus_p))),
            uni2: Some(uni2(at_p).max(uni2(at_minus_p))),
            uni3: Some(uni3(at_p).max(uni3(at_minus_p))),
            uni4: None,
            evan: None,
            pm,
            tlr,
        }
    } else {
        let uni4 = |a: &AmplitudeSet| (a.rl.norm() - 1.0).abs();
        let (pos, neg) = if p > 0.0 { (at_p, at_minus_p) } else { (at_minus_p, at_p) };
        IdentityReport {
            p,
            regime: Regime::Evanescent,
            uni1: None,
            uni2: None,
            uni3: None,
            uni4: Some(uni4(at_p).max(uni4(at_minus_p))),
            evan: Some((neg.tl - pos.tl * pos.rl.conj()).norm()),
            pm,
            tlr,
        }
    }
}

/// Computes amplitudes at `p` and `-p` and checks every applicable identity.
pub fn identity_report(spec: &PotentialSpec, params: &PhysicsParams, p: f64) -> Result<IdentityReport> {
    let medium = Medium::new(spec, params);
    let sheet = BranchSheet::AboveCut;
    let a = transfer_amplitudes_with(&medium, spec, params, C64::new(p, 0.0), sheet)?;
    let b = transfer_amplitudes_with(&medium, spec, params, C64::new(-p, 0.0), sheet)?;
    Ok(check_identities(&a, &b, spec.threshold_momentum(params)))
}

/// Amplitude table on a real momentum grid, reusing one medium.
pub fn amplitude_table(
    spec: &PotentialSpec,
    params: &PhysicsParams,
    momenta: &[f64],
    sheet: BranchSheet,
) -> Result<Vec<AmplitudeSet>> {
    let medium = Medium::new(spec, params);
    momenta
        .iter()
        .map(|&p| transfer_amplitudes_with(&medium, spec, params, C64::new(p, 0.0), sheet))
        .collect()
}

pub(crate) fn fmt_c(p: C64) -> String {
    if p.im == 0.0 {
        format!("{}", p.re)
    } else {
        format!("{}{:+}i", p.re, p.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn branch_values() {
        assert!((branch_q(c(2.0, 0.0), SQRT2, BranchSheet::AboveCut) - c(SQRT2, 0.0)).norm() < 1e-15);
        assert!((branch_q(c(1.0, 0.0), SQRT2, BranchSheet::AboveCut) - c(0.0, 1.0)).norm() < 1e-15);
        assert!((branch_q(c(1.0, 0.0), SQRT2, BranchSheet::BelowCut) - c(0.0, -1.0)).norm() < 1e-15);
        assert!((branch_q(c(-2.0, 0.0), SQRT2, BranchSheet::AboveCut) - c(-SQRT2, 0.0)).norm() < 1e-15);
        assert_eq!(branch_q(c(SQRT2, 0.0), SQRT2, BranchSheet::AboveCut), c(0.0, 0.0));
        // positive imaginary axis
        let q = branch_q(c(0.0, 0.5), 1.0, BranchSheet::AboveCut);
        assert!((q - c(0.0, (1.25f64).sqrt())).norm() < 1e-15);
        // negative imaginary axis
        let q = branch_q(c(0.0, -0.5), 1.0, BranchSheet::BelowCut);
        assert!((q - c(0.0, -(1.25f64).sqrt())).norm() < 1e-15);
    }

    #[test]
    fn branch_continuity_just_above_the_axis() {
        let p0 = SQRT2;
        for x in [-3.0, -1.0, -0.2, 0.4, 1.3, 2.5] {
            let on = branch_q(c(x, 0.0), p0, BranchSheet::AboveCut);
            let above = branch_q(c(x, 1e-10), p0, BranchSheet::AboveCut);
            assert!((on - above).norm() < 1e-8, "x = {x}: {on} vs {above}");
            let below = branch_q(c(x, -1e-10), p0, BranchSheet::AboveCut);
            let on_below = branch_q(c(x, 0.0), p0, BranchSheet::BelowCut);
            assert!((on_below - below).norm() < 1e-8, "x = {x}: {on_below} vs {below}");
        }
    }

    #[test]
    fn step_closed_form_examples() {
        let params = PhysicsParams::default();
        let a = step_amplitudes_closed_form(1.0, &params, c(2.0, 0.0), BranchSheet::AboveCut).unwrap();
        assert!((a.tl.re - 4.0 / (2.0 + SQRT2)).abs() < 1e-15);
        assert!((a.tl.re - 1.171573).abs() < 1e-6);
        assert!((a.rl.re - 0.171573).abs() < 1e-6);
        let a = step_amplitudes_closed_form(1.0, &params, c(1.0, 0.0), BranchSheet::AboveCut).unwrap();
        assert!((a.tl - c(1.0, -1.0)).norm() < 1e-15);
        assert!((a.rl - c(0.0, -1.0)).norm() < 1e-15);
        let a = step_amplitudes_closed_form(1.0, &params, c(SQRT2, 0.0), BranchSheet::AboveCut).unwrap();
        assert!((a.tl - c(2.0, 0.0)).norm() < 1e-15 && (a.rl - c(1.0, 0.0)).norm() < 1e-15);
        let a = step_amplitudes_closed_form(0.0, &params, c(0.7, 0.2), BranchSheet::AboveCut).unwrap();
        assert_eq!((a.tl, a.rl), (c(1.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn transfer_matches_step_example() {
        let params = PhysicsParams::default();
        let spec = PotentialSpec::step(1.0);
        let a = transfer_amplitudes(&spec, &params, c(2.0, 0.0), BranchSheet::AboveCut).unwrap();
        assert!((a.tl - c(4.0 / (2.0 + SQRT2), 0.0)).norm() < 1e-14);
        assert!((a.rl - c((2.0 - SQRT2) / (2.0 + SQRT2), 0.0)).norm() < 1e-14);
        let a = transfer_amplitudes(&spec, &params, c(1.0, 0.0), BranchSheet::AboveCut).unwrap();
        assert!((a.tl - c(1.0, -1.0)).norm() < 1e-14);
        assert!((a.rl.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn free_potential_is_transparent() {
        let params = PhysicsParams::default();
        for p in [c(0.3, 0.0), c(-2.0, 0.0), c(1.0, 0.7)] {
            let a = transfer_amplitudes(&PotentialSpec::free(), &params, p, BranchSheet::AboveCut).unwrap();
            assert!((a.tl - 1.0).norm() < 1e-15 && a.rl.norm() < 1e-15);
            assert!((a.tr - 1.0).norm() < 1e-15 && a.rr.norm() < 1e-15);
        }
    }

    #[test]
    fn single_delta_matches_hand_matching() {
        // psi continuous, psi'(0+) - psi'(0-) = 2 m s psi(0)  =>  T = p / (p + i m s / hbar)
        let params = PhysicsParams::default();
        let s = -0.125;
        let spec = PotentialSpec::delta_step(s, 0.0);
        for p in [c(0.5, 0.0), c(-1.3, 0.0), c(0.2, 0.4)] {
            let a = transfer_amplitudes(&spec, &params, p, BranchSheet::AboveCut).unwrap();
            let t = p / (p + I * params.m * s / params.hbar);
            assert!((a.tl - t).norm() < 1e-14);
            assert!((a.rl - (t - 1.0)).norm() < 1e-14);
            assert!((a.tr - t).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_momentum_is_rejected() {
        let r = transfer_amplitudes(&PotentialSpec::step(1.0), &PhysicsParams::default(), c(0.0, 0.0), BranchSheet::AboveCut);
        assert!(matches!(r, Err(Error::Degenerate { .. })));
    }

    #[test]
    fn bound_state_pole_is_reported() {
        let spec = PotentialSpec::delta_step(-0.125, 0.0);
        let r = transfer_amplitudes(&spec, &PhysicsParams::default(), c(0.0, 0.125), BranchSheet::AboveCut);
        assert!(matches!(r, Err(Error::Degenerate { .. })));
        let (inv, _) = jost_left_coefficients(&spec, &PhysicsParams::default(), c(0.0, 0.125), BranchSheet::AboveCut).unwrap();
        assert!(inv.norm() < 1e-15);
    }

    #[test]
    fn step_identities_exact() {
        let params = PhysicsParams::default();
        let spec = PotentialSpec::step(1.0);
        let r = identity_report(&spec, &params, 2.0).unwrap();
        assert_eq!(r.regime, Regime::Propagating);
        assert!(r.max_residual() < 1e-13, "{r:?}");
        let r = identity_report(&spec, &params, 1.0).unwrap();
        assert_eq!(r.regime, Regime::Evanescent);
        assert!(r.uni4.unwrap() < 1e-13 && r.max_residual() < 1e-13, "{r:?}");
    }

    #[test]
    fn threshold_momentum_is_finite() {
        let params = PhysicsParams::default();
        let a = transfer_amplitudes(&PotentialSpec::step(1.0), &params, c(SQRT2, 0.0), BranchSheet::AboveCut).unwrap();
        assert!((a.tl - 2.0).norm() < 1e-14 && (a.rl - 1.0).norm() < 1e-14);
        assert!(a.tr.norm() < 1e-14 && (a.rr + 1.0).norm() < 1e-14);
    }

    #[test]
    fn continuity_hugging_the_axis_from_above() {
        let params = PhysicsParams::default();
        let spec = PotentialSpec::delta_step(-0.125, 1.0);
        let p0 = spec.threshold_momentum(&params);
        let mut prev: Option<(C64, C64)> = None;
        let n = 4000;
        for i in 0..=n {
            let x = -3.0 + 6.0 * i as f64 / n as f64;
            let p = c(x, 1e-9);
            let q = branch_q(p, p0, BranchSheet::AboveCut);
            let t = transfer_amplitudes(&spec, &params, p, BranchSheet::AboveCut).unwrap().tl;
            if let Some((pq, pt)) = prev {
                // sqrt behaviour near the branch points allows steps of order sqrt(dp)
                assert!((q - pq).norm() < 0.1, "jump in q at {x}");
                assert!((t - pt).norm() < 0.1, "jump in T at {x}");
            }
            prev = Some((q, t));
        }
    }
}
