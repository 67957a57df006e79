//! Probabilities on the transmitted half line and their channel decomposition.

use log::warn;
use serde::{Deserialize, Serialize};

use super::{EvolutionFrame, Integrand, Kind, MomentumConfig, MomentumRule, Side, XGrid};
use crate::bound_states::BoundSpectrum;
use crate::error::{Error, Result};
use crate::numeric::C64;
use crate::potential::{PhysicsParams, PotentialSpec};
use crate::quadrature::uniform_weights;
use crate::wavepacket::PacketSpec;

/// `∫|ψ|^2` over a region and its split into channel and interference parts.
///
/// `p_t` equals the sum of the four channel terms and the six pairwise terms
/// `2 Re ∫ a conj(b)`; `p_int` is the positive/negative pair, `p_int_other` the other five.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityRecord {
    pub t: f64,
    pub p_t: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub p_int: f64,
    pub p_evan: f64,
    pub p_bound: f64,
    pub p_int_other: f64,
    pub cross_plus_evan: f64,
    pub cross_plus_bound: f64,
    pub cross_minus_evan: f64,
    pub cross_minus_bound: f64,
    pub cross_evan_bound: f64,
}

impl ProbabilityRecord {
    /// `p_t` minus the sum of its parts.
    pub fn decomposition_residual(&self) -> f64 {
        self.p_t - (self.p_plus + self.p_minus + self.p_evan + self.p_bound + self.p_int + self.p_int_other)
    }
}

/// Simpson-rule probabilities over the frame points with `lo ≤ x ≤ hi`.
pub fn probability_diagnostics(frame: &EvolutionFrame, lo: f64, hi: f64) -> Result<ProbabilityRecord> {
    let eps = 1e-9 * frame.x_step;
    let idx: Vec<usize> = (0..frame.len()).filter(|&j| frame.x(j) >= lo - eps && frame.x(j) <= hi + eps).collect();
    if idx.len() < 2 {
        return Err(Error::InvalidParams(format!("fewer than two grid points in [{lo}, {hi}]")));
    }
    let w = uniform_weights(idx.len(), frame.x_step);
    let chans = [&frame.positive, &frame.negative, &frame.evanescent, &frame.bound];
    let mut diag = [0.0f64; 4];
    let mut cross = [[0.0f64; 4]; 4];
    let mut total = 0.0;
    for (wk, &j) in w.iter().zip(&idx) {
        let v: [C64; 4] = [chans[0][j], chans[1][j], chans[2][j], chans[3][j]];
        total += wk * (v[0] + v[1] + v[2] + v[3]).norm_sqr();
        for a in 0..4 {
            diag[a] += wk * v[a].norm_sqr();
            for b in a + 1..4 {
                cross[a][b] += wk * 2.0 * (v[a] * v[b].conj()).re;
            }
        }
    }
    let other = cross[0][2] + cross[0][3] + cross[1][2] + cross[1][3] + cross[2][3];
    Ok(ProbabilityRecord {
        t: frame.t,
        p_t: total,
        p_plus: diag[0],
        p_minus: diag[1],
        p_int: cross[0][1],
        p_evan: diag[2],
        p_bound: diag[3],
        p_int_other: other,
        cross_plus_evan: cross[0][2],
        cross_plus_bound: cross[0][3],
        cross_minus_evan: cross[1][2],
        cross_minus_bound: cross[1][3],
        cross_evan_bound: cross[2][3],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesConfig {
    /// Spatial step of the quadrature over the transmitted region.
    pub x_step: f64,
    /// Momentum probability allowed outside the cutoff.
    pub tail_mass: f64,
    /// Probability within the outer 5% of the window above which a warning is logged.
    pub edge_warning: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { x_step: 0.05, tail_mass: 1e-6, edge_warning: 1e-4 }
    }
}

/// `P_T(t)` and its decomposition, integrating over the whole transmitted region.
///
/// The region is `x ≥ max(0, d)` for a packet on the left and `x ≤ min(0, c)` for a packet
/// on the right. The free potential uses the `p > 0` / `p < 0` split of the free expansion.
pub fn transmission_series(
    spec: &PotentialSpec,
    params: &PhysicsParams,
    packet: &PacketSpec,
    spectrum: &BoundSpectrum,
    side: Side,
    times: &[f64],
    cfg: &SeriesConfig,
) -> Result<Vec<ProbabilityRecord>> {
    let bound = spectrum.require_for(spec, params)?;
    let kind = match side {
        Side::TransmittedRight => {
            if packet.b > spec.c {
                return Err(Error::Precondition(format!("packet end b = {} exceeds c = {}", packet.b, spec.c)));
            }
            Kind::LowerCompact
        }
        Side::TransmittedLeft => {
            if packet.a < spec.d {
                return Err(Error::Precondition(format!("packet start a = {} is below d = {}", packet.a, spec.d)));
            }
            Kind::UpperCompact
        }
    };
    let it = Integrand::new(kind, spec, params, packet, bound)?;
    series(&it, side, times, cfg)
}

/// [`transmission_series`] for free motion from the free expansion.
pub fn free_transmission_series(
    params: &PhysicsParams,
    packet: &PacketSpec,
    times: &[f64],
    cfg: &SeriesConfig,
) -> Result<Vec<ProbabilityRecord>> {
    let it = Integrand::new(Kind::Free, &PotentialSpec::free(), params, packet, &[])?;
    series(&it, Side::TransmittedRight, times, cfg)
}

fn series(it: &Integrand, side: Side, times: &[f64], cfg: &SeriesConfig) -> Result<Vec<ProbabilityRecord>> {
    if !(cfg.x_step > 0.0 && cfg.tail_mass > 0.0) {
        return Err(Error::InvalidParams("series x_step and tail_mass must be positive".into()));
    }
    let extent = it.packet.momentum_extent(&it.params, cfg.tail_mass);
    let cutoff = match it.kind {
        Kind::UpperCompact => (extent * extent + it.p0 * it.p0).sqrt(),
        _ => extent,
    }
    .max(2.0 * it.p0 + 4.0);
    let mcfg = MomentumConfig { rule: MomentumRule::Uniform, p_max: Some(cutoff), error_samples: 0, ..Default::default() };
    times
        .iter()
        .map(|&t| {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::InvalidParams(format!("time {t} must be finite and non-negative")));
            }
            let (lo, hi) = it.support(t, cutoff);
            let step = cfg.x_step;
            let (window, region) = match side {
                Side::TransmittedRight => {
                    let edge = it.spec.d.max(0.0);
                    let n = ((hi - edge) / step).ceil().max(2.0);
                    (XGrid::new(edge, edge + n * step, step), (edge, f64::INFINITY))
                }
                Side::TransmittedLeft => {
                    let edge = it.spec.c.min(0.0);
                    let n = ((edge - lo) / step).ceil().max(2.0);
                    (XGrid::new(edge - n * step, edge, step), (f64::NEG_INFINITY, edge))
                }
            };
            let (frame, _) = it.frame(t, &window, &mcfg, true)?;
            let rec = probability_diagnostics(&frame, region.0, region.1)?;
            let span = frame.x(frame.len() - 1) - frame.x_start;
            let outer = match side {
                Side::TransmittedRight => probability_diagnostics(&frame, frame.x_start + 0.95 * span, f64::INFINITY)?,
                Side::TransmittedLeft => probability_diagnostics(&frame, f64::NEG_INFINITY, frame.x_start + 0.05 * span)?,
            };
            if outer.p_t > cfg.edge_warning {
                warn!("t = {t}: probability {:.2e} near the end of the integration window", outer.p_t);
            }
            Ok(rec)
        })
        .collect()
}
