//! Spectral time evolution of a packet that starts on one side of the support.
//!
//! All forms are sums over momentum nodes of `c(p) e^{iκ(p) x} e^{-iE_p t/ħ}` plus a
//! bound-state sum. The compact forms integrate `T^l(p) ψ~(p) e^{iqx/ħ}` (packet on the left,
//! observed right of `d`) or `T^l(-p) ψ~(q) e^{ipx/ħ}` below the cut (packet on the right,
//! observed left of `c`) along the real axis, and add the pole residues explicitly. The long
//! forms expand the same integrals in positive-argument amplitudes without using unitarity,
//! and project onto the normalized bound states directly. They serve as an independent path.

mod diagnostics;
mod grid;
mod synth;

use std::f64::consts::PI;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitudes::{amplitudes_with_q, jost_left_with, AmplitudeSet};
use crate::bound_states::{BoundSpectrum, BoundState};
use crate::error::{Error, Result};
use crate::numeric::{C64, I};
use crate::potential::{PhysicsParams, PotentialSpec};
use crate::transfer::Medium;
use crate::wavepacket::PacketSpec;

pub use diagnostics::{
    free_transmission_series, probability_diagnostics, transmission_series, ProbabilityRecord, SeriesConfig,
};
pub use grid::Channel;

use grid::{gauss_panels, uniform_lattice, Node, PhaseModel, Spatial};
use synth::{direct_sum, fast_length, LatticeSum, Wave};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Packet left of the support, observed at `x ≥ d`.
    #[default]
    TransmittedRight,
    /// Packet right of the support, observed at `x ≤ c`.
    TransmittedLeft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumRule {
    /// Uniform lattice for the compact and free forms, Gauss panels for the long forms.
    #[default]
    Auto,
    GaussPanels,
    Uniform,
}

/// Which expansion of the transmitted packet to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    #[default]
    Compact,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentumConfig {
    pub rule: MomentumRule,
    /// Fixed cutoff; `None` chooses it from `tail_tolerance`.
    pub p_max: Option<f64>,
    /// Target for the estimated truncation error `|integrand(±p_max)| / |dφ/dp|`.
    pub tail_tolerance: f64,
    /// Upper limit for the automatic cutoff.
    pub p_max_cap: f64,
    /// Gauss panels are refined until at least this many nodes exist.
    pub min_nodes: usize,
    pub gauss_order: usize,
    /// Largest phase change (radians) swept by one Gauss panel.
    pub phase_per_panel: f64,
    /// Points at which the refinement error is estimated; 0 disables the estimate.
    pub error_samples: usize,
    /// Estimated errors above this are logged as warnings.
    pub warn_above: f64,
}

impl Default for MomentumConfig {
    fn default() -> Self {
        Self {
            rule: MomentumRule::Auto,
            p_max: None,
            tail_tolerance: 1e-8,
            p_max_cap: 2000.0,
            min_nodes: 3000,
            gauss_order: 20,
            phase_per_panel: 20.0,
            error_samples: 5,
            warn_above: 1e-6,
        }
    }
}

impl MomentumConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(format!("momentum config: {m}")));
        if let Some(p) = self.p_max {
            if !(p > 0.0 && p.is_finite()) {
                return bad("p_max must be positive");
            }
        }
        if !(self.tail_tolerance > 0.0) || !(self.p_max_cap > 0.0) || !(self.phase_per_panel > 0.0) {
            return bad("tolerances and caps must be positive");
        }
        if self.gauss_order < 2 {
            return bad("gauss_order must be at least 2");
        }
        Ok(())
    }
}

/// Equispaced sample points `start, start + step, …` up to `stop` (inclusive, rounded).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl XGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step > 0.0 && self.stop >= self.start) {
            return Err(Error::InvalidParams(format!(
                "x grid needs finite start <= stop and step > 0, got {:?}",
                self
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, j: usize) -> f64 {
        self.start + self.step * j as f64
    }

    pub fn last(&self) -> f64 {
        self.point(self.len() - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.point(j)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    #[serde(default)]
    pub momentum: MomentumConfig,
    pub x_grid: XGrid,
    pub times: Vec<f64>,
    #[serde(default)]
    pub side: Side,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        self.momentum.validate()?;
        self.x_grid.validate()?;
        if self.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidParams("times must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Channel-resolved amplitudes at one time on an equispaced grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionFrame {
    pub t: f64,
    pub x_start: f64,
    pub x_step: f64,
    pub positive: Vec<C64>,
    pub negative: Vec<C64>,
    pub evanescent: Vec<C64>,
    pub bound: Vec<C64>,
}

impl EvolutionFrame {
    pub fn len(&self) -> usize {
        self.positive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_start + self.x_step * j as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.x(j)).collect()
    }

    pub fn psi(&self, j: usize) -> C64 {
        self.positive[j] + self.negative[j] + self.evanescent[j] + self.bound[j]
    }

    pub fn total(&self) -> Vec<C64> {
        (0..self.len()).map(|j| self.psi(j)).collect()
    }

    pub fn channel(&self, ch: Channel) -> &[C64] {
        match ch {
            Channel::Positive => &self.positive,
            Channel::Negative => &self.negative,
            Channel::Evanescent => &self.evanescent,
            Channel::Bound => &self.bound,
        }
    }

    fn restrict(&self, from: usize, stride: usize, n: usize) -> Self {
        let pick = |v: &[C64]| (0..n).map(|j| v[from + j * stride]).collect();
        Self {
            t: self.t,
            x_start: self.x(from),
            x_step: self.x_step * stride as f64,
            positive: pick(&self.positive),
            negative: pick(&self.negative),
            evanescent: pick(&self.evanescent),
            bound: pick(&self.bound),
        }
    }
}

/// How one frame was computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameReport {
    pub t: f64,
    pub rule: MomentumRule,
    pub p_max: f64,
    pub nodes: usize,
    /// Transform length of the uniform rule.
    pub fft_length: Option<usize>,
    /// Internal spatial step of the uniform rule.
    pub fine_step: Option<f64>,
    /// Largest change at the sample points under refinement of the node set.
    pub error_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evolution {
    pub frames: Vec<EvolutionFrame>,
    pub reports: Vec<FrameReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Free,
    LowerCompact,
    LowerLong,
    UpperCompact,
    UpperLong,
}

impl Kind {
    fn spatial(self) -> Spatial {
        match self {
            Kind::LowerCompact | Kind::LowerLong => Spatial::Q,
            _ => Spatial::P,
        }
    }

    fn is_compact(self) -> bool {
        matches!(self, Kind::Free | Kind::LowerCompact | Kind::UpperCompact)
    }
}

#[derive(Debug, Clone, Copy)]
struct Term {
    coef: C64,
    kappa: C64,
    energy: f64,
    channel: Channel,
    lattice: Option<usize>,
}

/// Everything needed to evaluate one expansion.
pub(crate) struct Integrand<'a> {
    kind: Kind,
    spec: PotentialSpec,
    params: PhysicsParams,
    packet: PacketSpec,
    medium: Medium,
    p0: f64,
    bound: &'a [BoundState],
    /// Compact forms: coefficient of `e^{iκ_j x}`. Long forms: `⟨E_j|ψ(0)⟩`.
    bound_coefs: Vec<C64>,
}

impl<'a> Integrand<'a> {
    pub(crate) fn new(
        kind: Kind,
        spec: &PotentialSpec,
        params: &PhysicsParams,
        packet: &PacketSpec,
        bound: &'a [BoundState],
    ) -> Result<Self> {
        spec.validate()?;
        params.validate()?;
        packet.validate()?;
        let spec = if kind == Kind::Free { PotentialSpec::free() } else { spec.clone() };
        let bound: &'a [BoundState] = if kind == Kind::Free { &[] } else { bound };
        let s = 1.0 / params.h().sqrt();
        let bound_coefs = bound
            .iter()
            .map(|b| match kind {
                Kind::LowerCompact => -2.0 * PI * I * s * b.residue_tl * packet.momentum_amplitude(params, b.pole()),
                Kind::UpperCompact => -2.0 * PI * I * s * b.residue_tl * packet.momentum_amplitude(params, -b.qj),
                _ => b.overlap_by_quadrature(packet, params),
            })
            .collect();
        Ok(Self {
            kind,
            medium: Medium::new(&spec, params),
            p0: spec.threshold_momentum(params),
            spec,
            params: *params,
            packet: *packet,
            bound,
            bound_coefs,
        })
    }

    fn amps(&self, p: f64, q: C64) -> Result<AmplitudeSet> {
        amplitudes_with_q(&self.medium, &self.spec, &self.params, C64::new(p, 0.0), q)
    }

    fn tl(&self, p: f64, q: C64) -> Result<C64> {
        let (inv, _) = jost_left_with(&self.medium, &self.spec, &self.params, C64::new(p, 0.0), q);
        if inv.norm() == 0.0 || !inv.is_finite() {
            return Err(Error::Degenerate { p: format!("{p}"), reason: "1/T^l vanishes on the real axis" });
        }
        Ok(1.0 / inv)
    }

    fn psi(&self, p: C64) -> C64 {
        self.packet.momentum_amplitude(&self.params, p)
    }

    /// `q(-p)` above the cut, given `q(p)` above the cut.
    fn q_reflected(&self, p: f64, q: C64) -> C64 {
        if p.abs() > self.p0 {
            -q
        } else {
            q
        }
    }

    fn node_terms(&self, n: &Node) -> Result<[Option<Term>; 2]> {
        let hb = self.params.hbar;
        let s = n.w / self.params.h().sqrt();
        let energy = self.params.energy(n.p);
        let (p, q, p0) = (n.p, n.q, self.p0);
        let pc = C64::new(p, 0.0);
        let term = |coef: C64, kappa: C64, channel: Channel, lattice: Option<usize>| {
            Some(Term { coef, kappa: kappa / hb, energy, channel, lattice })
        };
        let ch = Channel::of(p, p0);
        Ok(match self.kind {
            Kind::Free => {
                let ch = if p > 0.0 { Channel::Positive } else { Channel::Negative };
                [term(s * self.psi(pc), pc, ch, n.lattice), None]
            }
            Kind::LowerCompact => [term(s * self.tl(p, q)? * self.psi(pc), q, ch, n.lattice), None],
            Kind::LowerLong => {
                if p > 0.0 {
                    [term(s * self.tl(p, q)? * self.psi(pc), q, ch, None), None]
                } else {
                    let a = self.amps(-p, self.q_reflected(p, q))?;
                    if p >= -p0 {
                        [term(s * a.tl * a.rl.conj() * self.psi(pc), q, ch, None), None]
                    } else {
                        let ratio = pc / q;
                        let direct = s * ratio * a.tr.conj() * self.psi(pc);
                        let mixed = s * (ratio * a.rr * a.tr.conj() + a.tl * a.rl.conj()) * self.psi(pc);
                        [term(direct, q, ch, None), term(mixed, -q, ch, None)]
                    }
                }
            }
            Kind::UpperCompact => {
                let below = if p.abs() > p0 { q } else { -q };
                let t = self.tl(-p, self.q_reflected(p, q))?;
                [term(s * t * self.psi(below), pc, ch, n.lattice), None]
            }
            Kind::UpperLong => {
                if p < -p0 {
                    let a = self.amps(p, q)?;
                    [term(s * a.tl.conj() * self.psi(q), pc, ch, None), None]
                } else if p < 0.0 {
                    [None, None]
                } else if p < p0 {
                    let a = self.amps(p, q)?;
                    let f = s * a.tl.conj() * self.psi(-q);
                    [term(f, pc, ch, None), term(f * a.rl, -pc, Channel::Evanescent, None)]
                } else {
                    let a = self.amps(p, q)?;
                    let f = s * self.psi(q);
                    let mixed = (pc / q) * a.rr.conj() * a.tr + a.tl.conj() * a.rl;
                    [term(f * a.tl.conj(), pc, ch, None), term(f * mixed, -pc, Channel::Negative, None)]
                }
            }
        })
    }

    fn terms(&self, nodes: &[Node]) -> Result<Vec<Term>> {
        let per: Vec<[Option<Term>; 2]> = nodes.par_iter().map(|n| self.node_terms(n)).collect::<Result<_>>()?;
        Ok(per.into_iter().flatten().flatten().collect())
    }

    /// Bound channel at `x_j = x0 + j dx`.
    fn bound_channel(&self, t: f64, x0: f64, dx: f64, n: usize) -> Vec<C64> {
        let hb = self.params.hbar;
        let phase = |b: &BoundState| (-I * b.energy * t / hb).exp();
        match self.kind {
            Kind::Free => vec![C64::new(0.0, 0.0); n],
            Kind::LowerCompact | Kind::UpperCompact => {
                let waves: Vec<Wave> = self
                    .bound
                    .iter()
                    .zip(&self.bound_coefs)
                    .map(|(b, &c)| {
                        let kappa = if self.kind == Kind::LowerCompact { b.qj } else { -b.pole() };
                        Wave { coef: c * phase(b), kappa: kappa / hb }
                    })
                    .collect();
                direct_sum(&waves, x0, dx, n)
            }
            Kind::LowerLong | Kind::UpperLong => (0..n)
                .into_par_iter()
                .map(|j| {
                    let x = x0 + dx * j as f64;
                    self.bound
                        .iter()
                        .zip(&self.bound_coefs)
                        .map(|(b, &o)| b.wavefunction(x) * o * phase(b))
                        .sum()
                })
                .collect(),
        }
    }

    fn phase_model(&self, t: f64, reach: f64) -> PhaseModel {
        let pk = &self.packet;
        PhaseModel {
            time: t,
            m: self.params.m,
            hbar: self.params.hbar,
            reach,
            spatial: self.kind.spatial(),
            base: pk.a.abs().max(pk.b.abs()) + 2.0 * (self.spec.d - self.spec.c),
            poles: self.bound.iter().map(|b| b.gamma).collect(),
            p0: self.p0,
        }
    }

    /// `|integrand| / max(|dφ/dp|, 1/p)` at `±p`, summed over both signs.
    fn endpoint_error(&self, p: f64, t: f64, reach: f64) -> f64 {
        let hb = self.params.hbar;
        let s = 1.0 / self.params.h().sqrt();
        let base = self.phase_model(t, reach).base;
        let q = ((p - self.p0) * (p + self.p0)).max(0.0).sqrt();
        [p, -p]
            .iter()
            .map(|&pp| {
                let qq = C64::new(pp.signum() * q, 0.0);
                let (amp, env_at) = match self.kind {
                    Kind::Free => (1.0, pp),
                    Kind::LowerCompact | Kind::LowerLong => (self.tl(pp, qq).map(|t| t.norm()).unwrap_or(2.0), pp),
                    Kind::UpperCompact | Kind::UpperLong => {
                        (self.tl(-pp, -qq).map(|t| t.norm()).unwrap_or(2.0), qq.re)
                    }
                };
                let mag = s * amp * self.packet.momentum_envelope(&self.params, env_at);
                let dk = match self.kind.spatial() {
                    Spatial::Q if q > 0.0 => p / q,
                    Spatial::Q => 1e300,
                    Spatial::P => 1.0,
                };
                let rate = (p * t / self.params.m - reach * dk - base) / hb;
                mag / rate.max(1.0 / p)
            })
            .sum()
    }

    fn cutoff(&self, t: f64, reach: f64, cfg: &MomentumConfig) -> f64 {
        if let Some(p) = cfg.p_max {
            return p;
        }
        let pk = &self.packet;
        let floor = pk.boost.abs() + 8.0 * PI * self.params.hbar / pk.width() + 2.0 * self.p0 + 4.0;
        let tol = cfg.tail_tolerance;
        if self.endpoint_error(floor, t, reach) <= tol {
            return floor;
        }
        let mut hi = floor;
        while self.endpoint_error(hi, t, reach) > tol {
            if hi >= cfg.p_max_cap {
                warn!("momentum cutoff capped at {} (t = {t}): truncation error above {tol:e}", cfg.p_max_cap);
                return cfg.p_max_cap;
            }
            hi = (2.0 * hi).min(cfg.p_max_cap);
        }
        let mut lo = (0.5 * hi).max(floor);
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if self.endpoint_error(mid, t, reach) > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Interval outside which the continuum sum is negligible at time `t` for cutoff `p`.
    fn support(&self, t: f64, p: f64) -> (f64, f64) {
        let pk = &self.packet;
        let sp = &self.spec;
        let mut r0 = 1.2 * pk.a.abs().max(pk.b.abs()).max(sp.c.abs()).max(sp.d.abs()) + 20.0;
        if let Some(g) = self.bound.iter().map(|b| b.gamma).reduce(f64::min) {
            r0 += (40.0 * self.params.hbar / g).min(4000.0);
        }
        let spread = p * t / self.params.m;
        (-r0 - spread, r0 + spread)
    }

    fn resolve(&self, rule: MomentumRule) -> MomentumRule {
        match rule {
            MomentumRule::Auto if self.kind.is_compact() => MomentumRule::Uniform,
            MomentumRule::Auto => MomentumRule::GaussPanels,
            r => r,
        }
    }

    /// Frame at `t` on `window`; with `fine`, the uniform rule returns its internal grid.
    pub(crate) fn frame(
        &self,
        t: f64,
        window: &XGrid,
        cfg: &MomentumConfig,
        fine: bool,
    ) -> Result<(EvolutionFrame, FrameReport)> {
        let reach = window.start.abs().max(window.last().abs());
        let cutoff = self.cutoff(t, reach, cfg);
        let rule = self.resolve(cfg.rule);
        let model = self.phase_model(t, reach);
        let n = window.len();
        let (frame, nodes, fft_length, fine_step, dv) = match rule {
            MomentumRule::Uniform => {
                let plan = self.uniform_plan(t, cutoff, window)?;
                let (lattice, nodes) =
                    uniform_lattice(cutoff, plan.dv, &model, cfg.phase_per_panel, cfg.gauss_order);
                let terms = self.terms(&nodes)?;
                let nf = (n - 1) * plan.stride + 1;
                let hb = self.params.hbar;
                let mut channels = Vec::new();
                for ch in Channel::CONTINUUM {
                    let mut coefs = vec![C64::new(0.0, 0.0); lattice.len];
                    let mut rest = Vec::new();
                    for tm in terms.iter().filter(|tm| tm.channel == ch) {
                        let c = tm.coef * (-I * tm.energy * t / hb).exp();
                        match tm.lattice {
                            Some(k) if self.kind.is_compact() => coefs[k] += c,
                            _ => rest.push(Wave { coef: c, kappa: tm.kappa }),
                        }
                    }
                    let mut v = if coefs.iter().any(|c| *c != C64::new(0.0, 0.0)) {
                        plan.sum.eval(&coefs, lattice.start / hb, plan.dv / hb, window.start, plan.dx, nf)
                    } else {
                        vec![C64::new(0.0, 0.0); nf]
                    };
                    for (a, b) in v.iter_mut().zip(direct_sum(&rest, window.start, plan.dx, nf)) {
                        *a += b;
                    }
                    channels.push(v);
                }
                let bound = self.bound_channel(t, window.start, plan.dx, nf);
                let evanescent = channels.pop().unwrap_or_default();
                let negative = channels.pop().unwrap_or_default();
                let positive = channels.pop().unwrap_or_default();
                let full = EvolutionFrame { t, x_start: window.start, x_step: plan.dx, positive, negative, evanescent, bound };
                let frame = if fine || plan.stride == 1 { full } else { full.restrict(0, plan.stride, n) };
                (frame, nodes.len(), Some(plan.sum.len()), Some(plan.dx), Some(plan.dv))
            }
            _ => {
                let nodes = gauss_panels(cutoff, &model, cfg.phase_per_panel, cfg.gauss_order, cfg.min_nodes);
                let terms = self.terms(&nodes)?;
                let frame = self.direct_frame(t, &terms, window.start, window.step, n);
                (frame, nodes.len(), None, None, None)
            }
        };
        let error_estimate = if cfg.error_samples > 0 {
            Some(self.refinement_error(t, cutoff, &frame, dv, cfg, &model)?)
        } else {
            None
        };
        if let Some(e) = error_estimate {
            if e > cfg.warn_above {
                warn!("estimated quadrature error {e:.2e} at t = {t} exceeds {:.1e}", cfg.warn_above);
            }
        }
        let report = FrameReport { t, rule, p_max: cutoff, nodes, fft_length, fine_step, error_estimate };
        Ok((frame, report))
    }

    fn direct_frame(&self, t: f64, terms: &[Term], x0: f64, dx: f64, n: usize) -> EvolutionFrame {
        let hb = self.params.hbar;
        let waves = |ch: Channel| -> Vec<Wave> {
            terms
                .iter()
                .filter(|tm| tm.channel == ch)
                .map(|tm| Wave { coef: tm.coef * (-I * tm.energy * t / hb).exp(), kappa: tm.kappa })
                .collect()
        };
        EvolutionFrame {
            t,
            x_start: x0,
            x_step: dx,
            positive: direct_sum(&waves(Channel::Positive), x0, dx, n),
            negative: direct_sum(&waves(Channel::Negative), x0, dx, n),
            evanescent: direct_sum(&waves(Channel::Evanescent), x0, dx, n),
            bound: self.bound_channel(t, x0, dx, n),
        }
    }

    fn uniform_plan(&self, t: f64, cutoff: f64, window: &XGrid) -> Result<UniformPlan> {
        let hb = self.params.hbar;
        let vmax = match self.kind.spatial() {
            Spatial::Q => ((cutoff - self.p0) * (cutoff + self.p0)).max(0.0).sqrt(),
            Spatial::P => cutoff,
        };
        let (lo, hi) = self.support(t, cutoff);
        let period = (hi - window.start).max(window.last() - lo) + grid::ALIAS_PAD;
        let mut stride = ((window.step * vmax / (PI * hb)) * 1.02).ceil().max(1.0) as usize;
        loop {
            let dx = window.step / stride as f64;
            let len = fast_length((period / dx).ceil() as usize);
            let dv = hb * 2.0 * PI / (len as f64 * dx);
            let nodes = 2 * (vmax / dv).ceil() as usize;
            if nodes <= len && (window.len() - 1) * stride < len {
                return Ok(UniformPlan { sum: LatticeSum::new(len), dx, dv, stride });
            }
            stride += 1;
            if stride > 1 << 20 {
                return Err(Error::InvalidParams("x grid too coarse for the momentum cutoff".into()));
            }
        }
    }

    /// Largest change of the continuum sum at a few points when the node set is refined.
    fn refinement_error(
        &self,
        t: f64,
        cutoff: f64,
        frame: &EvolutionFrame,
        lattice_step: Option<f64>,
        cfg: &MomentumConfig,
        model: &PhaseModel,
    ) -> Result<f64> {
        let finer = 1.25 * cutoff;
        let nodes = match lattice_step {
            Some(dv) => uniform_lattice(finer, 0.5 * dv, model, 0.5 * cfg.phase_per_panel, cfg.gauss_order).1,
            None => gauss_panels(finer, model, 0.5 * cfg.phase_per_panel, cfg.gauss_order, cfg.min_nodes),
        };
        let terms = self.terms(&nodes)?;
        let hb = self.params.hbar;
        let n = frame.len();
        let k = cfg.error_samples.min(n);
        let picks: Vec<usize> =
            if k <= 1 { vec![n / 2] } else { (0..k).map(|i| i * (n - 1) / (k - 1)).collect() };
        let worst = picks
            .par_iter()
            .map(|&j| {
                let x = frame.x(j);
                let refined: C64 = terms
                    .iter()
                    .map(|tm| tm.coef * (I * (tm.kappa * x - tm.energy * t / hb)).exp())
                    .sum();
                let coarse = frame.positive[j] + frame.negative[j] + frame.evanescent[j];
                (refined - coarse).norm()
            })
            .reduce(|| 0.0, f64::max);
        Ok(worst)
    }
}

struct UniformPlan {
    sum: LatticeSum,
    dx: f64,
    dv: f64,
    stride: usize,
}

fn run(it: &Integrand, cfg: &EvolutionConfig) -> Result<Evolution> {
    cfg.validate()?;
    let mut frames = Vec::with_capacity(cfg.times.len());
    let mut reports = Vec::with_capacity(cfg.times.len());
    for &t in &cfg.times {
        let (f, r) = it.frame(t, &cfg.x_grid, &cfg.momentum, false)?;
        frames.push(f);
        reports.push(r);
    }
    Ok(Evolution { frames, reports })
}

fn require_side(cfg: &EvolutionConfig, side: Side) -> Result<()> {
    if cfg.side != side {
        return Err(Error::Precondition(format!("configuration is for {:?}, operation needs {side:?}", cfg.side)));
    }
    Ok(())
}

fn require_lower(spec: &PotentialSpec, packet: &PacketSpec, cfg: &EvolutionConfig) -> Result<()> {
    require_side(cfg, Side::TransmittedRight)?;
    if packet.b > spec.c {
        return Err(Error::Precondition(format!("packet end b = {} exceeds c = {}", packet.b, spec.c)));
    }
    if cfg.x_grid.start < spec.d {
        return Err(Error::Precondition(format!("x grid starts at {} < d = {}", cfg.x_grid.start, spec.d)));
    }
    Ok(())
}

fn require_upper(spec: &PotentialSpec, packet: &PacketSpec, cfg: &EvolutionConfig) -> Result<()> {
    require_side(cfg, Side::TransmittedLeft)?;
    if packet.a < spec.d {
        return Err(Error::Precondition(format!("packet start a = {} is below d = {}", packet.a, spec.d)));
    }
    if cfg.x_grid.last() > spec.c {
        return Err(Error::Precondition(format!("x grid ends at {} > c = {}", cfg.x_grid.last(), spec.c)));
    }
    Ok(())
}

/// Free evolution; positive and negative channels are the `p > 0` and `p < 0` halves.
pub fn evolve_free(params: &PhysicsParams, packet: &PacketSpec, cfg: &EvolutionConfig) -> Result<Evolution> {
    let it = Integrand::new(Kind::Free, &PotentialSpec::free(), params, packet, &[])?;
    run(&it, cfg)
}

/// Real-axis integral of `T^l ψ~ e^{iqx/ħ}` plus the pole residues.
pub fn evolve_transmitted_compact(
    spec: &PotentialSpec,
    params: &PhysicsParams,
    packet: &PacketSpec,
    spectrum: &BoundSpectrum,
    cfg: &EvolutionConfig,
) -> Result<Evolution> {
    require_lower(spec, packet, cfg)?;
    let bound = spectrum.require_for(spec, params)?;
    run(&Integrand::new(Kind::LowerCompact, spec, params, packet, bound)?, cfg)
}

/// Expansion in positive-argument amplitudes with direct bound-state projections.
pub fn evolve_transmitted_long_form(
    spec: &PotentialSpec,
    params: &PhysicsParams,
    packet: &PacketSpec,
    spectrum: &BoundSpectrum,
    cfg: &EvolutionConfig,
) -> Result<Evolution> {
    require_lower(spec, packet, cfg)?;
    let bound = spectrum.require_for(spec, params)?;
    run(&Integrand::new(Kind::LowerLong, spec, params, packet, bound)?, cfg)
}

/// Packet right of the support, observed left of `c`.
pub fn evolve_transmitted_left(
    spec: &PotentialSpec,
    params: &PhysicsParams,
    packet: &PacketSpec,
    spectrum: &BoundSpectrum,
    cfg: &EvolutionConfig,
    form: Form,
) -> Result<Evolution> {
    require_upper(spec, packet, cfg)?;
    let bound = spectrum.require_for(spec, params)?;
    let kind = match form {
        Form::Compact => Kind::UpperCompact,
        Form::Long => Kind::UpperLong,
    };
    run(&Integrand::new(kind, spec, params, packet, bound)?, cfg)
}

/// `⟨p^+|ψ(0)⟩` for the side the packet starts on.
pub fn scattering_matrix_element(
    spec: &PotentialSpec,
    params: &PhysicsParams,
    packet: &PacketSpec,
    p: f64,
) -> Result<C64> {
    spec.validate()?;
    params.validate()?;
    packet.validate()?;
    if !p.is_finite() || p == 0.0 {
        return Err(Error::NotBasisElement { p, reason: "zero or non-finite momentum" });
    }
    let medium = Medium::new(spec, params);
    let p0 = spec.threshold_momentum(params);
    let psi = |k: C64| packet.momentum_amplitude(params, k);
    let q_of = |k: f64| crate::amplitudes::branch_q(C64::new(k, 0.0), p0, crate::amplitudes::BranchSheet::AboveCut);
    let amps = |k: f64| amplitudes_with_q(&medium, spec, params, C64::new(k, 0.0), q_of(k));
    let pc = C64::new(p, 0.0);
    if packet.b <= spec.c {
        if p > 0.0 {
            Ok(psi(pc) + psi(-pc) * amps(p)?.rl.conj())
        } else if p < -p0 {
            let a = amps(-p)?;
            let ratio = p / q_of(p).re;
            Ok(ratio.sqrt() * psi(pc) * a.tr.conj())
        } else {
            Err(Error::NotBasisElement { p, reason: "right-incident states need p < -p0" })
        }
    } else if packet.a >= spec.d {
        let q = q_of(p);
        if p > p0 {
            Ok(amps(p)?.tl.conj() * psi(q))
        } else if p > 0.0 {
            Ok(amps(p)?.tl.conj() * psi(-q))
        } else if p < -p0 {
            let a = amps(-p)?;
            let ratio = p / q.re;
            Ok(ratio.sqrt() * (psi(q) + a.rr.conj() * psi(-q)))
        } else {
            Err(Error::NotBasisElement { p, reason: "no scattering state with -p0 <= p < 0" })
        }
    } else {
        Err(Error::Precondition(format!(
            "packet [{}, {}] overlaps the support [{}, {}]",
            packet.a, packet.b, spec.c, spec.d
        )))
    }
}
