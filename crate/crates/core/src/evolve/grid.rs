//! Momentum nodes for the spectral integrals.
//!
//! Two rules are available. Gauss panels put composite Gauss–Legendre nodes on `[-P, P]`
//! with breakpoints at `0` and `±p0`; next to `±p0` the variable is `p = p0 ± u^2`, which
//! removes the square-root behaviour of `q`. Panels are bisected until the phase swept per
//! panel is below a budget. The uniform rule instead puts midpoint nodes on an equispaced
//! lattice in the spatial wavenumber (`q` or `p`), so that the sum over nodes at equispaced
//! `x` is a discrete Fourier transform. The non-smooth band around the thresholds is then
//! covered by Gauss panels and summed directly; a smooth partition of unity joins the two.

use serde::{Deserialize, Serialize};

use crate::numeric::C64;
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Positive,
    Negative,
    Evanescent,
    Bound,
}

impl Channel {
    pub const CONTINUUM: [Channel; 3] = [Channel::Positive, Channel::Negative, Channel::Evanescent];

    pub(crate) fn of(p: f64, p0: f64) -> Self {
        if p > p0 {
            Channel::Positive
        } else if p < -p0 {
            Channel::Negative
        } else {
            Channel::Evanescent
        }
    }
}

/// Which momentum-like variable multiplies `x` in the exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Spatial {
    /// `e^{iqx/ħ}`: transmitted side of a lower-level packet.
    Q,
    /// `e^{ipx/ħ}`: free motion and the upper-level transmitted side.
    P,
}

/// A quadrature node: `∫ f(p) dp ≈ Σ w f(p)`. `q` is `q(p)` above the cut.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub p: f64,
    pub q: C64,
    pub w: f64,
    /// Index on the uniform lattice, if the node belongs to it.
    pub lattice: Option<usize>,
}

/// Local phase rate `|dφ/dp|` bound used to size panels.
#[derive(Debug, Clone)]
pub(crate) struct PhaseModel {
    pub time: f64,
    pub m: f64,
    pub hbar: f64,
    /// Largest `|x|` at which the integral is evaluated.
    pub reach: f64,
    pub spatial: Spatial,
    /// Packet edges and support width, in length units.
    pub base: f64,
    /// Decay constants of poles on the imaginary axis.
    pub poles: Vec<f64>,
    pub p0: f64,
}

impl PhaseModel {
    fn pole_rate(&self, p: f64) -> f64 {
        self.poles.iter().map(|g| 10.0 / (p * p + g * g).sqrt()).sum()
    }

    fn rate(&self, p: f64) -> f64 {
        let ap = p.abs();
        let spatial = match self.spatial {
            Spatial::P => 1.0,
            Spatial::Q => {
                let q = ((ap - self.p0) * (ap + self.p0)).abs().sqrt();
                if q > 0.0 {
                    ap / q
                } else {
                    1e300
                }
            }
        };
        (ap * self.time / self.m + self.reach * spatial + self.base) / self.hbar + self.pole_rate(p)
    }

    /// Rate in `u` for `p = p0 + sign u^2`.
    fn rate_u(&self, u: f64, sign: f64) -> f64 {
        let p = self.p0 + sign * u * u;
        let ap = p.abs();
        let spatial = match self.spatial {
            Spatial::P => 2.0 * u,
            Spatial::Q => {
                let s = (2.0 * self.p0 + sign * u * u).abs().sqrt();
                if s > 0.0 {
                    2.0 * ap / s
                } else {
                    1e300
                }
            }
        };
        2.0 * u * ((ap * self.time / self.m + self.base) / self.hbar + self.pole_rate(p)) + self.reach * spatial / self.hbar
    }
}

#[derive(Debug, Clone, Copy)]
enum Segment {
    Plain { lo: f64, hi: f64 },
    /// `p = p0 + sign u^2`, `u ∈ [0, umax]`.
    Mapped { sign: f64, umax: f64 },
}

fn subdivide(lo: f64, hi: f64, rate: &dyn Fn(f64) -> f64, budget: f64, depth: u32, out: &mut Vec<(f64, f64)>) {
    let mid = 0.5 * (lo + hi);
    let r = rate(lo).max(rate(mid)).max(rate(hi));
    if (hi - lo) * r <= budget || depth >= 48 {
        out.push((lo, hi));
        return;
    }
    subdivide(lo, mid, rate, budget, depth + 1, out);
    subdivide(mid, hi, rate, budget, depth + 1, out);
}

fn q_of(p: f64, p0: f64) -> C64 {
    let ap = p.abs();
    if ap > p0 {
        C64::new(p.signum() * ((ap - p0) * (ap + p0)).sqrt(), 0.0)
    } else {
        C64::new(0.0, ((p0 - ap) * (p0 + ap)).sqrt())
    }
}

/// Nodes of `segments` on the positive half line, mirrored to `p < 0`.
fn mirrored_nodes(segments: &[Segment], model: &PhaseModel, budget: f64, rule: &GaussLegendre) -> Vec<Node> {
    let p0 = model.p0;
    let mut half = Vec::new();
    for seg in segments {
        match *seg {
            Segment::Plain { lo, hi } => {
                if hi <= lo {
                    continue;
                }
                let mut panels = Vec::new();
                subdivide(lo, hi, &|p| model.rate(p), budget, 0, &mut panels);
                for (a, b) in panels {
                    for (p, w) in rule.mapped(a, b) {
                        half.push(Node { p, q: q_of(p, p0), w, lattice: None });
                    }
                }
            }
            Segment::Mapped { sign, umax } => {
                if umax <= 0.0 {
                    continue;
                }
                let mut panels = Vec::new();
                subdivide(0.0, umax, &|u| model.rate_u(u, sign), budget, 0, &mut panels);
                let mut seg = Vec::new();
                for (a, b) in panels {
                    for (u, wu) in rule.mapped(a, b) {
                        let p = p0 + sign * u * u;
                        let s = (2.0 * p0 + sign * u * u).sqrt();
                        let q = if sign > 0.0 { C64::new(u * s, 0.0) } else { C64::new(0.0, u * s) };
                        seg.push(Node { p, q, w: 2.0 * u * wu, lattice: None });
                    }
                }
                if sign < 0.0 {
                    seg.reverse();
                }
                half.extend(seg);
            }
        }
    }
    let mut nodes: Vec<Node> = half
        .iter()
        .rev()
        .map(|n| {
            let q = if n.p > p0 { -n.q } else { n.q };
            Node { p: -n.p, q, w: n.w, lattice: None }
        })
        .collect();
    nodes.extend(half);
    nodes
}

/// Segments covering `[0, hi]` with square-root maps on both sides of `p0`, where `hi ≥ p0`.
/// `above` is the mapped length right of `p0`.
fn threshold_segments(p0: f64, above: f64, hi: f64) -> Vec<Segment> {
    if p0 == 0.0 {
        return vec![Segment::Plain { lo: 0.0, hi }];
    }
    let above = above.min(hi - p0).max(0.0);
    vec![
        Segment::Plain { lo: 0.0, hi: 0.5 * p0 },
        Segment::Mapped { sign: -1.0, umax: (0.5 * p0).sqrt() },
        Segment::Mapped { sign: 1.0, umax: above.sqrt() },
        Segment::Plain { lo: p0 + above, hi },
    ]
}

/// Gauss panels on `[-cutoff, cutoff]`, refined until at least `min_nodes` nodes exist.
pub(crate) fn gauss_panels(cutoff: f64, model: &PhaseModel, budget: f64, order: usize, min_nodes: usize) -> Vec<Node> {
    let rule = GaussLegendre::new(order);
    let p0 = model.p0;
    let segments = threshold_segments(p0, p0, cutoff);
    let mut budget = budget;
    loop {
        let nodes = mirrored_nodes(&segments, model, budget, &rule);
        if nodes.len() >= min_nodes || budget < 1e-3 {
            return nodes;
        }
        budget *= 0.5;
    }
}

/// Equispaced midpoint lattice in the spatial wavenumber variable.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Lattice {
    /// Variable value (`q` or `p`) at index 0.
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Lattice {
    pub fn value(&self, k: usize) -> f64 {
        self.start + self.step * k as f64
    }
}

/// Padding, in length units, that the periodic lattice sum needs beyond the support.
pub(crate) const ALIAS_PAD: f64 = 26.0;

/// Half-width parameter of the partition between lattice and band.
fn blend_width(hbar: f64) -> f64 {
    // χ' is a Gaussian of width σ, so the lattice part decays like e^{-(σx/2ħ)^2} past its support
    13.0 * hbar / ALIAS_PAD
}

/// Lattice share `χ(v) = erfc((6.5σ + edge - |v|)/σ) / 2` of the integrand.
fn blend(v: f64, edge: f64, sigma: f64) -> f64 {
    0.5 * libm::erfc((6.5 * sigma + edge - v.abs()) / sigma)
}

/// Equispaced lattice nodes plus Gauss nodes for the non-smooth band around the thresholds.
///
/// The integrand is split by a smooth partition of unity: the lattice carries `χ f`, which
/// vanishes near `q = 0` (or `|p| ≤ p0`) to machine precision and is therefore summed with
/// spectral accuracy and without aliased tails; the band carries `(1 - χ) f`.
pub(crate) fn uniform_lattice(
    cutoff: f64,
    step: f64,
    model: &PhaseModel,
    budget: f64,
    order: usize,
) -> (Lattice, Vec<Node>) {
    let p0 = model.p0;
    let rule = GaussLegendre::new(order);
    let sigma = blend_width(model.hbar);
    let (vmax, edge) = match model.spatial {
        Spatial::Q => (((cutoff - p0) * (cutoff + p0)).max(0.0).sqrt(), 0.0),
        Spatial::P => (cutoff, p0),
    };
    let half = (vmax / step).ceil().max(1.0) as usize;
    let lattice = Lattice { start: -(half as f64) * step + 0.5 * step, step, len: 2 * half };
    let chi = |v: f64| if p0 > 0.0 { blend(v, edge, sigma) } else { 1.0 };

    let mut nodes = Vec::new();
    if p0 > 0.0 {
        let band_end = (edge + 13.0 * sigma).min(vmax);
        let p_end = match model.spatial {
            Spatial::Q => (band_end * band_end + p0 * p0).sqrt(),
            Spatial::P => band_end,
        };
        let segments = threshold_segments(p0, p_end - p0, p_end);
        for mut n in mirrored_nodes(&segments, model, budget, &rule) {
            let v = match model.spatial {
                Spatial::Q => n.q.re,
                Spatial::P => n.p,
            };
            n.w *= 1.0 - chi(v);
            nodes.push(n);
        }
    }
    for k in 0..lattice.len {
        let v = lattice.value(k);
        // the outermost cell is cut at vmax so that both rules truncate at the same cutoff
        let c = chi(v) * ((vmax - v.abs()) / step + 0.5).clamp(0.0, 1.0);
        if c < 1e-18 {
            continue;
        }
        let w = step * c;
        let node = match model.spatial {
            Spatial::Q => {
                let p = v.signum() * (v * v + p0 * p0).sqrt();
                Node { p, q: C64::new(v, 0.0), w: w * v.abs() / p.abs(), lattice: Some(k) }
            }
            Spatial::P => Node { p: v, q: q_of(v, p0), w, lattice: Some(k) },
        };
        nodes.push(node);
    }
    (lattice, nodes)
}
