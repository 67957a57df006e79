//! Crank–Nicolson solver for the full Schrödinger equation on a uniform grid.
//!
//! This is a brute-force reference for the spectral results and shares no code with them
//! beyond the potential description. Node `j` carries the cell average of the level over
//! `[x_j - dx/2, x_j + dx/2]`, so a jump at a node enters with the mean of its two sides;
//! a spike becomes a single-cell well of depth `strength/dx`, split linearly between the
//! two neighbouring nodes when it falls between them. With the mean level at a jump the
//! three-point stencil reproduces the matching condition to second order. The walls are
//! Dirichlet; an optional quadratic absorbing layer `-i W0 ((x - edge)/margin)^2` removes
//! outgoing probability, which is tracked so that the norm balance stays exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::EvolutionFrame;
use crate::numeric::{C64, I};
use crate::potential::{PhysicsParams, PotentialSpec};
use crate::wavepacket::PacketSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub dt: f64,
    /// Width of the absorbing layer at each edge; zero keeps plain Dirichlet walls.
    pub absorbing_margin: f64,
    /// Peak absorbing potential `W0` at the walls.
    pub absorbing_strength: f64,
    /// Largest tolerated violation of the per-step norm balance.
    pub drift_limit: f64,
    /// Combine `(dx, dt)` with `(dx/2, dt/4)` to cancel the leading error term.
    pub richardson: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_min: -50.0,
            x_max: 50.0,
            dx: 0.005,
            dt: 1e-4,
            absorbing_margin: 10.0,
            absorbing_strength: 20.0,
            drift_limit: 1e-8,
            richardson: false,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.dx, self.dt, self.absorbing_margin, self.absorbing_strength];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("grid parameters must be finite".into()));
        }
        if !(self.dx > 0.0 && self.dt > 0.0 && self.drift_limit > 0.0) {
            return Err(Error::InvalidParams("dx, dt and drift_limit must be positive".into()));
        }
        if self.absorbing_margin < 0.0 || self.absorbing_strength < 0.0 {
            return Err(Error::InvalidParams("absorbing layer parameters must be non-negative".into()));
        }
        let span = self.x_max - self.x_min;
        if !(span > 2.0 * self.absorbing_margin + 4.0 * self.dx) {
            return Err(Error::InvalidParams("grid domain is too short for its absorbing layers".into()));
        }
        let cells = span / self.dx;
        if (cells - cells.round()).abs() > 1e-6 * cells.max(1.0) {
            return Err(Error::InvalidParams(format!("domain length {span} is not a multiple of dx = {}", self.dx)));
        }
        Ok(())
    }

    fn cells(&self) -> usize {
        ((self.x_max - self.x_min) / self.dx).round() as usize
    }

    fn refined(&self) -> Self {
        Self { dx: 0.5 * self.dx, dt: 0.25 * self.dt, richardson: false, ..*self }
    }

    /// Region free of absorption.
    pub fn interior(&self) -> (f64, f64) {
        (self.x_min + self.absorbing_margin, self.x_max - self.absorbing_margin)
    }
}

/// Wave function on the interior nodes `x_j = x_start + j dx` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFrame {
    pub t: f64,
    pub x_start: f64,
    pub dx: f64,
    pub psi: Vec<C64>,
    /// `dx Σ |ψ_j|^2`.
    pub norm: f64,
    /// Probability removed by the absorbing layers since `t = 0`.
    pub absorbed: f64,
    /// The part of `absorbed` taken by the right-hand layer.
    pub absorbed_right: f64,
}

impl GridFrame {
    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_start + self.dx * j as f64
    }

    /// Grid sum of `|ψ|^2` over nodes in `[lo, hi]`.
    pub fn probability(&self, lo: f64, hi: f64) -> f64 {
        let eps = 1e-9 * self.dx;
        (0..self.len())
            .filter(|&j| self.x(j) >= lo - eps && self.x(j) <= hi + eps)
            .map(|j| self.psi[j].norm_sqr())
            .sum::<f64>()
            * self.dx
    }
}

/// Discrete Hamiltonian on the interior nodes.
struct Hamiltonian {
    x_start: f64,
    dx: f64,
    diag: Vec<f64>,
    off: f64,
    absorb: Vec<f64>,
}

impl Hamiltonian {
    fn new(spec: &PotentialSpec, params: &PhysicsParams, grid: &GridConfig) -> Result<Self> {
        spec.validate()?;
        params.validate()?;
        grid.validate()?;
        let n = grid.cells() - 1;
        let dx = grid.dx;
        let x_start = grid.x_min + dx;
        let kinetic = params.hbar * params.hbar / (params.m * dx * dx);
        let mut diag: Vec<f64> =
            (0..n).map(|j| kinetic + cell_average(spec, x_start + dx * j as f64, dx)).collect();
        for d in &spec.deltas {
            let u = (d.position - x_start) / dx;
            let k = u.floor();
            let frac = u - k;
            let k = k as isize;
            for (idx, share) in [(k, 1.0 - frac), (k + 1, frac)] {
                if share > 0.0 && idx >= 0 && (idx as usize) < n {
                    diag[idx as usize] += share * d.strength / dx;
                }
            }
        }
        let (lo, hi) = grid.interior();
        let absorb = (0..n)
            .map(|j| {
                let x = x_start + dx * j as f64;
                let depth = (lo - x).max(x - hi).max(0.0);
                if depth > 0.0 {
                    grid.absorbing_strength * (depth / grid.absorbing_margin).powi(2)
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self { x_start, dx, diag, off: -0.5 * kinetic, absorb })
    }

    fn len(&self) -> usize {
        self.diag.len()
    }
}

/// Mean of the level over `[x - dx/2, x + dx/2]`.
fn cell_average(spec: &PotentialSpec, x: f64, dx: f64) -> f64 {
    let (lo, hi) = (x - 0.5 * dx, x + 0.5 * dx);
    let mut cuts = vec![lo, hi, spec.c, spec.d];
    for s in &spec.segments {
        cuts.push(s.start);
        cuts.push(s.end);
    }
    cuts.retain(|&v| v >= lo && v <= hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let total: f64 = cuts
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (w[1] - w[0]) * spec.level_limits(mid).0
        })
        .sum();
    total / dx
}

/// Per-node coefficients of the factored step.
#[derive(Debug, Clone, Copy)]
struct Coefficients {
    /// Diagonal of `1 - iτH`.
    explicit: C64,
    /// Elimination multiplier `α / pivot`.
    lower: C64,
    inv_pivot: C64,
    absorb: f64,
}

/// Crank–Nicolson propagator `(1 + iτH) ψ' = (1 - iτH) ψ`, `τ = dt/2ħ`, factored once.
struct Stepper {
    dt: f64,
    hbar: f64,
    dx: f64,
    /// Off-diagonal `α = iτ h_off` of `1 + iτH`; that of `1 - iτH` is `-α`.
    alpha: C64,
    nodes: Vec<Coefficients>,
}

impl Stepper {
    fn new(h: &Hamiltonian, dt: f64, hbar: f64) -> Self {
        let tau = dt / (2.0 * hbar);
        let alpha = I * tau * h.off;
        let mut prev = C64::new(0.0, 0.0);
        let nodes = (0..h.len())
            .map(|j| {
                let a = C64::new(1.0 + tau * h.absorb[j], tau * h.diag[j]);
                let inv_pivot = 1.0 / (a - alpha * prev);
                prev = alpha * inv_pivot;
                Coefficients {
                    explicit: C64::new(1.0 - tau * h.absorb[j], -tau * h.diag[j]),
                    lower: prev,
                    inv_pivot,
                    absorb: h.absorb[j],
                }
            })
            .collect();
        Self { dt, hbar, dx: h.dx, alpha, nodes }
    }

    /// One step in place; returns the new norm and the probability absorbed during the step
    /// on the left and right halves of the domain.
    fn step(&self, psi: &mut [C64], scratch: &mut [C64]) -> (f64, [f64; 2]) {
        let n = psi.len();
        let alpha = self.alpha;
        let zero = C64::new(0.0, 0.0);
        // forward sweep: d_j = rhs_j / pivot_j - lower_j d_{j-1}
        let mut carry = zero;
        let mut left = zero;
        for j in 0..n {
            let here = psi[j];
            let right = if j + 1 < n { psi[j + 1] } else { zero };
            let c = &self.nodes[j];
            let rhs = c.explicit * here - alpha * (left + right);
            carry = rhs * c.inv_pivot - c.lower * carry;
            scratch[j] = carry;
            left = here;
        }
        let (mut absorbed, mut norm) = ([0.0; 2], 0.0);
        let mut next = zero;
        for j in (0..n).rev() {
            let c = &self.nodes[j];
            let v = scratch[j] - c.lower * next;
            absorbed[usize::from(2 * j >= n)] += c.absorb * (0.5 * (v + psi[j])).norm_sqr();
            norm += v.norm_sqr();
            psi[j] = v;
            next = v;
        }
        let scale = 2.0 * self.dt / self.hbar * self.dx;
        (norm * self.dx, [scale * absorbed[0], scale * absorbed[1]])
    }
}

fn norm(psi: &[C64], dx: f64) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParams("times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("times must be non-decreasing".into()));
    }
    Ok(())
}

fn propagate(
    spec: &PotentialSpec,
    params: &PhysicsParams,
    grid: &GridConfig,
    times: &[f64],
    initial: &dyn Fn(f64) -> C64,
) -> Result<Vec<GridFrame>> {
    check_times(times)?;
    let h = Hamiltonian::new(spec, params, grid)?;
    let n = h.len();
    let mut psi: Vec<C64> = (0..n).map(|j| initial(h.x_start + h.dx * j as f64)).collect();
    let mut scratch = vec![C64::new(0.0, 0.0); n];
    let mut current = norm(&psi, h.dx);
    let (mut t, mut absorbed, mut count) = (0.0, [0.0; 2], 0usize);
    let mut stepper: Option<Stepper> = None;
    let mut frames = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        let steps = (span / grid.dt - 1e-9).ceil().max(0.0) as usize;
        if steps > 0 {
            let dt = span / steps as f64;
            if stepper.as_ref().is_none_or(|s| s.dt != dt) {
                stepper = Some(Stepper::new(&h, dt, params.hbar));
            }
            let s = stepper.as_ref().expect("stepper was just built");
            for _ in 0..steps {
                let (after, lost) = s.step(&mut psi, &mut scratch);
                count += 1;
                let drift = (after - current + lost[0] + lost[1]).abs();
                if drift > grid.drift_limit {
                    return Err(Error::NormDrift { step: count, drift });
                }
                absorbed[0] += lost[0];
                absorbed[1] += lost[1];
                current = after;
            }
            t = target;
        }
        frames.push(GridFrame {
            t: target,
            x_start: h.x_start,
            dx: h.dx,
            psi: psi.clone(),
            norm: current,
            absorbed: absorbed[0] + absorbed[1],
            absorbed_right: absorbed[1],
        });
    }
    Ok(frames)
}

/// Evolve `initial` on the grid and return it at each requested time.
pub fn evolve_grid_from(
    spec: &PotentialSpec,
    params: &PhysicsParams,
    grid: &GridConfig,
    times: &[f64],
    initial: &dyn Fn(f64) -> C64,
) -> Result<Vec<GridFrame>> {
    if !grid.richardson {
        return propagate(spec, params, grid, times, initial);
    }
    let coarse = propagate(spec, params, grid, times, initial)?;
    let fine = propagate(spec, params, &grid.refined(), times, initial)?;
    Ok(coarse
        .into_iter()
        .zip(fine)
        .map(|(c, f)| {
            // coarse node j sits on fine node 2j + 1
            let psi: Vec<C64> =
                c.psi.iter().enumerate().map(|(j, &z)| (4.0 * f.psi[2 * j + 1] - z) / 3.0).collect();
            let norm = norm(&psi, c.dx);
            let extrapolate = |fine: f64, coarse: f64| (4.0 * fine - coarse) / 3.0;
            GridFrame {
                psi,
                norm,
                absorbed: extrapolate(f.absorbed, c.absorbed),
                absorbed_right: extrapolate(f.absorbed_right, c.absorbed_right),
                ..c
            }
        })
        .collect())
}

/// Evolve a packet whose support lies inside the absorption-free region.
pub fn evolve_grid(
    spec: &PotentialSpec,
    params: &PhysicsParams,
    packet: &PacketSpec,
    grid: &GridConfig,
    times: &[f64],
) -> Result<Vec<GridFrame>> {
    packet.validate()?;
    grid.validate()?;
    let (lo, hi) = grid.interior();
    if packet.a < lo || packet.b > hi {
        return Err(Error::Precondition(format!(
            "packet [{}, {}] is not inside the absorption-free region [{lo}, {hi}]",
            packet.a, packet.b
        )));
    }
    evolve_grid_from(spec, params, grid, times, &|x| packet.position_amplitude(params, x))
}

/// Differences between a grid frame and a spectral frame on their shared nodes in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub t: f64,
    pub points: usize,
    /// `(h Σ |ψ_grid - ψ_spectral|^2)^{1/2}` with `h` the spectral spacing.
    pub l2: f64,
    pub linf: f64,
    /// `(h Σ |ψ_spectral|^2)^{1/2}`.
    pub reference_l2: f64,
    pub relative_l2: f64,
}

pub fn compare(grid: &GridFrame, spectral: &EvolutionFrame, lo: f64, hi: f64) -> Result<Comparison> {
    if (grid.t - spectral.t).abs() > 1e-12 * (1.0 + grid.t.abs()) {
        return Err(Error::InvalidParams(format!("frames at different times {} and {}", grid.t, spectral.t)));
    }
    let (mut diff, mut reference, mut linf, mut points) = (0.0, 0.0, 0.0f64, 0usize);
    let total = spectral.total();
    for (k, z) in total.iter().enumerate() {
        let x = spectral.x(k);
        if x < lo || x > hi {
            continue;
        }
        let u = (x - grid.x_start) / grid.dx;
        let j = u.round();
        if (u - j).abs() > 1e-6 {
            return Err(Error::InvalidParams(format!("spectral point x = {x} is not a grid node")));
        }
        if j < 0.0 || j as usize >= grid.len() {
            return Err(Error::InvalidParams(format!("spectral point x = {x} is outside the grid")));
        }
        let e = (grid.psi[j as usize] - z).norm();
        diff += e * e;
        reference += z.norm_sqr();
        linf = linf.max(e);
        points += 1;
    }
    if points == 0 {
        return Err(Error::InvalidParams(format!("no shared nodes in [{lo}, {hi}]")));
    }
    let (l2, reference_l2) = ((diff * spectral.x_step).sqrt(), (reference * spectral.x_step).sqrt());
    let relative_l2 = if reference_l2 > 0.0 { l2 / reference_l2 } else { f64::INFINITY };
    Ok(Comparison { t: grid.t, points, l2, linf, reference_l2, relative_l2 })
}

/// Lowest eigenpair of the grid Hamiltonian without absorption.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGroundState {
    pub energy: f64,
    pub x_start: f64,
    pub dx: f64,
    /// Normalized to `dx Σ ψ^2 = 1`, positive at its maximum.
    pub psi: Vec<f64>,
}

pub fn grid_ground_state(spec: &PotentialSpec, params: &PhysicsParams, grid: &GridConfig) -> Result<GridGroundState> {
    let closed = GridConfig { absorbing_margin: 0.0, ..*grid };
    let h = Hamiltonian::new(spec, params, &closed)?;
    let e = h.off;
    let lo0 = h.diag.iter().fold(f64::INFINITY, |a, &d| a.min(d)) - 2.0 * e.abs();
    let hi0 = h.diag.iter().fold(f64::NEG_INFINITY, |a, &d| a.max(d)) + 2.0 * e.abs();
    // Sturm count: eigenvalues below `lambda`
    let below = |lambda: f64| {
        let mut count = 0;
        let mut q = 1.0f64;
        for (j, &d) in h.diag.iter().enumerate() {
            q = d - lambda - if j > 0 { e * e / q } else { 0.0 };
            if q == 0.0 {
                q = -1e-300;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let energy = 0.5 * (lo + hi);
    // inverse iteration next to the eigenvalue
    let shift = energy - 1e-10 * (1.0 + energy.abs());
    let n = h.len();
    let mut v = vec![1.0f64; n];
    for _ in 0..3 {
        v = solve_real_tridiagonal(&h.diag, e, shift, &v);
        let s = (v.iter().map(|a| a * a).sum::<f64>() * h.dx).sqrt();
        v.iter_mut().for_each(|a| *a /= s);
    }
    let peak = v.iter().fold(0.0f64, |a, &b| if b.abs() > a.abs() { b } else { a });
    if peak < 0.0 {
        v.iter_mut().for_each(|a| *a = -*a);
    }
    Ok(GridGroundState { energy, x_start: h.x_start, dx: h.dx, psi: v })
}

fn solve_real_tridiagonal(diag: &[f64], off: f64, shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut prev_c = 0.0;
    let mut prev_d = 0.0;
    for j in 0..n {
        let mut pivot = diag[j] - shift - off * prev_c;
        if pivot == 0.0 {
            pivot = 1e-300;
        }
        c[j] = off / pivot;
        d[j] = (rhs[j] - off * prev_d) / pivot;
        prev_c = c[j];
        prev_d = d[j];
    }
    let mut x = vec![0.0; n];
    let mut next = 0.0;
    for j in (0..n).rev() {
        x[j] = d[j] - c[j] * next;
        next = x[j];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Segment;

    fn unit() -> PhysicsParams {
        PhysicsParams::default()
    }

    fn small(dx: f64, dt: f64) -> GridConfig {
        GridConfig { x_min: -30.0, x_max: 30.0, dx, dt, absorbing_margin: 0.0, ..Default::default() }
    }

    #[test]
    fn cell_averages_split_jumps() {
        let spec = PotentialSpec::step(1.0);
        assert_eq!(cell_average(&spec, 0.0, 0.1), 0.5);
        assert!((cell_average(&spec, 0.02, 0.1) - 0.7).abs() < 1e-14);
        assert_eq!(cell_average(&spec, -0.3, 0.1), 0.0);
        let well = PotentialSpec {
            c: -0.5,
            d: 0.5,
            v0: 0.0,
            segments: vec![Segment { start: -0.5, end: 0.5, height: -2.0 }],
            deltas: vec![],
        };
        assert!((cell_average(&well, 0.49, 0.04) + 1.5).abs() < 1e-13);
    }

    #[test]
    fn spikes_keep_their_weight() {
        let grid = small(0.1, 1e-3);
        let h = Hamiltonian::new(&PotentialSpec::delta_step(-0.4, 0.0), &unit(), &grid).unwrap();
        let kinetic = 1.0 / (grid.dx * grid.dx);
        let extra: f64 = h.diag.iter().map(|d| d - kinetic).sum::<f64>() * grid.dx;
        assert!((extra + 0.4).abs() < 1e-12);
        let off_node = PotentialSpec { d: 0.1, segments: vec![Segment { start: 0.0, end: 0.1, height: 0.0 }], deltas: vec![crate::potential::Delta { position: 0.03, strength: -0.4 }], ..PotentialSpec::free() };
        let h = Hamiltonian::new(&off_node, &unit(), &grid).unwrap();
        let extra: Vec<(f64, f64)> = h
            .diag
            .iter()
            .enumerate()
            .filter(|(_, d)| (**d - kinetic).abs() > 1e-12)
            .map(|(j, d)| (h.x_start + grid.dx * j as f64, (d - kinetic) * grid.dx))
            .collect();
        assert_eq!(extra.len(), 2);
        let weight: f64 = extra.iter().map(|e| e.1).sum();
        let centre: f64 = extra.iter().map(|e| e.0 * e.1).sum::<f64>() / weight;
        assert!((weight + 0.4).abs() < 1e-12 && (centre - 0.03).abs() < 1e-12);
    }

    #[test]
    fn closed_box_conserves_the_norm() {
        let packet = PacketSpec::box_sine(-2.01, -0.01, 1.0);
        let grid = GridConfig { absorbing_margin: 0.0, ..small(0.01, 1e-3) };
        let frames = evolve_grid(&PotentialSpec::delta_step(-0.3, 0.5), &unit(), &packet, &grid, &[0.0, 2.0, 5.0]).unwrap();
        let n0 = frames[0].norm;
        assert!((n0 - 1.0).abs() < 1e-4);
        for f in &frames {
            assert!((f.norm - n0).abs() < 1e-10, "{}", f.norm - n0);
            assert_eq!(f.absorbed, 0.0);
        }
    }

    #[test]
    fn absorption_balances_the_norm() {
        let packet = PacketSpec::box_sine(-1.0, 1.0, 3.0);
        let grid = GridConfig { x_min: -15.0, x_max: 15.0, dx: 0.01, dt: 1e-3, absorbing_margin: 5.0, ..Default::default() };
        let frames = evolve_grid(&PotentialSpec::free(), &unit(), &packet, &grid, &[0.0, 8.0]).unwrap();
        let f = &frames[1];
        assert!(f.absorbed > 0.5, "{}", f.absorbed);
        assert!((f.norm + f.absorbed - frames[0].norm).abs() < 1e-10);
    }

    #[test]
    fn bad_grids_are_rejected() {
        let packet = PacketSpec::box_sine(-2.0, 0.0, 0.0);
        let bad = GridConfig { dx: 0.3, x_min: -10.0, x_max: 10.05, ..small(0.3, 1e-3) };
        assert!(evolve_grid(&PotentialSpec::free(), &unit(), &packet, &bad, &[1.0]).is_err());
        let narrow = GridConfig { absorbing_margin: 29.9, ..small(0.1, 1e-3) };
        assert!(matches!(
            evolve_grid(&PotentialSpec::free(), &unit(), &packet, &narrow, &[1.0]),
            Err(Error::InvalidParams(_))
        ));
        let margin = GridConfig { absorbing_margin: 28.5, ..small(0.1, 1e-3) };
        assert!(matches!(
            evolve_grid(&PotentialSpec::free(), &unit(), &packet, &margin, &[1.0]),
            Err(Error::Precondition(_))
        ));
        assert!(evolve_grid(&PotentialSpec::free(), &unit(), &packet, &small(0.1, 1e-3), &[2.0, 1.0]).is_err());
    }

    #[test]
    fn tight_drift_limit_aborts() {
        let packet = PacketSpec::box_sine(-2.0, 0.0, 0.0);
        let grid = GridConfig { drift_limit: 1e-30, ..small(0.05, 1e-2) };
        assert!(matches!(
            evolve_grid(&PotentialSpec::free(), &unit(), &packet, &grid, &[1.0]),
            Err(Error::NormDrift { .. })
        ));
    }

    #[test]
    fn ground_state_of_a_delta_well() {
        // exact: E = -m s^2 / 2ħ^2, ψ = sqrt(γ) e^{-γ|x|}
        let spec = PotentialSpec::delta_step(-1.0, 0.0);
        let g = grid_ground_state(&spec, &unit(), &small(0.01, 1e-3)).unwrap();
        assert!((g.energy + 0.5).abs() < 1e-3, "{}", g.energy);
        let mid = g.psi.len() / 2;
        assert!((g.x_start + g.dx * mid as f64).abs() < 1e-12);
        assert!((g.psi[mid] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn grid_energy_converges_at_second_order() {
        let spec = PotentialSpec::delta_step(-0.5, 0.0);
        let exact = -0.125;
        let errs: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&dx| {
                let grid = GridConfig { x_min: -40.0, x_max: 40.0, ..small(dx, 1e-3) };
                grid_ground_state(&spec, &unit(), &grid).unwrap().energy - exact
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.2, "{errs:?}");
        }
    }

    fn free_run(dx: f64, richardson: bool) -> GridFrame {
        // dt ∝ dx^2 keeps the time and space errors in proportion
        let grid = GridConfig { x_min: -10.0, x_max: 10.0, richardson, ..small(dx, 1e-4 * (dx / 0.01).powi(2)) };
        let gaussian = |x: f64| (-x * x + I * 2.0 * x).exp();
        evolve_grid_from(&PotentialSpec::free(), &unit(), &grid, &[1.0], &gaussian).unwrap().pop().unwrap()
    }

    /// L2 distance on the nodes of the coarser frame `a`.
    fn distance(a: &GridFrame, b: &GridFrame) -> f64 {
        let k = (a.dx / b.dx).round() as usize;
        let offset = ((a.x_start - b.x_start) / b.dx).round() as usize;
        let s: f64 = a.psi.iter().enumerate().map(|(j, z)| (z - b.psi[offset + k * j]).norm_sqr()).sum();
        (s * a.dx).sqrt()
    }

    #[test]
    fn second_order_under_halving() {
        let runs: Vec<GridFrame> = [0.02, 0.01, 0.005].iter().map(|&dx| free_run(dx, false)).collect();
        let coarse = distance(&runs[0], &runs[1]);
        let fine = distance(&runs[1], &runs[2]);
        assert!((coarse / fine - 4.0).abs() < 0.6, "{coarse:e} {fine:e}");
        let extrapolated = distance(&free_run(0.02, true), &free_run(0.01, true));
        assert!(extrapolated < coarse / 20.0, "{extrapolated:e} {coarse:e}");
    }
}
