//! Gauss–Legendre rules, composite panels and uniform-grid weights.

use std::f64::consts::PI;

/// An n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite Gauss–Legendre integration over the given breakpoints, each interval split
/// into `panels` equal panels.
pub fn composite<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    breakpoints: &[f64],
    panels: usize,
    mut f: F,
) -> f64 {
    let mut total = 0.0;
    for w in breakpoints.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for k in 0..panels {
            let lo = w[0] + k as f64 * h;
            total += rule.integrate(lo, lo + h, &mut f);
        }
    }
    total
}

/// Adaptive bisection driven by the difference between a 10-point and a 20-point rule.
pub fn adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> f64 {
    let low = GaussLegendre::new(10);
    let high = GaussLegendre::new(20);
    adaptive_inner(&low, &high, a, b, tol, 0, &mut f)
}

fn adaptive_inner<F: FnMut(f64) -> f64>(
    low: &GaussLegendre,
    high: &GaussLegendre,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
    f: &mut F,
) -> f64 {
    let coarse = low.integrate(a, b, &mut *f);
    let mut magnitude = 0.0;
    let mut fine = 0.0;
    for (x, w) in high.mapped(a, b) {
        let v = f(x);
        fine += w * v;
        magnitude += w * v.abs();
    }
    // below this the difference is rounding noise
    let floor = 64.0 * f64::EPSILON * magnitude;
    if (fine - coarse).abs() <= tol.max(floor) || depth >= 30 {
        return fine;
    }
    let mid = 0.5 * (a + b);
    adaptive_inner(low, high, a, mid, 0.5 * tol, depth + 1, f)
        + adaptive_inner(low, high, mid, b, 0.5 * tol, depth + 1, f)
}

/// Composite Simpson weights for `n` uniformly spaced samples; the last three intervals use
/// the 3/8 rule when `n` is even.
pub fn uniform_weights(n: usize, step: f64) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        2 => vec![0.5 * step, 0.5 * step],
        _ => {
            let mut w = vec![0.0; n];
            let simpson_end = if n % 2 == 1 { n - 1 } else { n - 4 };
            for i in (0..simpson_end).step_by(2) {
                w[i] += step / 3.0;
                w[i + 1] += 4.0 * step / 3.0;
                w[i + 2] += step / 3.0;
            }
            if n % 2 == 0 {
                let e = n - 4;
                for (j, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
                    w[e + j] += 3.0 * step / 8.0 * c;
                }
            }
            w
        }
    }
}
