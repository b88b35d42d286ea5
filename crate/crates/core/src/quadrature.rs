//! Composite Simpson quadrature, uniform grids and finite-difference stencils.

use crate::error::{invalid, Result};

/// Default node count for continuous quadrature.
pub const DEFAULT_NODES: usize = 2049;

/// A uniform grid of `n` nodes over `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return invalid(format!(
                "grid bounds must satisfy lo < hi, got [{lo}, {hi}]"
            ));
        }
        if nodes < 5 {
            return invalid(format!("grid needs at least 5 nodes, got {nodes}"));
        }
        Ok(Self { lo, hi, nodes })
    }

    /// Same as [`Grid::new`] but rounds `nodes` up to an odd count, as Simpson needs.
    pub fn simpson(lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        Self::new(lo, hi, nodes | 1)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.nodes - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.nodes {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.point(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        let slack = 1e-12 * (1.0 + self.lo.abs().max(self.hi.abs()));
        x >= self.lo - slack && x <= self.hi + slack
    }
}

/// Composite Simpson rule on equally spaced samples (odd count).
pub fn simpson_samples(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    debug_assert!(
        n >= 3 && n % 2 == 1,
        "simpson needs an odd number of samples"
    );
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (values[0] + values[n - 1] + 4.0 * odd + 2.0 * even)
}

/// Composite Simpson rule for `f` over `[a, b]` with `nodes` (rounded up to odd).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, nodes: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = (nodes.max(3)) | 1;
    let h = (b - a) / (n - 1) as f64;
    let values: Vec<f64> = (0..n)
        .map(|i| f(if i + 1 == n { b } else { a + i as f64 * h }))
        .collect();
    simpson_samples(&values, h)
}

/// First derivative of equally spaced samples.
///
/// Fourth-order central differences in the interior, second-order central at
/// the second and second-to-last nodes, second-order one-sided at the ends.
pub fn derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 5, "derivative stencil needs at least 5 samples");
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    d[1] = (values[2] - values[0]) / (2.0 * h);
    d[n - 2] = (values[n - 1] - values[n - 3]) / (2.0 * h);
    for i in 2..n - 2 {
        d[i] = (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2])
            / (12.0 * h);
    }
    d
}

/// Five-point central derivative of `f` at `x` with step `h`.
pub fn central_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Cubic Hermite interpolation from node values and slopes on a uniform grid.
pub fn hermite(grid: &Grid, values: &[f64], slopes: &[f64], x: f64) -> (f64, f64) {
    let h = grid.step();
    let s = ((x - grid.lo) / h).clamp(0.0, (grid.nodes - 1) as f64);
    let i = (s.floor() as usize).min(grid.nodes - 2);
    let t = s - i as f64;
    let (y0, y1) = (values[i], values[i + 1]);
    let (m0, m1) = (slopes[i] * h, slopes[i + 1] * h);
    let t2 = t * t;
    let t3 = t2 * t;
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * m1;
    let dv = ((6.0 * t2 - 6.0 * t) * y0
        + (3.0 * t2 - 4.0 * t + 1.0) * m0
        + (-6.0 * t2 + 6.0 * t) * y1
        + (3.0 * t2 - 2.0 * t) * m1)
        / h;
    (v, dv)
}

/// Piecewise-linear interpolation on sorted abscissae, clamped at the ends.
pub fn lerp_table(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let j = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let t = (x - x0) / (x1 - x0);
    ys[j - 1] + t * (ys[j] - ys[j - 1])
}
