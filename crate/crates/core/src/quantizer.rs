//! Quantizers and the response curve they induce through the noise law.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::exec::{map_range, Execution};
use crate::prob::NoiseModel;
use crate::quadrature::{derivative, hermite, lerp_table, simpson, Grid, DEFAULT_NODES};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub enum BinaryKind {
    /// Emits 1 iff `y ≥ at`.
    Threshold { at: f64 },
    /// `γ(y) = ½[1 + sin π((y − lo)/(hi − lo) − ½)]` on `[lo, hi]`, clamped outside.
    Sine { lo: f64, hi: f64 },
    /// Piecewise-linear response through `(ys, responses)`, clamped outside.
    Tabulated { ys: Vec<f64>, responses: Vec<f64> },
}

/// A stochastic binary quantizer, described by `γ(y) = P(U = 1 | Y = y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryQuantizer {
    kind: BinaryKind,
}

impl BinaryQuantizer {
    pub fn threshold(at: f64) -> Result<Self> {
        if !at.is_finite() {
            return invalid("threshold must be finite");
        }
        Ok(Self {
            kind: BinaryKind::Threshold { at },
        })
    }

    pub fn sine(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return invalid(format!("sine quantizer needs lo < hi, got [{lo}, {hi}]"));
        }
        Ok(Self {
            kind: BinaryKind::Sine { lo, hi },
        })
    }

    pub fn tabulated(ys: Vec<f64>, responses: Vec<f64>) -> Result<Self> {
        if ys.len() < 2 || ys.len() != responses.len() {
            return invalid("tabulated quantizer needs at least two (y, response) rows");
        }
        if ys.windows(2).any(|w| w[1] <= w[0]) || ys.iter().any(|y| !y.is_finite()) {
            return invalid("tabulated quantizer abscissae must be strictly increasing");
        }
        if let Some(r) = responses.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return invalid(format!("quantizer response {r} lies outside [0, 1]"));
        }
        Ok(Self {
            kind: BinaryKind::Tabulated { ys, responses },
        })
    }

    pub fn kind(&self) -> &BinaryKind {
        &self.kind
    }

    pub fn response(&self, y: f64) -> f64 {
        match &self.kind {
            BinaryKind::Threshold { at } => {
                if y >= *at {
                    1.0
                } else {
                    0.0
                }
            }
            BinaryKind::Sine { lo, hi } => {
                let t = ((y - lo) / (hi - lo)).clamp(0.0, 1.0);
                0.5 * (1.0 + (PI * (t - 0.5)).sin())
            }
            BinaryKind::Tabulated { ys, responses } => lerp_table(ys, responses, y),
        }
    }

    /// Analytic `γ'(y)` where the response is smooth.
    pub fn response_derivative(&self, y: f64) -> Option<f64> {
        match &self.kind {
            BinaryKind::Sine { lo, hi } => {
                let w = hi - lo;
                let t = (y - lo) / w;
                if (0.0..=1.0).contains(&t) {
                    Some(0.5 * PI / w * (PI * (t - 0.5)).cos())
                } else {
                    Some(0.0)
                }
            }
            _ => None,
        }
    }

    /// Points inside `(a, b)` where the response is not smooth.
    fn kinks_in(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out: Vec<f64> = match &self.kind {
            BinaryKind::Threshold { at } => vec![*at],
            BinaryKind::Sine { lo, hi } => vec![*lo, *hi],
            BinaryKind::Tabulated { ys, .. } => {
                let i = ys.partition_point(|&x| x <= a);
                let j = ys.partition_point(|&x| x < b);
                ys[i..j.max(i)].to_vec()
            }
        };
        out.retain(|&x| x > a && x < b);
        out
    }
}

/// Draws the transmitted bit `U ~ Bernoulli(γ(y))`. Threshold quantizers are
/// deterministic and leave `rng` untouched.
pub fn apply_binary<R: Rng + ?Sized>(q: &BinaryQuantizer, y: f64, rng: &mut R) -> u8 {
    match q.kind() {
        BinaryKind::Threshold { at } => u8::from(y >= *at),
        _ => {
            let p = q.response(y);
            u8::from(rng.gen::<f64>() < p)
        }
    }
}

/// Deterministic D-level partition of the real line.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiLevelQuantizer {
    breakpoints: Vec<f64>,
}

impl MultiLevelQuantizer {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() {
            return invalid("a multi-level quantizer needs at least one breakpoint");
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0])
            || breakpoints.iter().any(|b| !b.is_finite())
        {
            return invalid("breakpoints must be finite and strictly increasing");
        }
        Ok(Self { breakpoints })
    }

    pub fn levels(&self) -> usize {
        self.breakpoints.len() + 1
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
}

/// Symbol in `1..=D`; a sample sitting on a breakpoint goes to the upper cell.
pub fn apply_multilevel(q: &MultiLevelQuantizer, y: f64) -> usize {
    1 + q.breakpoints.partition_point(|&b| b <= y)
}

/// Curves with a known closed form, used for boundary limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurveKind {
    /// The sine response on `[lo, hi]`, whose information is `π²/(hi − lo)²` everywhere.
    Sine {
        lo: f64,
        hi: f64,
    },
    Generic,
}

/// `g(θ) = P(U = 1 | θ)` tabulated on a uniform θ-grid, with `g'(θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseCurve {
    grid: Grid,
    values: Vec<f64>,
    slopes: Vec<f64>,
    kind: CurveKind,
}

const VALUE_SLACK: f64 = 1e-12;

impl ResponseCurve {
    /// Derivatives from the grid stencil (fourth-order interior).
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let slopes = derivative(&values, grid.step());
        Self::from_parts(grid, values, slopes, CurveKind::Generic)
    }

    pub fn from_parts(
        grid: Grid,
        values: Vec<f64>,
        slopes: Vec<f64>,
        kind: CurveKind,
    ) -> Result<Self> {
        if values.len() != grid.nodes || slopes.len() != grid.nodes {
            return invalid("curve arrays must match the grid size");
        }
        if let Some(v) = values
            .iter()
            .find(|v| !(**v >= -VALUE_SLACK && **v <= 1.0 + VALUE_SLACK))
        {
            return invalid(format!("response value {v} lies outside [0, 1]"));
        }
        if slopes.iter().any(|s| !s.is_finite()) {
            return invalid("response derivative is not finite");
        }
        let values = values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(Self {
            grid,
            values,
            slopes,
            kind,
        })
    }

    /// Tabulates a closed-form curve and its derivative.
    pub fn from_fn<G, D>(grid: Grid, g: G, dg: D, kind: CurveKind) -> Result<Self>
    where
        G: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        let pts = grid.points();
        let values = pts.iter().map(|&t| g(t)).collect();
        let slopes = pts.iter().map(|&t| dg(t)).collect();
        Self::from_parts(grid, values, slopes, kind)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    /// `(g(θ), g'(θ))` by cubic Hermite interpolation.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let (v, d) = hermite(&self.grid, &self.values, &self.slopes, theta);
        (v.clamp(0.0, 1.0), d)
    }

    /// Largest gap between the cached derivative and the grid stencil, over interior nodes.
    pub fn derivative_mismatch(&self) -> f64 {
        let fd = derivative(&self.values, self.grid.step());
        (2..self.grid.nodes - 2)
            .map(|i| (fd[i] - self.slopes[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Relative change tolerated between a quadrature and its refinement.
pub const CONVOLUTION_TOLERANCE: f64 = 1e-6;

/// `g(θ) = ∫ γ(y) p_W(y − θ) dy` on `grid`.
///
/// Delta noise returns `γ` itself. Threshold quantizers use the closed form
/// `g(θ) = P(W ≥ T − θ)` with `g'(θ) = p_W(T − θ)`. Everything else is
/// integrated piecewise between quantizer kinks and checked against a run
/// with twice the nodes.
pub fn response_curve(
    q: &BinaryQuantizer,
    noise: &NoiseModel,
    grid: Grid,
) -> Result<ResponseCurve> {
    response_curve_with(q, noise, grid, Execution::default())
}

pub fn response_curve_with(
    q: &BinaryQuantizer,
    noise: &NoiseModel,
    grid: Grid,
    exec: Execution,
) -> Result<ResponseCurve> {
    if noise.is_delta() {
        let pts = grid.points();
        let values: Vec<f64> = pts.iter().map(|&t| q.response(t)).collect();
        return match q.kind() {
            BinaryKind::Sine { lo, hi } => {
                let slopes = pts
                    .iter()
                    .map(|&t| q.response_derivative(t).unwrap_or(0.0))
                    .collect();
                ResponseCurve::from_parts(
                    grid,
                    values,
                    slopes,
                    CurveKind::Sine { lo: *lo, hi: *hi },
                )
            }
            _ => ResponseCurve::from_values(grid, values),
        };
    }
    if let BinaryKind::Threshold { at } = q.kind() {
        let at = *at;
        return ResponseCurve::from_fn(
            grid,
            |t| noise.survival(at - t),
            |t| noise.density(at - t),
            CurveKind::Generic,
        );
    }
    let pts = grid.points();
    let results = map_range(exec, pts.len(), |i| {
        let t = pts[i];
        let coarse = convolve_at(q, noise, t, DEFAULT_NODES);
        let fine = convolve_at(q, noise, t, 2 * DEFAULT_NODES - 1);
        if (coarse - fine).abs() > CONVOLUTION_TOLERANCE * fine.abs().max(1.0) {
            Err(Error::QuadratureDivergence(format!(
                "g({t}) moved from {coarse} to {fine} on refinement"
            )))
        } else {
            Ok(fine)
        }
    });
    let values = results.into_iter().collect::<Result<Vec<_>>>()?;
    ResponseCurve::from_values(grid, values)
}

fn convolve_at(q: &BinaryQuantizer, noise: &NoiseModel, theta: f64, budget: usize) -> f64 {
    let s = noise.effective_support();
    let (a, b) = (theta + s.lo, theta + s.hi);
    let mut cuts = vec![a];
    cuts.extend(q.kinks_in(a, b));
    cuts.push(b);
    let total = b - a;
    cuts.windows(2)
        .map(|w| {
            let len = w[1] - w[0];
            let nodes = ((budget as f64 * len / total).ceil() as usize).max(3);
            simpson(
                |y| q.response(y) * noise.density(y - theta),
                w[0],
                w[1],
                nodes,
            )
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    fn sine_curve(t: f64) -> f64 {
        0.5 * (1.0 + (PI * t / 2.0).sin())
    }

    #[test]
    fn threshold_tie_goes_high() {
        let q = BinaryQuantizer::threshold(0.0).unwrap();
        let mut rng = SeedTree::new(0).stream();
        assert_eq!(apply_binary(&q, 0.7, &mut rng), 1);
        assert_eq!(apply_binary(&q, 0.0, &mut rng), 1);
        assert_eq!(apply_binary(&q, -1e-9, &mut rng), 0);
    }

    #[test]
    fn sine_quantizer_endpoints() {
        let q = BinaryQuantizer::sine(-1.0, 1.0).unwrap();
        assert_eq!(q.response(-1.0), 0.0);
        assert_eq!(q.response(1.0), 1.0);
        let mut rng = SeedTree::new(1).stream();
        assert!((0..1000).all(|_| apply_binary(&q, -1.0, &mut rng) == 0));
    }

    #[test]
    fn sine_quantizer_midpoint_is_fair() {
        let q = BinaryQuantizer::sine(-1.0, 1.0).unwrap();
        let mut rng = SeedTree::new(2).stream();
        let n = 100_000;
        let ones: u32 = (0..n).map(|_| apply_binary(&q, 0.0, &mut rng) as u32).sum();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn tabulated_quantizer_rejects_out_of_range() {
        assert!(BinaryQuantizer::tabulated(vec![0.0, 1.0], vec![0.0, 1.2]).is_err());
    }

    #[test]
    fn multilevel_cells() {
        let q = MultiLevelQuantizer::new(vec![0.0]).unwrap();
        assert_eq!(apply_multilevel(&q, -0.5), 1);
        let q = MultiLevelQuantizer::new(vec![-0.5, 0.0, 0.5]).unwrap();
        assert_eq!(q.levels(), 4);
        assert_eq!(apply_multilevel(&q, 0.25), 3);
        assert_eq!(apply_multilevel(&q, 0.5), 4);
        assert_eq!(apply_multilevel(&q, -0.5), 2);
        assert!(MultiLevelQuantizer::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn sine_with_delta_noise_is_the_sine_curve() {
        let q = BinaryQuantizer::sine(-1.0, 1.0).unwrap();
        let grid = Grid::new(-1.0, 1.0, DEFAULT_NODES).unwrap();
        let c = response_curve(&q, &NoiseModel::delta(), grid).unwrap();
        for (t, v) in grid.points().iter().zip(c.values()) {
            assert!((v - sine_curve(*t)).abs() < 1e-15);
        }
        assert_eq!(c.kind(), CurveKind::Sine { lo: -1.0, hi: 1.0 });
    }

    #[test]
    fn threshold_with_raised_cosine_is_the_sine_curve() {
        let q = BinaryQuantizer::threshold(0.0).unwrap();
        let grid = Grid::new(-1.0, 1.0, DEFAULT_NODES).unwrap();
        let c = response_curve(&q, &NoiseModel::raised_cosine(0.0).unwrap(), grid).unwrap();
        let err = grid
            .points()
            .iter()
            .zip(c.values())
            .map(|(t, v)| (v - sine_curve(*t)).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "{err}");
        assert!((c.eval(0.0).0 - 0.5).abs() < 1e-15);
        assert!(c.derivative_mismatch() <= 1e-8 * (1.0 + PI / 4.0));
    }

    #[test]
    fn quadrature_route_matches_closed_form_for_thresholds() {
        // A steep tabulated ramp behaves like the threshold; compare both routes.
        let noise = NoiseModel::raised_cosine(0.0).unwrap();
        let q = BinaryQuantizer::tabulated(vec![-1e-9, 1e-9], vec![0.0, 1.0]).unwrap();
        let grid = Grid::new(-1.0, 1.0, 257).unwrap();
        let c = response_curve(&q, &noise, grid).unwrap();
        for (t, v) in grid.points().iter().zip(c.values()) {
            assert!((v - sine_curve(*t)).abs() < 1e-8, "θ = {t}");
        }
    }

    #[test]
    fn sine_quantizer_through_raised_cosine_noise_by_quadrature() {
        let noise = NoiseModel::raised_cosine(0.0).unwrap();
        let q = BinaryQuantizer::sine(-1.0, 1.0).unwrap();
        let grid = Grid::new(-1.0, 1.0, 129).unwrap();
        let c = response_curve(&q, &noise, grid).unwrap();
        // Independent check with a brute-force Riemann sum.
        for (t, v) in grid.points().iter().zip(c.values()).step_by(16) {
            let n = 200_000;
            let h = 2.0 / n as f64;
            let s: f64 = (0..n)
                .map(|k| {
                    let w = -1.0 + (k as f64 + 0.5) * h;
                    q.response(t + w) * noise.density(w) * h
                })
                .sum();
            assert!((v - s).abs() < 1e-7, "θ = {t}: {v} vs {s}");
        }
    }

    #[test]
    fn threshold_curve_is_monotone_for_gaussian_noise() {
        let q = BinaryQuantizer::threshold(0.3).unwrap();
        let grid = Grid::new(-3.0, 3.0, 601).unwrap();
        let c = response_curve(&q, &NoiseModel::gaussian(0.7).unwrap(), grid).unwrap();
        assert!(c.values().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn empirical_response_matches_curve() {
        let noise = NoiseModel::gaussian(0.25).unwrap();
        let quantizers = [
            BinaryQuantizer::threshold(0.1).unwrap(),
            BinaryQuantizer::sine(-1.0, 1.0).unwrap(),
        ];
        let grid = Grid::new(-1.0, 1.0, 201).unwrap();
        for (k, q) in quantizers.iter().enumerate() {
            let c = response_curve(q, &noise, grid).unwrap();
            for theta in [-0.6, 0.0, 0.45] {
                let mut rng = SeedTree::new(21).child(k as u64).stream();
                let n = 100_000;
                let ones: u32 = (0..n)
                    .map(|_| apply_binary(q, theta + noise.sample(&mut rng), &mut rng) as u32)
                    .sum();
                let emp = ones as f64 / n as f64;
                assert!((emp - c.eval(theta).0).abs() < 0.01, "{k} θ = {theta}");
            }
        }
    }
}
