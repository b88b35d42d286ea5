//! Probability primitives: parameter priors, additive noise laws and
//! hierarchical conditional independence (HCI) tables on finite grids.

use std::f64::consts::{PI, SQRT_2};

use rustfft::num_complex::Complex64;
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{simpson, DEFAULT_NODES};
use crate::rng::{open_unit, Rng};

/// Tail width, in standard deviations, used to truncate unbounded priors.
pub const PRIOR_TAIL_SIGMAS: f64 = 8.0;
/// Largest prior mass allowed outside the truncated quadrature window.
pub const PRIOR_TAIL_MASS: f64 = 1e-10;
/// Half-width, in standard deviations, of the numerical support of Gaussian noise.
pub const NOISE_TAIL_SIGMAS: f64 = 9.0;

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Gaussian tail probability `Q(x) = P(Z ≥ x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Standard normal quantile.
pub fn std_normal_quantile(u: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * u)
}

/// An interval, possibly unbounded on either side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Piecewise-linear density on sorted nodes, with its exact CDF at the nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    density: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Table {
    fn new(xs: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != density.len() {
            return invalid("tabulated law needs at least two (value, density) rows");
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) || xs.iter().any(|x| !x.is_finite()) {
            return invalid("tabulated abscissae must be finite and strictly increasing");
        }
        if density.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return invalid("tabulated density must be nonnegative at every node");
        }
        let mut cumulative = vec![0.0; xs.len()];
        for j in 1..xs.len() {
            cumulative[j] =
                cumulative[j - 1] + 0.5 * (density[j] + density[j - 1]) * (xs[j] - xs[j - 1]);
        }
        let total = cumulative[xs.len() - 1];
        if !(total > 0.0) {
            return invalid("tabulated density has zero mass");
        }
        let density = density.into_iter().map(|p| p / total).collect();
        cumulative.iter_mut().for_each(|c| *c /= total);
        Ok(Self {
            xs,
            density,
            cumulative,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn densities(&self) -> &[f64] {
        &self.density
    }

    fn cell(&self, x: f64) -> usize {
        let j = self.xs.partition_point(|&v| v <= x);
        j.clamp(1, self.xs.len() - 1) - 1
    }

    fn pdf(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return 0.0;
        }
        crate::quadrature::lerp_table(&self.xs, &self.density, x)
    }

    fn pdf_slope(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return 0.0;
        }
        let j = self.cell(x);
        (self.density[j + 1] - self.density[j]) / (self.xs[j + 1] - self.xs[j])
    }

    fn cdf(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[n - 1] {
            return 1.0;
        }
        let j = self.cell(x);
        let d = x - self.xs[j];
        let s = (self.density[j + 1] - self.density[j]) / (self.xs[j + 1] - self.xs[j]);
        (self.cumulative[j] + self.density[j] * d + 0.5 * s * d * d).clamp(0.0, 1.0)
    }

    fn quantile(&self, u: f64) -> f64 {
        let n = self.xs.len();
        let j = self.cumulative.partition_point(|&c| c <= u).clamp(1, n - 1) - 1;
        let r = (u - self.cumulative[j]).max(0.0);
        let p = self.density[j];
        let s = (self.density[j + 1] - p) / (self.xs[j + 1] - self.xs[j]);
        let disc = (p * p + 2.0 * s * r).max(0.0);
        let denom = p + disc.sqrt();
        let d = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        (self.xs[j] + d).min(self.xs[j + 1])
    }

    /// `∫ f(x) p(x) dx` with a three-point Simpson rule per cell.
    fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.xs
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let m = 0.5 * (a + b);
                (b - a) / 6.0 * (f(a) * self.pdf(a) + 4.0 * f(m) * self.pdf(m) + f(b) * self.pdf(b))
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PriorKind {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gaussian {
        mean: f64,
        variance: f64,
    },
    TruncatedGaussian {
        mean: f64,
        variance: f64,
        lo: f64,
        hi: f64,
    },
    PointMass {
        at: f64,
    },
    Tabulated(Table),
}

/// Prior law of the scalar parameter θ.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamPrior {
    kind: PriorKind,
    /// Normalizer of the truncated Gaussian.
    mass: f64,
}

impl ParamPrior {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return invalid(format!("uniform prior needs lo < hi, got [{lo}, {hi}]"));
        }
        Ok(Self::from_kind(PriorKind::Uniform { lo, hi }))
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance > 0.0 && variance.is_finite()) {
            return invalid(format!("gaussian prior needs variance > 0, got {variance}"));
        }
        Ok(Self::from_kind(PriorKind::Gaussian { mean, variance }))
    }

    pub fn truncated_gaussian(mean: f64, variance: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite())
            || !(lo < hi)
            || !lo.is_finite()
            || !hi.is_finite()
        {
            return invalid("truncated gaussian prior needs variance > 0 and finite lo < hi");
        }
        let sd = variance.sqrt();
        let mass = q_function((lo - mean) / sd) - q_function((hi - mean) / sd);
        if !(mass > 0.0) {
            return invalid("truncation window carries no gaussian mass");
        }
        Ok(Self {
            kind: PriorKind::TruncatedGaussian {
                mean,
                variance,
                lo,
                hi,
            },
            mass,
        })
    }

    pub fn point_mass(at: f64) -> Result<Self> {
        if !at.is_finite() {
            return invalid("point-mass prior location must be finite");
        }
        Ok(Self::from_kind(PriorKind::PointMass { at }))
    }

    /// Piecewise-linear density through `(xs, density)`; renormalized to unit mass.
    pub fn tabulated(xs: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        Ok(Self::from_kind(PriorKind::Tabulated(Table::new(
            xs, density,
        )?)))
    }

    fn from_kind(kind: PriorKind) -> Self {
        Self { kind, mass: 1.0 }
    }

    pub fn kind(&self) -> &PriorKind {
        &self.kind
    }

    pub fn support(&self) -> Support {
        match &self.kind {
            PriorKind::Uniform { lo, hi } | PriorKind::TruncatedGaussian { lo, hi, .. } => {
                Support { lo: *lo, hi: *hi }
            }
            PriorKind::Gaussian { .. } => Support {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            },
            PriorKind::PointMass { at } => Support { lo: *at, hi: *at },
            PriorKind::Tabulated(t) => Support {
                lo: t.xs[0],
                hi: t.xs[t.xs.len() - 1],
            },
        }
    }

    /// Finite window used for quadrature. Unbounded priors are cut at
    /// `mean ± 8σ` after checking the discarded mass.
    pub fn quadrature_support(&self) -> Result<Support> {
        match &self.kind {
            PriorKind::Gaussian { mean, variance } => {
                let sd = variance.sqrt();
                let tail = 2.0 * q_function(PRIOR_TAIL_SIGMAS);
                if tail >= PRIOR_TAIL_MASS {
                    return Err(Error::QuadratureDivergence(format!(
                        "prior mass {tail:e} outside ±{PRIOR_TAIL_SIGMAS}σ exceeds {PRIOR_TAIL_MASS:e}"
                    )));
                }
                Ok(Support {
                    lo: mean - PRIOR_TAIL_SIGMAS * sd,
                    hi: mean + PRIOR_TAIL_SIGMAS * sd,
                })
            }
            _ => Ok(self.support()),
        }
    }

    pub fn density(&self, theta: f64) -> f64 {
        match &self.kind {
            PriorKind::Uniform { lo, hi } => {
                if theta >= *lo && theta <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            PriorKind::Gaussian { mean, variance } => {
                let sd = variance.sqrt();
                std_normal_pdf((theta - mean) / sd) / sd
            }
            PriorKind::TruncatedGaussian {
                mean,
                variance,
                lo,
                hi,
            } => {
                if theta < *lo || theta > *hi {
                    return 0.0;
                }
                let sd = variance.sqrt();
                std_normal_pdf((theta - mean) / sd) / (sd * self.mass)
            }
            PriorKind::PointMass { at } => {
                if theta == *at {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            PriorKind::Tabulated(t) => t.pdf(theta),
        }
    }

    /// Derivative of the density (one-sided within tabulated cells).
    pub fn density_derivative(&self, theta: f64) -> f64 {
        match &self.kind {
            PriorKind::Uniform { .. } | PriorKind::PointMass { .. } => 0.0,
            PriorKind::Gaussian { mean, variance }
            | PriorKind::TruncatedGaussian { mean, variance, .. } => {
                -(theta - mean) / variance * self.density(theta)
            }
            PriorKind::Tabulated(t) => t.pdf_slope(theta),
        }
    }

    /// Second derivative of `ln p(θ)`, where defined.
    pub fn log_curvature(&self, theta: f64) -> Option<f64> {
        match &self.kind {
            PriorKind::Uniform { .. } => Some(0.0),
            PriorKind::Gaussian { variance, .. }
            | PriorKind::TruncatedGaussian { variance, .. } => Some(-1.0 / variance),
            PriorKind::PointMass { .. } => None,
            PriorKind::Tabulated(t) => {
                let p = t.pdf(theta);
                if p > 0.0 {
                    let s = t.pdf_slope(theta);
                    Some(-(s / p) * (s / p))
                } else {
                    None
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            PriorKind::Uniform { lo, hi } => 0.5 * (lo + hi),
            PriorKind::Gaussian { mean, .. } => *mean,
            PriorKind::PointMass { at } => *at,
            PriorKind::TruncatedGaussian { .. } => simpson(
                |t| t * self.density(t),
                self.support().lo,
                self.support().hi,
                DEFAULT_NODES,
            ),
            PriorKind::Tabulated(t) => t.expect(|x| x),
        }
    }

    pub fn variance(&self) -> f64 {
        match &self.kind {
            PriorKind::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            PriorKind::Gaussian { variance, .. } => *variance,
            PriorKind::PointMass { .. } => 0.0,
            _ => {
                let m = self.mean();
                self.expect(|t| (t - m) * (t - m)).unwrap_or(f64::NAN)
            }
        }
    }

    /// `E[f(θ)]` by composite Simpson over the quadrature window
    /// ([`DEFAULT_NODES`] nodes), exact evaluation for point masses.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        self.expect_with(f, DEFAULT_NODES)
    }

    pub fn expect_with<F: Fn(f64) -> f64>(&self, f: F, nodes: usize) -> Result<f64> {
        match &self.kind {
            PriorKind::PointMass { at } => Ok(f(*at)),
            PriorKind::Tabulated(t) => Ok(t.expect(f)),
            _ => {
                let s = self.quadrature_support()?;
                Ok(simpson(|t| f(t) * self.density(t), s.lo, s.hi, nodes))
            }
        }
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        match &self.kind {
            PriorKind::Uniform { lo, hi } => ((theta - lo) / (hi - lo)).clamp(0.0, 1.0),
            PriorKind::Gaussian { mean, variance } => {
                1.0 - q_function((theta - mean) / variance.sqrt())
            }
            PriorKind::TruncatedGaussian {
                mean,
                variance,
                lo,
                hi,
            } => {
                if theta <= *lo {
                    return 0.0;
                }
                if theta >= *hi {
                    return 1.0;
                }
                let sd = variance.sqrt();
                ((q_function((lo - mean) / sd) - q_function((theta - mean) / sd)) / self.mass)
                    .clamp(0.0, 1.0)
            }
            PriorKind::PointMass { at } => {
                if theta >= *at {
                    1.0
                } else {
                    0.0
                }
            }
            PriorKind::Tabulated(t) => t.cdf(theta),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match &self.kind {
            PriorKind::Uniform { lo, hi } => lo + u * (hi - lo),
            PriorKind::Gaussian { mean, variance } => {
                mean + variance.sqrt() * std_normal_quantile(u)
            }
            PriorKind::TruncatedGaussian {
                mean,
                variance,
                lo,
                hi,
            } => {
                let sd = variance.sqrt();
                let a = 1.0 - q_function((lo - mean) / sd);
                let v = a + u * self.mass;
                (mean + sd * std_normal_quantile(v)).clamp(*lo, *hi)
            }
            PriorKind::PointMass { at } => *at,
            PriorKind::Tabulated(t) => t.quantile(u),
        }
    }

    /// Draws θ by inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            PriorKind::PointMass { at } => *at,
            _ => self.quantile(open_unit(rng)),
        }
    }
}

/// `F_P = -E[∂²/∂θ² ln p(θ)]`.
///
/// Bounded priors are integrated over the open interior; boundary jumps of
/// the density are ignored, so the uniform prior contributes zero.
pub fn prior_fisher(prior: &ParamPrior) -> Result<f64> {
    match prior.kind() {
        PriorKind::Uniform { .. } => Ok(0.0),
        PriorKind::Gaussian { variance, .. } | PriorKind::TruncatedGaussian { variance, .. } => {
            Ok(1.0 / variance)
        }
        PriorKind::PointMass { at } => Err(Error::UnboundedCurvature { theta: *at }),
        PriorKind::Tabulated(t) => tabulated_prior_fisher(t),
    }
}

fn tabulated_prior_fisher(t: &Table) -> Result<f64> {
    let (xs, p) = (&t.xs, &t.density);
    let n = xs.len();
    if n < 3 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 1..n - 1 {
        let (h0, h1) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
        let weight = 0.5 * (h0 + h1) * p[i];
        if p[i] == 0.0 && p[i - 1] == 0.0 && p[i + 1] == 0.0 {
            continue;
        }
        if p[i] <= 0.0 || p[i - 1] <= 0.0 || p[i + 1] <= 0.0 {
            return Err(Error::UnboundedCurvature { theta: xs[i] });
        }
        let (l0, l1, l2) = (p[i - 1].ln(), p[i].ln(), p[i + 1].ln());
        let curvature = 2.0 * (h0 * l2 - (h0 + h1) * l1 + h1 * l0) / (h0 * h1 * (h0 + h1));
        if !curvature.is_finite() {
            return Err(Error::UnboundedCurvature { theta: xs[i] });
        }
        total -= weight * curvature;
    }
    Ok(total.max(0.0))
}

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseKind {
    Delta,
    Gaussian {
        sigma: f64,
    },
    /// Density `(π/4) cos(π(w − center)/2)` on `[center − 1, center + 1]`.
    RaisedCosine {
        center: f64,
    },
    Tabulated(Table),
}

/// Law of the additive observation noise `W` in `Y = θ + W`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    kind: NoiseKind,
}

impl NoiseModel {
    pub fn delta() -> Self {
        Self {
            kind: NoiseKind::Delta,
        }
    }

    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return invalid(format!("noise variance must be positive, got {variance}"));
        }
        Ok(Self {
            kind: NoiseKind::Gaussian {
                sigma: variance.sqrt(),
            },
        })
    }

    pub fn raised_cosine(center: f64) -> Result<Self> {
        if !center.is_finite() {
            return invalid("raised-cosine center must be finite");
        }
        Ok(Self {
            kind: NoiseKind::RaisedCosine { center },
        })
    }

    pub fn tabulated(xs: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        Ok(Self {
            kind: NoiseKind::Tabulated(Table::new(xs, density)?),
        })
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn is_delta(&self) -> bool {
        matches!(self.kind, NoiseKind::Delta)
    }

    pub fn support(&self) -> Support {
        match &self.kind {
            NoiseKind::Delta => Support { lo: 0.0, hi: 0.0 },
            NoiseKind::Gaussian { .. } => Support {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            },
            NoiseKind::RaisedCosine { center } => Support {
                lo: center - 1.0,
                hi: center + 1.0,
            },
            NoiseKind::Tabulated(t) => Support {
                lo: t.xs[0],
                hi: t.xs[t.xs.len() - 1],
            },
        }
    }

    /// Bounded window holding all but a negligible (< 1e-18) fraction of the mass.
    pub fn effective_support(&self) -> Support {
        match &self.kind {
            NoiseKind::Gaussian { sigma } => Support {
                lo: -NOISE_TAIL_SIGMAS * sigma,
                hi: NOISE_TAIL_SIGMAS * sigma,
            },
            _ => self.support(),
        }
    }

    /// Density; `+∞` at the atom of the delta law.
    pub fn density(&self, w: f64) -> f64 {
        match &self.kind {
            NoiseKind::Delta => {
                if w == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            NoiseKind::Gaussian { sigma } => std_normal_pdf(w / sigma) / sigma,
            NoiseKind::RaisedCosine { center } => {
                let x = w - center;
                if x.abs() <= 1.0 {
                    PI / 4.0 * (PI / 2.0 * x).cos()
                } else {
                    0.0
                }
            }
            NoiseKind::Tabulated(t) => t.pdf(w),
        }
    }

    /// `P(W ≤ w)`.
    pub fn cdf(&self, w: f64) -> f64 {
        match &self.kind {
            NoiseKind::Delta => {
                if w >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseKind::Gaussian { sigma } => q_function(-w / sigma),
            NoiseKind::RaisedCosine { center } => {
                let x = (w - center).clamp(-1.0, 1.0);
                0.5 * (1.0 + (PI / 2.0 * x).sin())
            }
            NoiseKind::Tabulated(t) => t.cdf(w),
        }
    }

    /// `P(W ≥ w)`, computed without cancellation in the upper tail.
    pub fn survival(&self, w: f64) -> f64 {
        match &self.kind {
            NoiseKind::Gaussian { sigma } => q_function(w / sigma),
            NoiseKind::Delta => {
                if w <= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => 1.0 - self.cdf(w),
        }
    }

    /// `P(lo ≤ W < hi)`.
    pub fn prob_interval(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match &self.kind {
            NoiseKind::Delta => {
                if lo <= 0.0 && 0.0 < hi {
                    1.0
                } else {
                    0.0
                }
            }
            NoiseKind::Gaussian { .. } if lo >= 0.0 => self.survival(lo) - self.survival(hi),
            _ => self.cdf(hi) - self.cdf(lo),
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match &self.kind {
            NoiseKind::Delta => 0.0,
            NoiseKind::Gaussian { sigma } => sigma * std_normal_quantile(u),
            NoiseKind::RaisedCosine { center } => {
                center + 2.0 / PI * (2.0 * u - 1.0).clamp(-1.0, 1.0).asin()
            }
            NoiseKind::Tabulated(t) => t.quantile(u),
        }
    }

    /// Draws `w` by inverse-CDF sampling. The delta law consumes no randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            NoiseKind::Delta => 0.0,
            _ => self.quantile(open_unit(rng)),
        }
    }

    /// Fourier transform `P_W(f) = E[exp(-2πi f W)]`.
    pub fn spectrum(&self, f: f64) -> Complex64 {
        match &self.kind {
            NoiseKind::Delta => Complex64::new(1.0, 0.0),
            NoiseKind::Gaussian { sigma } => {
                Complex64::new((-2.0 * PI * PI * sigma * sigma * f * f).exp(), 0.0)
            }
            NoiseKind::RaisedCosine { center } => {
                let denom = 1.0 - 16.0 * f * f;
                let mag = if denom.abs() < 1e-12 {
                    PI / 4.0
                } else {
                    (2.0 * PI * f).cos() / denom
                };
                Complex64::from_polar(1.0, -2.0 * PI * f * center) * mag
            }
            NoiseKind::Tabulated(t) => {
                let re = t.expect(|w| (2.0 * PI * f * w).cos());
                let im = -t.expect(|w| (2.0 * PI * f * w).sin());
                Complex64::new(re, im)
            }
        }
    }

    /// Fisher information about a location shift carried by one noisy
    /// observation, where it has a closed form (Gaussian: `1/σ²`).
    pub fn location_fisher(&self) -> Option<f64> {
        match &self.kind {
            NoiseKind::Gaussian { sigma } => Some(1.0 / (sigma * sigma)),
            _ => None,
        }
    }
}

/// Latent-variable model `θ → λ → (Y₁, …, Y_N)` on finite grids, with the
/// sensors conditionally independent given λ.
#[derive(Clone, Debug, PartialEq)]
pub struct HciModel {
    thetas: Vec<f64>,
    prior: Vec<f64>,
    /// `p(λ | θ)`, one row per θ.
    latent: Vec<Vec<f64>>,
    /// `p(y_i | λ)` per sensor, one row per λ.
    sensors: Vec<Vec<Vec<f64>>>,
}

pub const ROW_TOLERANCE: f64 = 1e-12;

pub(crate) fn check_stochastic(rows: &[Vec<f64>], what: &str) -> Result<()> {
    for (r, row) in rows.iter().enumerate() {
        if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return invalid(format!("{what} row {r} has a negative or non-finite entry"));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_TOLERANCE {
            return invalid(format!("{what} row {r} sums to {s}, not 1"));
        }
    }
    Ok(())
}

impl HciModel {
    pub fn new(
        thetas: Vec<f64>,
        prior: Vec<f64>,
        latent: Vec<Vec<f64>>,
        sensors: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if thetas.is_empty() || thetas.len() != prior.len() || latent.len() != thetas.len() {
            return invalid("θ-grid, prior weights and p(λ|θ) rows must have equal length");
        }
        check_stochastic(std::slice::from_ref(&prior), "prior")?;
        let n_lambda = latent[0].len();
        if n_lambda == 0 || latent.iter().any(|r| r.len() != n_lambda) {
            return invalid("p(λ|θ) rows must share one non-empty λ-grid");
        }
        check_stochastic(&latent, "p(λ|θ)")?;
        for (i, s) in sensors.iter().enumerate() {
            if s.len() != n_lambda {
                return invalid(format!("sensor {i} needs one p(y|λ) row per λ"));
            }
            let ny = s[0].len();
            if ny == 0 || s.iter().any(|r| r.len() != ny) {
                return invalid(format!("sensor {i} rows must share one non-empty y-grid"));
            }
            check_stochastic(s, &format!("sensor {i} p(y|λ)"))?;
        }
        Ok(Self {
            thetas,
            prior,
            latent,
            sensors,
        })
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn latent(&self) -> &[Vec<f64>] {
        &self.latent
    }

    pub fn sensor(&self, i: usize) -> &[Vec<f64>] {
        &self.sensors[i]
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }

    pub fn lambda_count(&self) -> usize {
        self.latent[0].len()
    }

    /// `p(y_i, y_j | θ) = Σ_λ p(λ|θ) p(y_i|λ) p(y_j|λ)` for the θ-grid entry `t`.
    pub fn pair_table(&self, i: usize, j: usize, t: usize) -> Vec<Vec<f64>> {
        let (si, sj) = (&self.sensors[i], &self.sensors[j]);
        let mut out = vec![vec![0.0; sj[0].len()]; si[0].len()];
        for (l, &pl) in self.latent[t].iter().enumerate() {
            for (a, row) in out.iter_mut().enumerate() {
                for (b, v) in row.iter_mut().enumerate() {
                    *v += pl * si[l][a] * sj[l][b];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::central_derivative;
    use crate::rng::SeedTree;

    fn noises() -> Vec<NoiseModel> {
        vec![
            NoiseModel::gaussian(0.5).unwrap(),
            NoiseModel::raised_cosine(0.0).unwrap(),
            NoiseModel::raised_cosine(0.7).unwrap(),
            NoiseModel::tabulated(vec![-1.0, 0.0, 0.5, 2.0], vec![0.2, 1.0, 0.8, 0.1]).unwrap(),
        ]
    }

    #[test]
    fn prior_fisher_closed_forms() {
        assert_eq!(
            prior_fisher(&ParamPrior::gaussian(0.0, 1.0).unwrap()).unwrap(),
            1.0
        );
        assert_eq!(
            prior_fisher(&ParamPrior::gaussian(3.0, 4.0).unwrap()).unwrap(),
            0.25
        );
        assert_eq!(
            prior_fisher(&ParamPrior::uniform(-1.0, 1.0).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn tabulated_gaussian_prior_fisher_matches_closed_form() {
        let xs: Vec<f64> = (0..=1600).map(|i| -8.0 + i as f64 * 0.01).collect();
        let ps: Vec<f64> = xs.iter().map(|&x| std_normal_pdf(x)).collect();
        let fp = prior_fisher(&ParamPrior::tabulated(xs, ps).unwrap()).unwrap();
        assert!((fp - 1.0).abs() < 1e-3, "{fp}");
    }

    #[test]
    fn tabulated_prior_with_interior_zero_is_unbounded() {
        let p = ParamPrior::tabulated(vec![-1.0, 0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            prior_fisher(&p),
            Err(Error::UnboundedCurvature { .. })
        ));
    }

    #[test]
    fn priors_integrate_to_one() {
        let priors = [
            ParamPrior::uniform(-1.0, 2.0).unwrap(),
            ParamPrior::gaussian(0.5, 2.0).unwrap(),
            ParamPrior::truncated_gaussian(0.0, 1.0, -1.0, 1.5).unwrap(),
            ParamPrior::tabulated(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 0.5]).unwrap(),
        ];
        for p in &priors {
            let m = p.expect(|_| 1.0).unwrap();
            assert!((m - 1.0).abs() < 1e-8, "{:?}: {m}", p.kind());
        }
    }

    #[test]
    fn prior_rejects_bad_parameters() {
        assert!(ParamPrior::uniform(1.0, -1.0).is_err());
        assert!(ParamPrior::gaussian(0.0, -1.0).is_err());
        assert!(ParamPrior::tabulated(vec![0.0, 1.0], vec![1.0, -0.1]).is_err());
    }

    #[test]
    fn uniform_samples_stay_in_support_and_center() {
        let p = ParamPrior::uniform(-1.0, 1.0).unwrap();
        let mut rng = SeedTree::new(11).stream();
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let t = p.sample(&mut rng);
            assert!((-1.0..=1.0).contains(&t));
            sum += t;
        }
        let bound = 3.0 / (3.0 * n as f64).sqrt();
        assert!((sum / n as f64).abs() < bound);
    }

    #[test]
    fn point_mass_prior_samples_its_atom() {
        let p = ParamPrior::point_mass(0.3).unwrap();
        let mut rng = SeedTree::new(5).stream();
        assert_eq!(p.sample(&mut rng), 0.3);
        assert_eq!(p.expect(|t| t * t).unwrap(), 0.09);
    }

    #[test]
    fn noise_densities_integrate_to_one() {
        for w in noises() {
            let s = w.effective_support();
            let m = simpson(|x| w.density(x), s.lo, s.hi, 20001);
            assert!((m - 1.0).abs() < 1e-8, "{:?}: {m}", w.kind());
        }
    }

    #[test]
    fn noise_cdf_endpoints() {
        for w in noises() {
            let s = w.effective_support();
            assert!(w.cdf(s.lo).abs() < 1e-10);
            assert!((w.cdf(s.hi) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn noise_cdf_derivative_matches_density() {
        for w in noises() {
            let s = w.effective_support();
            let h = (s.hi - s.lo) / 1000.0;
            // Tabulated laws have density kinks at their nodes; skip stencils straddling one.
            let kinks: Vec<f64> = match w.kind() {
                NoiseKind::Tabulated(t) => t.nodes().to_vec(),
                _ => vec![s.lo, s.hi],
            };
            for i in 0..=1000 {
                let x = s.lo + i as f64 * h;
                if kinks.iter().any(|k| (x - k).abs() <= 2.0 * h + 1e-12) {
                    continue;
                }
                let d = central_derivative(|v| w.cdf(v), x, h);
                assert!(
                    (d - w.density(x)).abs() < 1e-6,
                    "{:?} at {x}: {d}",
                    w.kind()
                );
            }
        }
    }

    #[test]
    fn raised_cosine_median_is_center() {
        let w = NoiseModel::raised_cosine(0.0).unwrap();
        assert_eq!(w.quantile(0.5), 0.0);
        let mut rng = SeedTree::new(3).stream();
        for _ in 0..10_000 {
            let x = w.sample(&mut rng);
            assert!((-1.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn delta_noise_samples_zero() {
        let mut rng = SeedTree::new(3).stream();
        assert_eq!(NoiseModel::delta().sample(&mut rng), 0.0);
    }

    #[test]
    fn inverse_cdf_sampling_matches_law() {
        for (k, w) in noises().into_iter().enumerate() {
            let mut rng = SeedTree::new(99).child(k as u64).stream();
            let mut xs: Vec<f64> = (0..100_000).map(|_| w.sample(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            let n = xs.len() as f64;
            let ks = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let c = w.cdf(x);
                    (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
                })
                .fold(0.0, f64::max);
            assert!(ks < 0.01, "{:?}: KS {ks}", w.kind());
        }
    }

    #[test]
    fn raised_cosine_spectrum_matches_quadrature() {
        let w = NoiseModel::raised_cosine(0.3).unwrap();
        for f in [0.0, 0.1, 0.25, 0.6, 1.3] {
            let re = simpson(|x| w.density(x) * (2.0 * PI * f * x).cos(), -0.7, 1.3, 4001);
            let im = -simpson(|x| w.density(x) * (2.0 * PI * f * x).sin(), -0.7, 1.3, 4001);
            let s = w.spectrum(f);
            assert!(
                (s.re - re).abs() < 1e-9 && (s.im - im).abs() < 1e-9,
                "f = {f}"
            );
        }
    }

    #[test]
    fn hci_pair_marginal_is_stochastic() {
        let m = HciModel::new(
            vec![-1.0, 1.0],
            vec![0.4, 0.6],
            vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]],
            vec![
                vec![vec![0.5, 0.5], vec![0.9, 0.1], vec![0.2, 0.8]],
                vec![
                    vec![0.3, 0.3, 0.4],
                    vec![0.6, 0.2, 0.2],
                    vec![0.1, 0.1, 0.8],
                ],
            ],
        )
        .unwrap();
        for t in 0..2 {
            let s: f64 = m.pair_table(0, 1, t).iter().flatten().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hci_rejects_non_stochastic_rows() {
        let r = HciModel::new(
            vec![0.0],
            vec![1.0],
            vec![vec![0.5, 0.6]],
            vec![vec![vec![1.0], vec![1.0]]],
        );
        assert!(r.is_err());
    }
}
