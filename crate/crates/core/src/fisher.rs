//! Fisher-information computations for binary quantizers.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::prob::{prior_fisher, q_function, NoiseModel, ParamPrior, PriorKind, PRIOR_TAIL_MASS};
use crate::quadrature::{simpson_samples, Grid, DEFAULT_NODES};
use crate::quantizer::{CurveKind, ResponseCurve};

/// Response values closer than this to 0 or 1 make `I(θ)` undefined.
pub const DEGENERATE_EPS: f64 = 1e-12;

/// Posterior Fisher information split by source.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherReport {
    /// Quantized sensor data.
    pub f_d: f64,
    /// Fusion-center observation.
    pub f_0: f64,
    /// Prior.
    pub f_p: f64,
    pub f_total: f64,
    pub per_sensor: Vec<f64>,
    pub pcrlb: f64,
}

impl FisherReport {
    pub fn new(per_sensor: Vec<f64>, f_0: f64, f_p: f64) -> Result<Self> {
        if per_sensor.iter().chain([&f_0, &f_p]).any(|v| !(*v >= 0.0)) {
            return invalid("Fisher information components must be nonnegative");
        }
        let f_d: f64 = per_sensor.iter().sum();
        let f_total = f_d + f_0 + f_p;
        Ok(Self {
            f_d,
            f_0,
            f_p,
            f_total,
            per_sensor,
            pcrlb: 1.0 / f_total,
        })
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["F_D", "F_0", "F_P", "F_total", "pcrlb"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        cols.extend((1..=self.per_sensor.len()).map(|i| format!("F_{i}")));
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut vals = vec![self.f_d, self.f_0, self.f_p, self.f_total, self.pcrlb];
        vals.extend(&self.per_sensor);
        vals.iter()
            .map(|v| format!("{v:e}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `I(θ) = g'² / (g(1 − g))` for a binary quantizer.
pub fn fi_pointwise(g: f64, gprime: f64) -> Result<f64> {
    if !(g > DEGENERATE_EPS && g < 1.0 - DEGENERATE_EPS) {
        return Err(Error::DegenerateResponse { theta: f64::NAN, g });
    }
    Ok(gprime * gprime / (g * (1.0 - g)))
}

fn information_at(curve: &ResponseCurve, theta: f64) -> Option<f64> {
    let (g, gp) = curve.eval(theta);
    fi_pointwise(g, gp).ok()
}

fn sine_limit(curve: &ResponseCurve) -> Option<f64> {
    match curve.kind() {
        CurveKind::Sine { lo, hi } => Some(PI * PI / ((hi - lo) * (hi - lo))),
        CurveKind::Generic => None,
    }
}

/// Samples `I(θ) p(θ)` on `nodes`, resolving degenerate points.
///
/// Where `g` touches 0 or 1: closed-form limit for known curves, cubic
/// extrapolation from the interior at the window ends, zero where the prior
/// mass around the node is negligible, and an error otherwise.
fn information_integrand(
    curve: &ResponseCurve,
    prior: &ParamPrior,
    nodes: &[f64],
) -> Result<Vec<f64>> {
    let n = nodes.len();
    let h = if n > 1 { nodes[1] - nodes[0] } else { 0.0 };
    let limit = sine_limit(curve);
    let mut out = vec![0.0; n];
    let mut pending = Vec::new();
    for (k, &t) in nodes.iter().enumerate() {
        let p = prior.density(t);
        if p == 0.0 {
            continue;
        }
        match information_at(curve, t) {
            Some(info) => out[k] = info * p,
            None => {
                if let Some(c) = limit {
                    out[k] = c * p;
                } else if k == 0 || k + 1 == n {
                    pending.push(k);
                } else if p * h < PRIOR_TAIL_MASS {
                    out[k] = 0.0;
                } else {
                    return Err(Error::DegenerateResponse {
                        theta: t,
                        g: curve.eval(t).0,
                    });
                }
            }
        }
    }
    for k in pending {
        if n < 5 {
            return Err(Error::DegenerateResponse {
                theta: nodes[k],
                g: curve.eval(nodes[k]).0,
            });
        }
        let f = |j: usize| if k == 0 { out[j] } else { out[n - 1 - j] };
        out[k] = (4.0 * f(1) - 6.0 * f(2) + 4.0 * f(3) - f(4)).max(0.0);
    }
    Ok(out)
}

/// Expected information `E_θ[I(θ)]` contributed by one sensor with response `curve`.
pub fn expected_information(curve: &ResponseCurve, prior: &ParamPrior) -> Result<f64> {
    let grid = *curve.grid();
    match prior.kind() {
        PriorKind::PointMass { at } => {
            if !grid.contains(*at) {
                return Err(mismatch(&grid, *at, *at));
            }
            information_at(curve, *at)
                .or_else(|| sine_limit(curve))
                .ok_or(Error::DegenerateResponse {
                    theta: *at,
                    g: curve.eval(*at).0,
                })
        }
        PriorKind::Tabulated(t) => {
            let xs = t.nodes();
            let (lo, hi) = (xs[0], xs[xs.len() - 1]);
            if !grid.contains(lo) || !grid.contains(hi) {
                return Err(mismatch(&grid, lo, hi));
            }
            let mut total = 0.0;
            for w in xs.windows(2) {
                let cell = [w[0], 0.5 * (w[0] + w[1]), w[1]];
                let vals = information_integrand(curve, prior, &cell)?;
                total += simpson_samples(&vals, 0.5 * (w[1] - w[0]));
            }
            Ok(total)
        }
        _ => {
            let s = prior.quadrature_support()?;
            if !grid.contains(s.lo) || !grid.contains(s.hi) {
                return Err(mismatch(&grid, s.lo, s.hi));
            }
            let same = (grid.lo - s.lo).abs() <= 1e-12 * (1.0 + s.lo.abs())
                && (grid.hi - s.hi).abs() <= 1e-12 * (1.0 + s.hi.abs())
                && grid.nodes % 2 == 1;
            let qgrid = if same {
                grid
            } else {
                Grid::simpson(s.lo, s.hi, DEFAULT_NODES)?
            };
            let vals = information_integrand(curve, prior, &qgrid.points())?;
            Ok(simpson_samples(&vals, qgrid.step()))
        }
    }
}

fn mismatch(grid: &Grid, lo: f64, hi: f64) -> Error {
    Error::SupportMismatch {
        grid_lo: grid.lo,
        grid_hi: grid.hi,
        lo,
        hi,
    }
}

/// `F = N E_θ[I(θ)] + F_0 + F_P` for `n_sensors` identical sensors.
pub fn posterior_fisher(
    curve: &ResponseCurve,
    prior: &ParamPrior,
    n_sensors: usize,
    f0: Option<f64>,
) -> Result<FisherReport> {
    let f_p = prior_fisher(prior)?;
    let per = if n_sensors == 0 {
        0.0
    } else {
        expected_information(curve, prior)?
    };
    FisherReport::new(vec![per; n_sensors], f0.unwrap_or(0.0), f_p)
}

/// Information about θ in one observation `N(θ, σ²)`.
pub fn gaussian_single_obs_fisher(variance: f64) -> Result<f64> {
    if !(variance > 0.0 && variance.is_finite()) {
        return invalid(format!("noise variance must be positive, got {variance}"));
    }
    Ok(1.0 / variance)
}

/// Posterior information of the one-bit threshold quantizer at the prior
/// mean under Gaussian observation noise:
/// `(1/2πσ²) E_θ[exp(−(θ−μ)²/σ²) / (Q(x)(1 − Q(x)))]`, `x = (θ−μ)/σ`.
pub fn gaussian_binary_threshold_fisher(prior: &ParamPrior, variance: f64) -> Result<f64> {
    gaussian_single_obs_fisher(variance)?;
    let mu = prior.mean();
    if !mu.is_finite() {
        return invalid("prior mean must be finite");
    }
    let sd = variance.sqrt();
    let integrand = |t: f64| {
        let x = (t - mu) / sd;
        let num = (-x * x).exp();
        if num == 0.0 {
            return 0.0;
        }
        num / (2.0 * PI * variance * q_function(x) * q_function(-x))
    };
    prior.expect(integrand)
}

/// Response curve of the threshold-at-mean quantizer under `N(0, σ²)` noise,
/// tabulated over the prior's quadrature window.
pub fn gaussian_threshold_curve(
    prior: &ParamPrior,
    variance: f64,
    nodes: usize,
) -> Result<ResponseCurve> {
    let noise = NoiseModel::gaussian(variance)?;
    let mu = prior.mean();
    let s = prior.quadrature_support()?;
    let (lo, hi) = if s.lo < s.hi {
        (s.lo, s.hi)
    } else {
        let sd = variance.sqrt();
        (s.lo - sd, s.hi + sd)
    };
    let grid = Grid::simpson(lo, hi, nodes)?;
    ResponseCurve::from_fn(
        grid,
        |t| noise.survival(mu - t),
        |t| noise.density(mu - t),
        CurveKind::Generic,
    )
}

/// `1ᵀΣ⁻¹1 = N / (σ²(1 + (N − 1)ρ))` for equicorrelated Gaussian observations.
pub fn equicorrelated_fisher(n: usize, variance: f64, rho: f64) -> Result<f64> {
    gaussian_single_obs_fisher(variance)?;
    if n == 0 {
        return invalid("sensor count must be at least 1");
    }
    let lower = if n > 1 {
        -1.0 / (n - 1) as f64
    } else {
        f64::NEG_INFINITY
    };
    if !(rho > lower && rho < 1.0) {
        return Err(Error::SingularCovariance { n, rho });
    }
    Ok(n as f64 / (variance * (1.0 + (n as f64 - 1.0) * rho)))
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataProcessing {
    Checked {
        f_i: f64,
        i_star: f64,
        holds: bool,
    },
    /// The unquantized observation has no finite location information (e.g. noiseless).
    NotApplicable {
        f_i: f64,
        reason: String,
    },
}

/// Compares a sensor's posterior contribution with the information in one
/// unquantized observation.
pub fn data_processing_check(
    curve: &ResponseCurve,
    prior: &ParamPrior,
    noise: &NoiseModel,
) -> Result<DataProcessing> {
    let f_i = expected_information(curve, prior)?;
    Ok(match noise.location_fisher() {
        Some(i_star) => DataProcessing::Checked {
            f_i,
            i_star,
            holds: f_i <= i_star + 1e-6,
        },
        None => DataProcessing::NotApplicable {
            f_i,
            reason: format!(
                "no finite single-observation information for {:?} noise",
                noise.kind()
            ),
        },
    })
}
