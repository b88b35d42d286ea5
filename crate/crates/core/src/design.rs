//! Optimal binary quantizer synthesis.
//!
//! The design objective is `L(g) = ∫ p(θ) g'² / (g(1 − g)) dθ`. Its
//! Euler-Lagrange equation is
//! `p g'² (1 − 2g) = 2 g (1 − g) (g'' p + g' p')`.
//! With `g = sin²(φ/2)` the integrand becomes `p φ'²` and the equation
//! reduces to `(p φ')' = 0`, which is what the solver integrates.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::prob::{NoiseModel, ParamPrior};
use crate::quadrature::{derivative, simpson_samples, Grid};
use crate::quantizer::{BinaryQuantizer, CurveKind, ResponseCurve};

/// Boundary inset: the solver pins `g(θ_min) = ε_b`, `g(θ_max) = 1 − ε_b`.
pub const BOUNDARY_INSET: f64 = 1e-6;

/// Sine response on `[lo, hi]`: `g*(θ) = ½[1 + sin π((θ − lo)/(hi − lo) − ½)]`.
pub fn least_favorable_gstar(lo: f64, hi: f64, nodes: usize) -> Result<ResponseCurve> {
    let grid = Grid::new(lo, hi, nodes)?;
    ResponseCurve::from_fn(
        grid,
        |t| sine_response(lo, hi, t).0,
        |t| sine_response(lo, hi, t).2,
        CurveKind::Sine { lo, hi },
    )
}

/// Sine response at `theta` as `(g, 1 − g, g')`.
///
/// The smaller of `g` and `1 − g` is formed as `cos²/(2(1 + |sin|))`, so it keeps
/// full relative precision near the window ends.
pub fn sine_response(lo: f64, hi: f64, theta: f64) -> (f64, f64, f64) {
    let w = hi - lo;
    let (s, c) = (PI * ((theta - lo) / w - 0.5)).sin_cos();
    let small = 0.5 * c * c / (1.0 + s.abs());
    let large = 0.5 * (1.0 + s.abs());
    let (g, gc) = if s >= 0.0 {
        (large, small)
    } else {
        (small, large)
    };
    (g, gc, 0.5 * PI / w * c)
}

/// Noise law under which the threshold quantizer at `t` attains the sine response.
pub fn threshold_optimal_noise(t: f64) -> Result<NoiseModel> {
    NoiseModel::raised_cosine(t)
}

/// `p g'²(1 − 2g) − 2g(1 − g)(g'' p + g' p')`.
pub fn euler_lagrange_residual(p: f64, dp: f64, g: f64, g1: f64, g2: f64) -> f64 {
    p * g1 * g1 * (1.0 - 2.0 * g) - 2.0 * g * (1.0 - g) * (g2 * p + g1 * dp)
}

/// `L(g)` for a curve given by node values and slopes, by Simpson's rule.
pub fn design_objective(prior: &ParamPrior, grid: &Grid, g: &[f64], dg: &[f64]) -> f64 {
    let vals: Vec<f64> = grid
        .points()
        .iter()
        .zip(g.iter().zip(dg))
        .map(|(&t, (&v, &d))| {
            let q = v * (1.0 - v);
            if q > 0.0 {
                prior.density(t) * d * d / q
            } else {
                0.0
            }
        })
        .collect();
    simpson_samples(&vals, grid.step())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    /// Shooting with RK4 using `substeps` per grid cell.
    Shooting {
        substeps: usize,
    },
    /// Conservative finite differences on the grid.
    Collocation,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Shooting { .. } | Method::Collocation => "bvp",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremum {
    Minimum,
    Maximum,
    Saddle,
}

/// Objective at the stationary point against perturbed curves with the same
/// boundary values.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationCheck {
    pub objective: f64,
    pub perturbed_low: f64,
    pub perturbed_high: f64,
    /// `min_θ I(θ)` of the solution.
    pub floor: f64,
    /// Largest `min_θ I(θ)` among the perturbations.
    pub perturbed_floor: f64,
    pub extremum: Extremum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FailureRecord {
    pub reason: String,
    pub raw_min: f64,
    pub raw_max: f64,
    /// Sup-norm gap between `g*` and the direct convolution of the raw inverse.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Deconvolution {
    Quantizer(BinaryQuantizer),
    Failure(FailureRecord),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignSolution {
    pub gstar: ResponseCurve,
    pub gamma: Option<Deconvolution>,
    /// Largest Euler-Lagrange residual over interior nodes (BVP only).
    pub ode_residual: Option<f64>,
    pub method: Method,
    pub check: Option<PerturbationCheck>,
}

#[derive(Clone, Debug)]
pub struct BvpOptions {
    pub nodes: usize,
    /// Fail with `NotAMaximum` unless the perturbation test finds a maximum.
    pub require_maximum: bool,
    pub perturbations: usize,
    /// Perturbation amplitude relative to the range of `φ`.
    pub amplitude: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self {
            nodes: crate::quadrature::DEFAULT_NODES,
            require_maximum: false,
            perturbations: 16,
            amplitude: 0.01,
        }
    }
}

const SHOOT_TOL: f64 = 1e-12;
const LADDER: [usize; 3] = [1, 4, 16];

/// Solves the Euler-Lagrange boundary value problem for a prior with
/// bounded support and strictly positive, continuously differentiable density.
///
/// Shooting on the initial slope with bisection on the terminal value,
/// refining the RK4 step (1, 4, 16 substeps per cell) before falling back to
/// collocation.
pub fn solve_euler_lagrange(prior: &ParamPrior, opts: &BvpOptions) -> Result<DesignSolution> {
    let s = prior.support();
    if !s.is_bounded() || !(s.lo < s.hi) {
        return invalid("Euler-Lagrange design needs a prior with bounded support");
    }
    let grid = Grid::new(s.lo, s.hi, opts.nodes)?;
    let pts = grid.points();
    if let Some(t) = pts.iter().find(|&&t| !(prior.density(t) > 0.0)) {
        return invalid(format!(
            "prior density must be strictly positive, vanishes at θ = {t}"
        ));
    }
    let phi_a = 2.0 * BOUNDARY_INSET.sqrt().asin();
    let phi_b = PI - phi_a;

    let mut solved = None;
    for substeps in LADDER {
        if let Some(sol) = shoot(prior, &grid, phi_a, phi_b, substeps) {
            solved = Some((sol, Method::Shooting { substeps }));
            break;
        }
    }
    let ((phi, dphi), method) = match solved {
        Some(v) => v,
        None => (collocate(prior, &grid, phi_a, phi_b)?, Method::Collocation),
    };

    let g: Vec<f64> = phi.iter().map(|f| (0.5 * f).sin().powi(2)).collect();
    let dg: Vec<f64> = phi
        .iter()
        .zip(&dphi)
        .map(|(f, d)| 0.5 * f.sin() * d)
        .collect();
    let ddg = derivative(&dg, grid.step());
    let ode_residual = (2..grid.nodes - 2)
        .map(|i| {
            let t = pts[i];
            euler_lagrange_residual(
                prior.density(t),
                prior.density_derivative(t),
                g[i],
                dg[i],
                ddg[i],
            )
            .abs()
        })
        .fold(0.0, f64::max);
    if !ode_residual.is_finite() {
        return Err(Error::NoConvergence("residual is not finite".into()));
    }

    let check = perturbation_check(prior, &grid, &phi, &dphi, opts);
    if opts.require_maximum && check.extremum != Extremum::Maximum {
        return Err(Error::NotAMaximum {
            base: check.objective,
            perturbed: check.perturbed_high,
        });
    }
    let gstar = ResponseCurve::from_parts(grid, g, dg, CurveKind::Generic)?;
    Ok(DesignSolution {
        gstar,
        gamma: None,
        ode_residual: Some(ode_residual),
        method,
        check: Some(check),
    })
}

/// Integrates `φ'' = −φ' p'/p` from `(φ_a, slope)`; returns node values of `(φ, φ')`.
fn integrate(
    prior: &ParamPrior,
    grid: &Grid,
    phi_a: f64,
    slope: f64,
    substeps: usize,
) -> (Vec<f64>, Vec<f64>) {
    let rhs = |t: f64, d: f64| -d * prior.density_derivative(t) / prior.density(t);
    let h = grid.step() / substeps as f64;
    let (mut f, mut d) = (phi_a, slope);
    let mut phi = Vec::with_capacity(grid.nodes);
    let mut dphi = Vec::with_capacity(grid.nodes);
    phi.push(f);
    dphi.push(d);
    for i in 0..grid.nodes - 1 {
        let t0 = grid.point(i);
        for k in 0..substeps {
            let t = t0 + k as f64 * h;
            let (k1f, k1d) = (d, rhs(t, d));
            let (k2f, k2d) = (d + 0.5 * h * k1d, rhs(t + 0.5 * h, d + 0.5 * h * k1d));
            let (k3f, k3d) = (d + 0.5 * h * k2d, rhs(t + 0.5 * h, d + 0.5 * h * k2d));
            let (k4f, k4d) = (d + h * k3d, rhs(t + h, d + h * k3d));
            f += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
            d += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        }
        phi.push(f);
        dphi.push(d);
    }
    (phi, dphi)
}

fn shoot(
    prior: &ParamPrior,
    grid: &Grid,
    phi_a: f64,
    phi_b: f64,
    substeps: usize,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let terminal = |s: f64| {
        let (phi, _) = integrate(prior, grid, phi_a, s, substeps);
        phi[phi.len() - 1]
    };
    let mut lo = 0.0;
    let mut hi = (phi_b - phi_a) / (grid.hi - grid.lo);
    let mut tries = 0;
    loop {
        let v = terminal(hi);
        if !v.is_finite() {
            return None;
        }
        if v >= phi_b {
            break;
        }
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = terminal(mid);
        if !v.is_finite() {
            return None;
        }
        if v < phi_b {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let (phi, dphi) = integrate(prior, grid, phi_a, 0.5 * (lo + hi), substeps);
    let miss = (phi[phi.len() - 1] - phi_b).abs();
    let monotone = dphi.iter().all(|d| d.is_finite() && *d > 0.0);
    (miss <= SHOOT_TOL * phi_b && monotone).then_some((phi, dphi))
}

/// `(p φ')' = 0` with flux-form differences; the system is tridiagonal.
fn collocate(
    prior: &ParamPrior,
    grid: &Grid,
    phi_a: f64,
    phi_b: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = grid.nodes;
    let h = grid.step();
    let flux: Vec<f64> = (0..n - 1)
        .map(|i| prior.density(grid.point(i) + 0.5 * h))
        .collect();
    if flux.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(Error::NoConvergence(
            "collocation: prior density vanishes inside the support".into(),
        ));
    }
    // Interior unknowns 1..n-1: -w_{i-1} φ_{i-1} + (w_{i-1} + w_i) φ_i - w_i φ_{i+1} = 0.
    let m = n - 2;
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut lower = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for k in 0..m {
        let i = k + 1;
        diag[k] = flux[i - 1] + flux[i];
        lower[k] = -flux[i - 1];
        upper[k] = -flux[i];
    }
    rhs[0] += flux[0] * phi_a;
    rhs[m - 1] += flux[n - 2] * phi_b;
    let interior = thomas(&lower, &diag, &upper, &rhs)
        .ok_or_else(|| Error::NoConvergence("collocation: singular tridiagonal system".into()))?;
    let mut phi = Vec::with_capacity(n);
    phi.push(phi_a);
    phi.extend(interior);
    phi.push(phi_b);
    let dphi = derivative(&phi, h);
    if phi.iter().chain(&dphi).any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence(
            "collocation produced non-finite values".into(),
        ));
    }
    Ok((phi, dphi))
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut piv = diag[0];
    if piv == 0.0 {
        return None;
    }
    c[0] = upper[0] / piv;
    d[0] = rhs[0] / piv;
    for k in 1..m {
        piv = diag[k] - lower[k] * c[k - 1];
        if piv == 0.0 {
            return None;
        }
        c[k] = upper[k] / piv;
        d[k] = (rhs[k] - lower[k] * d[k - 1]) / piv;
    }
    for k in (0..m - 1).rev() {
        d[k] -= c[k] * d[k + 1];
    }
    Some(d)
}

fn perturbation_check(
    prior: &ParamPrior,
    grid: &Grid,
    phi: &[f64],
    dphi: &[f64],
    opts: &BvpOptions,
) -> PerturbationCheck {
    let pts = grid.points();
    let w = grid.hi - grid.lo;
    let span = phi[phi.len() - 1] - phi[0];
    let curve = |dir: Option<(f64, f64)>| -> (f64, f64) {
        let (g, dg): (Vec<f64>, Vec<f64>) = pts
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let (mut f, mut d) = (phi[i], dphi[i]);
                if let Some((amp, k)) = dir {
                    let x = (t - grid.lo) / w;
                    f += amp * (k * PI * x).sin();
                    d += amp * k * PI / w * (k * PI * x).cos();
                }
                ((0.5 * f).sin().powi(2), 0.5 * f.sin() * d)
            })
            .unzip();
        let objective = design_objective(prior, grid, &g, &dg);
        let floor = (1..grid.nodes - 1)
            .map(|i| dg[i] * dg[i] / (g[i] * (1.0 - g[i])))
            .fold(f64::INFINITY, f64::min);
        (objective, floor)
    };
    let (objective, floor) = curve(None);
    let mut low = f64::INFINITY;
    let mut high = f64::NEG_INFINITY;
    let mut perturbed_floor = f64::NEG_INFINITY;
    for j in 0..opts.perturbations {
        let k = (j / 2 + 1) as f64;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let (l, fl) = curve(Some((sign * opts.amplitude * span, k)));
        low = low.min(l);
        high = high.max(l);
        perturbed_floor = perturbed_floor.max(fl);
    }
    let tol = 1e-12 * objective.abs();
    let extremum = if low > objective + tol {
        Extremum::Minimum
    } else if high < objective - tol {
        Extremum::Maximum
    } else {
        Extremum::Saddle
    };
    PerturbationCheck {
        objective,
        perturbed_low: low,
        perturbed_high: high,
        floor,
        perturbed_floor,
        extremum,
    }
}

/// Raw inverse outside `[−CLIP_TOLERANCE, 1 + CLIP_TOLERANCE]` is reported as a failure.
pub const CLIP_TOLERANCE: f64 = 1e-3;
/// Tikhonov weight relative to `max |C|²`.
pub const TIKHONOV_RELATIVE: f64 = 1e-24;
const UNDERFLOW_KERNEL: f64 = 1e-12;
const UNDERFLOW_SIGNAL: f64 = 1e-6;
const LENGTH_CANDIDATES: usize = 64;

/// Recovers `γ` with `γ * p_W = g*` by regularized discrete Fourier deconvolution.
///
/// `γ` is modelled as a step function on the curve grid, extended left with
/// zeros and right with ones, so the exact discrete kernel is
/// `c_m = P(−m h ≤ W < (1 − m) h)`. The differenced curve `Δg*` is
/// deconvolved and summed back. Among a window of padded lengths (at least 4×)
/// the one with the largest `min |C|` is used, which keeps the DFT bins off
/// the kernel's spectral zeros.
pub fn deconvolve_quantizer(gstar: &ResponseCurve, noise: &NoiseModel) -> Result<Deconvolution> {
    let grid = *gstar.grid();
    let h = grid.step();
    let n = grid.nodes;
    let s = noise.effective_support();
    let reach = s.lo.abs().max(s.hi.abs());
    let ext = (reach / h).ceil() as usize + 2;
    let len = n + 2 * ext;

    let mut padded = vec![0.0; len];
    padded[ext..ext + n].copy_from_slice(gstar.values());
    padded[ext + n..].iter_mut().for_each(|v| *v = 1.0);
    let mut diff = vec![0.0; len];
    diff[0] = padded[0];
    for j in 1..len {
        diff[j] = padded[j] - padded[j - 1];
    }

    let m_lo = (-s.hi / h).floor() as i64 - 1;
    let m_hi = (-s.lo / h).ceil() as i64 + 2;
    let kernel: Vec<(i64, f64)> = (m_lo..=m_hi)
        .map(|m| (m, noise.prob_interval(-(m as f64) * h, (1 - m) as f64 * h)))
        .filter(|&(_, c)| c != 0.0)
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let spectrum_of = |planner: &mut FftPlanner<f64>, size: usize| {
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for &(m, c) in &kernel {
            buf[m.rem_euclid(size as i64) as usize] += c;
        }
        planner.plan_fft_forward(size).process(&mut buf);
        buf
    };
    let base = 4 * len;
    let (size, kspec) = (base..base + LENGTH_CANDIDATES)
        .map(|size| {
            let spec = spectrum_of(&mut planner, size);
            let floor = spec.iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
            (floor, size, spec)
        })
        .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|(_, size, spec)| (size, spec))
        .expect("non-empty candidate range");

    let mut sig: Vec<Complex64> = diff.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    sig.resize(size, Complex64::new(0.0, 0.0));
    planner.plan_fft_forward(size).process(&mut sig);

    let kmax = kspec.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let gmax = sig.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let carrying: Vec<usize> = (1..size)
        .filter(|&k| sig[k].norm() >= UNDERFLOW_SIGNAL * gmax)
        .collect();
    if !carrying.is_empty()
        && carrying
            .iter()
            .all(|&k| kspec[k].norm() < UNDERFLOW_KERNEL * kmax)
    {
        return Err(Error::SpectrumUnderflow);
    }

    let alpha = TIKHONOV_RELATIVE * kmax * kmax;
    for (g, c) in sig.iter_mut().zip(&kspec) {
        *g = *g * c.conj() / (c.norm_sqr() + alpha);
    }
    planner.plan_fft_inverse(size).process(&mut sig);
    let scale = 1.0 / size as f64;
    let mut gamma = Vec::with_capacity(len);
    let mut acc = 0.0;
    for v in sig.iter().take(len) {
        acc += v.re * scale;
        gamma.push(acc);
    }

    let raw_min = gamma.iter().copied().fold(f64::INFINITY, f64::min);
    let raw_max = gamma.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let in_range = raw_min >= -CLIP_TOLERANCE && raw_max <= 1.0 + CLIP_TOLERANCE;
    if !in_range || !raw_min.is_finite() || !raw_max.is_finite() {
        let residual = direct_residual(gstar.values(), &gamma, &kernel, ext);
        return Ok(Deconvolution::Failure(FailureRecord {
            reason: format!(
                "recovered response spans [{raw_min:.6e}, {raw_max:.6e}], outside [0, 1] by more than {CLIP_TOLERANCE}"
            ),
            raw_min,
            raw_max,
            residual,
        }));
    }
    let ys: Vec<f64> = (0..len)
        .map(|j| grid.lo + (j as f64 - ext as f64) * h)
        .collect();
    let responses = gamma.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok(Deconvolution::Quantizer(BinaryQuantizer::tabulated(
        ys, responses,
    )?))
}

/// `max_i |Σ_m c_m γ_{i−m} − g_i|` over the curve grid.
fn direct_residual(g: &[f64], gamma: &[f64], kernel: &[(i64, f64)], ext: usize) -> f64 {
    let len = gamma.len() as i64;
    g.iter()
        .enumerate()
        .map(|(i, &gi)| {
            let idx = (i + ext) as i64;
            let conv: f64 = kernel
                .iter()
                .map(|&(m, c)| {
                    let j = idx - m;
                    let v = if j < 0 {
                        0.0
                    } else if j >= len {
                        1.0
                    } else {
                        gamma[j as usize]
                    };
                    c * v
                })
                .sum();
            (conv - gi).abs()
        })
        .fold(0.0, f64::max)
}

/// Which optimal response to target.
#[derive(Clone, Debug)]
pub enum Target {
    /// Sine response on the prior's support.
    LeastFavorable,
    /// Euler-Lagrange solution for the prior itself.
    Bayes(BvpOptions),
}

/// Optimal `g*` for `prior`, followed by recovery of `γ` through `noise`.
pub fn design(
    prior: &ParamPrior,
    noise: &NoiseModel,
    target: &Target,
    nodes: usize,
) -> Result<DesignSolution> {
    let mut sol = match target {
        Target::LeastFavorable => {
            let s = prior.support();
            if !s.is_bounded() {
                return invalid("least-favorable design needs a prior with bounded support");
            }
            DesignSolution {
                gstar: least_favorable_gstar(s.lo, s.hi, nodes)?,
                gamma: None,
                ode_residual: None,
                method: Method::ClosedForm,
                check: None,
            }
        }
        Target::Bayes(opts) => solve_euler_lagrange(
            prior,
            &BvpOptions {
                nodes,
                ..opts.clone()
            },
        )?,
    };
    sol.gamma = Some(deconvolve_quantizer(&sol.gstar, noise)?);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::DEFAULT_NODES;

    #[test]
    fn sine_gstar_values() {
        let c = least_favorable_gstar(-1.0, 1.0, 201).unwrap();
        assert!((c.eval(0.0).0 - 0.5).abs() < 1e-15);
        assert_eq!(c.values()[200], 1.0);
        assert!(c.values()[0].abs() < 1e-15);
        let shifted = least_favorable_gstar(0.0, 2.0, 201).unwrap();
        assert!((shifted.eval(1.0).0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn optimal_noise_density() {
        let w = threshold_optimal_noise(0.0).unwrap();
        assert!((w.density(0.0) - PI / 4.0).abs() < 1e-15);
        let shifted = threshold_optimal_noise(2.5).unwrap();
        assert_eq!(shifted.support().lo, 1.5);
    }

    #[test]
    fn uniform_prior_bvp_matches_sine() {
        let prior = ParamPrior::uniform(-1.0, 1.0).unwrap();
        let sol = solve_euler_lagrange(&prior, &BvpOptions::default()).unwrap();
        assert_eq!(sol.method, Method::Shooting { substeps: 1 });
        let sine = least_favorable_gstar(-1.0, 1.0, DEFAULT_NODES).unwrap();
        let err = sol
            .gstar
            .values()
            .iter()
            .zip(sine.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-3, "{err}");
        let check = sol.check.unwrap();
        assert_eq!(check.extremum, Extremum::Minimum);
        assert!(check.perturbed_floor < check.floor);
    }

    #[test]
    fn maximality_can_be_enforced() {
        let prior = ParamPrior::uniform(-1.0, 1.0).unwrap();
        let opts = BvpOptions {
            require_maximum: true,
            ..Default::default()
        };
        assert!(matches!(
            solve_euler_lagrange(&prior, &opts),
            Err(Error::NotAMaximum { .. })
        ));
    }

    #[test]
    fn gaussian_prior_bvp_residual() {
        let prior = ParamPrior::truncated_gaussian(0.0, 0.5, -1.0, 1.0).unwrap();
        let sol = solve_euler_lagrange(&prior, &BvpOptions::default()).unwrap();
        let rhs_max = rhs_scale(&prior, &sol.gstar);
        assert!(
            sol.ode_residual.unwrap() <= 1e-6 * (1.0 + rhs_max),
            "{:?}",
            sol.ode_residual
        );
    }

    fn rhs_scale(prior: &ParamPrior, c: &ResponseCurve) -> f64 {
        let ddg = derivative(c.slopes(), c.grid().step());
        c.grid()
            .points()
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let g = c.values()[i];
                (2.0 * g
                    * (1.0 - g)
                    * (ddg[i] * prior.density(t) + c.slopes()[i] * prior.density_derivative(t)))
                .abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn collocation_agrees_with_shooting() {
        let prior = ParamPrior::truncated_gaussian(0.2, 0.3, -1.0, 1.0).unwrap();
        let grid = Grid::new(-1.0, 1.0, 1025).unwrap();
        let a = 2.0 * BOUNDARY_INSET.sqrt().asin();
        let (p1, _) = shoot(&prior, &grid, a, PI - a, 1).unwrap();
        let (p2, _) = collocate(&prior, &grid, a, PI - a).unwrap();
        let gap = p1
            .iter()
            .zip(&p2)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-5, "{gap}");
    }

    #[test]
    fn delta_noise_recovers_sine() {
        let g = least_favorable_gstar(-1.0, 1.0, DEFAULT_NODES).unwrap();
        let Deconvolution::Quantizer(q) = deconvolve_quantizer(&g, &NoiseModel::delta()).unwrap()
        else {
            panic!("expected a quantizer");
        };
        let sine = BinaryQuantizer::sine(-1.0, 1.0).unwrap();
        let err = (0..=20000)
            .map(|k| {
                let y = -1.2 + 2.4 * k as f64 / 20000.0;
                (q.response(y) - sine.response(y)).abs()
            })
            .fold(0.0, f64::max);
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn wide_gaussian_fails() {
        let g = least_favorable_gstar(-1.0, 1.0, DEFAULT_NODES).unwrap();
        let noise = NoiseModel::gaussian(25.0).unwrap();
        match deconvolve_quantizer(&g, &noise).unwrap() {
            Deconvolution::Failure(f) => {
                assert!(f.raw_max > 1.0 + CLIP_TOLERANCE || f.raw_min < -CLIP_TOLERANCE);
                assert!(f.residual.is_finite());
            }
            Deconvolution::Quantizer(_) => panic!("expected a failure record"),
        }
    }

    #[test]
    fn tridiagonal_solver() {
        let x = thomas(
            &[0.0, -1.0, -1.0],
            &[2.0, 2.0, 2.0],
            &[-1.0, -1.0, 0.0],
            &[1.0, 0.0, 1.0],
        )
        .unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }
}
