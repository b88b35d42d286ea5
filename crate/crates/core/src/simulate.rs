//! Monte Carlo MSE experiments for the arcsine maximum-likelihood fusion rule.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::exec::{map_range, Execution};
use crate::fisher::equicorrelated_fisher;
use crate::prob::{NoiseModel, ParamPrior};
use crate::quantizer::{apply_binary, BinaryQuantizer};
use crate::rng::SeedTree;

/// Sensor counts `2⁴, …, 2¹⁴`.
pub fn default_ladder() -> Vec<usize> {
    (4..=14).map(|k| 1usize << k).collect()
}

pub const DEFAULT_RUNS: usize = 5000;
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub prior: ParamPrior,
    pub noise: NoiseModel,
    pub quantizer: BinaryQuantizer,
    pub sensors: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
}

impl SimConfig {
    /// Uniform prior on `[−1, 1]`, raised-cosine noise and a threshold at 0.
    pub fn reference() -> Self {
        Self {
            prior: ParamPrior::uniform(-1.0, 1.0).expect("valid prior"),
            noise: NoiseModel::raised_cosine(0.0).expect("valid noise"),
            quantizer: BinaryQuantizer::threshold(0.0).expect("valid quantizer"),
            sensors: default_ladder(),
            runs: DEFAULT_RUNS,
            seed: DEFAULT_SEED,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sensors.is_empty() || self.sensors.contains(&0) {
            return invalid("sensor counts must be at least 1");
        }
        if self.runs == 0 {
            return invalid("Monte Carlo run count must be at least 1");
        }
        let s = self.prior.support();
        if !(s.lo >= -1.0 && s.hi <= 1.0) {
            return Err(Error::ConfigDomainMismatch(format!(
                "prior support [{}, {}] leaves [-1, 1], the range of the arcsine estimator",
                s.lo, s.hi
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimRow {
    pub sensors: usize,
    pub mse: f64,
    pub stderr: f64,
    /// `4/(Nπ²)`.
    pub pcrlb_limit: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub rows: Vec<SimRow>,
}

/// `θ̂ = (2/π) asin(2k/N − 1)` for `k` ones out of `N` bits.
pub fn mle_estimate(ones: usize, n: usize) -> f64 {
    assert!(n >= 1 && ones <= n, "need 0 ≤ ones ≤ N, N ≥ 1");
    let x = (2.0 * ones as f64 / n as f64 - 1.0).clamp(-1.0, 1.0);
    2.0 / PI * x.asin()
}

/// Squared error of one run: draw θ, observe through `n` sensors, fuse.
pub fn single_run(cfg: &SimConfig, n: usize, tree: SeedTree) -> f64 {
    let mut rng = tree.stream();
    let theta = cfg.prior.sample(&mut rng);
    let mut ones = 0;
    for _ in 0..n {
        let y = theta + cfg.noise.sample(&mut rng);
        ones += usize::from(apply_binary(&cfg.quantizer, y, &mut rng));
    }
    let e = mle_estimate(ones, n) - theta;
    e * e
}

pub fn run_mse_experiment(cfg: &SimConfig) -> Result<SimResult> {
    run_mse_experiment_with(cfg, Execution::default())
}

/// Runs are seeded by `(seed, ladder index, run index)` and summed in run
/// order, so the result does not depend on scheduling.
pub fn run_mse_experiment_with(cfg: &SimConfig, exec: Execution) -> Result<SimResult> {
    cfg.validate()?;
    let root = SeedTree::new(cfg.seed);
    let rows = cfg
        .sensors
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let level = root.child(k as u64);
            let errors = map_range(exec, cfg.runs, |r| {
                single_run(cfg, n, level.child(r as u64))
            });
            let m = errors.len() as f64;
            let mse = errors.iter().sum::<f64>() / m;
            let stderr = if errors.len() > 1 {
                let ss: f64 = errors.iter().map(|e| (e - mse) * (e - mse)).sum();
                (ss / (m - 1.0)).sqrt() / m.sqrt()
            } else {
                0.0
            };
            SimRow {
                sensors: n,
                mse,
                stderr,
                pcrlb_limit: 4.0 / (n as f64 * PI * PI),
            }
        })
        .collect();
    Ok(SimResult { rows })
}

/// `(ρ, 1ᵀΣ⁻¹1)` along `rhos`.
pub fn equicorrelated_curve(n: usize, variance: f64, rhos: &[f64]) -> Result<Vec<(f64, f64)>> {
    rhos.iter()
        .map(|&rho| Ok((rho, equicorrelated_fisher(n, variance, rho)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_values() {
        assert_eq!(mle_estimate(8, 16), 0.0);
        assert_eq!(mle_estimate(16, 16), 1.0);
        assert_eq!(mle_estimate(0, 16), -1.0);
        assert!((0..=7).all(|k| (-1.0..=1.0).contains(&mle_estimate(k, 7))));
    }

    #[test]
    fn one_run_mse_is_its_squared_error() {
        let cfg = SimConfig {
            sensors: vec![64],
            runs: 1,
            ..SimConfig::reference()
        };
        let r = run_mse_experiment(&cfg).unwrap();
        let direct = single_run(&cfg, 64, SeedTree::new(cfg.seed).child(0).child(0));
        assert_eq!(r.rows[0].mse, direct);
        assert_eq!(r.rows[0].stderr, 0.0);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let cfg = SimConfig {
            sensors: vec![16, 256],
            runs: 300,
            ..SimConfig::reference()
        };
        let a = run_mse_experiment_with(&cfg, Execution::Sequential).unwrap();
        let b = run_mse_experiment_with(&cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn domain_mismatch() {
        let cfg = SimConfig {
            prior: ParamPrior::uniform(-2.0, 1.0).unwrap(),
            ..SimConfig::reference()
        };
        assert!(matches!(
            run_mse_experiment(&cfg),
            Err(Error::ConfigDomainMismatch(_))
        ));
    }

    #[test]
    fn equicorrelated_curve_decreases() {
        let rhos: Vec<f64> = (0..=100).map(|k| k as f64 * 0.00999).collect();
        let c = equicorrelated_curve(10, 1.0, &rhos).unwrap();
        assert_eq!(c[0].1, 10.0);
        assert!(c.windows(2).all(|w| w[1].1 < w[0].1));
        let near = equicorrelated_curve(10, 1.0, &[0.999]).unwrap()[0].1;
        assert!((near - 1.0).abs() < 0.01);
    }
}
