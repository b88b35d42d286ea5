//! Rate-constrained allocation: bit budgets and binary-versus-multibit comparisons.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::exec::{map_range, Execution};
use crate::fisher::{gaussian_binary_threshold_fisher, gaussian_single_obs_fisher, FisherReport};
use crate::prob::{prior_fisher, q_function, std_normal_pdf, std_normal_quantile, ParamPrior};
use crate::quadrature::DEFAULT_NODES;
use crate::quantizer::MultiLevelQuantizer;

/// Bits needed to send one of `levels` symbols.
pub fn bits_for(levels: u32) -> Result<u64> {
    if levels < 2 {
        return Err(Error::InvalidLevels(levels));
    }
    Ok(u64::from(32 - (levels - 1).leading_zeros()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateBudget {
    /// Bits per unit time the channel carries.
    pub budget: u64,
    /// Level count `D_i` per sensor.
    pub allocation: Vec<u32>,
}

impl RateBudget {
    /// `Σ ⌈log₂ D_i⌉`.
    pub fn bits_used(&self) -> Result<u64> {
        self.allocation.iter().map(|&d| bits_for(d)).sum()
    }
}

pub fn check_feasible(b: &RateBudget) -> Result<bool> {
    Ok(b.bits_used()? <= b.budget)
}

/// `F_b ≥ I*/2`: one-bit sensors beat any multibit allocation of the same budget.
pub fn binary_optimality_condition(f_b: f64, i_star: f64) -> bool {
    f_b >= 0.5 * i_star - 1e-9
}

/// `2 ln(4/π)`.
pub fn low_snr_threshold() -> f64 {
    2.0 * (4.0 / PI).ln()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowSnrReport {
    pub ratio: f64,
    pub threshold: f64,
    pub holds: bool,
}

/// Whether `σ_θ²/σ²` lies in the regime where binary sensors are provably optimal.
pub fn gaussian_low_snr_test(prior_variance: f64, noise_variance: f64) -> Result<LowSnrReport> {
    if !(prior_variance > 0.0) || !(noise_variance > 0.0) {
        return invalid("variances must be positive");
    }
    let ratio = prior_variance / noise_variance;
    let threshold = low_snr_threshold();
    Ok(LowSnrReport {
        ratio,
        threshold,
        holds: ratio <= threshold,
    })
}

/// `P(a ≤ Z < b)` for standard normal `Z`, without cancellation in the tails.
fn normal_cell(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        q_function(a) - q_function(b)
    } else if b <= 0.0 {
        q_function(-b) - q_function(-a)
    } else {
        1.0 - q_function(b) - q_function(-a)
    }
}

/// Expected information of a D-level threshold quantizer on `θ + N(0, σ²)`:
/// `E_θ[Σ_k (φ(z_{k−1}) − φ(z_k))² / (σ² P_k)]`, `z_k = (b_k − θ)/σ`.
pub fn multilevel_gaussian_fisher(
    prior: &ParamPrior,
    variance: f64,
    breakpoints: &[f64],
) -> Result<f64> {
    multilevel_fisher_with(prior, variance, breakpoints, DEFAULT_NODES)
}

fn multilevel_fisher_with(
    prior: &ParamPrior,
    variance: f64,
    breakpoints: &[f64],
    nodes: usize,
) -> Result<f64> {
    gaussian_single_obs_fisher(variance)?;
    let sd = variance.sqrt();
    prior.expect_with(
        |t| {
            let z: Vec<f64> = std::iter::once(f64::NEG_INFINITY)
                .chain(breakpoints.iter().map(|b| (b - t) / sd))
                .chain(std::iter::once(f64::INFINITY))
                .collect();
            z.windows(2)
                .map(|w| {
                    let p = normal_cell(w[0], w[1]);
                    if p <= 0.0 {
                        return 0.0;
                    }
                    let d = std_normal_pdf(w[0]) - std_normal_pdf(w[1]);
                    d * d / (variance * p)
                })
                .sum()
        },
        nodes,
    )
}

const GOLDEN_ITERS: usize = 48;
const DESCENT_SWEEPS: usize = 40;
/// Quadrature nodes used while searching; the final value uses the default grid.
const SEARCH_NODES: usize = 257;

/// Breakpoints maximizing [`multilevel_gaussian_fisher`], by coordinate
/// descent with a golden-section search per breakpoint. Starts from the
/// equal-probability cells of the marginal of `y`.
pub fn optimize_multilevel(
    prior: &ParamPrior,
    variance: f64,
    levels: u32,
) -> Result<(MultiLevelQuantizer, f64)> {
    bits_for(levels)?;
    gaussian_single_obs_fisher(variance)?;
    let mu = prior.mean();
    let spread = (prior.variance() + variance).sqrt();
    let d = levels as usize;
    let mut b: Vec<f64> = (1..d)
        .map(|k| mu + spread * std_normal_quantile(k as f64 / d as f64))
        .collect();
    let (outer_lo, outer_hi) = (mu - 8.0 * spread, mu + 8.0 * spread);
    let mut best = multilevel_fisher_with(prior, variance, &b, SEARCH_NODES)?;
    for _ in 0..DESCENT_SWEEPS {
        let before = best;
        for k in 0..b.len() {
            let lo = if k == 0 { outer_lo } else { b[k - 1] };
            let hi = if k + 1 == b.len() { outer_hi } else { b[k + 1] };
            let mut trial = b.clone();
            let mut eval = |x: f64| {
                trial[k] = x;
                multilevel_fisher_with(prior, variance, &trial, SEARCH_NODES)
            };
            let (x, v) = golden_max(&mut eval, lo, hi)?;
            if v > best {
                best = v;
                b[k] = x;
            }
        }
        if best - before <= 1e-10 * best.abs() {
            break;
        }
    }
    let value = multilevel_gaussian_fisher(prior, variance, &b)?;
    Ok((MultiLevelQuantizer::new(b)?, value))
}

fn golden_max<F: FnMut(f64) -> Result<f64>>(
    f: &mut F,
    mut a: f64,
    mut b: f64,
) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// `count` identical sensors with `levels` symbols each.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub levels: u32,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedCandidate {
    /// Position in the input list.
    pub index: usize,
    pub candidate: Candidate,
    pub bits_used: u64,
    /// Breakpoints used for multi-level sensors (binary sensors threshold at the prior mean).
    pub breakpoints: Vec<f64>,
    pub report: FisherReport,
    /// 1-based rank by `F_D`, best first.
    pub rank: usize,
}

/// Evaluates each candidate's posterior information and sorts by `F_D`
/// (descending; ties keep input order). Binary sensors use the threshold at
/// the prior mean, multi-level sensors the optimized partition.
pub fn compare_rate_strategies(
    budget: u64,
    candidates: &[Candidate],
    prior: &ParamPrior,
    variance: f64,
    exec: Execution,
) -> Result<Vec<RankedCandidate>> {
    for (index, c) in candidates.iter().enumerate() {
        let bits = bits_for(c.levels)? * c.count as u64;
        if bits > budget {
            return Err(Error::InfeasibleCandidate {
                index,
                bits,
                budget,
            });
        }
    }
    let f_p = prior_fisher(prior)?;
    let mu = prior.mean();
    let evaluated = map_range(exec, candidates.len(), |index| -> Result<RankedCandidate> {
        let c = candidates[index];
        let (per, breakpoints) = if c.levels == 2 {
            (gaussian_binary_threshold_fisher(prior, variance)?, vec![mu])
        } else {
            let (q, f) = optimize_multilevel(prior, variance, c.levels)?;
            (f, q.breakpoints().to_vec())
        };
        Ok(RankedCandidate {
            index,
            candidate: c,
            bits_used: bits_for(c.levels)? * c.count as u64,
            breakpoints,
            report: FisherReport::new(vec![per; c.count], 0.0, f_p)?,
            rank: 0,
        })
    });
    let mut ranked = evaluated.into_iter().collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        b.report
            .f_d
            .total_cmp(&a.report.f_d)
            .then(a.index.cmp(&b.index))
    });
    for (k, r) in ranked.iter_mut().enumerate() {
        r.rank = k + 1;
    }
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasibility() {
        let b = |r, d: &[u32]| RateBudget {
            budget: r,
            allocation: d.to_vec(),
        };
        assert!(check_feasible(&b(4, &[2, 2, 2, 2])).unwrap());
        assert!(!check_feasible(&b(4, &[4, 4, 2])).unwrap());
        assert!(check_feasible(&b(3, &[3])).unwrap());
        assert_eq!(b(4, &[4, 4, 2]).bits_used().unwrap(), 5);
        assert!(matches!(
            check_feasible(&b(4, &[1])),
            Err(Error::InvalidLevels(1))
        ));
        assert_eq!(bits_for(5).unwrap(), 3);
        assert_eq!(bits_for(8).unwrap(), 3);
        assert_eq!(bits_for(9).unwrap(), 4);
    }

    #[test]
    fn binary_condition() {
        assert!(binary_optimality_condition(2.0 / PI, 1.0));
        assert!(!binary_optimality_condition(0.4, 1.0));
        assert!(binary_optimality_condition(0.5, 1.0));
    }

    #[test]
    fn low_snr() {
        let t = low_snr_threshold();
        assert!((t - 0.483129).abs() < 1e-6);
        assert!(gaussian_low_snr_test(0.4, 1.0).unwrap().holds);
        assert!(!gaussian_low_snr_test(1.0, 1.0).unwrap().holds);
    }

    #[test]
    fn two_level_partition_matches_threshold_formula() {
        let prior = ParamPrior::gaussian(0.3, 0.5).unwrap();
        let a = multilevel_gaussian_fisher(&prior, 1.0, &[0.3]).unwrap();
        let b = gaussian_binary_threshold_fisher(&prior, 1.0).unwrap();
        assert!((a - b).abs() < 1e-9 * b, "{a} vs {b}");
    }

    #[test]
    fn many_levels_approach_unquantized_information() {
        let prior = ParamPrior::gaussian(0.0, 0.2).unwrap();
        let (_, f4) = optimize_multilevel(&prior, 1.0, 4).unwrap();
        let (_, f8) = optimize_multilevel(&prior, 1.0, 8).unwrap();
        assert!(f4 < f8 && f8 < 1.0);
        assert!(f8 > 0.9, "{f8}");
    }

    #[test]
    fn binary_ranks_first_at_low_snr() {
        let prior = ParamPrior::gaussian(0.0, 0.2).unwrap();
        let cands = [
            Candidate {
                levels: 4,
                count: 2,
            },
            Candidate {
                levels: 2,
                count: 4,
            },
        ];
        let r = compare_rate_strategies(4, &cands, &prior, 1.0, Execution::Sequential).unwrap();
        assert_eq!(r[0].candidate.levels, 2);
        assert_eq!(r[0].rank, 1);
        assert!(r[0].report.f_d > r[1].report.f_d);
    }

    #[test]
    fn infeasible_candidate() {
        let prior = ParamPrior::gaussian(0.0, 1.0).unwrap();
        let cands = [Candidate {
            levels: 4,
            count: 3,
        }];
        assert!(matches!(
            compare_rate_strategies(4, &cands, &prior, 1.0, Execution::Sequential),
            Err(Error::InfeasibleCandidate {
                index: 0,
                bits: 6,
                budget: 4
            })
        ));
    }
}
