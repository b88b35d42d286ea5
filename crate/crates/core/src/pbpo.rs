//! Person-by-person optimization on finite grids.
//!
//! Symbols are 0-based internally (`0..D_i`); the CSV writers in [`crate::io`]
//! add one. Tuples of sensor outputs are flattened in mixed radix with
//! sensor 0 most significant.

use crate::error::{invalid, Error, Result};
use crate::exec::{map_reduce, Execution};
use crate::prob::{check_stochastic, HciModel};

/// Largest search space `brute_force` will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;
/// Scores within this relative distance of the best count as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Observation {
    /// `p(y_i | θ)` per sensor, `[sensor][θ][y]`.
    Independent(Vec<Vec<Vec<f64>>>),
    /// Sensors conditionally independent given a latent λ.
    Hci(HciModel),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Estimator {
    /// Fixed `θ̂(u)` indexed by the flattened output tuple.
    Table(Vec<f64>),
    /// Posterior mean under the current strategy; prior mean for impossible tuples.
    Mmse,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cost {
    SquaredError,
    AbsoluteError,
    Constant(f64),
}

impl Cost {
    fn eval(self, estimate: f64, theta: f64) -> f64 {
        match self {
            Cost::SquaredError => (estimate - theta) * (estimate - theta),
            Cost::AbsoluteError => (estimate - theta).abs(),
            Cost::Constant(c) => c,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteProblem {
    thetas: Vec<f64>,
    prior: Vec<f64>,
    observation: Observation,
    levels: Vec<usize>,
    estimator: Estimator,
    cost: Cost,
    /// `∂p(y_i | θ)/∂θ`, `[sensor][θ][y]`; needed only for Fisher objectives.
    scores: Option<Vec<Vec<Vec<f64>>>>,
}

/// One rule per sensor, mapping each y-index to a symbol in `0..D_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Strategy {
    pub rules: Vec<Vec<usize>>,
}

impl Strategy {
    /// Every sensor sends `symbol` regardless of its observation.
    pub fn constant(p: &DiscreteProblem, symbol: usize) -> Self {
        Self {
            rules: (0..p.sensor_count())
                .map(|i| vec![symbol; p.y_count(i)])
                .collect(),
        }
    }
}

impl DiscreteProblem {
    pub fn independent(
        thetas: Vec<f64>,
        prior: Vec<f64>,
        sensors: Vec<Vec<Vec<f64>>>,
        levels: Vec<usize>,
        estimator: Estimator,
        cost: Cost,
    ) -> Result<Self> {
        if thetas.is_empty() || thetas.len() != prior.len() {
            return invalid("θ-grid and prior weights must have equal, non-zero length");
        }
        check_stochastic(std::slice::from_ref(&prior), "prior")?;
        for (i, s) in sensors.iter().enumerate() {
            if s.len() != thetas.len() {
                return invalid(format!("sensor {i} needs one p(y|θ) row per θ"));
            }
            let ny = s[0].len();
            if ny == 0 || s.iter().any(|r| r.len() != ny) {
                return invalid(format!("sensor {i} rows must share one non-empty y-grid"));
            }
            check_stochastic(s, &format!("sensor {i} p(y|θ)"))?;
        }
        Self::finish(
            thetas,
            prior,
            Observation::Independent(sensors),
            levels,
            estimator,
            cost,
        )
    }

    pub fn hci(
        model: HciModel,
        levels: Vec<usize>,
        estimator: Estimator,
        cost: Cost,
    ) -> Result<Self> {
        let thetas = model.thetas().to_vec();
        let prior = model.prior().to_vec();
        Self::finish(
            thetas,
            prior,
            Observation::Hci(model),
            levels,
            estimator,
            cost,
        )
    }

    fn finish(
        thetas: Vec<f64>,
        prior: Vec<f64>,
        observation: Observation,
        levels: Vec<usize>,
        estimator: Estimator,
        cost: Cost,
    ) -> Result<Self> {
        let n = match &observation {
            Observation::Independent(s) => s.len(),
            Observation::Hci(m) => m.sensor_count(),
        };
        if n == 0 || levels.len() != n {
            return invalid("need at least one sensor and one level count per sensor");
        }
        if let Some(&d) = levels.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidLevels(d as u32));
        }
        let p = Self {
            thetas,
            prior,
            observation,
            levels,
            estimator,
            cost,
            scores: None,
        };
        if let Estimator::Table(t) = &p.estimator {
            if t.len() != p.tuple_count() || t.iter().any(|v| !v.is_finite()) {
                return invalid(format!(
                    "estimator table needs {} finite entries, got {}",
                    p.tuple_count(),
                    t.len()
                ));
            }
        }
        Ok(p)
    }

    /// Attaches `∂p(y|θ)/∂θ` tables (independent problems only).
    pub fn with_scores(mut self, scores: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let Observation::Independent(s) = &self.observation else {
            return invalid("score tables apply to conditionally independent problems");
        };
        let ok = scores.len() == s.len()
            && scores.iter().zip(s).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.len() == y.len())
            });
        if !ok {
            return invalid("score tables must match the observation tables");
        }
        self.scores = Some(scores);
        Ok(self)
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn observation(&self) -> &Observation {
        &self.observation
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn estimator(&self) -> &Estimator {
        &self.estimator
    }

    pub fn cost(&self) -> Cost {
        self.cost
    }

    pub fn sensor_count(&self) -> usize {
        self.levels.len()
    }

    pub fn y_count(&self, i: usize) -> usize {
        match &self.observation {
            Observation::Independent(s) => s[i][0].len(),
            Observation::Hci(m) => m.sensor(i)[0].len(),
        }
    }

    pub fn tuple_count(&self) -> usize {
        self.levels.iter().product()
    }

    /// Same problem with a different estimator.
    pub fn with_estimator(&self, estimator: Estimator) -> Result<Self> {
        let mut p = Self::finish(
            self.thetas.clone(),
            self.prior.clone(),
            self.observation.clone(),
            self.levels.clone(),
            estimator,
            self.cost,
        )?;
        p.scores = self.scores.clone();
        Ok(p)
    }

    fn check(&self, s: &Strategy) -> Result<()> {
        if s.rules.len() != self.sensor_count() {
            return invalid("strategy needs one rule per sensor");
        }
        for (i, r) in s.rules.iter().enumerate() {
            if r.len() != self.y_count(i) {
                return invalid(format!(
                    "rule {i} must cover all {} observations",
                    self.y_count(i)
                ));
            }
            if r.iter().any(|&d| d >= self.levels[i]) {
                return invalid(format!(
                    "rule {i} uses a symbol outside 0..{}",
                    self.levels[i]
                ));
            }
        }
        Ok(())
    }

    fn strides(&self) -> Vec<usize> {
        let n = self.sensor_count();
        let mut st = vec![1; n];
        for i in (0..n - 1).rev() {
            st[i] = st[i + 1] * self.levels[i + 1];
        }
        st
    }

    /// `P(u_i = d | row)` for each row of `rows`.
    fn symbol_probs(rows: &[Vec<f64>], rule: &[usize], levels: usize) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|row| {
                let mut out = vec![0.0; levels];
                for (y, &p) in row.iter().enumerate() {
                    out[rule[y]] += p;
                }
                out
            })
            .collect()
    }

    /// `P(u_i | θ)` (independent) or `P(u_i | λ)` (HCI) for every sensor.
    fn conditional_symbols(&self, s: &Strategy) -> Vec<Vec<Vec<f64>>> {
        (0..self.sensor_count())
            .map(|i| {
                let rows = match &self.observation {
                    Observation::Independent(t) => &t[i],
                    Observation::Hci(m) => m.sensor(i),
                };
                Self::symbol_probs(rows, &s.rules[i], self.levels[i])
            })
            .collect()
    }

    /// `P(u | θ)` for all tuples, one row per θ.
    fn tuple_likelihood(&self, s: &Strategy) -> Vec<Vec<f64>> {
        let cond = self.conditional_symbols(s);
        let strides = self.strides();
        let product = |row: usize, u: usize| {
            let mut v = 1.0;
            for (i, c) in cond.iter().enumerate() {
                v *= c[row][(u / strides[i]) % self.levels[i]];
            }
            v
        };
        let m = self.tuple_count();
        match &self.observation {
            Observation::Independent(_) => (0..self.thetas.len())
                .map(|t| (0..m).map(|u| product(t, u)).collect())
                .collect(),
            Observation::Hci(model) => model
                .latent()
                .iter()
                .map(|lat| {
                    (0..m)
                        .map(|u| {
                            lat.iter()
                                .enumerate()
                                .map(|(l, &pl)| pl * product(l, u))
                                .sum()
                        })
                        .collect()
                })
                .collect(),
        }
    }

    fn prior_mean(&self) -> f64 {
        self.thetas
            .iter()
            .zip(&self.prior)
            .map(|(t, p)| t * p)
            .sum()
    }

    /// `θ̂(u)` for every tuple under strategy `s`.
    pub fn estimates(&self, s: &Strategy) -> Vec<f64> {
        match &self.estimator {
            Estimator::Table(t) => t.clone(),
            Estimator::Mmse => {
                let lik = self.tuple_likelihood(s);
                self.mmse_from(&lik)
            }
        }
    }

    fn mmse_from(&self, lik: &[Vec<f64>]) -> Vec<f64> {
        let mean = self.prior_mean();
        (0..self.tuple_count())
            .map(|u| {
                let (mut num, mut den) = (0.0, 0.0);
                for (t, row) in lik.iter().enumerate() {
                    let w = self.prior[t] * row[u];
                    num += w * self.thetas[t];
                    den += w;
                }
                if den > 0.0 {
                    num / den
                } else {
                    mean
                }
            })
            .collect()
    }

    fn risk_unchecked(&self, s: &Strategy) -> f64 {
        let lik = self.tuple_likelihood(s);
        let est = match &self.estimator {
            Estimator::Table(t) => t.clone(),
            Estimator::Mmse => self.mmse_from(&lik),
        };
        lik.iter()
            .enumerate()
            .map(|(t, row)| {
                let theta = self.thetas[t];
                self.prior[t]
                    * row
                        .iter()
                        .zip(&est)
                        .map(|(&p, &e)| p * self.cost.eval(e, theta))
                        .sum::<f64>()
            })
            .sum()
    }

    /// Posterior Fisher information of the quantized data, `Σ_θ p(θ) Σ_u (∂P(u|θ))² / P(u|θ)`,
    /// from the joint pmf of the output tuple.
    pub fn data_fisher(&self, s: &Strategy) -> Result<f64> {
        self.check(s)?;
        let (Observation::Independent(tables), Some(scores)) = (&self.observation, &self.scores)
        else {
            return invalid("Fisher objective needs an independent problem with score tables");
        };
        let probs: Vec<_> = (0..self.sensor_count())
            .map(|i| Self::symbol_probs(&tables[i], &s.rules[i], self.levels[i]))
            .collect();
        let dprobs: Vec<_> = (0..self.sensor_count())
            .map(|i| Self::symbol_probs(&scores[i], &s.rules[i], self.levels[i]))
            .collect();
        let strides = self.strides();
        let mut total = 0.0;
        for t in 0..self.thetas.len() {
            let mut info = 0.0;
            for u in 0..self.tuple_count() {
                let digits: Vec<usize> = (0..self.sensor_count())
                    .map(|i| (u / strides[i]) % self.levels[i])
                    .collect();
                let pu: f64 = digits
                    .iter()
                    .enumerate()
                    .map(|(i, &d)| probs[i][t][d])
                    .product();
                if pu <= 0.0 {
                    continue;
                }
                let dpu: f64 = (0..self.sensor_count())
                    .map(|k| {
                        digits
                            .iter()
                            .enumerate()
                            .map(|(i, &d)| {
                                if i == k {
                                    dprobs[i][t][d]
                                } else {
                                    probs[i][t][d]
                                }
                            })
                            .product::<f64>()
                    })
                    .sum();
                info += dpu * dpu / pu;
            }
            total += self.prior[t] * info;
        }
        Ok(total)
    }
}

/// `J(γ) = E[C(θ̂(U), θ)]`, summed exactly over the grids.
pub fn bayes_risk(p: &DiscreteProblem, s: &Strategy) -> Result<f64> {
    p.check(s)?;
    Ok(p.risk_unchecked(s))
}

fn argmin_smallest(scores: &[f64]) -> usize {
    let best = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = TIE_TOLERANCE * best.abs().max(f64::MIN_POSITIVE);
    scores.iter().position(|&v| v <= best + tol).unwrap_or(0)
}

/// `a[row][d] = Σ_{u : u_i = d} Π_{j≠i} P_j(u_j | row) C(θ̂(u), θ)` for a fixed θ.
fn conditional_cost(
    p: &DiscreteProblem,
    cond: &[Vec<Vec<f64>>],
    est: &[f64],
    i: usize,
    row: usize,
    theta: f64,
) -> Vec<f64> {
    let strides = p.strides();
    let mut a = vec![0.0; p.levels[i]];
    for (u, &e) in est.iter().enumerate() {
        let mut w = 1.0;
        for (j, c) in cond.iter().enumerate() {
            if j != i {
                w *= c[row][(u / strides[j]) % p.levels[j]];
            }
        }
        a[(u / strides[i]) % p.levels[i]] += w * p.cost.eval(e, theta);
    }
    a
}

/// Person-by-person update of sensor `i` for conditionally independent
/// observations: each `y` gets `argmin_d Σ_θ p(θ) p(y|θ) a(θ, d)`.
pub fn best_response_independent(
    p: &DiscreteProblem,
    s: &Strategy,
    i: usize,
) -> Result<Vec<usize>> {
    p.check(s)?;
    let Observation::Independent(tables) = &p.observation else {
        return invalid("independent update needs conditionally independent observations");
    };
    let cond = p.conditional_symbols(s);
    let est = p.estimates(s);
    let a: Vec<Vec<f64>> = (0..p.thetas.len())
        .map(|t| conditional_cost(p, &cond, &est, i, t, p.thetas[t]))
        .collect();
    Ok((0..p.y_count(i))
        .map(|y| {
            let scores: Vec<f64> = (0..p.levels[i])
                .map(|d| {
                    let mut v = 0.0;
                    for t in 0..p.thetas.len() {
                        v += p.prior[t] * (tables[i][t][y] * a[t][d]);
                    }
                    v
                })
                .collect();
            argmin_smallest(&scores)
        })
        .collect())
}

/// Person-by-person update of sensor `i` under the latent-variable model:
/// `argmin_d Σ_θ p(θ) Σ_λ p(λ|θ) p(y|λ) a(θ, λ, d)`.
pub fn best_response_dependent(p: &DiscreteProblem, s: &Strategy, i: usize) -> Result<Vec<usize>> {
    p.check(s)?;
    let Observation::Hci(model) = &p.observation else {
        return invalid("dependent update needs a latent-variable model");
    };
    let cond = p.conditional_symbols(s);
    let est = p.estimates(s);
    let nl = model.lambda_count();
    let a: Vec<Vec<Vec<f64>>> = (0..p.thetas.len())
        .map(|t| {
            (0..nl)
                .map(|l| conditional_cost(p, &cond, &est, i, l, p.thetas[t]))
                .collect()
        })
        .collect();
    let rows = model.sensor(i);
    Ok((0..p.y_count(i))
        .map(|y| {
            let scores: Vec<f64> = (0..p.levels[i])
                .map(|d| {
                    p.prior
                        .iter()
                        .zip(model.latent())
                        .zip(&a)
                        .map(|((w, lat), at)| {
                            w * (0..nl)
                                .map(|l| (lat[l] * rows[l][y]) * at[l][d])
                                .sum::<f64>()
                        })
                        .sum()
                })
                .collect();
            argmin_smallest(&scores)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Independent,
    Dependent,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub strategy: Strategy,
    /// Risk before the first update and after every single-sensor update.
    pub trace: Vec<f64>,
    pub sweeps: usize,
    /// False when `max_sweeps` ran out before a sweep left every rule unchanged.
    pub converged: bool,
}

impl SweepOutcome {
    pub fn risk(&self) -> f64 {
        *self.trace.last().expect("trace holds the initial risk")
    }
}

/// Cycles through the sensors applying best responses until a full sweep
/// changes nothing.
pub fn pbpo_sweep(
    p: &DiscreteProblem,
    init: &Strategy,
    mode: Mode,
    max_sweeps: usize,
) -> Result<SweepOutcome> {
    p.check(init)?;
    let mut s = init.clone();
    let mut trace = vec![p.risk_unchecked(&s)];
    for sweep in 1..=max_sweeps {
        let mut changed = false;
        for i in 0..p.sensor_count() {
            let rule = match mode {
                Mode::Independent => best_response_independent(p, &s, i)?,
                Mode::Dependent => best_response_dependent(p, &s, i)?,
            };
            if rule != s.rules[i] {
                changed = true;
                s.rules[i] = rule;
            }
            trace.push(p.risk_unchecked(&s));
        }
        if !changed {
            return Ok(SweepOutcome {
                strategy: s,
                trace,
                sweeps: sweep,
                converged: true,
            });
        }
    }
    Ok(SweepOutcome {
        strategy: s,
        trace,
        sweeps: max_sweeps,
        converged: false,
    })
}

/// Best of PBPO runs from the all-zeros strategy and `starts` random strategies.
pub fn pbpo_multistart(
    p: &DiscreteProblem,
    mode: Mode,
    max_sweeps: usize,
    starts: usize,
    seed: u64,
) -> Result<SweepOutcome> {
    use crate::rng::{Rng, SeedTree};
    let mut best = pbpo_sweep(p, &Strategy::constant(p, 0), mode, max_sweeps)?;
    for k in 0..starts {
        let mut rng = SeedTree::new(seed).child(k as u64).stream();
        let init = Strategy {
            rules: (0..p.sensor_count())
                .map(|i| {
                    (0..p.y_count(i))
                        .map(|_| rng.gen_range(0..p.levels[i]))
                        .collect()
                })
                .collect(),
        };
        let run = pbpo_sweep(p, &init, mode, max_sweeps)?;
        if run.risk() < best.risk() {
            best = run;
        }
    }
    Ok(best)
}

/// Mixed-radix enumeration of strategies; sensor 0, y-index 0 is the most
/// significant digit, so index order is lexicographic order.
struct Enumerator {
    /// `(sensor, D)` per digit, most significant first.
    digits: Vec<(usize, usize)>,
    ycounts: Vec<usize>,
    size: usize,
}

impl Enumerator {
    fn new(p: &DiscreteProblem) -> Result<Self> {
        let mut digits = Vec::new();
        let mut log_size = 0.0;
        for i in 0..p.sensor_count() {
            for _ in 0..p.y_count(i) {
                digits.push((i, p.levels[i]));
                log_size += (p.levels[i] as f64).ln();
            }
        }
        let size = log_size.exp();
        if size > BRUTE_FORCE_LIMIT * (1.0 + 1e-9) {
            return Err(Error::TooLarge {
                size,
                limit: BRUTE_FORCE_LIMIT,
            });
        }
        let exact: usize = digits.iter().map(|d| d.1).product();
        Ok(Self {
            digits,
            ycounts: (0..p.sensor_count()).map(|i| p.y_count(i)).collect(),
            size: exact,
        })
    }

    fn decode(&self, mut k: usize) -> Strategy {
        let mut rules: Vec<Vec<usize>> = self.ycounts.iter().map(|&n| vec![0; n]).collect();
        let mut pos: Vec<usize> = self.ycounts.clone();
        for &(i, d) in self.digits.iter().rev() {
            pos[i] -= 1;
            rules[i][pos[i]] = k % d;
            k /= d;
        }
        Strategy { rules }
    }
}

const CHUNK: usize = 4096;

/// Smallest index whose value is within tolerance of the global minimum.
fn search_min<F>(size: usize, exec: Execution, value: F) -> (usize, f64)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = size.div_ceil(CHUNK);
    let range = |c: usize| c * CHUNK..((c + 1) * CHUNK).min(size);
    let best = map_reduce(
        exec,
        chunks,
        f64::INFINITY,
        |c| range(c).map(&value).fold(f64::INFINITY, f64::min),
        f64::min,
    );
    let tol = TIE_TOLERANCE * best.abs().max(f64::MIN_POSITIVE);
    let index = map_reduce(
        exec,
        chunks,
        usize::MAX,
        |c| {
            range(c)
                .find(|&k| value(k) <= best + tol)
                .unwrap_or(usize::MAX)
        },
        usize::min,
    );
    (index, value(index))
}

/// Exhaustive minimum of the Bayes risk; lexicographically smallest among ties.
pub fn brute_force(p: &DiscreteProblem) -> Result<(Strategy, f64)> {
    brute_force_with(p, Execution::default())
}

pub fn brute_force_with(p: &DiscreteProblem, exec: Execution) -> Result<(Strategy, f64)> {
    let e = Enumerator::new(p)?;
    let (k, risk) = search_min(e.size, exec, |k| p.risk_unchecked(&e.decode(k)));
    Ok((e.decode(k), risk))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupingReport {
    /// Largest `F_D` with one shared rule per level count.
    pub identical_best: f64,
    /// Largest `F_D` over all strategies.
    pub free_best: f64,
    pub identical_optimal: bool,
    pub best: Strategy,
    /// Distinct rules in `best`, up to relabeling of symbols.
    pub distinct_rules: usize,
}

/// Relabels symbols in order of first appearance.
pub fn canonical_rule(rule: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    rule.iter()
        .map(|&d| {
            let next = map.len();
            *map.entry(d).or_insert(next)
        })
        .collect()
}

/// Compares the best strategy restricted to identical rules (per level
/// count) with the unrestricted optimum of the quantized-data Fisher information.
pub fn grouping_check(p: &DiscreteProblem) -> Result<GroupingReport> {
    grouping_check_with(p, Execution::default())
}

pub fn grouping_check_with(p: &DiscreteProblem, exec: Execution) -> Result<GroupingReport> {
    let Observation::Independent(tables) = &p.observation else {
        return invalid("grouping check needs conditionally independent sensors");
    };
    if tables.iter().any(|t| t != &tables[0]) {
        return invalid("grouping check needs identically distributed sensors");
    }
    p.data_fisher(&Strategy::constant(p, 0))?;

    let e = Enumerator::new(p)?;
    let (k, neg) = search_min(e.size, exec, |k| {
        -p.data_fisher(&e.decode(k)).unwrap_or(f64::NAN)
    });
    let best = e.decode(k);
    let free_best = -neg;

    let mut classes: Vec<usize> = p.levels.clone();
    classes.sort_unstable();
    classes.dedup();
    let ny = p.y_count(0);
    let class_sizes: Vec<usize> = classes.iter().map(|&d| d.pow(ny as u32)).collect();
    let total: usize = class_sizes.iter().product();
    let build = |mut k: usize| {
        let mut shared = Vec::with_capacity(classes.len());
        for (&d, &size) in classes.iter().zip(&class_sizes).rev() {
            let mut r = k % size;
            k /= size;
            let mut rule = vec![0; ny];
            for slot in rule.iter_mut().rev() {
                *slot = r % d;
                r /= d;
            }
            shared.push((d, rule));
        }
        Strategy {
            rules: p
                .levels
                .iter()
                .map(|d| {
                    shared
                        .iter()
                        .find(|(c, _)| c == d)
                        .expect("class present")
                        .1
                        .clone()
                })
                .collect(),
        }
    };
    let (_, neg_id) = search_min(total, exec, |k| {
        -p.data_fisher(&build(k)).unwrap_or(f64::NAN)
    });
    let identical_best = -neg_id;

    let mut canon: Vec<Vec<usize>> = best.rules.iter().map(|r| canonical_rule(r)).collect();
    canon.sort();
    canon.dedup();
    Ok(GroupingReport {
        identical_best,
        free_best,
        identical_optimal: (free_best - identical_best).abs() <= 1e-9 * free_best.abs().max(1.0),
        best,
        distinct_rules: canon.len(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub sensors: usize,
    pub problem: DiscreteProblem,
    pub identical_best_risk: f64,
    pub identical_best: Strategy,
    pub nonidentical_risk: f64,
    pub nonidentical: Strategy,
    pub margin: f64,
}

/// Grid size used by [`dependence_counterexample`].
pub const COUNTEREXAMPLE_GRID: usize = 16;

/// Sensors observing `y = θ + v` with common deterministic noise `v = 0`,
/// modelled through a latent `λ = θ + v`. With `N = 2ⁿ − 1` sensors each
/// thresholding at a different region boundary the fusion center learns
/// which of the `2ⁿ` equal regions holds θ; identical thresholds only ever
/// split the grid in two.
pub fn dependence_counterexample(n: u32) -> Result<Counterexample> {
    if !(1..=3).contains(&n) {
        return invalid(format!("counterexample order must be 1, 2 or 3, got {n}"));
    }
    let m = COUNTEREXAMPLE_GRID;
    let sensors = (1usize << n) - 1;
    let thetas: Vec<f64> = (0..m)
        .map(|k| -1.0 + (2 * k + 1) as f64 / m as f64)
        .collect();
    let prior = vec![1.0 / m as f64; m];
    let identity: Vec<Vec<f64>> = (0..m)
        .map(|a| (0..m).map(|b| if a == b { 1.0 } else { 0.0 }).collect())
        .collect();
    let model = HciModel::new(
        thetas.clone(),
        prior,
        identity.clone(),
        vec![identity; sensors],
    )?;
    let problem =
        DiscreteProblem::hci(model, vec![2; sensors], Estimator::Mmse, Cost::SquaredError)?;

    let threshold_rule = |cut: usize| (0..m).map(|y| usize::from(y >= cut)).collect::<Vec<_>>();
    let region = m >> n;
    let nonidentical = Strategy {
        rules: (1..=sensors).map(|j| threshold_rule(j * region)).collect(),
    };
    let nonidentical_risk = bayes_risk(&problem, &nonidentical)?;

    let mut identical_best = None;
    for cut in 0..=m {
        let s = Strategy {
            rules: vec![threshold_rule(cut); sensors],
        };
        let r = bayes_risk(&problem, &s)?;
        if identical_best
            .as_ref()
            .is_none_or(|(best, _)| r < *best - 1e-15)
        {
            identical_best = Some((r, s));
        }
    }
    let (identical_best_risk, identical_best) = identical_best.expect("at least one threshold");
    Ok(Counterexample {
        sensors,
        problem,
        identical_best_risk,
        identical_best,
        nonidentical_risk,
        nonidentical,
        margin: identical_best_risk - nonidentical_risk,
    })
}

/// Seeded random instances for tests and benchmarks.
pub mod random {
    use super::*;
    use crate::rng::{Rng, SeedTree, Stream};

    fn simplex(rng: &mut Stream, n: usize) -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| 0.05 + rng.gen::<f64>()).collect();
        let s: f64 = w.iter().sum();
        let mut out: Vec<f64> = w.iter().map(|v| v / s).collect();
        let rest: f64 = out[1..].iter().sum();
        out[0] = 1.0 - rest;
        out
    }

    fn grid(n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.0];
        }
        (0..n)
            .map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64)
            .collect()
    }

    /// Conditionally independent sensors with random tables, a random fixed
    /// estimator table and squared-error cost.
    pub fn independent(
        seed: u64,
        sensors: usize,
        thetas: usize,
        ys: usize,
        levels: usize,
    ) -> DiscreteProblem {
        let mut rng = SeedTree::new(seed).stream();
        let th = grid(thetas);
        let prior = simplex(&mut rng, thetas);
        let tables = (0..sensors)
            .map(|_| (0..thetas).map(|_| simplex(&mut rng, ys)).collect())
            .collect();
        let tuples = levels.pow(sensors as u32);
        let est = (0..tuples).map(|_| rng.gen_range(-1.0..1.0)).collect();
        DiscreteProblem::independent(
            th,
            prior,
            tables,
            vec![levels; sensors],
            Estimator::Table(est),
            Cost::SquaredError,
        )
        .expect("generated instance is valid")
    }

    /// Latent-variable instance with `lambdas` latent values and the MMSE estimator.
    pub fn hci(
        seed: u64,
        sensors: usize,
        thetas: usize,
        lambdas: usize,
        ys: usize,
        levels: usize,
    ) -> DiscreteProblem {
        let mut rng = SeedTree::new(seed).stream();
        let th = grid(thetas);
        let prior = simplex(&mut rng, thetas);
        let latent = (0..thetas).map(|_| simplex(&mut rng, lambdas)).collect();
        let tables = (0..sensors)
            .map(|_| (0..lambdas).map(|_| simplex(&mut rng, ys)).collect())
            .collect();
        let model = HciModel::new(th, prior, latent, tables).expect("generated model is valid");
        DiscreteProblem::hci(
            model,
            vec![levels; sensors],
            Estimator::Mmse,
            Cost::SquaredError,
        )
        .expect("generated instance is valid")
    }

    /// Identically distributed sensors with `p(y|θ) ∝ exp(a_y θ + b_y)` and
    /// exact score tables, for Fisher objectives.
    pub fn symmetric(seed: u64, levels: &[usize], thetas: usize, ys: usize) -> DiscreteProblem {
        let mut rng = SeedTree::new(seed).stream();
        let th = grid(thetas);
        let prior = simplex(&mut rng, thetas);
        let a: Vec<f64> = (0..ys).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..ys).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut table = Vec::with_capacity(thetas);
        let mut score = Vec::with_capacity(thetas);
        for &t in &th {
            let w: Vec<f64> = a.iter().zip(&b).map(|(a, b)| (a * t + b).exp()).collect();
            let z: f64 = w.iter().sum();
            let mut p: Vec<f64> = w.iter().map(|v| v / z).collect();
            let rest: f64 = p[1..].iter().sum();
            p[0] = 1.0 - rest;
            let mean_a: f64 = p.iter().zip(&a).map(|(p, a)| p * a).sum();
            score.push(p.iter().zip(&a).map(|(p, a)| p * (a - mean_a)).collect());
            table.push(p);
        }
        let n = levels.len();
        DiscreteProblem::independent(
            th,
            prior,
            vec![table; n],
            levels.to_vec(),
            Estimator::Mmse,
            Cost::SquaredError,
        )
        .and_then(|p| p.with_scores(vec![score; n]))
        .expect("generated instance is valid")
    }
}
